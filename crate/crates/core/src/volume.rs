//! Slices and volumes.
//!
//! All grids are row-major; volumes store slices in index order. Values are
//! kept as `f64` in memory regardless of the on-disk precision.

use crate::error::{Error, Result};

/// A binary mask of one slice; entries are 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskSlice {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl MaskSlice {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::shape(width * height, data.len()));
        }
        if let Some((index, &value)) = data.iter().enumerate().find(|(_, &v)| v > 1) {
            return Err(Error::OutOfRangeValue {
                index,
                value: value as f64,
                kind: "binary",
            });
        }
        Ok(MaskSlice { width, height, data })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        MaskSlice {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    /// Builds a mask by evaluating `f(x, y)` at every pixel center.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y) as u8);
            }
        }
        MaskSlice { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    /// Foreground test; coordinates outside the grid are background.
    pub fn is_set(&self, x: isize, y: isize) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.data[y as usize * self.width + x as usize] == 1
    }

    pub fn count(&self) -> usize {
        self.data.iter().map(|&v| v as usize).sum()
    }
}

/// A scalar field on one slice with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapSlice {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl HeatmapSlice {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::shape(width * height, data.len()));
        }
        check_values(&data, VolumeKind::Heatmap)?;
        Ok(HeatmapSlice { width, height, data })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        HeatmapSlice {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Bilinear interpolation at a continuous position, or `None` outside
    /// the convex hull of the pixel centers.
    pub fn bilinear(&self, x: f64, y: f64) -> Option<f64> {
        let (xmax, ymax) = ((self.width - 1) as f64, (self.height - 1) as f64);
        if !(0.0..=xmax).contains(&x) || !(0.0..=ymax).contains(&y) {
            return None;
        }
        let (x0, y0) = (x.floor().min(xmax - 1.0).max(0.0), y.floor().min(ymax - 1.0).max(0.0));
        let (fx, fy) = (x - x0, y - y0);
        let (i, j) = (x0 as usize, y0 as usize);
        let (i1, j1) = ((i + 1).min(self.width - 1), (j + 1).min(self.height - 1));
        let top = self.get(i, j) * (1.0 - fx) + self.get(i1, j) * fx;
        let bottom = self.get(i, j1) * (1.0 - fx) + self.get(i1, j1) * fx;
        Some(top * (1.0 - fy) + bottom * fy)
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }
}

/// Which value domain a volume must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeKind {
    /// Values in `{0, 1}`.
    Binary,
    /// Values in `[0, 1]`.
    Heatmap,
}

impl VolumeKind {
    fn name(self) -> &'static str {
        match self {
            VolumeKind::Binary => "binary",
            VolumeKind::Heatmap => "heatmap",
        }
    }

    fn admits(self, v: f64) -> bool {
        match self {
            VolumeKind::Binary => v == 0.0 || v == 1.0,
            VolumeKind::Heatmap => (0.0..=1.0).contains(&v),
        }
    }
}

fn check_values(data: &[f64], kind: VolumeKind) -> Result<()> {
    match data.iter().position(|&v| !kind.admits(v)) {
        Some(index) => Err(Error::OutOfRangeValue {
            index,
            value: data[index],
            kind: kind.name(),
        }),
        None => Ok(()),
    }
}

/// A stack of equally sized slices, `depth x height x width`.
///
/// Values are unconstrained reals; use [`validate_volume`] to check a
/// binary or heatmap domain. `spacing` is `(sx, sy, sz)` in millimetres,
/// i.e. column, row and slice pitch.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    depth: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
    spacing: [f64; 3],
}

impl Volume {
    pub fn new(depth: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != depth * height * width {
            return Err(Error::shape(
                format!("{depth}x{height}x{width} = {} elements", depth * height * width),
                format!("{} elements", data.len()),
            ));
        }
        Ok(Volume {
            depth,
            height,
            width,
            data,
            spacing: [1.0; 3],
        })
    }

    pub fn zeros(depth: usize, height: usize, width: usize) -> Self {
        Volume {
            depth,
            height,
            width,
            data: vec![0.0; depth * height * width],
            spacing: [1.0; 3],
        }
    }

    pub fn from_heatmaps(slices: &[HeatmapSlice]) -> Result<Self> {
        let (height, width) = slices.first().map_or((0, 0), |s| (s.height, s.width));
        let mut data = Vec::with_capacity(slices.len() * height * width);
        for s in slices {
            if (s.height, s.width) != (height, width) {
                return Err(Error::shape((height, width), (s.height, s.width)));
            }
            data.extend_from_slice(&s.data);
        }
        Volume::new(slices.len(), height, width, data)
    }

    pub fn from_masks(slices: &[MaskSlice]) -> Result<Self> {
        let (height, width) = slices.first().map_or((0, 0), |s| (s.height, s.width));
        let mut data = Vec::with_capacity(slices.len() * height * width);
        for s in slices {
            if (s.height, s.width) != (height, width) {
                return Err(Error::shape((height, width), (s.height, s.width)));
            }
            data.extend(s.data.iter().map(|&v| v as f64));
        }
        Volume::new(slices.len(), height, width, data)
    }

    pub fn with_spacing(mut self, spacing: [f64; 3]) -> Self {
        self.spacing = spacing;
        self
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// `(depth, height, width)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.depth, self.height, self.width)
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, z: usize, y: usize, x: usize) -> f64 {
        self.data[(z * self.height + y) * self.width + x]
    }

    pub fn slice(&self, z: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.data[z * n..(z + 1) * n]
    }

    pub fn slices(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.depth).map(move |z| self.slice(z))
    }

    /// Slice `z` as a mask; nonzero values count as foreground.
    pub fn mask_slice(&self, z: usize) -> MaskSlice {
        MaskSlice {
            width: self.width,
            height: self.height,
            data: self.slice(z).iter().map(|&v| (v != 0.0) as u8).collect(),
        }
    }

    /// Number of nonzero voxels.
    pub fn count_nonzero(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0.0).count()
    }

    pub(crate) fn ensure_same_shape(&self, other: &Volume) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::shape(self.shape(), other.shape()));
        }
        Ok(())
    }
}

/// Checks the value domain of `v` (and its element count).
pub fn validate_volume(v: &Volume, kind: VolumeKind) -> Result<()> {
    if v.data.len() != v.depth * v.height * v.width {
        return Err(Error::shape(v.depth * v.height * v.width, v.data.len()));
    }
    check_values(&v.data, kind)
}
