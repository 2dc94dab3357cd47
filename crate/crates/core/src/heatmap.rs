//! Elliptical Gaussian pseudo labels.
//!
//! A pixel at local coordinates `(px, py)` (major-axis frame) gets
//!
//! ```text
//! G = exp(-ln2 * px^2 / w^2) * exp(-ln2 * py^2 / h^2)
//! ```
//!
//! Each factor is a peak-normalized 1-D Gaussian with `sigma = w / sqrt(ln 4)`
//! (resp. `h`), chosen so it drops to exactly 0.5 at one semi-axis. The
//! product is therefore 1 at the center and exactly 0.5 on the ellipse, so
//! thresholding at 0.5 recovers the annotated region.

use std::f64::consts::LN_2;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{EllipseParams, EllipseRecord};
use crate::volume::{HeatmapSlice, Volume};

/// Smallest semi-axis for which a heatmap is generated.
pub const MIN_SEMI_AXIS: f64 = 0.5;

/// Analytic heatmap value at a continuous position.
pub fn heatmap_value(params: &EllipseParams, x: f64, y: f64) -> f64 {
    (-LN_2 * params.normalized_radius_sq(x, y)).exp()
}

fn check_params(params: &EllipseParams) -> Result<()> {
    if params.w < MIN_SEMI_AXIS || params.h < MIN_SEMI_AXIS {
        return Err(Error::DegenerateEllipse {
            w: params.w,
            h: params.h,
        });
    }
    Ok(())
}

/// Samples the heatmap of `params` on an `n x n` grid of pixel centers.
pub fn generate_heatmap(params: &EllipseParams, n: usize) -> Result<HeatmapSlice> {
    generate_heatmap_rect(params, n, n)
}

/// Rectangular variant of [`generate_heatmap`].
pub fn generate_heatmap_rect(params: &EllipseParams, width: usize, height: usize) -> Result<HeatmapSlice> {
    if width < 2 || height < 2 {
        return Err(Error::InvalidSize(width.min(height)));
    }
    check_params(params)?;
    let mut data = Vec::with_capacity(width * height);
    for j in 0..height {
        for i in 0..width {
            data.push(heatmap_value(params, i as f64, j as f64));
        }
    }
    HeatmapSlice::new(width, height, data)
}

/// Every intermediate grid of the stepwise construction, row-major `n x n`.
///
/// Only useful for inspection; [`generate_heatmap`] evaluates the same
/// product in closed form.
#[derive(Debug, Clone)]
pub struct HeatmapSteps {
    pub n: usize,
    /// Column coordinate of each pixel.
    pub ux: Vec<f64>,
    /// Row coordinate of each pixel.
    pub uy: Vec<f64>,
    pub mx: Vec<f64>,
    pub my: Vec<f64>,
    pub px: Vec<f64>,
    pub py: Vec<f64>,
    pub fx: Vec<f64>,
    pub fy: Vec<f64>,
    pub g: Vec<f64>,
}

/// Builds the heatmap through explicit grids: coordinate ramps, centering,
/// rotation, per-axis Gaussians and their elementwise product.
pub fn heatmap_steps(params: &EllipseParams, n: usize) -> Result<HeatmapSteps> {
    if n < 2 {
        return Err(Error::InvalidSize(n));
    }
    check_params(params)?;
    let (sin, cos) = params.theta.sin_cos();
    let len = n * n;
    let ux: Vec<f64> = (0..len).map(|k| (k % n) as f64).collect();
    let uy: Vec<f64> = (0..len).map(|k| (k / n) as f64).collect();
    let mx: Vec<f64> = ux.iter().map(|u| u - params.cx).collect();
    let my: Vec<f64> = uy.iter().map(|u| u - params.cy).collect();
    let px: Vec<f64> = mx.iter().zip(&my).map(|(x, y)| x * cos + y * sin).collect();
    let py: Vec<f64> = mx.iter().zip(&my).map(|(x, y)| y * cos - x * sin).collect();
    let sigma_x = params.w / 4f64.ln().sqrt();
    let sigma_y = params.h / 4f64.ln().sqrt();
    let fx: Vec<f64> = px.iter().map(|p| (-p * p / (2.0 * sigma_x * sigma_x)).exp()).collect();
    let fy: Vec<f64> = py.iter().map(|p| (-p * p / (2.0 * sigma_y * sigma_y)).exp()).collect();
    let g = fx.iter().zip(&fy).map(|(a, b)| a * b).collect();
    Ok(HeatmapSteps {
        n,
        ux,
        uy,
        mx,
        my,
        px,
        py,
        fx,
        fy,
        g,
    })
}

/// A heatmap together with the ellipse it was generated from.
#[derive(Debug, Clone)]
pub struct GaussianField {
    params: EllipseParams,
    values: HeatmapSlice,
}

impl GaussianField {
    pub fn new(params: EllipseParams, n: usize) -> Result<Self> {
        Ok(GaussianField {
            values: generate_heatmap(&params, n)?,
            params,
        })
    }

    pub fn params(&self) -> &EllipseParams {
        &self.params
    }

    pub fn values(&self) -> &HeatmapSlice {
        &self.values
    }

    pub fn size(&self) -> usize {
        self.values.width()
    }

    /// Exact value at a continuous position.
    pub fn analytic(&self, x: f64, y: f64) -> f64 {
        heatmap_value(&self.params, x, y)
    }

    /// Bilinear interpolation of the sampled grid.
    pub fn interpolate(&self, x: f64, y: f64) -> Option<f64> {
        self.values.bilinear(x, y)
    }
}

/// Stacks per-slice heatmaps into a `depth x n x n` volume; slices without a
/// record stay zero.
pub fn stack_heatmaps(records: &[EllipseRecord], depth: usize, n: usize) -> Result<Volume> {
    stack_heatmaps_rect(records, depth, n, n)
}

pub fn stack_heatmaps_rect(records: &[EllipseRecord], depth: usize, width: usize, height: usize) -> Result<Volume> {
    if width < 2 || height < 2 {
        return Err(Error::InvalidSize(width.min(height)));
    }
    let mut by_slice: Vec<Option<&EllipseParams>> = vec![None; depth];
    for r in records {
        let slot = by_slice.get_mut(r.slice_index).ok_or(Error::IndexOutOfRange {
            index: r.slice_index,
            depth,
        })?;
        if slot.is_some() {
            return Err(Error::InvalidArgument(format!(
                "duplicate ellipse record for slice {}",
                r.slice_index
            )));
        }
        *slot = Some(&r.params);
    }
    let slices = by_slice
        .par_iter()
        .map(|p| match p {
            Some(params) => generate_heatmap_rect(params, width, height),
            None => Ok(HeatmapSlice::zeros(width, height)),
        })
        .collect::<Result<Vec<_>>>()?;
    Volume::from_heatmaps(&slices)
}

/// Binarizes a heatmap: 1 where the value is strictly above `t`.
pub fn threshold(v: &Volume, t: f64) -> Result<Volume> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::OutOfRangeThreshold(t));
    }
    let (d, h, w) = v.shape();
    let data = v.data().iter().map(|&x| if x > t { 1.0 } else { 0.0 }).collect();
    Ok(Volume::new(d, h, w, data)?.with_spacing(v.spacing()))
}

/// Voxelwise product of a heatmap `p` and a binary mask `s`.
pub fn elementwise_product(p: &Volume, s: &Volume) -> Result<Volume> {
    p.ensure_same_shape(s)?;
    let (d, h, w) = p.shape();
    let data = p.data().iter().zip(s.data()).map(|(a, b)| a * b).collect();
    Ok(Volume::new(d, h, w, data)?.with_spacing(p.spacing()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn reference() -> EllipseParams {
        EllipseParams::new(128.0, 128.0, 40.0, 25.0, 0.0).unwrap()
    }

    #[test]
    fn known_values() {
        let g = generate_heatmap(&reference(), 256).unwrap();
        assert_eq!(g.get(128, 128), 1.0);
        assert_abs_diff_eq!(g.get(168, 128), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(g.get(208, 128), 0.0625, epsilon = 1e-15);
        assert_abs_diff_eq!(g.get(128, 153), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn rejects_tiny_grid_and_ellipse() {
        assert!(matches!(generate_heatmap(&reference(), 1), Err(Error::InvalidSize(1))));
        let tiny = EllipseParams::new(5.0, 5.0, 3.0, 0.4, 0.0).unwrap();
        assert!(matches!(
            generate_heatmap(&tiny, 16),
            Err(Error::DegenerateEllipse { .. })
        ));
    }

    #[test]
    fn stepwise_matches_closed_form() {
        let p = EllipseParams::new(20.3, 11.8, 9.0, 4.0, -0.7).unwrap();
        let steps = heatmap_steps(&p, 32).unwrap();
        let closed = generate_heatmap(&p, 32).unwrap();
        for (a, b) in steps.g.iter().zip(closed.data()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-14);
        }
        assert_eq!(steps.ux[33], 1.0);
        assert_eq!(steps.uy[33], 1.0);
    }

    #[test]
    fn center_may_lie_outside_grid() {
        let p = EllipseParams::new(-10.0, 40.0, 20.0, 10.0, 0.3).unwrap();
        let g = generate_heatmap(&p, 32).unwrap();
        assert!(g.data().iter().all(|v| (0.0..1.0).contains(v)));
    }

    #[test]
    fn stack_places_slices() {
        let p = EllipseParams::new(8.0, 8.0, 4.0, 3.0, 0.2).unwrap();
        let empty = stack_heatmaps(&[], 4, 16).unwrap();
        assert_eq!(empty.shape(), (4, 16, 16));
        assert!(empty.data().iter().all(|&v| v == 0.0));

        let v = stack_heatmaps(
            &[EllipseRecord {
                slice_index: 2,
                params: p,
            }],
            4,
            16,
        )
        .unwrap();
        for z in 0..4 {
            let nonzero = v.slice(z).iter().any(|&x| x != 0.0);
            assert_eq!(nonzero, z == 2);
        }
        assert_eq!(v.slice(2), generate_heatmap(&p, 16).unwrap().data());

        assert!(matches!(
            stack_heatmaps(
                &[EllipseRecord {
                    slice_index: 4,
                    params: p
                }],
                4,
                16
            ),
            Err(Error::IndexOutOfRange { index: 4, depth: 4 })
        ));
    }

    #[test]
    fn threshold_is_strict() {
        let half = Volume::new(1, 2, 2, vec![0.5; 4]).unwrap();
        assert!(threshold(&half, 0.5).unwrap().data().iter().all(|&v| v == 0.0));
        let zero = Volume::zeros(2, 3, 3);
        assert_eq!(threshold(&zero, 0.5).unwrap(), zero);
        assert!(matches!(threshold(&zero, 1.0), Err(Error::OutOfRangeThreshold(_))));
        assert!(matches!(threshold(&zero, 0.0), Err(Error::OutOfRangeThreshold(_))));
    }

    #[test]
    fn product_examples() {
        let p = Volume::new(1, 1, 2, vec![0.8, 0.3]).unwrap();
        let s = Volume::new(1, 1, 2, vec![1.0, 0.0]).unwrap();
        assert_eq!(elementwise_product(&p, &s).unwrap().data(), &[0.8, 0.0]);
        let none = Volume::zeros(1, 1, 2);
        assert!(elementwise_product(&p, &none).unwrap().data().iter().all(|&v| v == 0.0));
        assert!(elementwise_product(&p, &Volume::zeros(1, 2, 1)).is_err());
    }
}
