//! Synthetic vessel-like phantoms for testing the pseudo-label pipeline.
//!
//! A phantom is a stack of ellipses whose center, size and orientation drift
//! slowly from slice to slice (a bounded random walk), optionally with an
//! aneurysm-like dilation over a range of slices. Each slice yields a
//! "strong" mask, the ellipse with a smooth radial boundary perturbation,
//! and a pseudo label, the Gaussian heatmap of the unperturbed ellipse.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{EllipseParams, EllipseRecord};
use crate::heatmap::stack_heatmaps;
use crate::volume::{MaskSlice, Volume};

/// Multiplicative dilation of both semi-axes over slices `start..=end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bulge {
    pub factor: f64,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub seed: u64,
    pub depth: usize,
    /// Grid side in pixels.
    pub size: usize,
    /// Maximum center displacement per slice, px.
    pub drift: f64,
    /// Range of the (undilated) semi-major axis, px.
    pub axis_range: (f64, f64),
    /// Range of the semi-minor / semi-major ratio.
    pub minor_ratio: (f64, f64),
    /// Maximum rotation change per slice, rad.
    pub angle_drift: f64,
    pub bulge: Option<Bulge>,
    /// Peak radial deviation of the strong mask from the ellipse, px.
    pub perturbation: f64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        PhantomSpec {
            seed: 42,
            depth: 16,
            size: 256,
            drift: 1.0,
            axis_range: (20.0, 35.0),
            minor_ratio: (0.5, 0.7),
            angle_drift: 0.05,
            bulge: None,
            perturbation: 0.0,
        }
    }
}

// Harmonics used for the boundary perturbation.
const HARMONICS: std::ops::RangeInclusive<usize> = 2..=5;

impl PhantomSpec {
    fn max_extent(&self) -> f64 {
        let factor = self.bulge.map_or(1.0, |b| b.factor.max(1.0));
        self.axis_range.1 * factor + self.perturbation + 2.0
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        let (amin, amax) = self.axis_range;
        let (rmin, rmax) = self.minor_ratio;
        if self.depth == 0 {
            return bad("depth must be at least 1".into());
        }
        if self.size < 8 {
            return bad(format!("size {} is too small", self.size));
        }
        let finite = [self.drift, amin, amax, rmin, rmax, self.angle_drift, self.perturbation];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("non-finite parameter".into());
        }
        if self.drift < 0.0 || self.angle_drift < 0.0 || self.perturbation < 0.0 {
            return bad("drift, angle drift and perturbation must be non-negative".into());
        }
        if amin > amax || !(rmin > 0.0 && rmin <= rmax && rmax <= 1.0) {
            return bad("empty axis or ratio range".into());
        }
        if amin * rmin < 2.0 {
            return bad(format!("smallest semi-minor axis {} is below 2 px", amin * rmin));
        }
        if let Some(b) = self.bulge {
            if !(b.factor.is_finite() && b.factor > 0.0) {
                return bad(format!("bulge factor {} must be positive", b.factor));
            }
            if b.start > b.end || b.end >= self.depth {
                return bad(format!(
                    "bulge slices {}..={} outside 0..{}",
                    b.start, b.end, self.depth
                ));
            }
            if amin * rmin * b.factor < 2.0 {
                return bad("bulge shrinks the semi-minor axis below 2 px".into());
            }
        }
        if 2.0 * self.max_extent() >= self.size as f64 - 1.0 {
            return bad(format!(
                "ellipses up to {:.1} px do not fit a {} px grid",
                self.max_extent(),
                self.size
            ));
        }
        Ok(())
    }
}

/// Smooth closed-curve offset, `delta(phi)` in pixels.
#[derive(Debug, Clone)]
struct RadialPerturbation {
    coefficients: Vec<(f64, f64)>,
}

impl RadialPerturbation {
    fn random(rng: &mut ChaCha8Rng, amplitude: f64) -> Self {
        let mut coefficients: Vec<(f64, f64)> = HARMONICS
            .map(|k| {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                (a / k as f64, b / k as f64)
            })
            .collect();
        let raw = RadialPerturbation {
            coefficients: coefficients.clone(),
        };
        let peak = (0..720)
            .map(|i| raw.offset(2.0 * PI * i as f64 / 720.0).abs())
            .fold(0.0, f64::max);
        let scale = if peak > 0.0 { amplitude / peak } else { 0.0 };
        for c in &mut coefficients {
            c.0 *= scale;
            c.1 *= scale;
        }
        RadialPerturbation { coefficients }
    }

    fn offset(&self, phi: f64) -> f64 {
        self.coefficients
            .iter()
            .zip(HARMONICS)
            .map(|((a, b), k)| {
                let (s, c) = (k as f64 * phi).sin_cos();
                a * c + b * s
            })
            .sum()
    }
}

/// Rasterizes an ellipse by testing pixel centers.
pub fn rasterize_ellipse(params: &EllipseParams, width: usize, height: usize) -> MaskSlice {
    MaskSlice::from_fn(width, height, |x, y| params.contains(x as f64, y as f64))
}

fn rasterize_perturbed(params: &EllipseParams, perturbation: &RadialPerturbation, n: usize) -> MaskSlice {
    MaskSlice::from_fn(n, n, |x, y| {
        let (px, py) = params.to_local(x as f64, y as f64);
        let (u, v) = (px / params.w, py / params.h);
        let rho = u.hypot(v);
        let phi = v.atan2(u);
        // Distance from the center to the ellipse along this ray.
        let reach = (params.w * phi.cos()).hypot(params.h * phi.sin());
        rho < 1.0 + perturbation.offset(phi) / reach
    })
}

#[derive(Debug, Clone)]
pub struct Phantom {
    pub records: Vec<EllipseRecord>,
    /// Perturbed binary masks.
    pub strong: Volume,
    /// Heatmaps of the unperturbed ellipses.
    pub pseudo: Volume,
}

fn reflect(v: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    let mut v = v;
    if v < lo {
        v = 2.0 * lo - v;
    }
    if v > hi {
        v = 2.0 * hi - v;
    }
    v.clamp(lo, hi)
}

/// Deterministic for a given spec: random draws happen serially, and only
/// the per-slice rasterization runs in parallel.
pub fn generate_phantom(spec: &PhantomSpec) -> Result<Phantom> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.size as f64;
    let (amin, amax) = spec.axis_range;
    let (rmin, rmax) = spec.minor_ratio;
    let margin = spec.max_extent();

    let mut cx = n / 2.0 + rng.gen_range(-n / 16.0..=n / 16.0);
    let mut cy = n / 2.0 + rng.gen_range(-n / 16.0..=n / 16.0);
    let mut major = rng.gen_range(amin..=amax);
    let mut ratio = rng.gen_range(rmin..=rmax);
    let mut theta = rng.gen_range(-FRAC_PI_2..FRAC_PI_2);
    let axis_step = 0.05 * (amax - amin).max(1.0);
    let ratio_step = 0.05 * (rmax - rmin);

    let mut slices = Vec::with_capacity(spec.depth);
    for z in 0..spec.depth {
        if z > 0 {
            cx += rng.gen_range(-1.0..=1.0) * spec.drift;
            cy += rng.gen_range(-1.0..=1.0) * spec.drift;
            major = reflect(major + rng.gen_range(-1.0..=1.0) * axis_step, amin, amax);
            ratio = reflect(ratio + rng.gen_range(-1.0..=1.0) * ratio_step, rmin, rmax);
            theta += rng.gen_range(-1.0..=1.0) * spec.angle_drift;
        }
        cx = reflect(cx, margin, n - 1.0 - margin);
        cy = reflect(cy, margin, n - 1.0 - margin);
        let dilation = match spec.bulge {
            Some(b) if (b.start..=b.end).contains(&z) => b.factor,
            _ => 1.0,
        };
        let params = EllipseParams::new(cx, cy, major * dilation, major * ratio * dilation, theta)?;
        let perturbation = RadialPerturbation::random(&mut rng, spec.perturbation);
        slices.push((EllipseRecord { slice_index: z, params }, perturbation));
    }

    let masks: Vec<MaskSlice> = slices
        .par_iter()
        .map(|(r, p)| rasterize_perturbed(&r.params, p, spec.size))
        .collect();
    let records: Vec<EllipseRecord> = slices.into_iter().map(|(r, _)| r).collect();
    Ok(Phantom {
        strong: Volume::from_masks(&masks)?,
        pseudo: stack_heatmaps(&records, spec.depth, spec.size)?,
        records,
    })
}
