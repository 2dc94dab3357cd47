//! Finite-difference verification of the analytic loss gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{axis_cdf_gaps, kl_loss, mae_loss, wasserstein_loss};
use crate::error::Result;
use crate::volume::Volume;

/// Largest normwise relative gradient error of each loss, measured away from
/// kinks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    pub kl: f64,
    pub wasserstein: f64,
    pub mae: f64,
}

impl GradientCheck {
    pub fn max_error(&self) -> f64 {
        self.kl.max(self.wasserstein).max(self.mae)
    }
}

/// `max |analytic - numeric| / max |numeric|` over the kept coordinates.
fn normwise_error(analytic: &[f64], numeric: &[f64], keep: &[bool]) -> f64 {
    let mut scale: f64 = 0.0;
    let mut err: f64 = 0.0;
    for ((a, n), k) in analytic.iter().zip(numeric).zip(keep) {
        if *k {
            scale = scale.max(n.abs());
            err = err.max((a - n).abs());
        }
    }
    if scale > 0.0 {
        err / scale
    } else {
        err
    }
}

/// Central differences of `f` at `x`, plus whether each coordinate should be
/// kept: `kink` sees the two probe points and reports a non-smooth crossing.
fn central_differences(
    x: &[f64],
    step: f64,
    f: impl Fn(&[f64]) -> Result<f64>,
    kink: impl Fn(&[f64], &[f64]) -> Result<bool>,
) -> Result<(Vec<f64>, Vec<bool>)> {
    let mut up = x.to_vec();
    let mut down = x.to_vec();
    let mut numeric = Vec::with_capacity(x.len());
    let mut keep = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        up[i] = x[i] + step;
        down[i] = x[i] - step;
        numeric.push((f(&up)? - f(&down)?) / (2.0 * step));
        keep.push(!kink(&up, &down)?);
        up[i] = x[i];
        down[i] = x[i];
    }
    Ok((numeric, keep))
}

fn gap_signs(g: &Volume, x: &Volume) -> Result<Vec<i8>> {
    Ok(axis_cdf_gaps(g, x)?
        .iter()
        .flatten()
        .map(|v| {
            if *v > 0.0 {
                1
            } else if *v < 0.0 {
                -1
            } else {
                0
            }
        })
        .collect())
}

/// Checks the KL (8x8), Wasserstein (4x8x8) and MAE (16x16) gradients at
/// random inputs drawn from `seed`.
pub fn check_gradients(seed: u64, step: f64) -> Result<GradientCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect() };

    let (g, x) = (draw(64), draw(64));
    let analytic = kl_loss(&g, &x)?.grad;
    let (numeric, keep) = central_differences(&x, step, |v| Ok(kl_loss(&g, v)?.value), |_, _| Ok(false))?;
    let kl = normwise_error(&analytic, &numeric, &keep);

    let shape = (4, 8, 8);
    let volume = |data: &[f64]| Volume::new(shape.0, shape.1, shape.2, data.to_vec());
    let (g, x) = (volume(&draw(256))?, draw(256));
    let analytic = wasserstein_loss(&g, &volume(&x)?)?.grad;
    let base = gap_signs(&g, &volume(&x)?)?;
    let (numeric, keep) = central_differences(
        &x,
        step,
        |v| Ok(wasserstein_loss(&g, &volume(v)?)?.value),
        |up, down| Ok(gap_signs(&g, &volume(up)?)? != base || gap_signs(&g, &volume(down)?)? != base),
    )?;
    let wasserstein = normwise_error(&analytic, &numeric, &keep);

    let (g, x) = (draw(256), draw(256));
    let analytic = mae_loss(&g, &x)?.grad;
    let (numeric, _) = central_differences(&x, step, |v| Ok(mae_loss(&g, v)?.value), |_, _| Ok(false))?;
    let keep: Vec<bool> = g.iter().zip(&x).map(|(a, b)| (a - b).abs() > step).collect();
    let mae = normwise_error(&analytic, &numeric, &keep);

    Ok(GradientCheck { kl, wasserstein, mae })
}
