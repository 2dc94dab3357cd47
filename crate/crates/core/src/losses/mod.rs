//! Pseudo-label training losses with analytic gradients.
//!
//! The distribution term compares softmax-normalized maps (KL divergence per
//! 2-D slice, or an axis-marginal Wasserstein distance over a 3-D volume);
//! the reconstruction term is the mean absolute error. Both `g` (the pseudo
//! label) and `x` (the prediction) pass through the softmax. Every loss
//! returns its gradient with respect to `x`.

mod descent;
mod gradcheck;
mod wasserstein;

pub use descent::{recover_by_descent, Descent};
pub use gradcheck::{check_gradients, GradientCheck};
pub use wasserstein::{axis_cdf_gaps, wasserstein_loss};

use crate::error::{Error, Result};
use crate::volume::Volume;

/// A strictly positive vector summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap(Vec<f64>);

impl ProbabilityMap {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }
}

fn check_finite(x: &[f64]) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteInput)
    }
}

fn check_len(g: &[f64], x: &[f64]) -> Result<()> {
    if g.len() != x.len() {
        return Err(Error::shape(g.len(), x.len()));
    }
    Ok(())
}

/// Max-shifted log-sum-exp and the shift.
fn log_partition(x: &[f64]) -> f64 {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + x.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Softmax over every element of `x`, regardless of its shape.
pub fn softmax_map(x: &[f64]) -> Result<ProbabilityMap> {
    check_finite(x)?;
    if x.is_empty() {
        return Err(Error::InvalidArgument("softmax of an empty map".into()));
    }
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(ProbabilityMap(exps.into_iter().map(|e| e / total).collect()))
}

/// A loss value and its gradient with respect to the prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct LossTerm {
    pub value: f64,
    pub grad: Vec<f64>,
}

/// `KL(softmax(g) || softmax(x))`, summed over all elements.
///
/// The gradient with respect to `x` is `softmax(x) - softmax(g)`.
pub fn kl_loss(g: &[f64], x: &[f64]) -> Result<LossTerm> {
    check_len(g, x)?;
    check_finite(g)?;
    check_finite(x)?;
    if g.is_empty() {
        return Err(Error::InvalidArgument("KL of empty maps".into()));
    }
    let (zg, zx) = (log_partition(g), log_partition(x));
    let mut value = 0.0;
    let mut grad = Vec::with_capacity(x.len());
    for (&gi, &xi) in g.iter().zip(x) {
        let (log_pg, log_px) = (gi - zg, xi - zx);
        let pg = log_pg.exp();
        value += pg * (log_pg - log_px);
        grad.push(log_px.exp() - pg);
    }
    // Rounding can leave a tiny negative sum for identical inputs.
    Ok(LossTerm {
        value: value.max(0.0),
        grad,
    })
}

/// Mean absolute error; subgradient 0 where `g == x`.
pub fn mae_loss(g: &[f64], x: &[f64]) -> Result<LossTerm> {
    check_len(g, x)?;
    check_finite(g)?;
    check_finite(x)?;
    if g.is_empty() {
        return Err(Error::InvalidArgument("MAE of empty maps".into()));
    }
    let t = g.len() as f64;
    let value = g.iter().zip(x).map(|(a, b)| (a - b).abs()).sum::<f64>() / t;
    let grad = g
        .iter()
        .zip(x)
        .map(|(gi, xi)| {
            if xi > gi {
                1.0 / t
            } else if xi < gi {
                -1.0 / t
            } else {
                0.0
            }
        })
        .collect();
    Ok(LossTerm { value, grad })
}

/// Weights of the distribution and reconstruction terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    w1: f64,
    w2: f64,
}

impl LossWeights {
    pub fn new(w1: f64, w2: f64) -> Result<Self> {
        if !(w1.is_finite() && w2.is_finite()) || w1 < 0.0 || w2 < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "loss weights must be finite and non-negative (got {w1}, {w2})"
            )));
        }
        if w1 == 0.0 && w2 == 0.0 {
            return Err(Error::InvalidArgument("loss weights cannot both be zero".into()));
        }
        Ok(LossWeights { w1, w2 })
    }

    pub fn distribution(&self) -> f64 {
        self.w1
    }

    pub fn reconstruction(&self) -> f64 {
        self.w2
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { w1: 1.0, w2: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistributionMode {
    /// KL divergence per slice, averaged over slices.
    Kl2d,
    /// Axis-marginal Wasserstein distance over the whole volume.
    Wasserstein3d,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub total: f64,
    pub distribution_term: f64,
    pub reconstruction_term: f64,
}

/// KL per slice, averaged over the slices of a volume.
pub fn slice_mean_kl(g: &Volume, x: &Volume) -> Result<LossTerm> {
    g.ensure_same_shape(x)?;
    let depth = g.depth();
    if depth == 0 {
        return Err(Error::InvalidArgument("volume has no slices".into()));
    }
    let mut value = 0.0;
    let mut grad = Vec::with_capacity(x.len());
    for z in 0..depth {
        let term = kl_loss(g.slice(z), x.slice(z))?;
        value += term.value;
        grad.extend(term.grad.into_iter().map(|d| d / depth as f64));
    }
    Ok(LossTerm {
        value: value / depth as f64,
        grad,
    })
}

/// `w1 * distribution + w2 * reconstruction`, with the summed gradient.
pub fn combined_loss(
    g: &Volume,
    x: &Volume,
    weights: LossWeights,
    mode: DistributionMode,
) -> Result<(LossValue, Vec<f64>)> {
    g.ensure_same_shape(x)?;
    let dist = match mode {
        DistributionMode::Kl2d => slice_mean_kl(g, x)?,
        DistributionMode::Wasserstein3d => wasserstein_loss(g, x)?,
    };
    let rec = mae_loss(g.data(), x.data())?;
    let (w1, w2) = (weights.distribution(), weights.reconstruction());
    let grad = dist.grad.iter().zip(&rec.grad).map(|(d, r)| w1 * d + w2 * r).collect();
    Ok((
        LossValue {
            total: w1 * dist.value + w2 * rec.value,
            distribution_term: dist.value,
            reconstruction_term: rec.value,
        },
        grad,
    ))
}
