use super::{combined_loss, mae_loss, DistributionMode, LossWeights};
use crate::error::{Error, Result};
use crate::volume::Volume;

/// Outcome of [`recover_by_descent`].
#[derive(Debug, Clone)]
pub struct Descent {
    pub x: Volume,
    /// Combined loss before the first step and after every accepted step.
    pub trace: Vec<f64>,
    /// Step size in effect when descent stopped.
    pub final_lr: f64,
}

impl Descent {
    /// Mean absolute error between the recovered volume and `g`.
    pub fn reconstruction_error(&self, g: &Volume) -> Result<f64> {
        Ok(mae_loss(g.data(), self.x.data())?.value)
    }
}

// Once the step has been halved this many times without progress the
// iterate is at a (sub)gradient fixed point for practical purposes.
const MAX_HALVINGS: u32 = 60;

/// Gradient descent on the combined loss starting from `x = 0`.
///
/// A step that would increase the loss is retried with half the learning
/// rate, so the trace never increases. Descent stops early when no step size
/// down to `lr * 2^-60` makes progress.
pub fn recover_by_descent(
    g: &Volume,
    mode: DistributionMode,
    weights: LossWeights,
    steps: usize,
    lr: f64,
) -> Result<Descent> {
    if steps == 0 {
        return Err(Error::InvalidArgument("descent needs at least one step".into()));
    }
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "learning rate must be positive (got {lr})"
        )));
    }
    let (d, h, w) = g.shape();
    let mut x = Volume::zeros(d, h, w);
    let (mut loss, mut grad) = combined_loss(g, &x, weights, mode)?;
    if !loss.total.is_finite() {
        return Err(Error::NonFiniteLoss { step: 0 });
    }
    let mut trace = vec![loss.total];
    let mut lr = lr;
    let mut halvings = 0;

    'outer: for step in 1..=steps {
        if grad.iter().all(|&v| v == 0.0) {
            break;
        }
        loop {
            let data = x.data().iter().zip(&grad).map(|(xi, gi)| xi - lr * gi).collect();
            let candidate = Volume::new(d, h, w, data)?;
            let (next, next_grad) = combined_loss(g, &candidate, weights, mode)?;
            if !next.total.is_finite() {
                return Err(Error::NonFiniteLoss { step });
            }
            if next.total <= loss.total {
                x = candidate;
                loss = next;
                grad = next_grad;
                trace.push(loss.total);
                break;
            }
            halvings += 1;
            if halvings > MAX_HALVINGS {
                break 'outer;
            }
            lr *= 0.5;
        }
    }
    Ok(Descent {
        x: x.with_spacing(g.spacing()),
        trace,
        final_lr: lr,
    })
}
