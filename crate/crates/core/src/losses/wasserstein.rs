//! Axis-marginal Wasserstein-1 distance between softmax-normalized volumes.
//!
//! Exact optimal transport between two 3-D distributions has no closed form.
//! Projecting both onto each axis does: in 1-D, W1 is the L1 distance between
//! the cumulative distributions. The loss is the sum of the three axis
//! distances in index units. It is zero exactly when all marginals agree.

use super::{check_finite, softmax_map, LossTerm};
use crate::error::{Error, Result};
use crate::volume::Volume;

/// Marginal mass along each axis, ordered `[z, y, x]`.
fn marginals(p: &[f64], (d, h, w): (usize, usize, usize)) -> [Vec<f64>; 3] {
    let mut mz = vec![0.0; d];
    let mut my = vec![0.0; h];
    let mut mx = vec![0.0; w];
    for z in 0..d {
        for y in 0..h {
            let row = &p[(z * h + y) * w..(z * h + y + 1) * w];
            for (x, &v) in row.iter().enumerate() {
                mz[z] += v;
                my[y] += v;
                mx[x] += v;
            }
        }
    }
    [mz, my, mx]
}

/// `CDF_x(j) - CDF_g(j)` for `j` in `0..len-1`; the final entry, where both
/// distributions have accumulated all their mass, is omitted.
fn cdf_gaps(mg: &[f64], mx: &[f64]) -> Vec<f64> {
    let (mut cg, mut cx) = (0.0, 0.0);
    mg.iter()
        .zip(mx)
        .take(mg.len().saturating_sub(1))
        .map(|(a, b)| {
            cg += a;
            cx += b;
            cx - cg
        })
        .collect()
}

/// Per-axis CDF gaps `[z, y, x]` between `softmax(x)` and `softmax(g)`.
///
/// The loss is non-differentiable wherever a gap is zero.
pub fn axis_cdf_gaps(g: &Volume, x: &Volume) -> Result<[Vec<f64>; 3]> {
    g.ensure_same_shape(x)?;
    let pg = softmax_map(g.data())?;
    let px = softmax_map(x.data())?;
    let mg = marginals(pg.values(), g.shape());
    let mx = marginals(px.values(), x.shape());
    Ok([0, 1, 2].map(|k| cdf_gaps(&mg[k], &mx[k])))
}

/// Sum over the three axes of the 1-D Wasserstein-1 distance between the
/// marginals of `softmax(g)` and `softmax(x)`.
///
/// Subgradient 0 is taken where a CDF gap is exactly zero.
pub fn wasserstein_loss(g: &Volume, x: &Volume) -> Result<LossTerm> {
    g.ensure_same_shape(x)?;
    check_finite(g.data())?;
    check_finite(x.data())?;
    if g.is_empty() {
        return Err(Error::InvalidArgument("Wasserstein loss of empty volumes".into()));
    }
    let shape = x.shape();
    let pg = softmax_map(g.data())?;
    let px = softmax_map(x.data())?;
    let mg = marginals(pg.values(), shape);
    let mx = marginals(px.values(), shape);

    let mut value = 0.0;
    // d(loss)/d(marginal mass) per axis.
    let mut dmass: [Vec<f64>; 3] = Default::default();
    for k in 0..3 {
        let gaps = cdf_gaps(&mg[k], &mx[k]);
        value += gaps.iter().map(|v| v.abs()).sum::<f64>();
        // Mass at index i enters every CDF value at j >= i.
        let mut acc = 0.0;
        let mut dm = vec![0.0; mx[k].len()];
        for i in (0..gaps.len()).rev() {
            acc += sign(gaps[i]);
            dm[i] = acc;
        }
        dmass[k] = dm;
    }

    // Chain through the marginals to voxels, then through the softmax:
    // dL/dx_i = p_i (q_i - sum_j p_j q_j).
    let (d, h, w) = shape;
    let p = px.values();
    let mut q = Vec::with_capacity(p.len());
    for z in 0..d {
        for y in 0..h {
            for xi in 0..w {
                q.push(dmass[0][z] + dmass[1][y] + dmass[2][xi]);
            }
        }
    }
    let mean_q: f64 = p.iter().zip(&q).map(|(a, b)| a * b).sum();
    let grad = p.iter().zip(&q).map(|(pi, qi)| pi * (qi - mean_q)).collect();
    Ok(LossTerm { value, grad })
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}
