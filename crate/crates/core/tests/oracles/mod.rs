//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls into the code paths it checks.

#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;

/// Raw ellipse description used by the oracles: `(cx, cy, w, h, theta)`.
pub type Ellipse = (f64, f64, f64, f64, f64);

/// Random ellipse with `w, h` in `[5, 60]`, aspect ratio at most 8 and
/// `theta` uniform in `(-pi/2, pi/2)`; `w >= h`.
pub fn random_ellipse<R: Rng>(rng: &mut R, center_range: (f64, f64)) -> Ellipse {
    loop {
        let a = rng.gen_range(5.0..=60.0);
        let b = rng.gen_range(5.0..=60.0);
        let (w, h) = if a >= b { (a, b) } else { (b, a) };
        if w / h > 8.0 {
            continue;
        }
        let theta = rng.gen_range(-FRAC_PI_2..FRAC_PI_2);
        let cx = rng.gen_range(center_range.0..center_range.1);
        let cy = rng.gen_range(center_range.0..center_range.1);
        return (cx, cy, w, h, theta);
    }
}

/// Parametric boundary samples, written out with an explicit rotation matrix.
pub fn parametric_points(e: Ellipse, count: usize) -> Vec<(f64, f64)> {
    let (cx, cy, w, h, theta) = e;
    let rot = [[theta.cos(), -theta.sin()], [theta.sin(), theta.cos()]];
    (0..count)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / count as f64;
            let (u, v) = (w * t.cos(), h * t.sin());
            (cx + rot[0][0] * u + rot[0][1] * v, cy + rot[1][0] * u + rot[1][1] * v)
        })
        .collect()
}

/// Center-inclusion rasterization of an ellipse on a `width x height` grid,
/// row-major, via the inverse rotation matrix.
pub fn rasterize(e: Ellipse, width: usize, height: usize) -> Vec<bool> {
    let (cx, cy, w, h, theta) = e;
    let inv = [[theta.cos(), theta.sin()], [-theta.sin(), theta.cos()]];
    let mut out = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            let (u, v) = (inv[0][0] * dx + inv[0][1] * dy, inv[1][0] * dx + inv[1][1] * dy);
            out.push((u / w).powi(2) + (v / h).powi(2) < 1.0);
        }
    }
    out
}

/// Dice in [0, 1] between boolean masks.
pub fn dice01(a: &[bool], b: &[bool]) -> f64 {
    let inter = a.iter().zip(b).filter(|(x, y)| **x && **y).count();
    let total = a.iter().filter(|x| **x).count() + b.iter().filter(|x| **x).count();
    if total == 0 {
        1.0
    } else {
        2.0 * inter as f64 / total as f64
    }
}

/// Smallest difference between two orientations modulo pi.
pub fn angle_error(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

/// Central finite-difference gradient.
pub fn finite_difference(f: &dyn Fn(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + step;
            let up = f(&probe);
            probe[i] = orig - step;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Max-norm relative error `max_i |a_i - n_i| / max_i |n_i|` over the
/// coordinates not masked out.
pub fn relative_error(analytic: &[f64], numeric: &[f64], keep: &[bool]) -> f64 {
    let scale = numeric
        .iter()
        .zip(keep)
        .filter(|(_, k)| **k)
        .map(|(n, _)| n.abs())
        .fold(0.0, f64::max);
    let err = analytic
        .iter()
        .zip(numeric)
        .zip(keep)
        .filter(|(_, k)| **k)
        .map(|((a, n), _)| (a - n).abs())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        err
    } else {
        err / scale
    }
}

/// Brute-force softmax without max-shifting.
pub fn softmax_direct(x: &[f64]) -> Vec<f64> {
    let total: f64 = x.iter().map(|v| v.exp()).sum();
    x.iter().map(|v| v.exp() / total).collect()
}

/// KL(softmax(g) || softmax(x)) straight from the definition.
pub fn kl_direct(g: &[f64], x: &[f64]) -> f64 {
    let (pg, px) = (softmax_direct(g), softmax_direct(x));
    pg.iter().zip(&px).map(|(a, b)| a * (a / b).ln()).sum()
}

/// Axis-marginal W1 straight from the definition, `shape = (d, h, w)`.
pub fn wasserstein_direct(g: &[f64], x: &[f64], shape: (usize, usize, usize)) -> f64 {
    let (pg, px) = (softmax_direct(g), softmax_direct(x));
    let (d, h, w) = shape;
    let axis_len = [d, h, w];
    let mut total = 0.0;
    for axis in 0..3 {
        let mut mg = vec![0.0; axis_len[axis]];
        let mut mx = vec![0.0; axis_len[axis]];
        for z in 0..d {
            for y in 0..h {
                for c in 0..w {
                    let i = (z * h + y) * w + c;
                    let k = [z, y, c][axis];
                    mg[k] += pg[i];
                    mx[k] += px[i];
                }
            }
        }
        for j in 0..axis_len[axis] {
            let cg: f64 = mg[..=j].iter().sum();
            let cx: f64 = mx[..=j].iter().sum();
            total += (cg - cx).abs();
        }
    }
    total
}

pub fn mae_direct(g: &[f64], x: &[f64]) -> f64 {
    g.iter().zip(x).map(|(a, b)| (a - b).abs()).sum::<f64>() / g.len() as f64
}

/// Voxel coordinates `(z, y, x)` of boundary voxels: foreground with a
/// background (or out-of-volume) 6-neighbor.
pub fn boundary_brute(v: &[bool], shape: (usize, usize, usize)) -> Vec<(usize, usize, usize)> {
    let (d, h, w) = shape;
    let at = |z: i64, y: i64, x: i64| -> bool {
        if z < 0 || y < 0 || x < 0 || z >= d as i64 || y >= h as i64 || x >= w as i64 {
            return false;
        }
        v[(z as usize * h + y as usize) * w + x as usize]
    };
    let mut out = Vec::new();
    for z in 0..d as i64 {
        for y in 0..h as i64 {
            for x in 0..w as i64 {
                if !at(z, y, x) {
                    continue;
                }
                let exposed = !at(z - 1, y, x)
                    || !at(z + 1, y, x)
                    || !at(z, y - 1, x)
                    || !at(z, y + 1, x)
                    || !at(z, y, x - 1)
                    || !at(z, y, x + 1);
                if exposed {
                    out.push((z as usize, y as usize, x as usize));
                }
            }
        }
    }
    out
}

/// Exhaustive symmetric Hausdorff distance over all boundary pairs;
/// `spacing = (sx, sy, sz)`.
pub fn hausdorff_brute(a: &[bool], b: &[bool], shape: (usize, usize, usize), spacing: [f64; 3]) -> f64 {
    let (ba, bb) = (boundary_brute(a, shape), boundary_brute(b, shape));
    let dist = |p: (usize, usize, usize), q: (usize, usize, usize)| {
        let dz = (p.0 as f64 - q.0 as f64) * spacing[2];
        let dy = (p.1 as f64 - q.1 as f64) * spacing[1];
        let dx = (p.2 as f64 - q.2 as f64) * spacing[0];
        (dx * dx + dy * dy + dz * dz).sqrt()
    };
    let directed = |from: &[(usize, usize, usize)], to: &[(usize, usize, usize)]| {
        from.iter()
            .map(|&p| to.iter().map(|&q| dist(p, q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(&ba, &bb).max(directed(&bb, &ba))
}

/// `(tp, fp, fn, tn)` by direct tally.
pub fn counts_brute(pred: &[bool], gt: &[bool]) -> (usize, usize, usize, usize) {
    let mut c = (0, 0, 0, 0);
    for i in 0..pred.len() {
        match (pred[i], gt[i]) {
            (true, true) => c.0 += 1,
            (true, false) => c.1 += 1,
            (false, true) => c.2 += 1,
            (false, false) => c.3 += 1,
        }
    }
    c
}
