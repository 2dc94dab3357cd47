//! Segmentation evaluation: Dice, sensitivity, Hausdorff distance and
//! volumetric similarity, plus aggregation over cases.
//!
//! Nonzero voxels are foreground. Percent-valued metrics are in `[0, 100]`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::Volume;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn confusion(pred: &Volume, gt: &Volume) -> Result<ConfusionCounts> {
    pred.ensure_same_shape(gt)?;
    let mut c = ConfusionCounts::default();
    for (&p, &g) in pred.data().iter().zip(gt.data()) {
        match (p != 0.0, g != 0.0) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// Dice similarity coefficient in percent; 100 when both are empty.
pub fn dice(pred: &Volume, gt: &Volume) -> Result<f64> {
    Ok(dice_from_counts(&confusion(pred, gt)?))
}

pub fn dice_from_counts(c: &ConfusionCounts) -> f64 {
    let denom = 2 * c.tp + c.fp + c.fn_;
    if denom == 0 {
        100.0
    } else {
        100.0 * (2 * c.tp) as f64 / denom as f64
    }
}

/// True-positive rate in percent.
pub fn sensitivity(pred: &Volume, gt: &Volume) -> Result<f64> {
    let c = confusion(pred, gt)?;
    if c.tp + c.fn_ == 0 {
        return Err(Error::EmptyGroundTruth);
    }
    Ok(100.0 * c.tp as f64 / (c.tp + c.fn_) as f64)
}

/// Volumetric similarity in percent.
pub fn volumetric_similarity(pred: &Volume, gt: &Volume) -> Result<f64> {
    pred.ensure_same_shape(gt)?;
    let (a, b) = (pred.count_nonzero() as f64, gt.count_nonzero() as f64);
    if a + b == 0.0 {
        return Err(Error::BothEmpty);
    }
    Ok(100.0 * (1.0 - (a - b).abs() / (a + b)))
}

/// Foreground voxels with at least one background 6-neighbor; neighbors
/// outside the volume count as background.
pub fn boundary_voxels(v: &Volume) -> Vec<bool> {
    let (d, h, w) = v.shape();
    let fg = |z: isize, y: isize, x: isize| {
        z >= 0
            && y >= 0
            && x >= 0
            && (z as usize) < d
            && (y as usize) < h
            && (x as usize) < w
            && v.get(z as usize, y as usize, x as usize) != 0.0
    };
    let mut out = vec![false; v.len()];
    for z in 0..d as isize {
        for y in 0..h as isize {
            for x in 0..w as isize {
                if fg(z, y, x)
                    && [(-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0), (0, 0, -1), (0, 0, 1)]
                        .iter()
                        .any(|(dz, dy, dx)| !fg(z + dz, y + dy, x + dx))
                {
                    out[(z as usize * h + y as usize) * w + x as usize] = true;
                }
            }
        }
    }
    out
}

/// Symmetric maximum Hausdorff distance between the boundary voxel sets,
/// with `spacing = (sx, sy, sz)` scaling column, row and slice steps.
pub fn hausdorff(pred: &Volume, gt: &Volume, spacing: [f64; 3]) -> Result<f64> {
    pred.ensure_same_shape(gt)?;
    if spacing.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::InvalidArgument(format!("invalid voxel spacing {spacing:?}")));
    }
    if pred.count_nonzero() == 0 || gt.count_nonzero() == 0 {
        return Err(Error::EmptyVolume);
    }
    let (bp, bg) = (boundary_voxels(pred), boundary_voxels(gt));
    let shape = pred.shape();
    let (dt_p, dt_g) = rayon::join(
        || squared_distance_transform(&bp, shape, spacing),
        || squared_distance_transform(&bg, shape, spacing),
    );
    let directed = |from: &[bool], dt: &[f64]| {
        from.iter()
            .zip(dt)
            .filter(|(b, _)| **b)
            .map(|(_, d)| *d)
            .fold(0.0, f64::max)
    };
    Ok(directed(&bp, &dt_g).max(directed(&bg, &dt_p)).sqrt())
}

/// Exact squared Euclidean distance from every voxel to the nearest `true`
/// voxel, by separable lower envelopes of parabolas along x, y, then z.
fn squared_distance_transform(features: &[bool], (d, h, w): (usize, usize, usize), spacing: [f64; 3]) -> Vec<f64> {
    let mut dist: Vec<f64> = features.iter().map(|&f| if f { 0.0 } else { f64::INFINITY }).collect();
    let [sx, sy, sz] = spacing;
    let mut line = Vec::new();
    let mut out = Vec::new();
    // x lines
    for start in (0..d * h).map(|r| r * w) {
        line.clear();
        line.extend_from_slice(&dist[start..start + w]);
        lower_envelope(&line, sx, &mut out);
        dist[start..start + w].copy_from_slice(&out);
    }
    // y lines
    for z in 0..d {
        for x in 0..w {
            line.clear();
            line.extend((0..h).map(|y| dist[(z * h + y) * w + x]));
            lower_envelope(&line, sy, &mut out);
            for (y, v) in out.iter().enumerate() {
                dist[(z * h + y) * w + x] = *v;
            }
        }
    }
    // z lines
    for y in 0..h {
        for x in 0..w {
            line.clear();
            line.extend((0..d).map(|z| dist[(z * h + y) * w + x]));
            lower_envelope(&line, sz, &mut out);
            for (z, v) in out.iter().enumerate() {
                dist[(z * h + y) * w + x] = *v;
            }
        }
    }
    dist
}

/// 1-D transform `out[q] = min_p f[p] + (step * (q - p))^2`.
fn lower_envelope(f: &[f64], step: f64, out: &mut Vec<f64>) {
    let n = f.len();
    out.clear();
    out.resize(n, f64::INFINITY);
    let sites: Vec<usize> = (0..n).filter(|&p| f[p].is_finite()).collect();
    if sites.is_empty() {
        return;
    }
    let pos = |p: usize| p as f64 * step;
    // Intersection of the parabolas rooted at p and q (p < q).
    let meet = |p: usize, q: usize| ((f[q] + pos(q) * pos(q)) - (f[p] + pos(p) * pos(p))) / (2.0 * (pos(q) - pos(p)));
    let mut hull: Vec<usize> = Vec::with_capacity(sites.len());
    let mut bounds: Vec<f64> = Vec::with_capacity(sites.len() + 1);
    for &q in &sites {
        while let Some(&p) = hull.last() {
            if meet(p, q) <= *bounds.last().unwrap() {
                hull.pop();
                bounds.pop();
            } else {
                break;
            }
        }
        bounds.push(if hull.is_empty() {
            f64::NEG_INFINITY
        } else {
            meet(*hull.last().unwrap(), q)
        });
        hull.push(q);
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        let x = pos(q);
        while k + 1 < hull.len() && bounds[k + 1] < x {
            k += 1;
        }
        let p = hull[k];
        *o = f[p] + (x - pos(p)).powi(2);
    }
}

/// Metrics of one prediction; entries are `None` where undefined (e.g.
/// sensitivity against an empty ground truth).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseMetrics {
    pub id: String,
    pub dsc: Option<f64>,
    pub sen: Option<f64>,
    pub hd: Option<f64>,
    pub vs: Option<f64>,
}

fn defined<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::EmptyGroundTruth | Error::EmptyVolume | Error::BothEmpty) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn evaluate_case(id: &str, pred: &Volume, gt: &Volume, spacing: [f64; 3]) -> Result<CaseMetrics> {
    Ok(CaseMetrics {
        id: id.to_string(),
        dsc: Some(dice(pred, gt)?),
        sen: defined(sensitivity(pred, gt))?,
        hd: defined(hausdorff(pred, gt, spacing))?,
        vs: defined(volumetric_similarity(pred, gt))?,
    })
}

/// Mean and sample standard deviation of each metric over defined values.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Aggregate {
    pub dsc_mean: Option<f64>,
    pub dsc_std: Option<f64>,
    pub sen_mean: Option<f64>,
    pub sen_std: Option<f64>,
    pub hd_mean: Option<f64>,
    pub hd_std: Option<f64>,
    pub vs_mean: Option<f64>,
    pub vs_std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub cases: Vec<CaseMetrics>,
    pub aggregate: Aggregate,
}

impl EvalReport {
    pub fn from_cases(cases: Vec<CaseMetrics>) -> Self {
        let stat = |f: fn(&CaseMetrics) -> Option<f64>| {
            let values: Vec<f64> = cases.iter().filter_map(f).collect();
            match mean_and_std(&values) {
                Some((m, s)) => (Some(m), Some(s)),
                None => (None, None),
            }
        };
        let (dsc_mean, dsc_std) = stat(|c| c.dsc);
        let (sen_mean, sen_std) = stat(|c| c.sen);
        let (hd_mean, hd_std) = stat(|c| c.hd);
        let (vs_mean, vs_std) = stat(|c| c.vs);
        EvalReport {
            aggregate: Aggregate {
                dsc_mean,
                dsc_std,
                sen_mean,
                sen_std,
                hd_mean,
                hd_std,
                vs_mean,
                vs_std,
            },
            cases,
        }
    }
}

/// Evaluates `(id, pred, gt)` triples in parallel; report order follows input order.
pub fn evaluate(cases: &[(String, Volume, Volume)], spacing: [f64; 3]) -> Result<EvalReport> {
    let metrics = cases
        .par_iter()
        .map(|(id, p, g)| evaluate_case(id, p, g, spacing))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::from_cases(metrics))
}

/// Arithmetic mean and sample (n - 1) standard deviation; the deviation of a
/// single value is 0.
pub fn mean_and_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, var.sqrt()))
}

/// Dice agreement between two annotation sets of the same cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variability {
    pub per_case: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

pub fn variability(labels_a: &[Volume], labels_b: &[Volume]) -> Result<Variability> {
    if labels_a.len() != labels_b.len() {
        return Err(Error::LengthMismatch(labels_a.len(), labels_b.len()));
    }
    if labels_a.is_empty() {
        return Err(Error::InvalidArgument("no cases to compare".into()));
    }
    let per_case = labels_a
        .iter()
        .zip(labels_b)
        .map(|(a, b)| dice(a, b))
        .collect::<Result<Vec<_>>>()?;
    let (mean, std) = mean_and_std(&per_case).expect("non-empty");
    Ok(Variability { per_case, mean, std })
}
