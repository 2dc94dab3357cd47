//! Whole-stack operations shared by the command-line tools.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::ellipse_fit::fit_ellipse;
use crate::error::{Error, Result};
use crate::geometry::EllipseRecord;
use crate::heatmap::stack_heatmaps_rect;
use crate::io::{list_files, read_mask_stack};
use crate::volume::Volume;

/// Fits an ellipse to every non-empty slice of a binary stack. Empty slices
/// produce no record.
pub fn fit_mask_stack(masks: &Volume) -> Result<Vec<EllipseRecord>> {
    let fitted = (0..masks.depth())
        .into_par_iter()
        .map(|z| {
            let mask = masks.mask_slice(z);
            if mask.count() == 0 {
                return Ok(None);
            }
            fit_ellipse(&mask).map(|params| Some(EllipseRecord { slice_index: z, params }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(fitted.into_iter().flatten().collect())
}

/// Masks to Gaussian pseudo labels: fit each slice, then render each fitted
/// ellipse on a grid the size of the input slices.
pub fn pseudo_labels(masks: &Volume) -> Result<(Vec<EllipseRecord>, Volume)> {
    let records = fit_mask_stack(masks)?;
    let heatmaps = stack_heatmaps_rect(&records, masks.depth(), masks.width(), masks.height())?;
    Ok((records, heatmaps.with_spacing(masks.spacing())))
}

/// Loads the cases stored under `dir`.
///
/// A directory that directly contains `.pgm` files is a single case named
/// after the directory. Otherwise each subdirectory is a case, in name order.
pub fn load_cases(dir: &Path) -> Result<Vec<(String, Volume)>> {
    if !list_files(dir, "pgm")?.is_empty() {
        let id = dir
            .file_name()
            .map_or_else(|| "case".to_string(), |n| n.to_string_lossy().into_owned());
        return Ok(vec![(id, read_mask_stack(dir)?)]);
    }
    let mut subdirs = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            subdirs.push(path);
        }
    }
    subdirs.sort();
    if subdirs.is_empty() {
        return Err(Error::UnreadableFile {
            path: dir.to_path_buf(),
            reason: "no .pgm files or case subdirectories".into(),
        });
    }
    subdirs
        .iter()
        .map(|p| {
            Ok((
                p.file_name().unwrap().to_string_lossy().into_owned(),
                read_mask_stack(p)?,
            ))
        })
        .collect()
}

/// Pairs cases of two collections, positionally, after checking that the
/// collections have the same size and case ids.
pub fn pair_cases(a: Vec<(String, Volume)>, b: Vec<(String, Volume)>) -> Result<Vec<(String, Volume, Volume)>> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    // Single-case directories are named after their folder, which may differ.
    let check_ids = a.len() > 1;
    a.into_iter()
        .zip(b)
        .map(|((ia, va), (ib, vb))| {
            if check_ids && ia != ib {
                return Err(Error::InvalidArgument(format!("case ids differ: {ia} vs {ib}")));
            }
            va.ensure_same_shape(&vb)?;
            Ok((ia, va, vb))
        })
        .collect()
}
