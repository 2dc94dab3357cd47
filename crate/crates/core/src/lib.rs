//! Gaussian pseudo labels for ellipse-like structures.
//!
//! The pipeline turns a cheap elliptical annotation (a binary mask or five
//! ellipse parameters) into a soft training target:
//!
//! 1. [`ellipse_fit`] extracts the boundary of an annotated mask and fits an
//!    ellipse by ellipse-specific direct least squares.
//! 2. [`heatmap`] renders an elliptical Gaussian whose 0.5 level set is that
//!    ellipse, and stacks slices into volumes.
//! 3. [`losses`] provides the distribution (KL / axis-marginal Wasserstein)
//!    and reconstruction (MAE) losses used to train against such targets,
//!    with analytic gradients.
//! 4. [`metrics`] scores binary segmentations with Dice, sensitivity,
//!    Hausdorff distance and volumetric similarity.
//!
//! [`io`], [`phantom`] and [`pipeline`] supply file formats, synthetic test
//! data and whole-stack orchestration.
//!
//! ```
//! use gausslabel::{fit_ellipse, generate_heatmap, EllipseParams, MaskSlice};
//!
//! let truth = EllipseParams::new(64.0, 60.0, 30.0, 18.0, 0.4)?;
//! let mask = MaskSlice::from_fn(128, 128, |x, y| truth.contains(x as f64, y as f64));
//! let fitted = fit_ellipse(&mask)?;
//! assert!((fitted.cx - 64.0).abs() < 0.5);
//!
//! let heatmap = generate_heatmap(&fitted, 128)?;
//! assert!(heatmap.get(64, 60) > 0.99);
//! # Ok::<(), gausslabel::Error>(())
//! ```

pub mod ellipse_fit;
pub mod error;
pub mod geometry;
pub mod heatmap;
pub mod io;
pub mod losses;
pub mod metrics;
pub mod phantom;
pub mod pipeline;
pub mod volume;

pub use ellipse_fit::{conic_to_params, extract_boundary, fit_conic, fit_ellipse, Point, PointSet};
pub use error::{Error, Result};
pub use geometry::{canonicalize_ellipse, ConicCoefficients, EllipseParams, EllipseRecord};
pub use heatmap::{elementwise_product, generate_heatmap, stack_heatmaps, threshold, GaussianField};
pub use losses::{
    combined_loss, kl_loss, mae_loss, recover_by_descent, softmax_map, wasserstein_loss, DistributionMode, LossValue,
    LossWeights,
};
pub use metrics::{confusion, dice, hausdorff, sensitivity, variability, volumetric_similarity, EvalReport};
pub use volume::{validate_volume, HeatmapSlice, MaskSlice, Volume, VolumeKind};
