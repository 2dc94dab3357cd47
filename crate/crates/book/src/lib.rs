//! Compiles every code listing of the guide in `book/src` as a doc-test, so
//! the book cannot drift from the library. mdbook alone cannot test listings
//! that depend on an external crate.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/annotation.md")]
pub mod annotation {}
#[doc = include_str!("../../../book/src/ellipse-fitting.md")]
pub mod ellipse_fitting {}
#[doc = include_str!("../../../book/src/heatmaps.md")]
pub mod heatmaps {}
#[doc = include_str!("../../../book/src/losses.md")]
pub mod losses {}
#[doc = include_str!("../../../book/src/metrics.md")]
pub mod metrics {}
#[doc = include_str!("../../../book/src/formats-and-cli.md")]
pub mod formats_and_cli {}
#[doc = include_str!("../../../README.md")]
pub mod readme {}
