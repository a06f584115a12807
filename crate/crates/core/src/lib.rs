//! Polar control-point geometry, grid-regularizing losses and thin-plate-spline
//! post-processing for one-stage document dewarping.
//!
//! The crate is organized bottom-up:
//!
//! * [`geometry`] converts mapping points between Cartesian and Polar form and
//!   extracts equal-angle contour radii from grid rings.
//! * [`losses`] holds every loss term together with hand-derived gradients and a
//!   finite-difference checker.
//! * [`warp`] densifies sparse mapping points into a backward map (TPS, bilinear
//!   upsampling) and resamples images through it.
//! * [`synth`] renders flat pseudo-documents, analytic deformations and the full
//!   set of ground-truth targets.
//! * [`fit`] contains the per-instance fitting harness and a tiny two-headed
//!   predictor trained end to end.
//! * [`metrics`] implements MS-SSIM, distortion metrics and edit distance.

pub mod error;
pub mod fit;
pub mod geometry;
pub mod image;
pub mod losses;
pub mod metrics;
pub mod synth;
pub mod warp;

pub use error::{Error, Result};
pub use geometry::{ContourSet, EdgeLengths, MappingGrid, MappingPoint, Point2, PolarCoord};
pub use image::{ImageBuffer, Mask};
pub use losses::{FocalMode, LossBreakdown, LossWeights, Shape3DField};
pub use warp::{BackwardMap, TpsModel};
