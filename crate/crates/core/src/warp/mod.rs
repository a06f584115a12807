//! Post-processing: sparse mapping points to a dense backward map, and
//! pixel-wise resampling through it.

mod invert;
mod map;
mod resample;
mod tps;

pub use invert::{invert_deformation, Inversion, DEFAULT_INVERT_MAX_ITER, DEFAULT_INVERT_TOL};
pub use map::{build_backward_map, dense_backward_map, upsample_bilinear, BackwardMap, MapConfig};
pub use resample::{bilinear_sample, resample};
pub use tps::{tps_fit, tps_kernel, TpsModel, DEFAULT_LAMBDA};
