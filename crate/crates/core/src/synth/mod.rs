//! Synthetic training and evaluation data: flat pseudo-documents, analytic
//! invertible deformations and the ground-truth targets derived from them.

mod deform;
mod document;
mod render;

pub use deform::{gen_deformation, Deformation, DeformationSpec, Family};
pub use document::{background_texture, gen_checkerboard, gen_flat_doc, MIN_DOC_SIDE};
pub use render::{
    ground_truth, render_sample, suite_specs, warp_image, SampleConfig, SynthSample,
    MAX_INVERSION_FAILURE,
};
