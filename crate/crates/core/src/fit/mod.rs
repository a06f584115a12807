//! Verification harnesses: per-instance fitting of control points and a tiny
//! two-headed predictor trained end to end on the combined objective.

mod adam;
mod pipeline;
mod points;
mod predictor;

pub use adam::Adam;
pub use pipeline::{dewarp_pipeline, dewarp_with_grid};
pub use points::{
    fit_control_points, fit_points, mapping_rmse, sample_targets, FitConfig, FitOutcome, Init,
    Schedule, DIVERGENCE_FACTOR,
};
pub use predictor::{
    predictor_input, predictor_rmse, predictor_train, PredictorShape, TinyPredictor, TrainConfig,
    TrainExample, TrainReport,
};
