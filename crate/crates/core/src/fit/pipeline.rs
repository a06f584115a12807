use super::predictor::TinyPredictor;
use crate::error::Result;
use crate::geometry::MappingGrid;
use crate::image::ImageBuffer;
use crate::warp::{build_backward_map, resample, MapConfig};

/// Dewarps `image` through the backward map densified from `grid`.
pub fn dewarp_with_grid(
    image: &ImageBuffer,
    grid: &MappingGrid,
    height: usize,
    width: usize,
    cfg: &MapConfig,
    fill: f64,
) -> Result<ImageBuffer> {
    let map = build_backward_map(grid, height, width, cfg)?;
    Ok(resample(image, &map, fill))
}

/// One-stage inference: predict control points, densify, resample.
pub fn dewarp_pipeline(
    image: &ImageBuffer,
    predictor: &TinyPredictor,
    height: usize,
    width: usize,
    cfg: &MapConfig,
    fill: f64,
) -> Result<ImageBuffer> {
    let (grid, _) = predictor.forward(image)?;
    dewarp_with_grid(image, &grid, height, width, cfg, fill)
}
