use rayon::prelude::*;

use super::tps::{tps_fit, TpsModel, DEFAULT_LAMBDA};
use crate::error::{Error, Result};
use crate::geometry::{lattice, MappingGrid, Point2};

/// Dense per-pixel source coordinates.
///
/// Output pixel `(r, c)` of an `H × W` map sits at flat coordinate
/// `(c/(W−1), r/(H−1))`; its entry is the normalized coordinate in the warped
/// image to sample.
#[derive(Debug, Clone, PartialEq)]
pub struct BackwardMap {
    pub height: usize,
    pub width: usize,
    /// Row-major source coordinates.
    pub coords: Vec<Point2>,
    pub valid: Vec<bool>,
}

impl BackwardMap {
    pub fn identity(height: usize, width: usize) -> Self {
        let coords = lattice(height, width);
        Self {
            height,
            width,
            valid: vec![true; coords.len()],
            coords,
        }
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        f: impl Fn(Point2) -> Point2 + Sync + Send,
    ) -> Self {
        let coords: Vec<Point2> = lattice(height, width).into_par_iter().map(f).collect();
        let valid = coords.iter().map(Point2::is_finite).collect();
        Self {
            height,
            width,
            coords,
            valid,
        }
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> Point2 {
        self.coords[row * self.width + col]
    }

    pub fn same_size(&self, other: &BackwardMap) -> bool {
        self.height == other.height && self.width == other.width
    }
}

/// Resolution of the intermediate TPS evaluation and the spline regularizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapConfig {
    pub coarse_h: usize,
    pub coarse_w: usize,
    pub lambda: f64,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            coarse_h: 128,
            coarse_w: 128,
            lambda: DEFAULT_LAMBDA,
        }
    }
}

fn fit_grid(grid: &MappingGrid, lambda: f64) -> Result<TpsModel> {
    tps_fit(&lattice(grid.h, grid.w), &grid.xy(), lambda)
}

/// Bilinear resize of a coordinate field, corners aligned.
pub fn upsample_bilinear(coarse: &BackwardMap, height: usize, width: usize) -> BackwardMap {
    let scale = |n: usize, m: usize| {
        if n <= 1 {
            0.0
        } else {
            (m.max(1) - 1) as f64 / (n - 1) as f64
        }
    };
    let (sy, sx) = (scale(height, coarse.height), scale(width, coarse.width));
    let mut coords = Vec::with_capacity(height * width);
    for r in 0..height {
        let fy = r as f64 * sy;
        let y0 = (fy.floor() as usize).min(coarse.height.saturating_sub(2));
        let y1 = (y0 + 1).min(coarse.height - 1);
        let ty = fy - y0 as f64;
        for c in 0..width {
            let fx = c as f64 * sx;
            let x0 = (fx.floor() as usize).min(coarse.width.saturating_sub(2));
            let x1 = (x0 + 1).min(coarse.width - 1);
            let tx = fx - x0 as f64;
            let (a, b) = (coarse.at(y0, x0), coarse.at(y0, x1));
            let (d, e) = (coarse.at(y1, x0), coarse.at(y1, x1));
            let lerp = |p: f64, q: f64, t: f64| p + (q - p) * t;
            coords.push(Point2::new(
                lerp(lerp(a.x, b.x, tx), lerp(d.x, e.x, tx), ty),
                lerp(lerp(a.y, b.y, tx), lerp(d.y, e.y, tx), ty),
            ));
        }
    }
    BackwardMap {
        height,
        width,
        valid: vec![true; coords.len()],
        coords,
    }
}

/// TPS from the flat lattice to the grid's `(x, y)`, evaluated on a coarse
/// lattice, then bilinearly upsampled to `height × width`.
pub fn build_backward_map(
    grid: &MappingGrid,
    height: usize,
    width: usize,
    cfg: &MapConfig,
) -> Result<BackwardMap> {
    if cfg.coarse_h < 2 || cfg.coarse_w < 2 {
        return Err(Error::InvalidArgument(format!(
            "coarse lattice must be at least 2x2, got {}x{}",
            cfg.coarse_h, cfg.coarse_w
        )));
    }
    let model = fit_grid(grid, cfg.lambda)?;
    let coarse = BackwardMap::from_fn(cfg.coarse_h, cfg.coarse_w, |q| model.eval(q));
    Ok(upsample_bilinear(&coarse, height, width))
}

/// Reference path: the TPS evaluated directly at every output pixel.
pub fn dense_backward_map(
    grid: &MappingGrid,
    height: usize,
    width: usize,
    lambda: f64,
) -> Result<BackwardMap> {
    let model = fit_grid(grid, lambda)?;
    Ok(BackwardMap::from_fn(height, width, |q| model.eval(q)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::augment_grid;

    fn grid_from(h: usize, w: usize, f: impl Fn(Point2) -> Point2) -> MappingGrid {
        let xy: Vec<Point2> = lattice(h, w).into_iter().map(f).collect();
        augment_grid(h, w, &xy).unwrap()
    }

    #[test]
    fn identity_grid_gives_identity_map() {
        let g = grid_from(16, 16, |p| p);
        let m = build_backward_map(&g, 96, 80, &MapConfig::default()).unwrap();
        let id = BackwardMap::identity(96, 80);
        let worst = m
            .coords
            .iter()
            .zip(&id.coords)
            .map(|(a, b)| a.distance(*b))
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn translation_grid_gives_constant_offset() {
        let g = grid_from(8, 8, |p| Point2::new(p.x + 0.05, p.y - 0.02));
        let m = build_backward_map(&g, 40, 50, &MapConfig::default()).unwrap();
        let id = BackwardMap::identity(40, 50);
        for (a, b) in m.coords.iter().zip(&id.coords) {
            assert!((a.x - b.x - 0.05).abs() < 1e-6);
            assert!((a.y - b.y + 0.02).abs() < 1e-6);
        }
    }

    #[test]
    fn coarse_path_close_to_dense_evaluation() {
        let g = grid_from(16, 16, |p| {
            Point2::new(
                p.x + 0.04 * (std::f64::consts::TAU * 1.5 * p.x).sin(),
                p.y + 0.03 * (std::f64::consts::TAU * p.x + 0.5).cos(),
            )
        });
        let coarse = build_backward_map(&g, 256, 256, &MapConfig::default()).unwrap();
        let dense = dense_backward_map(&g, 256, 256, DEFAULT_LAMBDA).unwrap();
        let worst = coarse
            .coords
            .iter()
            .zip(&dense.coords)
            .map(|(a, b)| a.distance(*b))
            .fold(0.0, f64::max);
        assert!(worst < 2e-3, "{worst}");
    }

    #[test]
    fn translation_equivariance() {
        let base = grid_from(6, 6, |p| Point2::new(p.x + 0.02 * p.y * p.y, p.y));
        let moved = grid_from(6, 6, |p| {
            Point2::new(p.x + 0.02 * p.y * p.y + 0.1, p.y - 0.3)
        });
        let cfg = MapConfig {
            coarse_h: 16,
            coarse_w: 16,
            lambda: 0.0,
        };
        let a = build_backward_map(&base, 20, 20, &cfg).unwrap();
        let b = build_backward_map(&moved, 20, 20, &cfg).unwrap();
        for (p, q) in a.coords.iter().zip(&b.coords) {
            assert!((q.x - p.x - 0.1).abs() < 1e-9 && (q.y - p.y + 0.3).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_tiny_coarse_lattice() {
        let g = grid_from(4, 4, |p| p);
        let cfg = MapConfig {
            coarse_h: 1,
            ..MapConfig::default()
        };
        assert!(build_backward_map(&g, 8, 8, &cfg).is_err());
    }
}
