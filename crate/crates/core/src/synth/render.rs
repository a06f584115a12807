use rayon::prelude::*;

use super::deform::{gen_deformation, Deformation, DeformationSpec, Family};
use super::document::{background_texture, gen_flat_doc};
use crate::error::{Error, Result};
use crate::geometry::{augment_grid, contour_set, lattice, ContourSet, MappingGrid, Point2};
use crate::image::{ImageBuffer, Mask};
use crate::losses::Shape3DField;
use crate::warp::{bilinear_sample, invert_deformation, BackwardMap, DEFAULT_INVERT_TOL};

/// Iteration cap for per-pixel inversion; the damped iteration contracts
/// slowly where the page is strongly compressed.
const RENDER_INVERT_MAX_ITER: usize = 400;
/// Largest tolerated fraction of page pixels whose inversion fails.
pub const MAX_INVERSION_FAILURE: f64 = 1e-3;
/// Unconverged preimages further than this outside the page count as background.
const PAGE_SLACK: f64 = 0.01;

/// Shapes and seeds of a rendered sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleConfig {
    pub height: usize,
    pub width: usize,
    pub grid_h: usize,
    pub grid_w: usize,
    pub contour_layers: usize,
    pub contour_samples: usize,
    pub doc_seed: u64,
    pub background_seed: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            height: 256,
            width: 256,
            grid_h: 16,
            grid_w: 16,
            contour_layers: 4,
            contour_samples: 64,
            doc_seed: 0,
            background_seed: 0,
        }
    }
}

/// A flat page, its warped rendering and every ground-truth target.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSample {
    pub spec: DeformationSpec,
    pub flat: ImageBuffer,
    pub warped: ImageBuffer,
    pub gt_grid: MappingGrid,
    pub gt_contours: ContourSet,
    /// `(x, y, z)` per grid point.
    pub gt_shape3d: Shape3DField,
    pub gt_map: BackwardMap,
    /// Warped pixels covered by the page.
    pub mask: Mask,
}

fn on_page(u: Point2, slack: f64) -> bool {
    (-slack..=1.0 + slack).contains(&u.x) && (-slack..=1.0 + slack).contains(&u.y)
}

/// Renders `flat` through `deform`, compositing `background` off the page.
///
/// Returns the warped image, the page mask and the number of page pixels whose
/// inversion failed.
pub fn warp_image(
    flat: &ImageBuffer,
    background: &ImageBuffer,
    deform: &Deformation,
) -> (ImageBuffer, Mask, usize) {
    let (h, w, ch) = (flat.height, flat.width, flat.channels);
    let (sw, sh) = ((w - 1) as f64, (h - 1) as f64);
    let rows: Vec<(Vec<f64>, Vec<bool>, usize)> = (0..h)
        .into_par_iter()
        .map(|r| {
            let mut vals = Vec::with_capacity(w * ch);
            let mut inside = Vec::with_capacity(w);
            let mut failed = 0;
            for c in 0..w {
                let q = Point2::new(c as f64 / sw, r as f64 / sh);
                let inv = invert_deformation(
                    |u| deform.apply(u),
                    q,
                    DEFAULT_INVERT_TOL,
                    RENDER_INVERT_MAX_ITER,
                );
                let u = inv.point;
                let hit = inv.converged && on_page(u, 1e-9);
                if !inv.converged && on_page(u, PAGE_SLACK) {
                    failed += 1;
                }
                let (ux, uy) = (u.x.clamp(0.0, 1.0) * sw, u.y.clamp(0.0, 1.0) * sh);
                for k in 0..ch {
                    let v = if hit {
                        bilinear_sample(flat, ux, uy, k).unwrap_or(0.0)
                    } else {
                        background.get(r, c, k.min(background.channels - 1))
                    };
                    vals.push(v);
                }
                inside.push(hit);
            }
            (vals, inside, failed)
        })
        .collect();
    let mut data = Vec::with_capacity(h * w * ch);
    let mut mask = Vec::with_capacity(h * w);
    let mut failed = 0;
    for (v, m, f) in rows {
        data.extend(v);
        mask.extend(m);
        failed += f;
    }
    (
        ImageBuffer {
            height: h,
            width: w,
            channels: ch,
            data,
        },
        Mask {
            height: h,
            width: w,
            data: mask,
        },
        failed,
    )
}

/// Ground-truth control points of a deformation: mapping grid, contours and
/// the `(x, y, z)` surface at the grid points.
pub fn ground_truth(
    deform: &Deformation,
    grid_h: usize,
    grid_w: usize,
    layers: usize,
    samples: usize,
) -> Result<(MappingGrid, ContourSet, Shape3DField)> {
    let flat = lattice(grid_h, grid_w);
    let mut xy = Vec::with_capacity(flat.len());
    let mut field = Vec::with_capacity(3 * flat.len());
    for &u in &flat {
        let (p, _, z) = deform.eval_full(u);
        xy.push(p);
        field.extend([p.x, p.y, z]);
    }
    let grid = augment_grid(grid_h, grid_w, &xy)?;
    let contours = contour_set(&grid, layers, samples)?;
    Ok((grid, contours, Shape3DField::new(grid_h, grid_w, field)?))
}

pub fn render_sample(spec: &DeformationSpec, cfg: &SampleConfig) -> Result<SynthSample> {
    let deform = gen_deformation(spec)?;
    let flat = gen_flat_doc(cfg.doc_seed, cfg.height, cfg.width)?;
    let background = background_texture(cfg.background_seed, cfg.height, cfg.width);
    let (warped, mask, failed) = warp_image(&flat, &background, &deform);
    let page = mask.count() + failed;
    if failed as f64 > MAX_INVERSION_FAILURE * page.max(1) as f64 {
        return Err(Error::InversionFailed {
            failed,
            total: page,
        });
    }
    let (gt_grid, gt_contours, gt_shape3d) = ground_truth(
        &deform,
        cfg.grid_h,
        cfg.grid_w,
        cfg.contour_layers,
        cfg.contour_samples,
    )?;
    let gt_map = BackwardMap::from_fn(cfg.height, cfg.width, |u| deform.apply(u));
    Ok(SynthSample {
        spec: *spec,
        flat,
        warped,
        gt_grid,
        gt_contours,
        gt_shape3d,
        gt_map,
        mask,
    })
}

/// The fixed evaluation suite: fold-sine, curl-cylinder and tps-random
/// deformations cycled over `count` samples, amplitudes in `[0.03, 0.05]`.
pub fn suite_specs(count: usize, seed: u64) -> Vec<(DeformationSpec, SampleConfig)> {
    let families = [Family::FoldSine, Family::CurlCylinder, Family::TpsRandom];
    (0..count)
        .map(|i| {
            let s = seed.wrapping_mul(1_000_003).wrapping_add(i as u64);
            let amplitude = 0.03 + 0.02 * ((i * 7) % 11) as f64 / 10.0;
            let spec = DeformationSpec::new(families[i % 3], amplitude, s).with_inset(0.08);
            let cfg = SampleConfig {
                doc_seed: s,
                background_seed: s.wrapping_add(17),
                ..SampleConfig::default()
            };
            (spec, cfg)
        })
        .collect()
}
