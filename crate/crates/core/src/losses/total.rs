use super::iou::{focal_wrap_with_grad, global_iou_loss, local_iou_patches};
use super::regression::{
    chain_polar_to_xy, diff_loss, edge_loss_grid, shape3d_loss, smooth_l1_scaled,
    smooth_l1_values_scaled,
};
use super::{LossWeights, RhoScope, Shape3DField};
use crate::error::{Error, Result};
use crate::geometry::{grid_ring_indices, Channel, ContourSet, MappingGrid};

/// Everything a prediction (or its ground truth) carries.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPoints {
    pub grid: MappingGrid,
    pub contours: ContourSet,
    pub shape3d: Option<Shape3DField>,
}

/// Per-term values of the combined objective plus gradients per parameter block.
///
/// `total = sl1 + α₁·diff + α₂·(global_iou + lrtb) + α₃·local_iou + α₄·shape3d`.
/// Switched-off global pieces report zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LossBreakdown {
    pub sl1: f64,
    pub diff: f64,
    /// Focal-wrapped global IOU part, averaged over the enabled scopes.
    pub global_iou: f64,
    pub local_iou: f64,
    pub lrtb: f64,
    pub shape3d: f64,
    pub total: f64,
    /// Over the interleaved predicted mapping coordinates.
    pub grad_xy: Vec<f64>,
    /// Over the predicted contour radii, row-major `a × b`.
    pub grad_radii: Vec<f64>,
    /// Over the predicted 3D field; empty when no 3D prediction was given.
    pub grad_shape3d: Vec<f64>,
}

impl LossBreakdown {
    pub fn global(&self) -> f64 {
        self.global_iou + self.lrtb
    }
}

fn mapping_rho_indices(grid: &MappingGrid, gt: &MappingGrid, scope: RhoScope) -> Vec<usize> {
    let candidates: Vec<usize> = match scope {
        RhoScope::All => (0..grid.len()).collect(),
        RhoScope::OuterRing => grid_ring_indices(grid.h, grid.w).swap_remove(0),
    };
    // A ground-truth point on the origin (odd grids) has no radius to match.
    candidates
        .into_iter()
        .filter(|&i| gt.points[i].rho > 0.0)
        .collect()
}

pub fn total_loss(
    pred: &ControlPoints,
    gt: &ControlPoints,
    w: &LossWeights,
) -> Result<LossBreakdown> {
    w.validate()?;
    let (pg, gg) = (&pred.grid, &gt.grid);
    if !pg.same_shape(gg) {
        return Err(Error::ShapeMismatch(format!(
            "grids {}x{} and {}x{}",
            pg.h, pg.w, gg.h, gg.w
        )));
    }
    let (pc, gc) = (&pred.contours, &gt.contours);
    if pc.a != gc.a || pc.b != gc.b {
        return Err(Error::ShapeMismatch(format!(
            "contours {}x{} and {}x{}",
            pc.a, pc.b, gc.a, gc.b
        )));
    }

    let mut out = LossBreakdown::default();
    let n = pg.len();

    let (sl1_map, mut channel_grad) = smooth_l1_scaled(pg, gg, &Channel::ALL, w.sl1_scale)?;
    let (sl1_ctr, mut grad_radii) = smooth_l1_values_scaled(&pc.radii, &gc.radii, w.sl1_scale)?;
    out.sl1 = sl1_map + sl1_ctr;

    let (diff, diff_grad) = diff_loss(pg, gg, w.neighbors)?;
    out.diff = diff;

    // Global IOU scopes, each focal-wrapped, then averaged.
    let scopes = usize::from(w.contour_global) + usize::from(w.mapping_global);
    if scopes > 0 {
        let share = 1.0 / scopes as f64;
        if w.contour_global {
            let (loss, g) = global_iou_loss(pc.outermost(), gc.outermost())?;
            let (v, dv) = focal_wrap_with_grad(loss, w.gamma, w.focal_mode);
            out.global_iou += share * v;
            let scale = w.alpha2 * share * dv;
            for (dst, gk) in grad_radii.iter_mut().zip(g) {
                *dst += scale * gk;
            }
        }
        if w.mapping_global {
            let idx = mapping_rho_indices(pg, gg, w.mapping_scope);
            let rho: Vec<f64> = idx.iter().map(|&i| pg.points[i].rho).collect();
            let rho_star: Vec<f64> = idx.iter().map(|&i| gg.points[i].rho).collect();
            let (loss, g) = global_iou_loss(&rho, &rho_star)?;
            let (v, dv) = focal_wrap_with_grad(loss, w.gamma, w.focal_mode);
            out.global_iou += share * v;
            let scale = w.alpha2 * share * dv;
            for (&i, gk) in idx.iter().zip(g) {
                channel_grad[i][3] += scale * gk;
            }
        }
    }

    let mut grad_xy = chain_polar_to_xy(pg, &channel_grad);
    for (dst, g) in grad_xy.iter_mut().zip(&diff_grad) {
        *dst += w.alpha1 * g;
    }

    if w.edge {
        let (lrtb, g) = edge_loss_grid(pg, gg)?;
        out.lrtb = lrtb;
        for (dst, gk) in grad_xy.iter_mut().zip(g) {
            *dst += w.alpha2 * gk;
        }
    }

    let patches = local_iou_patches(pg, gg)?;
    let np = patches.len() as f64;
    for p in &patches {
        let (v, dv) = focal_wrap_with_grad(p.loss, w.gamma, w.focal_mode);
        out.local_iou += v / np;
        let scale = w.alpha3 * dv / np;
        for &(idx, [gx, gy]) in &p.grad {
            grad_xy[2 * idx] += scale * gx;
            grad_xy[2 * idx + 1] += scale * gy;
        }
    }

    if let (Some(c), Some(cs)) = (&pred.shape3d, &gt.shape3d) {
        let (v, g) = shape3d_loss(c, cs)?;
        out.shape3d = v;
        out.grad_shape3d = g.into_iter().map(|x| w.alpha4 * x).collect();
    }

    debug_assert_eq!(grad_xy.len(), 2 * n);
    out.grad_xy = grad_xy;
    out.grad_radii = grad_radii;
    out.total = out.sl1
        + w.alpha1 * out.diff
        + w.alpha2 * out.global()
        + w.alpha3 * out.local_iou
        + w.alpha4 * out.shape3d;
    Ok(out)
}
