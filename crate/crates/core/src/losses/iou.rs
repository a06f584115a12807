use std::f64::consts::TAU;

use super::FocalMode;
use crate::error::{Error, Result};
use crate::geometry::MappingGrid;

fn check_pair(rho: &[f64], rho_star: &[f64]) -> Result<()> {
    if rho.len() != rho_star.len() {
        return Err(Error::ShapeMismatch(format!(
            "radius arrays differ in length: {} vs {}",
            rho.len(),
            rho_star.len()
        )));
    }
    if rho.is_empty() {
        return Err(Error::InvalidArgument("radius arrays are empty".into()));
    }
    for (index, &value) in rho.iter().chain(rho_star).enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite("radius"));
        }
        if value <= 0.0 {
            return Err(Error::NonPositiveRadius {
                index: index % rho.len(),
                value,
            });
        }
    }
    Ok(())
}

/// Sector-area overlap of two contours sampled at `2πk/M`, by periodic
/// trapezoidal quadrature of `½min(ρ,ρ*)²` over `½max(ρ,ρ*)²`.
pub fn polar_iou_integral(rho: &[f64], rho_star: &[f64]) -> Result<f64> {
    check_pair(rho, rho_star)?;
    if rho.len() < 8 {
        return Err(Error::InvalidArgument(format!(
            "need at least 8 angular samples, got {}",
            rho.len()
        )));
    }
    let dtheta = TAU / rho.len() as f64;
    let (mut inter, mut union) = (0.0, 0.0);
    for (&a, &b) in rho.iter().zip(rho_star) {
        inter += 0.5 * a.min(b).powi(2) * dtheta;
        union += 0.5 * a.max(b).powi(2) * dtheta;
    }
    Ok(inter / union)
}

fn min_max_sums(rho: &[f64], rho_star: &[f64]) -> (f64, f64) {
    rho.iter()
        .zip(rho_star)
        .fold((0.0, 0.0), |(lo, hi), (&a, &b)| {
            (lo + a.min(b), hi + a.max(b))
        })
}

/// Index-paired `Σ min(ρᵢ,ρᵢ*) / Σ max(ρᵢ,ρᵢ*)`.
pub fn doc_iou_discrete(rho: &[f64], rho_star: &[f64]) -> Result<f64> {
    check_pair(rho, rho_star)?;
    let (lo, hi) = min_max_sums(rho, rho_star);
    Ok(lo / hi)
}

/// `-log` of the discrete Doc-IOU and its gradient over `rho`.
///
/// Ties `ρᵢ = ρᵢ*` take the min branch.
pub fn global_iou_loss(rho: &[f64], rho_star: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_pair(rho, rho_star)?;
    Ok(global_iou_unchecked(rho, rho_star))
}

pub(crate) fn global_iou_unchecked(rho: &[f64], rho_star: &[f64]) -> (f64, Vec<f64>) {
    let (lo, hi) = min_max_sums(rho, rho_star);
    let value = hi.ln() - lo.ln();
    let grad = rho
        .iter()
        .zip(rho_star)
        .map(|(&a, &b)| if a > b { 1.0 / hi } else { -1.0 / lo })
        .collect();
    (value, grad)
}

fn focal_pow(base: f64, gamma: f64) -> f64 {
    if gamma == gamma.trunc() && gamma.abs() < i32::MAX as f64 {
        base.powi(gamma as i32)
    } else {
        base.max(0.0).powf(gamma)
    }
}

/// Focal-weighted IOU loss.
///
/// `IouFocal`: `(1 - iou)^γ · (-log iou)`. `Literal`: `(1 - loss)^γ · loss`.
pub fn focal_wrap(loss_value: f64, iou_value: f64, gamma: f64, mode: FocalMode) -> f64 {
    match mode {
        FocalMode::IouFocal => focal_pow(1.0 - iou_value, gamma) * loss_value,
        FocalMode::Literal => focal_pow(1.0 - loss_value, gamma) * loss_value,
    }
}

/// [`focal_wrap`] with `iou = exp(-loss)`, plus its derivative with respect to `loss`.
pub fn focal_wrap_with_grad(loss: f64, gamma: f64, mode: FocalMode) -> (f64, f64) {
    if gamma == 0.0 {
        return (loss, 1.0);
    }
    match mode {
        FocalMode::IouFocal => {
            let iou = (-loss).exp();
            let m = 1.0 - iou;
            let mg = focal_pow(m, gamma);
            let lead = if m > 0.0 {
                gamma * focal_pow(m, gamma - 1.0) * iou * loss
            } else {
                0.0
            };
            (mg * loss, lead + mg)
        }
        FocalMode::Literal => {
            let base = 1.0 - loss;
            let bg = focal_pow(base, gamma);
            let lead = if base != 0.0 {
                -gamma * focal_pow(base, gamma - 1.0) * loss
            } else {
                0.0
            };
            (bg * loss, lead + bg)
        }
    }
}

/// Neighbor offsets of a 3×3 patch, starting top-left and running with
/// increasing angle (top row, right column, bottom row, left column).
pub(crate) const PATCH_OFFSETS: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
];

/// IOU loss of one interior 3×3 patch.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchLoss {
    /// Grid index of the patch center.
    pub center: usize,
    pub loss: f64,
    pub iou: f64,
    /// `(grid index, ∂loss/∂(x, y))` for the center and its eight neighbors.
    pub grad: Vec<(usize, [f64; 2])>,
}

fn patch_radii(grid: &MappingGrid, i: usize, j: usize) -> ([f64; 8], [[f64; 2]; 8], [usize; 8]) {
    let c = grid.at(i, j);
    let mut r = [0.0; 8];
    let mut u = [[0.0; 2]; 8];
    let mut idx = [0; 8];
    for (k, &(di, dj)) in PATCH_OFFSETS.iter().enumerate() {
        let ni = (i as isize + di) as usize;
        let nj = (j as isize + dj) as usize;
        let n = grid.at(ni, nj);
        let (dx, dy) = (n.x - c.x, n.y - c.y);
        r[k] = dx.hypot(dy);
        u[k] = if r[k] > 0.0 {
            [dx / r[k], dy / r[k]]
        } else {
            [0.0, 0.0]
        };
        idx[k] = grid.index(ni, nj);
    }
    (r, u, idx)
}

/// Per-patch local IOU losses: every interior point is the Polar origin of
/// its own 3×3 patch, in prediction and ground truth alike.
pub fn local_iou_patches(pred: &MappingGrid, gt: &MappingGrid) -> Result<Vec<PatchLoss>> {
    if !pred.same_shape(gt) {
        return Err(Error::ShapeMismatch(format!(
            "grids {}x{} and {}x{}",
            pred.h, pred.w, gt.h, gt.w
        )));
    }
    if pred.h < 3 || pred.w < 3 {
        return Err(Error::GridTooSmall {
            h: pred.h,
            w: pred.w,
            min: 3,
        });
    }
    let mut out = Vec::with_capacity((pred.h - 2) * (pred.w - 2));
    for i in 1..pred.h - 1 {
        for j in 1..pred.w - 1 {
            let (r, u, idx) = patch_radii(pred, i, j);
            let (rs, _, _) = patch_radii(gt, i, j);
            check_pair(&r, &rs)?;
            let (loss, g) = global_iou_unchecked(&r, &rs);
            let center = pred.index(i, j);
            let mut grad = Vec::with_capacity(9);
            let mut gc = [0.0; 2];
            for k in 0..8 {
                let gx = g[k] * u[k][0];
                let gy = g[k] * u[k][1];
                grad.push((idx[k], [gx, gy]));
                gc[0] -= gx;
                gc[1] -= gy;
            }
            grad.push((center, gc));
            out.push(PatchLoss {
                center,
                loss,
                iou: (-loss).exp(),
                grad,
            });
        }
    }
    Ok(out)
}

/// Mean local IOU loss over interior patches and its gradient over `(x, y)`.
pub fn local_iou_loss(pred: &MappingGrid, gt: &MappingGrid) -> Result<(f64, Vec<f64>)> {
    let patches = local_iou_patches(pred, gt)?;
    let n = patches.len() as f64;
    let mut grad = vec![0.0; 2 * pred.len()];
    let mut value = 0.0;
    for p in &patches {
        value += p.loss / n;
        for &(idx, [gx, gy]) in &p.grad {
            grad[2 * idx] += gx / n;
            grad[2 * idx + 1] += gy / n;
        }
    }
    Ok((value, grad))
}
