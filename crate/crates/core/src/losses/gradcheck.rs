use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::iou::{focal_wrap_with_grad, global_iou_loss, local_iou_patches};
use super::regression::{chain_polar_to_xy, diff_loss, edge_loss_grid, shape3d_loss, smooth_l1};
use super::total::{total_loss, ControlPoints};
use super::{FocalMode, LossWeights, Neighborhood, Shape3DField};
use crate::error::{Error, Result};
use crate::geometry::{augment_grid, lattice, Channel, ContourSet, MappingGrid, Point2};

/// Outcome of comparing an analytic gradient with central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// Largest `|a − n| / max(1e−12, |a| + |n|)` over all coordinates.
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
}

pub fn numeric_gradient<F>(f: F, x: &[f64], eps: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + eps;
            let up = f(&probe);
            probe[i] = orig - eps;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * eps)
        })
        .collect()
}

/// Central-difference check of a function returning `(value, gradient)`.
pub fn gradient_check<F>(f: F, x: &[f64], eps: f64) -> GradCheckReport
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let (_, analytic) = f(x);
    assert_eq!(analytic.len(), x.len(), "gradient length must match input");
    let numeric = numeric_gradient(|p| f(p).0, x, eps);
    let mut max_rel_error = 0.0;
    let mut worst_index = 0;
    for (i, (a, n)) in analytic.iter().zip(&numeric).enumerate() {
        let rel = (a - n).abs() / (a.abs() + n.abs()).max(1e-12);
        if rel > max_rel_error {
            max_rel_error = rel;
            worst_index = i;
        }
    }
    GradCheckReport {
        max_rel_error,
        worst_index,
        analytic,
        numeric,
    }
}

/// Loss terms covered by the gradient suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossTerm {
    GlobalIou,
    LocalIou,
    Edge,
    FocalGlobal,
    FocalLocal,
    SmoothL1,
    Diff,
    Shape3D,
    Total,
}

impl LossTerm {
    pub const ALL: [LossTerm; 9] = [
        LossTerm::GlobalIou,
        LossTerm::LocalIou,
        LossTerm::Edge,
        LossTerm::FocalGlobal,
        LossTerm::FocalLocal,
        LossTerm::SmoothL1,
        LossTerm::Diff,
        LossTerm::Shape3D,
        LossTerm::Total,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossTerm::GlobalIou => "global_iou",
            LossTerm::LocalIou => "local_iou",
            LossTerm::Edge => "edge",
            LossTerm::FocalGlobal => "focal_global",
            LossTerm::FocalLocal => "focal_local",
            LossTerm::SmoothL1 => "smooth_l1",
            LossTerm::Diff => "diff",
            LossTerm::Shape3D => "shape3d",
            LossTerm::Total => "total",
        }
    }
}

/// A seeded prediction / ground-truth pair of moderate size.
#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub pred: ControlPoints,
    pub gt: ControlPoints,
}

const H: usize = 5;
const W: usize = 5;
const LAYERS: usize = 2;
const RAYS: usize = 16;

pub fn random_instance(seed: u64) -> RandomInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = lattice(H, W);
    let gt_xy: Vec<Point2> = base
        .iter()
        .map(|p| {
            Point2::new(
                p.x + rng.gen_range(-0.04..0.04),
                p.y + rng.gen_range(-0.04..0.04),
            )
        })
        .collect();
    let pred_xy: Vec<Point2> = gt_xy
        .iter()
        .map(|p| {
            Point2::new(
                p.x + rng.gen_range(-0.03..0.03),
                p.y + rng.gen_range(-0.03..0.03),
            )
        })
        .collect();
    let gt_grid = augment_grid(H, W, &gt_xy).expect("finite lattice");
    let pred_grid = augment_grid(H, W, &pred_xy).expect("finite lattice");
    let gt_r: Vec<f64> = (0..LAYERS * RAYS)
        .map(|_| rng.gen_range(0.3..0.7))
        .collect();
    let pred_r: Vec<f64> = gt_r.iter().map(|r| r * rng.gen_range(0.8..1.2)).collect();
    let field = |rng: &mut ChaCha8Rng| {
        Shape3DField::new(4, 4, (0..48).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    };
    let gt_c = field(&mut rng);
    let pred_c = field(&mut rng);
    RandomInstance {
        gt: ControlPoints {
            contours: ContourSet::new(LAYERS, RAYS, gt_r, gt_grid.origin).unwrap(),
            grid: gt_grid,
            shape3d: Some(gt_c),
        },
        pred: ControlPoints {
            contours: ContourSet::new(LAYERS, RAYS, pred_r, pred_grid.origin).unwrap(),
            grid: pred_grid,
            shape3d: Some(pred_c),
        },
    }
}

fn grid_of(x: &[f64]) -> MappingGrid {
    MappingGrid::from_flat(H, W, x).expect("finite probe")
}

/// Gradient check of one loss term on the seeded random instance.
pub fn check_term(term: LossTerm, seed: u64, eps: f64) -> Result<GradCheckReport> {
    if !(1e-8..=1e-4).contains(&eps) {
        return Err(Error::InvalidArgument(format!(
            "epsilon {eps} outside [1e-8, 1e-4]"
        )));
    }
    let inst = random_instance(seed);
    let gt = &inst.gt;
    let xy = inst.pred.grid.xy_flat();
    let radii = inst.pred.contours.radii.clone();
    let mode = if seed.is_multiple_of(2) {
        FocalMode::IouFocal
    } else {
        FocalMode::Literal
    };
    let report = match term {
        LossTerm::GlobalIou => gradient_check(
            |r| global_iou_loss(r, &gt.contours.radii).unwrap(),
            &radii,
            eps,
        ),
        LossTerm::FocalGlobal => gradient_check(
            |r| {
                let (l, g) = global_iou_loss(r, &gt.contours.radii).unwrap();
                let (v, dv) = focal_wrap_with_grad(l, 2.0, mode);
                (v, g.into_iter().map(|x| x * dv).collect())
            },
            &radii,
            eps,
        ),
        LossTerm::LocalIou => gradient_check(
            |x| super::iou::local_iou_loss(&grid_of(x), &gt.grid).unwrap(),
            &xy,
            eps,
        ),
        LossTerm::FocalLocal => gradient_check(
            |x| {
                let patches = local_iou_patches(&grid_of(x), &gt.grid).unwrap();
                let n = patches.len() as f64;
                let mut grad = vec![0.0; x.len()];
                let mut value = 0.0;
                for p in patches {
                    let (v, dv) = focal_wrap_with_grad(p.loss, 2.0, mode);
                    value += v / n;
                    for (i, [gx, gy]) in p.grad {
                        grad[2 * i] += dv * gx / n;
                        grad[2 * i + 1] += dv * gy / n;
                    }
                }
                (value, grad)
            },
            &xy,
            eps,
        ),
        LossTerm::Edge => {
            gradient_check(|x| edge_loss_grid(&grid_of(x), &gt.grid).unwrap(), &xy, eps)
        }
        LossTerm::SmoothL1 => gradient_check(
            |x| {
                let g = grid_of(x);
                let (v, cg) = smooth_l1(&g, &gt.grid, &Channel::ALL).unwrap();
                (v, chain_polar_to_xy(&g, &cg))
            },
            &xy,
            eps,
        ),
        LossTerm::Diff => {
            let k = if seed.is_multiple_of(2) {
                Neighborhood::Eight
            } else {
                Neighborhood::Four
            };
            gradient_check(|x| diff_loss(&grid_of(x), &gt.grid, k).unwrap(), &xy, eps)
        }
        LossTerm::Shape3D => {
            let c_star = gt.shape3d.as_ref().expect("instance carries 3D");
            let c = inst.pred.shape3d.as_ref().expect("instance carries 3D");
            gradient_check(
                |d| {
                    let f = Shape3DField::new(c.height, c.width, d.to_vec()).unwrap();
                    shape3d_loss(&f, c_star).unwrap()
                },
                &c.data,
                eps,
            )
        }
        LossTerm::Total => {
            let weights = LossWeights {
                focal_mode: mode,
                ..LossWeights::default()
            };
            let c = inst.pred.shape3d.as_ref().expect("instance carries 3D");
            let (nxy, nr) = (xy.len(), radii.len());
            let mut params = xy.clone();
            params.extend_from_slice(&radii);
            params.extend_from_slice(&c.data);
            let (h3, w3) = (c.height, c.width);
            gradient_check(
                |p| {
                    let grid = grid_of(&p[..nxy]);
                    let pred = ControlPoints {
                        contours: ContourSet::new(
                            LAYERS,
                            RAYS,
                            p[nxy..nxy + nr].to_vec(),
                            grid.origin,
                        )
                        .unwrap(),
                        grid,
                        shape3d: Some(Shape3DField::new(h3, w3, p[nxy + nr..].to_vec()).unwrap()),
                    };
                    let b = total_loss(&pred, gt, &weights).unwrap();
                    let mut g = b.grad_xy;
                    g.extend(b.grad_radii);
                    g.extend(b.grad_shape3d);
                    (b.total, g)
                },
                &params,
                eps,
            )
        }
    };
    Ok(report)
}
