use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::adam::Adam;
use crate::error::{Error, Result};
use crate::geometry::{augment_grid, contour_set, lattice, ContourSet, MappingGrid, Point2};
use crate::losses::{doc_iou_discrete, total_loss, ControlPoints, LossWeights, Shape3DField};
use crate::synth::SynthSample;

/// Ratio to the initial loss beyond which a run counts as diverged.
pub const DIVERGENCE_FACTOR: f64 = 10.0;
const MIN_RADIUS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    /// Regular lattice with the contour radii of its rectangular rings.
    Lattice,
    /// Lattice plus uniform noise of the given half-width.
    PerturbedLattice {
        seed: u64,
        scale: f64,
    },
    GroundTruth,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    Constant,
    /// Cosine decay from the base step to zero over the run.
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub iterations: usize,
    pub step: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weights: LossWeights,
    pub init: Init,
    pub schedule: Schedule,
    /// Also fit a 3D field against the sample's surface when available.
    pub fit_shape3d: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            iterations: 2000,
            step: 1e-2,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weights: LossWeights::default(),
            init: Init::Lattice,
            schedule: Schedule::Cosine,
            fit_shape3d: true,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidArgument("iterations must be >= 1".into()));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "step must be > 0, got {}",
                self.step
            )));
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2) && self.eps > 0.0)
        {
            return Err(Error::InvalidArgument(
                "moment coefficients must lie in [0,1), eps > 0".into(),
            ));
        }
        self.weights.validate()
    }

    fn lr(&self, k: usize) -> f64 {
        match self.schedule {
            Schedule::Constant => self.step,
            Schedule::Cosine => {
                0.5 * self.step * (1.0 + (PI * k as f64 / self.iterations as f64).cos())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub grid: MappingGrid,
    pub contours: ContourSet,
    pub shape3d: Option<Shape3DField>,
    /// Total loss before each step, then the final loss.
    pub trace: Vec<f64>,
    pub mapping_rmse: f64,
    /// Discrete IOU of the outermost fitted contour against the target.
    pub contour_iou: f64,
}

/// Root mean squared Euclidean distance between corresponding mapping points.
pub fn mapping_rmse(a: &MappingGrid, b: &MappingGrid) -> f64 {
    let n = a.len().max(1) as f64;
    let sq: f64 = a
        .points
        .iter()
        .zip(&b.points)
        .map(|(p, q)| {
            let d = p.xy().distance(q.xy());
            d * d
        })
        .sum();
    (sq / n).sqrt()
}

/// Ground-truth control points of a sample, optionally without the 3D field.
pub fn sample_targets(sample: &SynthSample, with_shape3d: bool) -> ControlPoints {
    ControlPoints {
        grid: sample.gt_grid.clone(),
        contours: sample.gt_contours.clone(),
        shape3d: with_shape3d.then(|| sample.gt_shape3d.clone()),
    }
}

fn assemble(
    h: usize,
    w: usize,
    a: usize,
    b: usize,
    xy: &[f64],
    radii: &[f64],
    s3: Option<&[f64]>,
) -> Result<ControlPoints> {
    let grid = MappingGrid::from_flat(h, w, xy)?;
    let contours = ContourSet::new(a, b, radii.to_vec(), grid.origin)?;
    let shape3d = s3
        .map(|d| Shape3DField::new(h, w, d.to_vec()))
        .transpose()?;
    Ok(ControlPoints {
        grid,
        contours,
        shape3d,
    })
}

fn initial_params(target: &ControlPoints, init: Init) -> Result<(Vec<f64>, Vec<f64>)> {
    let (h, w) = (target.grid.h, target.grid.w);
    let (a, b) = (target.contours.a, target.contours.b);
    let base = match init {
        Init::GroundTruth => return Ok((target.grid.xy_flat(), target.contours.radii.clone())),
        Init::Lattice => lattice(h, w),
        Init::PerturbedLattice { seed, scale } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            lattice(h, w)
                .into_iter()
                .map(|p| {
                    Point2::new(
                        p.x + rng.gen_range(-scale..=scale),
                        p.y + rng.gen_range(-scale..=scale),
                    )
                })
                .collect()
        }
    };
    let grid = augment_grid(h, w, &base)?;
    let radii = contour_set(&grid, a, b)?.radii;
    Ok((grid.xy_flat(), radii))
}

/// Fits free mapping coordinates and contour radii (and optionally a 3D
/// field) to `target` by descending the combined objective.
pub fn fit_control_points(target: &ControlPoints, cfg: &FitConfig) -> Result<FitOutcome> {
    cfg.validate()?;
    let (h, w) = (target.grid.h, target.grid.w);
    let (a, b) = (target.contours.a, target.contours.b);
    let (mut xy, mut radii) = initial_params(target, cfg.init)?;
    let fit3d = cfg.fit_shape3d && target.shape3d.is_some();
    let mut s3: Option<Vec<f64>> = fit3d.then(|| match cfg.init {
        Init::GroundTruth => target
            .shape3d
            .as_ref()
            .map(|f| f.data.clone())
            .unwrap_or_default(),
        _ => xy.chunks(2).flat_map(|p| [p[0], p[1], 0.0]).collect(),
    });
    let target = ControlPoints {
        shape3d: if fit3d { target.shape3d.clone() } else { None },
        ..target.clone()
    };

    let (nxy, nr) = (xy.len(), radii.len());
    let n3 = s3.as_ref().map_or(0, Vec::len);
    let mut opt = Adam::new(nxy + nr + n3, cfg.beta1, cfg.beta2, cfg.eps);
    let mut params = vec![0.0; nxy + nr + n3];
    let mut grad = vec![0.0; nxy + nr + n3];
    let mut trace = Vec::with_capacity(cfg.iterations + 1);
    let mut initial = f64::NAN;

    for k in 0..=cfg.iterations {
        let pred = assemble(h, w, a, b, &xy, &radii, s3.as_deref())?;
        let lb = total_loss(&pred, &target, &cfg.weights)?;
        if !lb.total.is_finite() {
            return Err(Error::NonFinite("loss"));
        }
        trace.push(lb.total);
        if k == 0 {
            initial = lb.total;
            if initial == 0.0 {
                break;
            }
        } else if lb.total > DIVERGENCE_FACTOR * initial {
            return Err(Error::Diverged {
                loss: lb.total,
                initial,
            });
        }
        if k == cfg.iterations {
            break;
        }
        params[..nxy].copy_from_slice(&xy);
        params[nxy..nxy + nr].copy_from_slice(&radii);
        grad[..nxy].copy_from_slice(&lb.grad_xy);
        grad[nxy..nxy + nr].copy_from_slice(&lb.grad_radii);
        if let Some(s) = &s3 {
            params[nxy + nr..].copy_from_slice(s);
            grad[nxy + nr..].copy_from_slice(&lb.grad_shape3d);
        }
        opt.step(&mut params, &grad, cfg.lr(k));
        xy.copy_from_slice(&params[..nxy]);
        for (r, p) in radii.iter_mut().zip(&params[nxy..nxy + nr]) {
            *r = p.max(MIN_RADIUS);
        }
        if let Some(s) = &mut s3 {
            s.copy_from_slice(&params[nxy + nr..]);
        }
    }

    let fitted = assemble(h, w, a, b, &xy, &radii, s3.as_deref())?;
    Ok(FitOutcome {
        mapping_rmse: mapping_rmse(&fitted.grid, &target.grid),
        contour_iou: doc_iou_discrete(fitted.contours.outermost(), target.contours.outermost())?,
        grid: fitted.grid,
        contours: fitted.contours,
        shape3d: fitted.shape3d,
        trace,
    })
}

/// [`fit_control_points`] against the ground truth of a synthetic sample.
pub fn fit_points(sample: &SynthSample, cfg: &FitConfig) -> Result<FitOutcome> {
    fit_control_points(&sample_targets(sample, cfg.fit_shape3d), cfg)
}
