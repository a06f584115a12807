use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::adam::Adam;
use super::points::{mapping_rmse, DIVERGENCE_FACTOR};
use crate::error::{Error, Result};
use crate::geometry::{ContourSet, MappingGrid};
use crate::image::ImageBuffer;
use crate::losses::{total_loss, ControlPoints, LossWeights};

/// Half-range of the mapping squash `0.5 + SPAN·tanh(z)`.
const SPAN: f64 = 0.75;
const MAGIC: &[u8; 4] = b"PDW1";
const HEADER_FIELDS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PredictorShape {
    /// Side of the grayscale input thumbnail.
    pub side: usize,
    pub hidden: usize,
    pub grid_h: usize,
    pub grid_w: usize,
    pub contour_layers: usize,
    pub contour_samples: usize,
}

impl Default for PredictorShape {
    fn default() -> Self {
        Self {
            side: 32,
            hidden: 256,
            grid_h: 16,
            grid_w: 16,
            contour_layers: 1,
            contour_samples: 64,
        }
    }
}

impl PredictorShape {
    fn inputs(&self) -> usize {
        self.side * self.side
    }

    fn map_outputs(&self) -> usize {
        2 * self.grid_h * self.grid_w
    }

    fn contour_outputs(&self) -> usize {
        self.contour_layers * self.contour_samples
    }

    /// Offsets of `[W1, b1, W2, b2, W3, b3]` in the flat parameter vector,
    /// plus the total length.
    fn layout(&self) -> [usize; 7] {
        let (i, h, m, c) = (
            self.inputs(),
            self.hidden,
            self.map_outputs(),
            self.contour_outputs(),
        );
        let mut o = [0; 7];
        let sizes = [h * i, h, m * h, m, c * h, c];
        for k in 0..6 {
            o[k + 1] = o[k] + sizes[k];
        }
        o
    }

    pub fn param_count(&self) -> usize {
        self.layout()[6]
    }

    fn validate(&self) -> Result<()> {
        if self.side == 0
            || self.hidden == 0
            || self.contour_layers == 0
            || self.contour_samples == 0
        {
            return Err(Error::InvalidArgument(
                "predictor dimensions must be positive".into(),
            ));
        }
        if self.grid_h < crate::geometry::MIN_GRID_SIDE
            || self.grid_w < crate::geometry::MIN_GRID_SIDE
        {
            return Err(Error::GridTooSmall {
                h: self.grid_h,
                w: self.grid_w,
                min: crate::geometry::MIN_GRID_SIDE,
            });
        }
        Ok(())
    }
}

/// One affine + tanh trunk feeding a mapping head and a contour head.
#[derive(Debug, Clone, PartialEq)]
pub struct TinyPredictor {
    pub shape: PredictorShape,
    /// `[W1, b1, W2, b2, W3, b3]`, weights row-major `out × in`.
    pub params: Vec<f64>,
}

/// Intermediate activations of one forward pass.
struct Activations {
    input: Vec<f64>,
    hidden: Vec<f64>,
    map_tanh: Vec<f64>,
    contour_pre: Vec<f64>,
}

fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn affine(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    b.iter()
        .zip(w.chunks_exact(x.len()))
        .map(|(bi, row)| bi + row.iter().zip(x).map(|(a, c)| a * c).sum::<f64>())
        .collect()
}

/// Centered grayscale thumbnail fed to the trunk.
pub fn predictor_input(image: &ImageBuffer, side: usize) -> Vec<f64> {
    image
        .gray_thumbnail(side)
        .data
        .iter()
        .map(|v| v - 0.5)
        .collect()
}

impl TinyPredictor {
    pub fn zeros(shape: PredictorShape) -> Result<Self> {
        shape.validate()?;
        Ok(Self {
            shape,
            params: vec![0.0; shape.param_count()],
        })
    }

    /// Parameters uniform in `±1/√fan_in` of their layer, except the mapping
    /// head: zero weights and a bias decoding to the regular lattice, so the
    /// untrained grid is the identity.
    pub fn init(shape: PredictorShape, seed: u64) -> Result<Self> {
        let mut p = Self::zeros(shape)?;
        let o = shape.layout();
        let fans = [
            shape.inputs(),
            shape.inputs(),
            shape.hidden,
            shape.hidden,
            shape.hidden,
            shape.hidden,
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in 0..6 {
            let bound = 1.0 / (fans[k] as f64).sqrt();
            for v in &mut p.params[o[k]..o[k + 1]] {
                *v = rng.gen_range(-bound..=bound);
            }
        }
        p.params[o[2]..o[3]].iter_mut().for_each(|v| *v = 0.0);
        let lattice = crate::geometry::lattice(shape.grid_h, shape.grid_w);
        let bias = &mut p.params[o[3]..o[4]];
        for (b, q) in bias.chunks_exact_mut(2).zip(&lattice) {
            b[0] = ((q.x - 0.5) / SPAN).atanh();
            b[1] = ((q.y - 0.5) / SPAN).atanh();
        }
        Ok(p)
    }

    fn block(&self, k: usize) -> &[f64] {
        let o = self.shape.layout();
        &self.params[o[k]..o[k + 1]]
    }

    fn activations(&self, input: Vec<f64>) -> Activations {
        let hidden: Vec<f64> = affine(self.block(0), self.block(1), &input)
            .into_iter()
            .map(f64::tanh)
            .collect();
        let map_tanh = affine(self.block(2), self.block(3), &hidden)
            .into_iter()
            .map(f64::tanh)
            .collect();
        let contour_pre = affine(self.block(4), self.block(5), &hidden);
        Activations {
            input,
            hidden,
            map_tanh,
            contour_pre,
        }
    }

    fn decode(&self, act: &Activations) -> Result<ControlPoints> {
        let s = &self.shape;
        let xy: Vec<f64> = act.map_tanh.iter().map(|t| 0.5 + SPAN * t).collect();
        let grid = MappingGrid::from_flat(s.grid_h, s.grid_w, &xy)?;
        let radii = act.contour_pre.iter().map(|&z| softplus(z)).collect();
        let contours = ContourSet::new(s.contour_layers, s.contour_samples, radii, grid.origin)?;
        Ok(ControlPoints {
            grid,
            contours,
            shape3d: None,
        })
    }

    /// Mapping grid and contour set predicted for `image`.
    pub fn forward(&self, image: &ImageBuffer) -> Result<(MappingGrid, ContourSet)> {
        let cp = self.forward_input(predictor_input(image, self.shape.side))?;
        Ok((cp.grid, cp.contours))
    }

    pub fn forward_input(&self, input: Vec<f64>) -> Result<ControlPoints> {
        if input.len() != self.shape.inputs() {
            return Err(Error::ShapeMismatch(format!(
                "predictor expects {} inputs, got {}",
                self.shape.inputs(),
                input.len()
            )));
        }
        self.decode(&self.activations(input))
    }

    /// Objective value and its gradient over all parameters for one example.
    pub fn loss_and_grad(
        &self,
        ex: &TrainExample,
        weights: &LossWeights,
    ) -> Result<(f64, Vec<f64>)> {
        let act = self.activations(ex.input.clone());
        let pred = self.decode(&act)?;
        let lb = total_loss(&pred, &ex.target, weights)?;

        let s = &self.shape;
        let o = s.layout();
        let mut g = vec![0.0; self.params.len()];
        let dz_map: Vec<f64> = lb
            .grad_xy
            .iter()
            .zip(&act.map_tanh)
            .map(|(gx, t)| gx * SPAN * (1.0 - t * t))
            .collect();
        let dz_ctr: Vec<f64> = lb
            .grad_radii
            .iter()
            .zip(&act.contour_pre)
            .map(|(gr, &z)| gr * sigmoid(z))
            .collect();

        let mut dh = vec![0.0; s.hidden];
        let heads = [(2usize, &dz_map), (4usize, &dz_ctr)];
        for (k, dz) in heads {
            let w = self.block(k);
            for (r, &d) in dz.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &w[r * s.hidden..(r + 1) * s.hidden];
                let grow = &mut g[o[k] + r * s.hidden..o[k] + (r + 1) * s.hidden];
                for j in 0..s.hidden {
                    grow[j] += d * act.hidden[j];
                    dh[j] += d * row[j];
                }
                g[o[k + 1] + r] += d;
            }
        }
        let ni = s.inputs();
        for j in 0..s.hidden {
            let dp = dh[j] * (1.0 - act.hidden[j] * act.hidden[j]);
            if dp == 0.0 {
                continue;
            }
            let grow = &mut g[o[0] + j * ni..o[0] + (j + 1) * ni];
            for (gv, x) in grow.iter_mut().zip(&act.input) {
                *gv += dp * x;
            }
            g[o[1] + j] += dp;
        }
        Ok((lb.total, g))
    }

    /// Flat binary form: `PDW1`, six little-endian `u32` shape fields, a
    /// little-endian `u64` parameter count, then the parameters as `f64`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let s = &self.shape;
        let mut out = Vec::with_capacity(4 + 4 * HEADER_FIELDS + 8 + 8 * self.params.len());
        out.extend_from_slice(MAGIC);
        for v in [
            s.side,
            s.hidden,
            s.grid_h,
            s.grid_w,
            s.contour_layers,
            s.contour_samples,
        ] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        out.extend_from_slice(&(self.params.len() as u64).to_le_bytes());
        for p in &self.params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::InvalidArgument(format!("predictor file: {m}"));
        if bytes.len() < 4 + 4 * HEADER_FIELDS + 8 || &bytes[..4] != MAGIC {
            return Err(bad("missing PDW1 header"));
        }
        let field = |k: usize| {
            let at = 4 + 4 * k;
            u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes")) as usize
        };
        let shape = PredictorShape {
            side: field(0),
            hidden: field(1),
            grid_h: field(2),
            grid_w: field(3),
            contour_layers: field(4),
            contour_samples: field(5),
        };
        shape.validate()?;
        let at = 4 + 4 * HEADER_FIELDS;
        let count = u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes")) as usize;
        if count != shape.param_count() || bytes.len() != at + 8 + 8 * count {
            return Err(bad("parameter count does not match the shape header"));
        }
        let params: Vec<f64> = bytes[at + 8..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("predictor parameters"));
        }
        Ok(Self { shape, params })
    }
}

/// Preprocessed input with its ground-truth targets.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainExample {
    pub input: Vec<f64>,
    pub target: ControlPoints,
}

impl TrainExample {
    /// Thumbnail of `image` plus the grid and outermost `layers` contours of `target`.
    pub fn new(
        image: &ImageBuffer,
        target: &ControlPoints,
        shape: &PredictorShape,
    ) -> Result<Self> {
        let c = &target.contours;
        if c.b != shape.contour_samples || c.a < shape.contour_layers {
            return Err(Error::ShapeMismatch(format!(
                "target contours {}x{} vs predictor {}x{}",
                c.a, c.b, shape.contour_layers, shape.contour_samples
            )));
        }
        if target.grid.h != shape.grid_h || target.grid.w != shape.grid_w {
            return Err(Error::ShapeMismatch(format!(
                "target grid {}x{} vs predictor {}x{}",
                target.grid.h, target.grid.w, shape.grid_h, shape.grid_w
            )));
        }
        let radii = c.radii[..shape.contour_layers * c.b].to_vec();
        Ok(Self {
            input: predictor_input(image, shape.side),
            target: ControlPoints {
                grid: target.grid.clone(),
                contours: ContourSet::new(shape.contour_layers, c.b, radii, c.origin)?,
                shape3d: None,
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub step: f64,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weights: LossWeights,
    /// Seeds the per-epoch shuffle.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            step: 1e-3,
            batch_size: 8,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weights: LossWeights::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean per-example loss seen during each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Mini-batch training over `data`. Per-example gradients are evaluated in
/// parallel and summed in dataset order, so results do not depend on the
/// thread count.
pub fn predictor_train(
    p: &mut TinyPredictor,
    data: &[TrainExample],
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    if data.len() < 2 {
        return Err(Error::InvalidArgument(
            "training needs at least 2 examples".into(),
        ));
    }
    if cfg.batch_size == 0 || !(cfg.step > 0.0) {
        return Err(Error::InvalidArgument(
            "batch size and step must be positive".into(),
        ));
    }
    cfg.weights.validate()?;
    let mut opt = Adam::new(p.params.len(), cfg.beta1, cfg.beta2, cfg.eps);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut grad = vec![0.0; p.params.len()];
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let results: Vec<Result<(f64, Vec<f64>)>> = batch
                .par_iter()
                .map(|&i| p.loss_and_grad(&data[i], &cfg.weights))
                .collect();
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / batch.len() as f64;
            for r in results {
                let (loss, g) = r?;
                if !loss.is_finite() {
                    return Err(Error::NonFinite("training loss"));
                }
                sum += loss;
                for (acc, v) in grad.iter_mut().zip(&g) {
                    *acc += scale * v;
                }
            }
            opt.step(&mut p.params, &grad, cfg.step);
        }
        let mean = sum / data.len() as f64;
        if let Some(&first) = epoch_losses.first() {
            if mean > DIVERGENCE_FACTOR * first {
                return Err(Error::Diverged {
                    loss: mean,
                    initial: first,
                });
            }
        }
        epoch_losses.push(mean);
    }
    Ok(TrainReport { epoch_losses })
}

/// Mean mapping RMSE of the predictor over `data`.
pub fn predictor_rmse(p: &TinyPredictor, data: &[TrainExample]) -> Result<f64> {
    let errs: Vec<Result<f64>> = data
        .par_iter()
        .map(|ex| {
            Ok(mapping_rmse(
                &p.forward_input(ex.input.clone())?.grid,
                &ex.target.grid,
            ))
        })
        .collect();
    let mut sum = 0.0;
    for e in errs {
        sum += e?;
    }
    Ok(sum / data.len().max(1) as f64)
}
