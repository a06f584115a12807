use super::Shape3DField;
use crate::error::{Error, Result};
use crate::geometry::{
    edge_indices, edge_lengths, wrap_difference, Channel, EdgeLengths, MappingGrid,
};

fn shape_check(pred: &MappingGrid, gt: &MappingGrid) -> Result<()> {
    if pred.same_shape(gt) {
        Ok(())
    } else {
        Err(Error::ShapeMismatch(format!(
            "grids {}x{} and {}x{}",
            pred.h, pred.w, gt.h, gt.w
        )))
    }
}

/// Huber value and derivative with unit threshold.
#[inline]
pub fn huber(d: f64) -> (f64, f64) {
    if d.abs() < 1.0 {
        (0.5 * d * d, d)
    } else {
        (d.abs() - 0.5, d.signum())
    }
}

/// Mean smooth-L1 over paired entries and its gradient over `pred`.
pub fn smooth_l1_values(pred: &[f64], gt: &[f64]) -> Result<(f64, Vec<f64>)> {
    smooth_l1_values_scaled(pred, gt, 1.0)
}

/// [`smooth_l1_values`] on differences multiplied by `scale`.
pub fn smooth_l1_values_scaled(pred: &[f64], gt: &[f64], scale: f64) -> Result<(f64, Vec<f64>)> {
    if pred.len() != gt.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} vs {} entries",
            pred.len(),
            gt.len()
        )));
    }
    if pred.is_empty() {
        return Ok((0.0, Vec::new()));
    }
    let n = pred.len() as f64;
    let mut value = 0.0;
    let grad = pred
        .iter()
        .zip(gt)
        .map(|(&p, &g)| {
            let (v, d) = huber(scale * (p - g));
            value += v;
            scale * d / n
        })
        .collect();
    Ok((value / n, grad))
}

/// Mean smooth-L1 over the selected channels of every mapping point.
///
/// Angle differences are wrapped to `(-π, π]`. The gradient is returned per
/// point and channel, in `[x, y, θ, ρ]` order, zero for unselected channels.
pub fn smooth_l1(
    pred: &MappingGrid,
    gt: &MappingGrid,
    channels: &[Channel],
) -> Result<(f64, Vec<[f64; 4]>)> {
    smooth_l1_scaled(pred, gt, channels, 1.0)
}

/// [`smooth_l1`] with the length channels `x`, `y`, `ρ` multiplied by
/// `scale` before the Huber; `θ` stays in radians.
pub fn smooth_l1_scaled(
    pred: &MappingGrid,
    gt: &MappingGrid,
    channels: &[Channel],
    scale: f64,
) -> Result<(f64, Vec<[f64; 4]>)> {
    shape_check(pred, gt)?;
    let mut grad = vec![[0.0; 4]; pred.len()];
    if channels.is_empty() {
        return Ok((0.0, grad));
    }
    let n = (pred.len() * channels.len()) as f64;
    let mut value = 0.0;
    for ((p, g), out) in pred.points.iter().zip(&gt.points).zip(grad.iter_mut()) {
        for &c in channels {
            let mut d = p.channel(c) - g.channel(c);
            let s = if c == Channel::Theta {
                d = wrap_difference(d);
                1.0
            } else {
                scale
            };
            let (v, dv) = huber(s * d);
            value += v;
            out[c as usize] += s * dv / n;
        }
    }
    Ok((value / n, grad))
}

/// Converts per-point gradients over `[x, y, θ, ρ]` into a gradient over the
/// interleaved Cartesian coordinates, chaining `(θ, ρ)` through the centroid
/// origin. Points sitting exactly on the origin contribute no Polar gradient.
pub fn chain_polar_to_xy(grid: &MappingGrid, channel_grad: &[[f64; 4]]) -> Vec<f64> {
    let n = grid.len();
    let mut polar = vec![[0.0; 2]; n];
    let mut mean = [0.0; 2];
    for (k, (p, g)) in grid.points.iter().zip(channel_grad).enumerate() {
        let dx = p.x - grid.origin.x;
        let dy = p.y - grid.origin.y;
        let r2 = dx * dx + dy * dy;
        if r2 == 0.0 {
            continue;
        }
        let r = r2.sqrt();
        let (gt, gr) = (g[2], g[3]);
        polar[k] = [gt * (-dy / r2) + gr * dx / r, gt * (dx / r2) + gr * dy / r];
        mean[0] += polar[k][0] / n as f64;
        mean[1] += polar[k][1] / n as f64;
    }
    let mut out = Vec::with_capacity(2 * n);
    for (v, g) in polar.iter().zip(channel_grad) {
        out.push(g[0] + v[0] - mean[0]);
        out.push(g[1] + v[1] - mean[1]);
    }
    out
}

/// Neighborhood used by the differential-coordinate loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Neighborhood {
    Four,
    #[default]
    Eight,
}

impl Neighborhood {
    pub fn offsets(self) -> &'static [(isize, isize)] {
        const FOUR: [(isize, isize); 4] = [(-1, 0), (0, 1), (1, 0), (0, -1)];
        const EIGHT: [(isize, isize); 8] = [
            (-1, -1),
            (-1, 0),
            (-1, 1),
            (0, 1),
            (1, 1),
            (1, 0),
            (1, -1),
            (0, -1),
        ];
        match self {
            Neighborhood::Four => &FOUR,
            Neighborhood::Eight => &EIGHT,
        }
    }

    pub fn count(self) -> usize {
        self.offsets().len()
    }
}

fn neighbors(
    h: usize,
    w: usize,
    i: usize,
    j: usize,
    k: Neighborhood,
) -> impl Iterator<Item = usize> {
    k.offsets().iter().filter_map(move |&(di, dj)| {
        let ni = i as isize + di;
        let nj = j as isize + dj;
        (ni >= 0 && nj >= 0 && (ni as usize) < h && (nj as usize) < w)
            .then(|| ni as usize * w + nj as usize)
    })
}

/// Differential coordinates `δᵢ = Σⱼ (pⱼ − pᵢ)` over the (truncated) neighborhood.
pub fn differential_coordinates(grid: &MappingGrid, k: Neighborhood) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(grid.len());
    for i in 0..grid.h {
        for j in 0..grid.w {
            let p = grid.at(i, j);
            let mut d = [0.0; 2];
            for n in neighbors(grid.h, grid.w, i, j, k) {
                d[0] += grid.points[n].x - p.x;
                d[1] += grid.points[n].y - p.y;
            }
            out.push(d);
        }
    }
    out
}

/// Mean `‖δᵢ − δᵢ*‖₂` over all points and its gradient over `(x, y)`.
pub fn diff_loss(pred: &MappingGrid, gt: &MappingGrid, k: Neighborhood) -> Result<(f64, Vec<f64>)> {
    shape_check(pred, gt)?;
    let dp = differential_coordinates(pred, k);
    let dg = differential_coordinates(gt, k);
    let n = pred.len() as f64;
    let mut value = 0.0;
    let mut grad = vec![0.0; 2 * pred.len()];
    for i in 0..pred.h {
        for j in 0..pred.w {
            let idx = pred.index(i, j);
            let e = [dp[idx][0] - dg[idx][0], dp[idx][1] - dg[idx][1]];
            let norm = e[0].hypot(e[1]);
            value += norm;
            if norm == 0.0 {
                continue;
            }
            let u = [e[0] / (norm * n), e[1] / (norm * n)];
            let mut degree = 0.0;
            for nb in neighbors(pred.h, pred.w, i, j, k) {
                grad[2 * nb] += u[0];
                grad[2 * nb + 1] += u[1];
                degree += 1.0;
            }
            grad[2 * idx] -= degree * u[0];
            grad[2 * idx + 1] -= degree * u[1];
        }
    }
    Ok((value / n, grad))
}

/// `|L−L*| + |R−R*| + |T−T*| + |B−B*|` and its derivative per edge length,
/// zero at exact equality.
pub fn edge_loss(e: &EdgeLengths, e_star: &EdgeLengths) -> (f64, [f64; 4]) {
    let a = e.as_array();
    let b = e_star.as_array();
    let mut value = 0.0;
    let mut grad = [0.0; 4];
    for k in 0..4 {
        let d = a[k] - b[k];
        value += d.abs();
        grad[k] = if d > 0.0 {
            1.0
        } else if d < 0.0 {
            -1.0
        } else {
            0.0
        };
    }
    (value, grad)
}

/// Edge loss between two grids with its gradient over the predicted `(x, y)`.
pub fn edge_loss_grid(pred: &MappingGrid, gt: &MappingGrid) -> Result<(f64, Vec<f64>)> {
    shape_check(pred, gt)?;
    let (value, dl) = edge_loss(&edge_lengths(pred), &edge_lengths(gt));
    let mut grad = vec![0.0; 2 * pred.len()];
    for (edge, scale) in edge_indices(pred.h, pred.w).iter().zip(dl) {
        if scale == 0.0 {
            continue;
        }
        for seg in edge.windows(2) {
            let (a, b) = (&pred.points[seg[0]], &pred.points[seg[1]]);
            let (dx, dy) = (b.x - a.x, b.y - a.y);
            let len = dx.hypot(dy);
            if len == 0.0 {
                continue;
            }
            let (ux, uy) = (scale * dx / len, scale * dy / len);
            grad[2 * seg[1]] += ux;
            grad[2 * seg[1] + 1] += uy;
            grad[2 * seg[0]] -= ux;
            grad[2 * seg[0] + 1] -= uy;
        }
    }
    Ok((value, grad))
}

/// Mean absolute error over all elements of two 3D fields.
pub fn shape3d_loss(c: &Shape3DField, c_star: &Shape3DField) -> Result<(f64, Vec<f64>)> {
    if c.height != c_star.height || c.width != c_star.width {
        return Err(Error::ShapeMismatch(format!(
            "3D fields {}x{} and {}x{}",
            c.height, c.width, c_star.height, c_star.width
        )));
    }
    let n = c.data.len().max(1) as f64;
    let mut value = 0.0;
    let grad = c
        .data
        .iter()
        .zip(&c_star.data)
        .map(|(&a, &b)| {
            let d = a - b;
            value += d.abs();
            if d > 0.0 {
                1.0 / n
            } else if d < 0.0 {
                -1.0 / n
            } else {
                0.0
            }
        })
        .collect();
    Ok((value / n, grad))
}
