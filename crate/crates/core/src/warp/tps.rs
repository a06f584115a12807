use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Point2;

pub const DEFAULT_LAMBDA: f64 = 1e-6;

/// Ratio of largest to smallest pivot above which the system is rejected.
const MAX_CONDITION: f64 = 1e14;

/// Biharmonic kernel `r² log r` with `φ(0) = 0`.
#[inline]
pub fn tps_kernel(r: f64) -> f64 {
    if r == 0.0 {
        0.0
    } else {
        r * r * r.ln()
    }
}

/// Kernel expressed in squared distance: `½ r² log r²`.
#[inline]
fn kernel_sq(r2: f64) -> f64 {
    if r2 == 0.0 {
        0.0
    } else {
        0.5 * r2 * r2.ln()
    }
}

/// Two-output thin-plate spline `f(q) = a₀ + a₁qx + a₂qy + Σ wᵢ φ(‖q − sᵢ‖)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TpsModel {
    pub sites: Vec<Point2>,
    /// Kernel weights per site, one column per output dimension.
    pub weights: Vec<[f64; 2]>,
    /// `[a₀, a₁, a₂]` per output dimension.
    pub affine: [[f64; 3]; 2],
    pub lambda: f64,
}

/// Solves the TPS system `[K + λI, P; Pᵀ, 0] [w; a] = [v; 0]` with a dense
/// LU factorization (partial pivoting).
pub fn tps_fit(sites: &[Point2], values: &[Point2], lambda: f64) -> Result<TpsModel> {
    let n = sites.len();
    if n != values.len() {
        return Err(Error::ShapeMismatch(format!(
            "{n} sites but {} values",
            values.len()
        )));
    }
    if n < 4 {
        return Err(Error::InvalidArgument(format!(
            "TPS needs at least 4 sites, got {n}"
        )));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    if !sites.iter().chain(values).all(Point2::is_finite) {
        return Err(Error::NonFinite("TPS sites or values"));
    }

    let m = n + 3;
    let mut a = DMatrix::<f64>::zeros(m, m);
    for i in 0..n {
        for j in 0..i {
            let dx = sites[i].x - sites[j].x;
            let dy = sites[i].y - sites[j].y;
            let k = kernel_sq(dx * dx + dy * dy);
            a[(i, j)] = k;
            a[(j, i)] = k;
        }
        a[(i, i)] = lambda;
        let row = [1.0, sites[i].x, sites[i].y];
        for (c, v) in row.into_iter().enumerate() {
            a[(i, n + c)] = v;
            a[(n + c, i)] = v;
        }
    }
    let mut rhs = DMatrix::<f64>::zeros(m, 2);
    for (i, v) in values.iter().enumerate() {
        rhs[(i, 0)] = v.x;
        rhs[(i, 1)] = v.y;
    }

    let lu = a.lu();
    let u = lu.u();
    let diag: DVector<f64> = u.diagonal().map(f64::abs);
    let (lo, hi) = (diag.min(), diag.max());
    let condition = if lo == 0.0 { f64::INFINITY } else { hi / lo };
    if !(condition < MAX_CONDITION) {
        return Err(Error::Singular { condition });
    }
    let sol = lu.solve(&rhs).ok_or(Error::Singular { condition })?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular { condition });
    }

    let weights = (0..n).map(|i| [sol[(i, 0)], sol[(i, 1)]]).collect();
    let affine = [
        [sol[(n, 0)], sol[(n + 1, 0)], sol[(n + 2, 0)]],
        [sol[(n, 1)], sol[(n + 1, 1)], sol[(n + 2, 1)]],
    ];
    Ok(TpsModel {
        sites: sites.to_vec(),
        weights,
        affine,
        lambda,
    })
}

impl TpsModel {
    pub fn eval(&self, q: Point2) -> Point2 {
        let [ax, ay] = self.affine;
        let mut x = ax[0] + ax[1] * q.x + ax[2] * q.y;
        let mut y = ay[0] + ay[1] * q.x + ay[2] * q.y;
        for (s, w) in self.sites.iter().zip(&self.weights) {
            let dx = q.x - s.x;
            let dy = q.y - s.y;
            let k = kernel_sq(dx * dx + dy * dy);
            x += w[0] * k;
            y += w[1] * k;
        }
        Point2::new(x, y)
    }

    pub fn eval_many(&self, queries: &[Point2]) -> Vec<Point2> {
        queries.par_iter().map(|&q| self.eval(q)).collect()
    }

    /// `[[∂fx/∂x, ∂fx/∂y], [∂fy/∂x, ∂fy/∂y]]` at `q`.
    pub fn jacobian(&self, q: Point2) -> [[f64; 2]; 2] {
        let [ax, ay] = self.affine;
        let mut j = [[ax[1], ax[2]], [ay[1], ay[2]]];
        for (s, w) in self.sites.iter().zip(&self.weights) {
            let dx = q.x - s.x;
            let dy = q.y - s.y;
            let r2 = dx * dx + dy * dy;
            if r2 == 0.0 {
                continue;
            }
            // d/dq of ½ r² ln r² is (ln r² + 1) (q − s)
            let g = r2.ln() + 1.0;
            j[0][0] += w[0] * g * dx;
            j[0][1] += w[0] * g * dy;
            j[1][0] += w[1] * g * dx;
            j[1][1] += w[1] * g * dy;
        }
        j
    }

    /// Side-condition residuals `(Σw, Σw·x, Σw·y)` per output dimension.
    pub fn side_conditions(&self) -> [[f64; 3]; 2] {
        let mut out = [[0.0; 3]; 2];
        for (s, w) in self.sites.iter().zip(&self.weights) {
            for d in 0..2 {
                out[d][0] += w[d];
                out[d][1] += w[d] * s.x;
                out[d][2] += w[d] * s.y;
            }
        }
        out
    }

    /// Bending energy `wᵀ K w` summed over both outputs.
    pub fn bending_energy(&self) -> f64 {
        let n = self.sites.len();
        let mut e = 0.0;
        for i in 0..n {
            for j in 0..n {
                let dx = self.sites[i].x - self.sites[j].x;
                let dy = self.sites[i].y - self.sites[j].y;
                let k = kernel_sq(dx * dx + dy * dy);
                e += k
                    * (self.weights[i][0] * self.weights[j][0]
                        + self.weights[i][1] * self.weights[j][1]);
            }
        }
        e
    }
}
