use crate::geometry::Point2;

pub const DEFAULT_INVERT_TOL: f64 = 1e-6;
pub const DEFAULT_INVERT_MAX_ITER: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inversion {
    pub point: Point2,
    /// Number of forward-map evaluations.
    pub iterations: usize,
    pub converged: bool,
}

/// Solves `F(x) = query` by the damped fixed-point iteration
/// `x ← x − ½(F(x) − query)`, starting from `query`.
///
/// Converges for maps `F = id + d` whose displacement `d` has Lipschitz
/// constant below one.
pub fn invert_deformation<F>(forward: F, query: Point2, tol: f64, max_iter: usize) -> Inversion
where
    F: Fn(Point2) -> Point2,
{
    let mut x = query;
    for it in 1..=max_iter.max(1) {
        let f = forward(x);
        let (rx, ry) = (f.x - query.x, f.y - query.y);
        if rx.hypot(ry) < tol {
            return Inversion {
                point: x,
                iterations: it,
                converged: true,
            };
        }
        x = Point2::new(x.x - 0.5 * rx, x.y - 0.5 * ry);
        if !x.is_finite() {
            break;
        }
    }
    let f = forward(x);
    Inversion {
        point: x,
        iterations: max_iter,
        converged: (f.x - query.x).hypot(f.y - query.y) < tol,
    }
}
