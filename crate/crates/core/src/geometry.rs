//! Cartesian and Polar forms of control points.
//!
//! Coordinates are normalized image coordinates (`x` grows with the column,
//! `y` with the row). Angles are measured counterclockwise from `+x` in these
//! raw coordinates, without flipping the image `y` axis.

use std::f64::consts::TAU;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PolarCoord {
    /// Angle in `[0, 2π)`.
    pub theta: f64,
    /// Non-negative radius.
    pub rho: f64,
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Wraps an angle difference into `(-π, π]`.
pub fn wrap_difference(d: f64) -> f64 {
    use std::f64::consts::PI;
    let t = (d + PI).rem_euclid(TAU) - PI;
    if t <= -PI {
        t + TAU
    } else {
        t
    }
}

pub fn to_polar(p: Point2, origin: Point2) -> PolarCoord {
    let dx = p.x - origin.x;
    let dy = p.y - origin.y;
    let rho = dx.hypot(dy);
    if rho == 0.0 {
        return PolarCoord::default();
    }
    PolarCoord {
        theta: wrap_angle(dy.atan2(dx)),
        rho,
    }
}

pub fn from_polar(pc: PolarCoord, origin: Point2) -> Point2 {
    let (s, c) = pc.theta.sin_cos();
    Point2::new(origin.x + pc.rho * c, origin.y + pc.rho * s)
}

/// One mapping point in its 4D form `(x, y, θ, ρ)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MappingPoint {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub rho: f64,
}

impl MappingPoint {
    pub fn xy(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn channel(&self, c: Channel) -> f64 {
        match c {
            Channel::X => self.x,
            Channel::Y => self.y,
            Channel::Theta => self.theta,
            Channel::Rho => self.rho,
        }
    }
}

/// A channel of the 4D mapping point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    X,
    Y,
    Theta,
    Rho,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::X, Channel::Y, Channel::Theta, Channel::Rho];
}

/// `h × w` mapping points sharing one Polar origin (the centroid).
///
/// Points are stored row-major: index `i * w + j` is row `i`, column `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingGrid {
    pub h: usize,
    pub w: usize,
    pub points: Vec<MappingPoint>,
    pub origin: Point2,
}

pub const MIN_GRID_SIDE: usize = 3;

/// Builds the 4D grid from Cartesian points: the origin is the centroid of all
/// points and every `(θ, ρ)` is measured from it.
pub fn augment_grid(h: usize, w: usize, xy: &[Point2]) -> Result<MappingGrid> {
    if h < MIN_GRID_SIDE || w < MIN_GRID_SIDE {
        return Err(Error::GridTooSmall {
            h,
            w,
            min: MIN_GRID_SIDE,
        });
    }
    if xy.len() != h * w {
        return Err(Error::ShapeMismatch(format!(
            "expected {} points for a {h}x{w} grid, got {}",
            h * w,
            xy.len()
        )));
    }
    if !xy.iter().all(Point2::is_finite) {
        return Err(Error::NonFinite("mapping grid coordinates"));
    }
    let n = xy.len() as f64;
    let origin = Point2::new(
        xy.iter().map(|p| p.x).sum::<f64>() / n,
        xy.iter().map(|p| p.y).sum::<f64>() / n,
    );
    let points = xy
        .iter()
        .map(|&p| {
            let pc = to_polar(p, origin);
            MappingPoint {
                x: p.x,
                y: p.y,
                theta: pc.theta,
                rho: pc.rho,
            }
        })
        .collect();
    Ok(MappingGrid {
        h,
        w,
        points,
        origin,
    })
}

/// Regular lattice on `[0,1]²`: column `j` at `x = j/(w-1)`, row `i` at `y = i/(h-1)`.
pub fn lattice(h: usize, w: usize) -> Vec<Point2> {
    let mut out = Vec::with_capacity(h * w);
    for i in 0..h {
        for j in 0..w {
            out.push(Point2::new(
                j as f64 / (w.max(2) - 1) as f64,
                i as f64 / (h.max(2) - 1) as f64,
            ));
        }
    }
    out
}

impl MappingGrid {
    pub fn from_xy(h: usize, w: usize, xy: &[Point2]) -> Result<Self> {
        augment_grid(h, w, xy)
    }

    /// Builds a grid from interleaved `[x0, y0, x1, y1, ...]`.
    pub fn from_flat(h: usize, w: usize, flat: &[f64]) -> Result<Self> {
        if flat.len() != 2 * h * w {
            return Err(Error::ShapeMismatch(format!(
                "expected {} coordinates, got {}",
                2 * h * w,
                flat.len()
            )));
        }
        let xy: Vec<Point2> = flat
            .chunks_exact(2)
            .map(|c| Point2::new(c[0], c[1]))
            .collect();
        augment_grid(h, w, &xy)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.w + j
    }

    pub fn at(&self, i: usize, j: usize) -> &MappingPoint {
        &self.points[self.index(i, j)]
    }

    pub fn xy(&self) -> Vec<Point2> {
        self.points.iter().map(MappingPoint::xy).collect()
    }

    /// Interleaved `[x0, y0, x1, y1, ...]`.
    pub fn xy_flat(&self) -> Vec<f64> {
        self.points.iter().flat_map(|p| [p.x, p.y]).collect()
    }

    pub fn same_shape(&self, other: &MappingGrid) -> bool {
        self.h == other.h && self.w == other.w
    }

    /// Largest deviation of the stored `(θ, ρ)` from the values implied by `(x, y)`.
    pub fn polar_consistency_error(&self) -> f64 {
        self.points
            .iter()
            .map(|p| {
                let pc = to_polar(p.xy(), self.origin);
                let dt = if pc.rho == 0.0 {
                    0.0
                } else {
                    wrap_difference(pc.theta - p.theta).abs()
                };
                dt.max((pc.rho - p.rho).abs())
            })
            .fold(0.0, f64::max)
    }
}

/// Grid indices of the peeled rings, outermost first.
///
/// Ring `k` is the boundary of the subgrid left after removing `k` outer rings.
/// Each ring starts at its top-left corner and runs with increasing polar
/// angle in raw coordinates (along the top row, down the right column, back
/// along the bottom row, up the left column).
pub fn grid_ring_indices(h: usize, w: usize) -> Vec<Vec<usize>> {
    let count = h.min(w).div_ceil(2);
    let mut rings = Vec::with_capacity(count);
    for k in 0..count {
        let (r0, r1, c0, c1) = (k, h - 1 - k, k, w - 1 - k);
        let idx = |i: usize, j: usize| i * w + j;
        let mut ring = Vec::new();
        if r0 == r1 {
            ring.extend((c0..=c1).map(|j| idx(r0, j)));
        } else if c0 == c1 {
            ring.extend((r0..=r1).map(|i| idx(i, c0)));
        } else {
            ring.extend((c0..=c1).map(|j| idx(r0, j)));
            ring.extend((r0 + 1..=r1).map(|i| idx(i, c1)));
            ring.extend((c0..c1).rev().map(|j| idx(r1, j)));
            ring.extend((r0 + 1..r1).rev().map(|i| idx(i, c0)));
        }
        rings.push(ring);
    }
    rings
}

/// The peeled rings of a grid as closed polylines, outermost first.
pub fn grid_rings(grid: &MappingGrid) -> Vec<Vec<Point2>> {
    grid_ring_indices(grid.h, grid.w)
        .into_iter()
        .map(|ring| ring.into_iter().map(|i| grid.points[i].xy()).collect())
        .collect()
}

fn cross(ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    ax * by - ay * bx
}

/// Winding number of the closed polygon around `p`.
pub fn winding_number(polygon: &[Point2], p: Point2) -> i32 {
    let n = polygon.len();
    let mut wn = 0;
    for k in 0..n {
        let a = polygon[k];
        let b = polygon[(k + 1) % n];
        let side = cross(b.x - a.x, b.y - a.y, p.x - a.x, p.y - a.y);
        if a.y <= p.y {
            if b.y > p.y && side > 0.0 {
                wn += 1;
            }
        } else if b.y <= p.y && side < 0.0 {
            wn -= 1;
        }
    }
    wn
}

/// Distance from `origin` to the farthest crossing of the ray at `angle` with
/// the closed polygon, or `None` when the ray misses every edge.
pub fn ray_farthest_hit(polygon: &[Point2], origin: Point2, angle: f64) -> Option<f64> {
    const SEG_TOL: f64 = 1e-12;
    let (dy, dx) = angle.sin_cos();
    let n = polygon.len();
    let mut best: Option<f64> = None;
    for k in 0..n {
        let p = polygon[k];
        let q = polygon[(k + 1) % n];
        let (ex, ey) = (q.x - p.x, q.y - p.y);
        let denom = cross(dx, dy, ex, ey);
        if denom.abs() < 1e-300 {
            continue;
        }
        let (ox, oy) = (p.x - origin.x, p.y - origin.y);
        let t = cross(ox, oy, ex, ey) / denom;
        let s = cross(ox, oy, dx, dy) / denom;
        if t >= 0.0 && (-SEG_TOL..=1.0 + SEG_TOL).contains(&s) {
            best = Some(best.map_or(t, |b: f64| b.max(t)));
        }
    }
    best
}

/// Equal-angle radii of a closed polygon: radius `k` is the distance to the
/// farthest boundary crossing of the ray at angle `k·2π/b`.
pub fn contour_resample(ring: &[Point2], origin: Point2, b: usize) -> Result<Vec<f64>> {
    if b == 0 {
        return Err(Error::InvalidArgument(
            "contour point count must be positive".into(),
        ));
    }
    if ring.len() < 3 || winding_number(ring, origin) == 0 {
        return Err(Error::OriginNotEnclosed);
    }
    (0..b)
        .map(|k| {
            let angle = k as f64 * TAU / b as f64;
            ray_farthest_hit(ring, origin, angle).ok_or(Error::RayMiss { angle })
        })
        .collect()
}

/// `a` layers of `b` equal-angle radii sharing one origin. Layer 0 is outermost.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourSet {
    pub a: usize,
    pub b: usize,
    /// Row-major `a × b`.
    pub radii: Vec<f64>,
    pub origin: Point2,
}

impl ContourSet {
    pub fn new(a: usize, b: usize, radii: Vec<f64>, origin: Point2) -> Result<Self> {
        if a == 0 || b == 0 {
            return Err(Error::InvalidArgument("contour set needs a,b >= 1".into()));
        }
        if radii.len() != a * b {
            return Err(Error::ShapeMismatch(format!(
                "expected {} radii, got {}",
                a * b,
                radii.len()
            )));
        }
        if let Some((index, &value)) = radii
            .iter()
            .enumerate()
            .find(|(_, r)| !r.is_finite() || **r < 0.0)
        {
            if !value.is_finite() {
                return Err(Error::NonFinite("contour radii"));
            }
            return Err(Error::NonPositiveRadius { index, value });
        }
        Ok(Self {
            a,
            b,
            radii,
            origin,
        })
    }

    pub fn delta_theta(&self) -> f64 {
        TAU / self.b as f64
    }

    pub fn layer(&self, l: usize) -> &[f64] {
        &self.radii[l * self.b..(l + 1) * self.b]
    }

    pub fn outermost(&self) -> &[f64] {
        self.layer(0)
    }

    /// Cartesian positions of one layer's contour points.
    pub fn layer_points(&self, l: usize) -> Vec<Point2> {
        let dt = self.delta_theta();
        self.layer(l)
            .iter()
            .enumerate()
            .map(|(k, &rho)| {
                from_polar(
                    PolarCoord {
                        theta: k as f64 * dt,
                        rho,
                    },
                    self.origin,
                )
            })
            .collect()
    }
}

/// Contour targets of a grid: the `a` outermost peeled rings, each resampled
/// at `b` equal angles around the grid origin.
pub fn contour_set(grid: &MappingGrid, a: usize, b: usize) -> Result<ContourSet> {
    let rings = grid_rings(grid);
    if a == 0 || a > rings.len() {
        return Err(Error::InvalidArgument(format!(
            "requested {a} contour layers, grid has {} rings",
            rings.len()
        )));
    }
    let mut radii = Vec::with_capacity(a * b);
    for ring in rings.iter().take(a) {
        radii.extend(contour_resample(ring, grid.origin, b)?);
    }
    ContourSet::new(a, b, radii, grid.origin)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EdgeLengths {
    pub left: f64,
    pub right: f64,
    pub top: f64,
    pub bottom: f64,
}

impl EdgeLengths {
    pub fn as_array(&self) -> [f64; 4] {
        [self.left, self.right, self.top, self.bottom]
    }
}

pub fn polyline_length(points: impl IntoIterator<Item = Point2>) -> f64 {
    let mut it = points.into_iter();
    let Some(mut prev) = it.next() else {
        return 0.0;
    };
    let mut len = 0.0;
    for p in it {
        len += prev.distance(p);
        prev = p;
    }
    len
}

/// Grid indices of the four document edges in `[left, right, top, bottom]` order.
pub fn edge_indices(h: usize, w: usize) -> [Vec<usize>; 4] {
    [
        (0..h).map(|i| i * w).collect(),
        (0..h).map(|i| i * w + w - 1).collect(),
        (0..w).collect(),
        (0..w).map(|j| (h - 1) * w + j).collect(),
    ]
}

pub fn edge_lengths(grid: &MappingGrid) -> EdgeLengths {
    let [l, r, t, b] = edge_indices(grid.h, grid.w)
        .map(|idx| polyline_length(idx.into_iter().map(|i| grid.points[i].xy())));
    EdgeLengths {
        left: l,
        right: r,
        top: t,
        bottom: b,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

    #[test]
    fn polar_axis_cases() {
        let o = Point2::new(0.0, 0.0);
        let p = to_polar(Point2::new(1.0, 0.0), o);
        assert_eq!((p.theta, p.rho), (0.0, 1.0));
        let p = to_polar(Point2::new(0.0, 1.0), o);
        assert_abs_diff_eq!(p.theta, FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(p.rho, 1.0, epsilon = 1e-15);
        let p = to_polar(Point2::new(-1.0, -1.0), o);
        assert_abs_diff_eq!(p.theta, 5.0 * PI / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.rho, SQRT_2, epsilon = 1e-15);
        assert_eq!(to_polar(o, o), PolarCoord::default());
    }

    #[test]
    fn from_polar_cases() {
        let p = from_polar(
            PolarCoord {
                theta: 0.0,
                rho: 1.0,
            },
            Point2::default(),
        );
        assert_eq!(p, Point2::new(1.0, 0.0));
        let p = from_polar(
            PolarCoord {
                theta: PI,
                rho: 2.0,
            },
            Point2::new(0.5, 0.5),
        );
        assert_abs_diff_eq!(p.x, -1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.y, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn polar_round_trip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let o = Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let pc = PolarCoord {
                theta: rng.gen_range(0.0..TAU),
                rho: rng.gen_range(1e-3..2.0),
            };
            let back = to_polar(from_polar(pc, o), o);
            worst = worst
                .max(wrap_difference(back.theta - pc.theta).abs())
                .max((back.rho - pc.rho).abs());
        }
        assert!(worst < 1e-9, "worst round-trip error {worst}");
    }

    #[test]
    fn wrap_never_returns_tau() {
        assert_eq!(wrap_angle(-1e-18), 0.0);
        assert!(wrap_angle(-1e-10) < TAU);
        assert_abs_diff_eq!(wrap_difference(0.1 - (TAU - 0.1)), 0.2, epsilon = 1e-12);
        assert_eq!(wrap_difference(PI), PI);
        assert_eq!(wrap_difference(-PI), PI);
    }

    #[test]
    fn augment_unit_lattice() {
        let g = augment_grid(3, 3, &lattice(3, 3)).unwrap();
        assert_abs_diff_eq!(g.origin.x, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(g.origin.y, 0.5, epsilon = 1e-15);
        assert_eq!(g.at(1, 1).rho, 0.0);
        assert_abs_diff_eq!(g.at(0, 0).rho, SQRT_2 * 0.5, epsilon = 1e-15);
        assert!(g.polar_consistency_error() < 1e-12);
    }

    #[test]
    fn augment_rejects_bad_input() {
        assert!(matches!(
            augment_grid(2, 3, &lattice(2, 3)),
            Err(Error::GridTooSmall { .. })
        ));
        let mut xy = lattice(3, 3);
        xy[4].x = f64::NAN;
        assert!(matches!(augment_grid(3, 3, &xy), Err(Error::NonFinite(_))));
        assert!(matches!(
            augment_grid(3, 3, &xy[..8]),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn augment_rho_matches_brute_force_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xy: Vec<Point2> = (0..25).map(|_| Point2::new(rng.gen(), rng.gen())).collect();
        let g = augment_grid(5, 5, &xy).unwrap();
        let (mut sx, mut sy) = (0.0, 0.0);
        for p in &xy {
            sx += p.x;
            sy += p.y;
        }
        let (cx, cy) = (sx / 25.0, sy / 25.0);
        for (p, m) in xy.iter().zip(&g.points) {
            let d = ((p.x - cx).powi(2) + (p.y - cy).powi(2)).sqrt();
            assert_abs_diff_eq!(m.rho, d, epsilon = 1e-12);
        }
    }

    #[test]
    fn ring_sizes() {
        let sizes = |h, w| {
            grid_ring_indices(h, w)
                .iter()
                .map(Vec::len)
                .collect::<Vec<_>>()
        };
        assert_eq!(sizes(5, 5), vec![16, 8, 1]);
        assert_eq!(sizes(4, 4), vec![12, 4]);
        assert_eq!(sizes(3, 7), vec![16, 5]);
        assert_eq!(sizes(7, 3), vec![16, 5]);
    }

    #[test]
    fn hand_enumerated_3x7_rings() {
        // Outer boundary of the 3x7 grid, then the middle row 1, columns 1..=5.
        let rings = grid_ring_indices(3, 7);
        assert_eq!(
            rings[0],
            vec![0, 1, 2, 3, 4, 5, 6, 13, 20, 19, 18, 17, 16, 15, 14, 7]
        );
        assert_eq!(rings[1], vec![8, 9, 10, 11, 12]);
    }

    #[test]
    fn rings_run_with_increasing_angle() {
        let g = augment_grid(6, 6, &lattice(6, 6)).unwrap();
        let ring = &grid_rings(&g)[0];
        let mut area = 0.0;
        for k in 0..ring.len() {
            let a = ring[k];
            let b = ring[(k + 1) % ring.len()];
            area += a.x * b.y - b.x * a.y;
        }
        assert!(area > 0.0);
        assert_eq!(grid_ring_indices(6, 6)[0][0], 0);
    }

    fn unit_square() -> Vec<Point2> {
        vec![
            Point2::new(-0.5, -0.5),
            Point2::new(0.5, -0.5),
            Point2::new(0.5, 0.5),
            Point2::new(-0.5, 0.5),
        ]
    }

    #[test]
    fn square_resample() {
        let r = contour_resample(&unit_square(), Point2::default(), 4).unwrap();
        for v in r {
            assert_abs_diff_eq!(v, 0.5, epsilon = 1e-12);
        }
        let r = contour_resample(&unit_square(), Point2::default(), 8).unwrap();
        for (k, v) in r.iter().enumerate() {
            let want = if k % 2 == 0 { 0.5 } else { 0.5 * SQRT_2 };
            assert_abs_diff_eq!(*v, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn resample_errors() {
        assert_eq!(
            contour_resample(&unit_square(), Point2::new(3.0, 0.0), 8),
            Err(Error::OriginNotEnclosed)
        );
        assert_eq!(
            contour_resample(&unit_square()[..2], Point2::default(), 8),
            Err(Error::OriginNotEnclosed)
        );
    }

    /// Marches along the ray in fine steps and returns the last sample inside the polygon.
    fn ray_march(poly: &[Point2], o: Point2, angle: f64, max_r: f64, samples: usize) -> f64 {
        let (s, c) = angle.sin_cos();
        let step = max_r / samples as f64;
        let mut last_inside = 0.0;
        for k in 0..=samples {
            let t = k as f64 * step;
            if winding_number(poly, Point2::new(o.x + t * c, o.y + t * s)) != 0 {
                last_inside = t;
            }
        }
        last_inside
    }

    #[test]
    fn star_polygon_matches_ray_march_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let poly: Vec<Point2> = (0..16)
            .map(|k| {
                let a = k as f64 * TAU / 16.0;
                let r = rng.gen_range(0.3..1.0);
                Point2::new(r * a.cos(), r * a.sin())
            })
            .collect();
        let o = Point2::default();
        let radii = contour_resample(&poly, o, 64).unwrap();
        // 10^6 samples over a 1.0 ray length bounds the march error at 1e-6.
        for k in (0..64).step_by(4) {
            let angle = k as f64 * TAU / 64.0;
            let oracle = ray_march(&poly, o, angle, 1.0, 1_000_000);
            assert!(
                (radii[k] - oracle).abs() <= 1.01e-6,
                "angle {k}: {} vs {oracle}",
                radii[k]
            );
        }
    }

    #[test]
    fn non_star_takes_farthest_hit() {
        // A slot cut down from the top edge; the ray at angle 0 crosses x=0.5, 0.7 and 1.0.
        let poly = vec![
            Point2::new(-1.0, -1.0),
            Point2::new(1.0, -1.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.7, 1.0),
            Point2::new(0.7, -0.2),
            Point2::new(0.5, -0.2),
            Point2::new(0.5, 1.0),
            Point2::new(-1.0, 1.0),
        ];
        let r = contour_resample(&poly, Point2::default(), 4).unwrap();
        assert_abs_diff_eq!(r[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn edge_lengths_lattice() {
        let g = augment_grid(4, 5, &lattice(4, 5)).unwrap();
        let e = edge_lengths(&g);
        for v in e.as_array() {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
        }
        let scaled: Vec<Point2> = lattice(4, 5)
            .into_iter()
            .map(|p| Point2::new(2.0 * p.x, p.y))
            .collect();
        let e = edge_lengths(&augment_grid(4, 5, &scaled).unwrap());
        assert_abs_diff_eq!(e.top, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.bottom, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.left, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.right, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sinusoid_top_edge_matches_arc_length_quadrature() {
        let (h, w) = (4, 64);
        let amp = 0.03;
        let f = |x: f64| amp * (TAU * 2.0 * x).sin();
        let xy: Vec<Point2> = lattice(h, w)
            .into_iter()
            .map(|p| {
                if p.y == 0.0 {
                    Point2::new(p.x, f(p.x))
                } else {
                    p
                }
            })
            .collect();
        let e = edge_lengths(&augment_grid(h, w, &xy).unwrap());
        // Composite Simpson on sqrt(1 + f'(x)^2).
        let n = 20_000;
        let df = |x: f64| amp * TAU * 2.0 * (TAU * 2.0 * x).cos();
        let g = |x: f64| (1.0 + df(x).powi(2)).sqrt();
        let hstep = 1.0 / n as f64;
        let mut s = g(0.0) + g(1.0);
        for k in 1..n {
            let x = k as f64 * hstep;
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * g(x);
        }
        let arc = s * hstep / 3.0;
        assert!((e.top - arc).abs() / arc < 0.01, "{} vs {arc}", e.top);
    }

    #[test]
    fn contour_set_of_lattice_is_rectangular() {
        let g = augment_grid(4, 4, &lattice(4, 4)).unwrap();
        let c = contour_set(&g, 2, 4).unwrap();
        assert_eq!(c.outermost().len(), 4);
        for v in c.outermost() {
            assert_abs_diff_eq!(*v, 0.5, epsilon = 1e-12);
        }
        for v in c.layer(1) {
            assert_abs_diff_eq!(*v, 1.0 / 6.0, epsilon = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn origin_is_translation_equivariant(seed in 0u64..1000, tx in -2.0f64..2.0, ty in -2.0f64..2.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let xy: Vec<Point2> = (0..20).map(|_| Point2::new(rng.gen(), rng.gen())).collect();
            let moved: Vec<Point2> = xy.iter().map(|p| Point2::new(p.x + tx, p.y + ty)).collect();
            let a = augment_grid(4, 5, &xy).unwrap();
            let b = augment_grid(4, 5, &moved).unwrap();
            prop_assert!((b.origin.x - a.origin.x - tx).abs() < 1e-9);
            prop_assert!((b.origin.y - a.origin.y - ty).abs() < 1e-9);
            for (p, q) in a.points.iter().zip(&b.points) {
                prop_assert!((p.rho - q.rho).abs() < 1e-9);
                prop_assert!(wrap_difference(p.theta - q.theta).abs() < 1e-6);
            }
        }

        #[test]
        fn rings_partition_grid(h in 3usize..12, w in 3usize..12) {
            let rings = grid_ring_indices(h, w);
            prop_assert_eq!(rings.len(), h.min(w).div_ceil(2));
            let mut seen = vec![0u32; h * w];
            for r in &rings {
                for &i in r {
                    seen[i] += 1;
                }
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
        }

        #[test]
        fn circle_resamples_to_constant(r in 0.05f64..3.0, b in 3usize..128) {
            let poly: Vec<Point2> = (0..4096)
                .map(|k| {
                    let a = k as f64 * TAU / 4096.0;
                    Point2::new(r * a.cos(), r * a.sin())
                })
                .collect();
            let radii = contour_resample(&poly, Point2::default(), b).unwrap();
            // Chord sag of a 4096-gon is r(1 - cos(π/4096)) < 3e-7 r.
            for v in radii {
                prop_assert!((v - r).abs() <= 3e-7 * r + 1e-12);
            }
        }

        #[test]
        fn edge_lengths_rotation_invariant(seed in 0u64..1000, angle in 0.0f64..TAU) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let xy: Vec<Point2> = (0..20).map(|_| Point2::new(rng.gen(), rng.gen())).collect();
            let (s, c) = angle.sin_cos();
            let rot: Vec<Point2> = xy.iter().map(|p| Point2::new(c * p.x - s * p.y, s * p.x + c * p.y)).collect();
            let a = edge_lengths(&augment_grid(4, 5, &xy).unwrap());
            let b = edge_lengths(&augment_grid(4, 5, &rot).unwrap());
            for (u, v) in a.as_array().iter().zip(b.as_array()) {
                prop_assert!((u - v).abs() < 1e-9);
            }
        }
    }
}
