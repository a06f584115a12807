use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{lattice, Point2};
use crate::warp::{tps_fit, TpsModel};

/// Largest bending angle `L/R` of the curl; keeps `cos` bounded away from zero.
const MAX_CURL_ANGLE: f64 = 1.2;
/// Upper bound on the vertical perspective gain of the curled strip.
const CURL_DEPTH_GAIN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Identity,
    /// Rigid shift by `(dx, dy)`; amplitude and frequency are ignored.
    Translation {
        dx: f64,
        dy: f64,
    },
    Perspective,
    FoldSine,
    CurlCylinder,
    TpsRandom,
    /// Perspective after fold after curl, each at a third of the amplitude.
    Composite,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Identity => "identity",
            Family::Translation { .. } => "translation",
            Family::Perspective => "perspective",
            Family::FoldSine => "fold-sine",
            Family::CurlCylinder => "curl-cylinder",
            Family::TpsRandom => "tps-random",
            Family::Composite => "composite",
        }
    }
}

/// Seeded description of a synthetic page deformation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeformationSpec {
    pub family: Family,
    /// Displacement bound in normalized units.
    pub amplitude: f64,
    /// Cycles per unit for the sine families.
    pub frequency: f64,
    pub seed: u64,
    /// Margin on each side into which the deformed page is shrunk, leaving
    /// room for background.
    pub inset: f64,
}

impl DeformationSpec {
    pub fn new(family: Family, amplitude: f64, seed: u64) -> Self {
        Self {
            family,
            amplitude,
            frequency: 1.0,
            seed,
            inset: 0.0,
        }
    }

    pub fn identity() -> Self {
        Self::new(Family::Identity, 0.0, 0)
    }

    pub fn with_frequency(mut self, frequency: f64) -> Self {
        self.frequency = frequency;
        self
    }

    pub fn with_inset(mut self, inset: f64) -> Self {
        self.inset = inset;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return bad(format!(
                "amplitude must be finite and >= 0, got {}",
                self.amplitude
            ));
        }
        if !(self.frequency > 0.0 && self.frequency.is_finite()) {
            return bad(format!("frequency must be > 0, got {}", self.frequency));
        }
        if !(0.0..0.25).contains(&self.inset) {
            return bad(format!("inset must lie in [0, 0.25), got {}", self.inset));
        }
        if matches!(self.family, Family::FoldSine | Family::Composite)
            && self.amplitude * TAU * self.frequency >= 1.0
        {
            return bad(format!(
                "amplitude*2*pi*frequency must be < 1, got {}",
                self.amplitude * TAU * self.frequency
            ));
        }
        if let Family::Translation { dx, dy } = self.family {
            if !(dx.is_finite() && dy.is_finite()) {
                return Err(Error::NonFinite("translation"));
            }
        }
        Ok(())
    }
}

type Jac = [[f64; 2]; 2];

const ID: Jac = [[1.0, 0.0], [0.0, 1.0]];

fn mat_mul(a: Jac, b: Jac) -> Jac {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

#[derive(Debug, Clone, PartialEq)]
enum Stage {
    Translate(f64, f64),
    /// `x' = (a u + b v + c)/(g u + h v + 1)`, `y' = (d u + e v + f)/(…)`.
    Homography([f64; 8]),
    Fold {
        amp: f64,
        k: f64,
        dir: Point2,
        phase: f64,
    },
    Curl {
        start: f64,
        radius: f64,
        /// Vertical perspective gain of the curled strip.
        gain: f64,
        mirrored: bool,
    },
    Tps {
        shift: TpsModel,
        height: TpsModel,
    },
}

impl Stage {
    /// Image point, Jacobian and height contribution at `p`.
    fn eval(&self, p: Point2) -> (Point2, Jac, f64) {
        match self {
            Stage::Translate(dx, dy) => (Point2::new(p.x + dx, p.y + dy), ID, 0.0),
            Stage::Homography([a, b, c, d, e, f, g, h]) => {
                let w = g * p.x + h * p.y + 1.0;
                let x = (a * p.x + b * p.y + c) / w;
                let y = (d * p.x + e * p.y + f) / w;
                let j = [
                    [(a - g * x) / w, (b - h * x) / w],
                    [(d - g * y) / w, (e - h * y) / w],
                ];
                (Point2::new(x, y), j, w - 1.0)
            }
            Stage::Fold { amp, k, dir, phase } => {
                let arg = k * (p.x * dir.x + p.y * dir.y) + phase;
                let (s, c) = arg.sin_cos();
                let gain = amp * k * c;
                let j = [
                    [1.0 + gain * dir.x * dir.x, gain * dir.x * dir.y],
                    [gain * dir.y * dir.x, 1.0 + gain * dir.y * dir.y],
                ];
                (
                    Point2::new(p.x + amp * s * dir.x, p.y + amp * s * dir.y),
                    j,
                    amp * c,
                )
            }
            Stage::Curl {
                start,
                radius,
                gain,
                mirrored,
            } => {
                let (xm, sign) = if *mirrored {
                    (1.0 - p.x, -1.0)
                } else {
                    (p.x, 1.0)
                };
                let t = xm - start;
                if t <= 0.0 {
                    return (p, ID, 0.0);
                }
                let (s, c) = (t / radius).sin_cos();
                let z = radius * (1.0 - c);
                let xr = start + radius * s;
                let dy = p.y - 0.5;
                let y = p.y + gain * z * dy;
                let x = if *mirrored { 1.0 - xr } else { xr };
                let j = [[c, 0.0], [sign * gain * s * dy, 1.0 + gain * z]];
                (Point2::new(x, y), j, z)
            }
            Stage::Tps { shift, height } => (shift.eval(p), shift.jacobian(p), height.eval(p).x),
        }
    }
}

/// Analytic forward map from the flat page to the warped frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Deformation {
    /// Applied first to last.
    stages: Vec<Stage>,
    inset: f64,
}

impl Deformation {
    /// Warped position, Jacobian and surface height at flat point `u`.
    pub fn eval_full(&self, u: Point2) -> (Point2, [[f64; 2]; 2], f64) {
        let (mut p, mut j, mut z) = (u, ID, 0.0);
        for stage in &self.stages {
            let (q, js, zs) = stage.eval(p);
            j = mat_mul(js, j);
            z += zs;
            p = q;
        }
        let s = 1.0 - 2.0 * self.inset;
        let out = Point2::new(self.inset + s * p.x, self.inset + s * p.y);
        let j = [[s * j[0][0], s * j[0][1]], [s * j[1][0], s * j[1][1]]];
        (out, j, z)
    }

    pub fn apply(&self, u: Point2) -> Point2 {
        self.eval_full(u).0
    }

    pub fn jacobian(&self, u: Point2) -> [[f64; 2]; 2] {
        self.eval_full(u).1
    }

    pub fn height(&self, u: Point2) -> f64 {
        self.eval_full(u).2
    }

    pub fn jacobian_det(&self, u: Point2) -> f64 {
        let j = self.jacobian(u);
        j[0][0] * j[1][1] - j[0][1] * j[1][0]
    }
}

/// Unit square corners `(0,0), (1,0), (1,1), (0,1)` to the quad `q`.
fn square_to_quad(q: [Point2; 4]) -> [f64; 8] {
    let dx1 = q[1].x - q[2].x;
    let dx2 = q[3].x - q[2].x;
    let dx3 = q[0].x - q[1].x + q[2].x - q[3].x;
    let dy1 = q[1].y - q[2].y;
    let dy2 = q[3].y - q[2].y;
    let dy3 = q[0].y - q[1].y + q[2].y - q[3].y;
    let den = dx1 * dy2 - dx2 * dy1;
    let g = (dx3 * dy2 - dx2 * dy3) / den;
    let h = (dx1 * dy3 - dx3 * dy1) / den;
    [
        q[1].x - q[0].x + g * q[1].x,
        q[3].x - q[0].x + h * q[3].x,
        q[0].x,
        q[1].y - q[0].y + g * q[1].y,
        q[3].y - q[0].y + h * q[3].y,
        q[0].y,
        g,
        h,
    ]
}

fn perspective(amp: f64, rng: &mut ChaCha8Rng) -> Stage {
    let mut jitter = |p: Point2| {
        Point2::new(
            p.x + rng.gen_range(-amp..=amp),
            p.y + rng.gen_range(-amp..=amp),
        )
    };
    let quad = [
        jitter(Point2::new(0.0, 0.0)),
        jitter(Point2::new(1.0, 0.0)),
        jitter(Point2::new(1.0, 1.0)),
        jitter(Point2::new(0.0, 1.0)),
    ];
    Stage::Homography(square_to_quad(quad))
}

fn fold(amp: f64, frequency: f64, rng: &mut ChaCha8Rng) -> Stage {
    let psi = rng.gen_range(0.0..PI);
    Stage::Fold {
        amp,
        k: TAU * frequency,
        dir: Point2::new(psi.cos(), psi.sin()),
        phase: rng.gen_range(0.0..TAU),
    }
}

/// Radius whose curl of a strip of length `len` pulls the edge in by `amp`.
fn curl_radius(len: f64, amp: f64) -> Result<f64> {
    let pull = |r: f64| len - r * (len / r).sin();
    let mut lo = len / MAX_CURL_ANGLE;
    if pull(lo) < amp {
        return Err(Error::InvalidArgument(format!(
            "curl amplitude {amp} exceeds the attainable {:.4}",
            pull(lo)
        )));
    }
    let mut hi = 1e6;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if pull(mid) > amp {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn curl(amp: f64, rng: &mut ChaCha8Rng) -> Result<Stage> {
    let len = rng.gen_range(0.3..0.5);
    let mirrored = rng.gen_bool(0.5);
    let radius = curl_radius(len, amp)?;
    // Vertical shift at the page edge stays within half the amplitude.
    let z_edge = radius * (1.0 - (len / radius).cos());
    Ok(Stage::Curl {
        start: 1.0 - len,
        radius,
        gain: CURL_DEPTH_GAIN.min(amp / z_edge),
        mirrored,
    })
}

fn tps_random(amp: f64, rng: &mut ChaCha8Rng) -> Result<Stage> {
    let sites = lattice(4, 4);
    let moved: Vec<Point2> = sites
        .iter()
        .map(|p| {
            Point2::new(
                p.x + rng.gen_range(-amp..=amp),
                p.y + rng.gen_range(-amp..=amp),
            )
        })
        .collect();
    let heights: Vec<Point2> = sites
        .iter()
        .map(|_| Point2::new(rng.gen_range(-amp..=amp), 0.0))
        .collect();
    Ok(Stage::Tps {
        shift: tps_fit(&sites, &moved, 0.0)?,
        height: tps_fit(&sites, &heights, 0.0)?,
    })
}

/// Builds the forward map described by `spec`.
pub fn gen_deformation(spec: &DeformationSpec) -> Result<Deformation> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let a = spec.amplitude;
    let stages = if a == 0.0 && !matches!(spec.family, Family::Translation { .. }) {
        Vec::new()
    } else {
        match spec.family {
            Family::Identity => Vec::new(),
            Family::Translation { dx, dy } => vec![Stage::Translate(dx, dy)],
            Family::Perspective => vec![perspective(a, &mut rng)],
            Family::FoldSine => vec![fold(a, spec.frequency, &mut rng)],
            Family::CurlCylinder => vec![curl(a, &mut rng)?],
            Family::TpsRandom => vec![tps_random(a, &mut rng)?],
            Family::Composite => {
                let third = a / 3.0;
                vec![
                    curl(third, &mut rng)?,
                    fold(third, spec.frequency, &mut rng),
                    perspective(third, &mut rng),
                ]
            }
        }
    };
    Ok(Deformation {
        stages,
        inset: spec.inset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn all_families() -> [Family; 5] {
        [
            Family::Perspective,
            Family::FoldSine,
            Family::CurlCylinder,
            Family::TpsRandom,
            Family::Composite,
        ]
    }

    #[test]
    fn zero_amplitude_is_identity() {
        for fam in all_families() {
            let d = gen_deformation(&DeformationSpec::new(fam, 0.0, 3)).unwrap();
            let p = Point2::new(0.3, 0.8);
            assert_eq!(d.apply(p), p);
            assert_eq!(d.jacobian(p), ID);
        }
    }

    #[test]
    fn fold_along_x_matches_formula() {
        let a = 0.04;
        let f = 1.5;
        let d = Deformation {
            stages: vec![Stage::Fold {
                amp: a,
                k: TAU * f,
                dir: Point2::new(1.0, 0.0),
                phase: 0.3,
            }],
            inset: 0.0,
        };
        for &(x, y) in &[(0.1, 0.2), (0.5, 0.9), (0.87, 0.4)] {
            let p = d.apply(Point2::new(x, y));
            assert!((p.x - (x + a * (TAU * f * x + 0.3).sin())).abs() < 1e-15);
            assert_eq!(p.y, y);
            let det = d.jacobian_det(Point2::new(x, y));
            assert!((det - (1.0 + TAU * f * a * (TAU * f * x + 0.3).cos())).abs() < 1e-14);
            assert!(det > 0.0);
        }
    }

    #[test]
    fn sine_bound_enforced() {
        let spec = DeformationSpec::new(Family::FoldSine, 0.2, 1);
        assert!(gen_deformation(&spec).is_err());
        assert!(gen_deformation(
            &DeformationSpec::new(Family::Composite, 0.1, 1).with_frequency(2.0)
        )
        .is_err());
        assert!(gen_deformation(&DeformationSpec::new(Family::FoldSine, -0.1, 1)).is_err());
    }

    #[test]
    fn homography_hits_corners() {
        let quad = [
            Point2::new(0.02, -0.01),
            Point2::new(0.97, 0.03),
            Point2::new(1.01, 0.98),
            Point2::new(-0.03, 1.02),
        ];
        let d = Deformation {
            stages: vec![Stage::Homography(square_to_quad(quad))],
            inset: 0.0,
        };
        for (u, q) in [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
            .iter()
            .zip(quad)
        {
            let p = d.apply(Point2::new(u.0, u.1));
            assert!(p.distance(q) < 1e-12);
        }
    }

    #[test]
    fn curl_edge_pull_equals_amplitude() {
        let r = curl_radius(0.4, 0.03).unwrap();
        assert!((0.4 - r * (0.4 / r).sin() - 0.03).abs() < 1e-12);
        assert!(curl_radius(0.3, 0.2).is_err());
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let h = 1e-6;
        for (k, fam) in all_families().into_iter().enumerate() {
            let d = gen_deformation(&DeformationSpec::new(fam, 0.05, k as u64).with_inset(0.08))
                .unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(50 + k as u64);
            for _ in 0..50 {
                let u = Point2::new(rng.gen(), rng.gen());
                let j = d.jacobian(u);
                let px = d.apply(Point2::new(u.x + h, u.y));
                let mx = d.apply(Point2::new(u.x - h, u.y));
                let py = d.apply(Point2::new(u.x, u.y + h));
                let my = d.apply(Point2::new(u.x, u.y - h));
                let fd = [
                    [(px.x - mx.x) / (2.0 * h), (py.x - my.x) / (2.0 * h)],
                    [(px.y - mx.y) / (2.0 * h), (py.y - my.y) / (2.0 * h)],
                ];
                for r in 0..2 {
                    for c in 0..2 {
                        assert!((j[r][c] - fd[r][c]).abs() < 1e-6, "{} {r}{c}", fam.name());
                    }
                }
            }
        }
    }

    #[test]
    fn random_composite_is_orientation_preserving() {
        let d = gen_deformation(&DeformationSpec::new(Family::Composite, 0.05, 99)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        let min_det = (0..10_000)
            .map(|_| d.jacobian_det(Point2::new(rng.gen(), rng.gen())))
            .fold(f64::INFINITY, f64::min);
        assert!(min_det > 0.0, "{min_det}");
    }

    #[test]
    fn seed_determines_deformation() {
        let spec = DeformationSpec::new(Family::Composite, 0.05, 5);
        assert_eq!(
            gen_deformation(&spec).unwrap(),
            gen_deformation(&spec).unwrap()
        );
        let other = DeformationSpec { seed: 6, ..spec };
        assert_ne!(
            gen_deformation(&spec).unwrap(),
            gen_deformation(&other).unwrap()
        );
    }

    proptest! {
        #[test]
        fn displacement_bounded(seed in 0u64..200, fam_idx in 0usize..5, amp in 0.0f64..0.05) {
            let fam = all_families()[fam_idx];
            let d = gen_deformation(&DeformationSpec::new(fam, amp, seed)).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..50 {
                let u = Point2::new(rng.gen(), rng.gen());
                prop_assert!(d.apply(u).distance(u) <= 3.0 * amp + 1e-12);
                prop_assert!(d.jacobian_det(u) > 0.0);
            }
        }
    }
}
