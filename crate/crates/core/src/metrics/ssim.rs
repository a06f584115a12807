use crate::error::{Error, Result};
use crate::image::ImageBuffer;

pub const MS_SSIM_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];
const WINDOW: usize = 11;
const SIGMA: f64 = 1.5;
const C1: f64 = 0.01 * 0.01;
const C2: f64 = 0.03 * 0.03;

/// Smallest side that leaves an 11-tap window at the fifth scale.
pub const MS_SSIM_MIN_SIDE: usize = WINDOW << 4;

fn gaussian_taps() -> [f64; WINDOW] {
    let mut taps = [0.0; WINDOW];
    let half = (WINDOW / 2) as f64;
    for (i, t) in taps.iter_mut().enumerate() {
        let d = i as f64 - half;
        *t = (-d * d / (2.0 * SIGMA * SIGMA)).exp();
    }
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Single-channel plane.
#[derive(Clone)]
struct Plane {
    h: usize,
    w: usize,
    v: Vec<f64>,
}

impl Plane {
    fn channel(img: &ImageBuffer, ch: usize) -> Self {
        Plane {
            h: img.height,
            w: img.width,
            v: (0..img.height * img.width)
                .map(|i| img.data[i * img.channels + ch])
                .collect(),
        }
    }

    fn map2(&self, other: &Plane, f: impl Fn(f64, f64) -> f64) -> Plane {
        Plane {
            h: self.h,
            w: self.w,
            v: self
                .v
                .iter()
                .zip(&other.v)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Separable Gaussian filter over the valid region.
    fn blur(&self, taps: &[f64; WINDOW]) -> Plane {
        let ow = self.w - WINDOW + 1;
        let oh = self.h - WINDOW + 1;
        let mut horiz = vec![0.0; self.h * ow];
        for r in 0..self.h {
            let row = &self.v[r * self.w..(r + 1) * self.w];
            for c in 0..ow {
                horiz[r * ow + c] = taps
                    .iter()
                    .zip(&row[c..c + WINDOW])
                    .map(|(t, x)| t * x)
                    .sum();
            }
        }
        let mut out = vec![0.0; oh * ow];
        for r in 0..oh {
            for (k, t) in taps.iter().enumerate() {
                let src = &horiz[(r + k) * ow..(r + k + 1) * ow];
                for (o, s) in out[r * ow..(r + 1) * ow].iter_mut().zip(src) {
                    *o += t * s;
                }
            }
        }
        Plane {
            h: oh,
            w: ow,
            v: out,
        }
    }

    fn downsample(&self) -> Plane {
        let (h, w) = (self.h / 2, self.w / 2);
        let mut v = Vec::with_capacity(h * w);
        for r in 0..h {
            for c in 0..w {
                let at = |rr: usize, cc: usize| self.v[rr * self.w + cc];
                v.push(
                    0.25 * (at(2 * r, 2 * c)
                        + at(2 * r, 2 * c + 1)
                        + at(2 * r + 1, 2 * c)
                        + at(2 * r + 1, 2 * c + 1)),
                );
            }
        }
        Plane { h, w, v }
    }
}

/// Mean SSIM and mean contrast-structure term at one scale.
fn ssim_terms(a: &Plane, b: &Plane, taps: &[f64; WINDOW]) -> (f64, f64) {
    let mu_a = a.blur(taps);
    let mu_b = b.blur(taps);
    let aa = a.map2(a, |x, y| x * y).blur(taps);
    let bb = b.map2(b, |x, y| x * y).blur(taps);
    let ab = a.map2(b, |x, y| x * y).blur(taps);
    let n = mu_a.v.len() as f64;
    let (mut lum, mut cs) = (0.0, 0.0);
    for i in 0..mu_a.v.len() {
        let (ma, mb) = (mu_a.v[i], mu_b.v[i]);
        let va = aa.v[i] - ma * ma;
        let vb = bb.v[i] - mb * mb;
        let cov = ab.v[i] - ma * mb;
        let l = (2.0 * ma * mb + C1) / (ma * ma + mb * mb + C1);
        let s = (2.0 * cov + C2) / (va + vb + C2);
        lum += l * s;
        cs += s;
    }
    (lum / n, cs / n)
}

fn ms_ssim_plane(a: Plane, b: Plane, taps: &[f64; WINDOW]) -> f64 {
    let (mut a, mut b) = (a, b);
    let mut score = 1.0;
    for (scale, w) in MS_SSIM_WEIGHTS.iter().enumerate() {
        let (ssim, cs) = ssim_terms(&a, &b, taps);
        let term = if scale + 1 == MS_SSIM_WEIGHTS.len() {
            ssim
        } else {
            cs
        };
        score *= term.max(0.0).powf(*w);
        if scale + 1 < MS_SSIM_WEIGHTS.len() {
            a = a.downsample();
            b = b.downsample();
        }
    }
    score
}

/// Five-scale structural similarity of two unit-range images, averaged over
/// channels. Negative per-scale terms are clamped to zero.
pub fn ms_ssim(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    if !a.same_size(b) {
        return Err(Error::ShapeMismatch(format!(
            "images {}x{} and {}x{}",
            a.height, a.width, b.height, b.width
        )));
    }
    if a.height.min(a.width) < MS_SSIM_MIN_SIDE {
        return Err(Error::ImageTooSmall {
            height: a.height,
            width: a.width,
            min: MS_SSIM_MIN_SIDE,
        });
    }
    let (a, b) = if a.channels == b.channels {
        (a.clone(), b.clone())
    } else {
        (a.to_gray(), b.to_gray())
    };
    let taps = gaussian_taps();
    let total: f64 = (0..a.channels)
        .map(|ch| ms_ssim_plane(Plane::channel(&a, ch), Plane::channel(&b, ch), &taps))
        .sum();
    Ok(total / a.channels as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Box-Muller standard normal.
    fn normal(rng: &mut impl Rng) -> f64 {
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    fn checker(side: usize, cell: usize) -> ImageBuffer {
        let mut img = ImageBuffer::filled(side, side, 1, 0.0);
        for r in 0..side {
            for c in 0..side {
                img.set(
                    r,
                    c,
                    0,
                    if (r / cell + c / cell).is_multiple_of(2) {
                        0.9
                    } else {
                        0.1
                    },
                );
            }
        }
        img
    }

    fn textured(side: usize, seed: u64) -> ImageBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut img = ImageBuffer::filled(side, side, 1, 0.0);
        for r in 0..side {
            for c in 0..side {
                let v = 0.5
                    + 0.3 * ((r as f64) * 0.2).sin() * ((c as f64) * 0.13).cos()
                    + 0.1 * rng.gen::<f64>();
                img.set(r, c, 0, v);
            }
        }
        img
    }

    #[test]
    fn taps_match_closed_form() {
        let t = gaussian_taps();
        let z: f64 = (-5i32..=5).map(|d| (-(d * d) as f64 / 4.5).exp()).sum();
        assert!((t[5] - 1.0 / z).abs() < 1e-15);
        assert!((t[0] - (-25.0f64 / 4.5).exp() / z).abs() < 1e-15);
    }

    #[test]
    fn single_scale_oracle() {
        // Brute-force windowed statistics at one scale.
        let a = textured(24, 1);
        let b = textured(24, 2);
        let taps = gaussian_taps();
        let (_, cs) = ssim_terms(&Plane::channel(&a, 0), &Plane::channel(&b, 0), &taps);
        let mut acc = 0.0;
        let n = 24 - WINDOW + 1;
        for r in 0..n {
            for c in 0..n {
                let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for i in 0..WINDOW {
                    for j in 0..WINDOW {
                        let w = taps[i] * taps[j];
                        let (x, y) = (a.get(r + i, c + j, 0), b.get(r + i, c + j, 0));
                        ma += w * x;
                        mb += w * y;
                        saa += w * x * x;
                        sbb += w * y * y;
                        sab += w * x * y;
                    }
                }
                acc += (2.0 * (sab - ma * mb) + C2) / (saa - ma * ma + sbb - mb * mb + C2);
            }
        }
        assert!((cs - acc / (n * n) as f64).abs() < 1e-12);
    }

    #[test]
    fn identical_images_score_one() {
        let a = textured(180, 3);
        assert!((ms_ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inverted_checkerboard_scores_low() {
        let a = checker(192, 8);
        let mut inv = a.clone();
        inv.data.iter_mut().for_each(|v| *v = 1.0 - *v);
        let s = ms_ssim(&a, &inv).unwrap();
        assert!(s < 0.2, "{s}");
        assert_eq!(s, 0.0);
    }

    #[test]
    fn small_noise_scores_high() {
        let a = textured(192, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut b = a.clone();
        b.data
            .iter_mut()
            .for_each(|v| *v = (*v + 0.01 * normal(&mut rng)).clamp(0.0, 1.0));
        let s = ms_ssim(&a, &b).unwrap();
        assert!(s > 0.95, "{s}");
    }

    #[test]
    fn symmetric() {
        let a = textured(180, 6);
        let b = textured(180, 7);
        assert!((ms_ssim(&a, &b).unwrap() - ms_ssim(&b, &a).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let a = textured(175, 1);
        assert!(matches!(ms_ssim(&a, &a), Err(Error::ImageTooSmall { .. })));
        let b = textured(180, 1);
        let c = textured(181, 1);
        assert!(matches!(ms_ssim(&b, &c), Err(Error::ShapeMismatch(_))));
    }
}
