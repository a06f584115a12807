use rayon::prelude::*;

use super::map::BackwardMap;
use crate::geometry::Point2;
use crate::image::ImageBuffer;

/// Source coordinates within this distance of a pixel center snap onto it, so
/// that identity maps reproduce the input bit for bit.
const SNAP: f64 = 1e-9;

fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < SNAP {
        r
    } else {
        v
    }
}

/// Bilinear sample of channel `ch` at pixel coordinates `(sx, sy)`, or `None`
/// outside the image.
#[inline]
pub fn bilinear_sample(img: &ImageBuffer, sx: f64, sy: f64, ch: usize) -> Option<f64> {
    let (sx, sy) = (snap(sx), snap(sy));
    let (wmax, hmax) = ((img.width - 1) as f64, (img.height - 1) as f64);
    if !(sx >= 0.0 && sy >= 0.0 && sx <= wmax && sy <= hmax) {
        return None;
    }
    let x0 = sx.floor() as usize;
    let y0 = sy.floor() as usize;
    let x1 = (x0 + 1).min(img.width - 1);
    let y1 = (y0 + 1).min(img.height - 1);
    let fx = sx - x0 as f64;
    let fy = sy - y0 as f64;
    let top = (1.0 - fx) * img.get(y0, x0, ch) + fx * img.get(y0, x1, ch);
    let bottom = (1.0 - fx) * img.get(y1, x0, ch) + fx * img.get(y1, x1, ch);
    Some((1.0 - fy) * top + fy * bottom)
}

/// Samples `image` at every valid map coordinate; out-of-bounds and invalid
/// pixels take `fill`.
pub fn resample(image: &ImageBuffer, map: &BackwardMap, fill: f64) -> ImageBuffer {
    let ch = image.channels;
    let (sw, sh) = (
        (image.width.max(2) - 1) as f64,
        (image.height.max(2) - 1) as f64,
    );
    let mut data = vec![0.0; map.height * map.width * ch];
    data.par_chunks_mut(map.width * ch)
        .enumerate()
        .for_each(|(r, row)| {
            for c in 0..map.width {
                let idx = r * map.width + c;
                let Point2 { x, y } = map.coords[idx];
                for k in 0..ch {
                    let v = if map.valid[idx] {
                        bilinear_sample(image, x * sw, y * sh, k).unwrap_or(fill)
                    } else {
                        fill
                    };
                    row[c * ch + k] = v.clamp(0.0, 1.0);
                }
            }
        });
    ImageBuffer {
        height: map.height,
        width: map.width,
        channels: ch,
        data,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn checkerboard(h: usize, w: usize, cell: usize) -> ImageBuffer {
        let mut img = ImageBuffer::filled(h, w, 1, 0.0);
        for r in 0..h {
            for c in 0..w {
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

    fn noise(h: usize, w: usize, ch: usize, seed: u64) -> ImageBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..h * w * ch).map(|_| rng.gen()).collect();
        ImageBuffer::from_vec(h, w, ch, data).unwrap()
    }

    #[test]
    fn identity_map_is_exact() {
        let img = noise(37, 53, 3, 1);
        let out = resample(&img, &BackwardMap::identity(37, 53), 0.0);
        assert_eq!(out, img);
    }

    #[test]
    fn one_pixel_shift() {
        let img = noise(20, 30, 1, 2);
        let map = BackwardMap::from_fn(20, 30, |p| Point2::new(p.x + 1.0 / 29.0, p.y));
        let out = resample(&img, &map, 0.0);
        for r in 0..20 {
            for c in 0..29 {
                assert!((out.get(r, c, 0) - img.get(r, c + 1, 0)).abs() < 1e-12);
            }
            assert_eq!(out.get(r, 29, 0), 0.0);
        }
    }

    #[test]
    fn invalid_and_outside_take_fill() {
        let img = noise(8, 8, 1, 3);
        let mut map = BackwardMap::identity(8, 8);
        map.valid[5] = false;
        map.coords[6] = Point2::new(1.5, 0.5);
        let out = resample(&img, &map, 1.0);
        assert_eq!(out.get(0, 5, 0), 1.0);
        assert_eq!(out.get(0, 6, 0), 1.0);
    }

    #[test]
    fn smooth_map_matches_scalar_oracle() {
        let img = checkerboard(64, 64, 7);
        let map = BackwardMap::from_fn(50, 60, |p| {
            Point2::new(
                0.05 + 0.9 * p.x + 0.03 * (6.0 * p.y).sin(),
                0.05 + 0.9 * p.y + 0.02 * (5.0 * p.x).cos(),
            )
        });
        let out = resample(&img, &map, 0.0);
        for r in 0..50 {
            for c in 0..60 {
                let q = map.at(r, c);
                let (sx, sy) = (q.x * 63.0, q.y * 63.0);
                // Sum of the four corner weights.
                let (i0, j0) = (sy.floor() as i64, sx.floor() as i64);
                let mut want = 0.0;
                for (di, dj) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    let (i, j) = (i0 + di, j0 + dj);
                    let wy = 1.0 - (sy - i as f64).abs();
                    let wx = 1.0 - (sx - j as f64).abs();
                    if (0..64).contains(&i) && (0..64).contains(&j) {
                        want += wx * wy * img.get(i as usize, j as usize, 0);
                    }
                }
                assert!((out.get(r, c, 0) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn affine_image_sampled_exactly() {
        let mut img = ImageBuffer::filled(30, 40, 1, 0.0);
        for r in 0..30 {
            for c in 0..40 {
                img.set(r, c, 0, 0.1 + 0.01 * r as f64 + 0.012 * c as f64);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..500 {
            let (sx, sy) = (rng.gen_range(0.0..39.0), rng.gen_range(0.0..29.0));
            let v = bilinear_sample(&img, sx, sy, 0).unwrap();
            assert!((v - (0.1 + 0.01 * sy + 0.012 * sx)).abs() < 1e-12);
        }
    }
}
