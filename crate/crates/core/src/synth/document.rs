use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::ImageBuffer;

pub const MIN_DOC_SIDE: usize = 64;

const PAGE_TONE: [f64; 3] = [0.97, 0.96, 0.93];

fn check_size(height: usize, width: usize) -> Result<()> {
    if height < MIN_DOC_SIDE || width < MIN_DOC_SIDE {
        return Err(Error::ImageTooSmall {
            height,
            width,
            min: MIN_DOC_SIDE,
        });
    }
    Ok(())
}

fn fill_rect(img: &mut ImageBuffer, r0: usize, r1: usize, c0: usize, c1: usize, color: [f64; 3]) {
    for r in r0..r1.min(img.height) {
        for c in c0..c1.min(img.width) {
            for (k, v) in color.iter().enumerate() {
                img.set(r, c, k, *v);
            }
        }
    }
}

/// White page with text-line bands and occasional figure blocks.
pub fn gen_flat_doc(seed: u64, height: usize, width: usize) -> Result<ImageBuffer> {
    check_size(height, width)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut img = ImageBuffer::filled(height, width, 3, 0.0);
    fill_rect(&mut img, 0, height, 0, width, PAGE_TONE);

    let margin_x = (width as f64 * 0.08).round() as usize;
    let margin_y = (height as f64 * 0.07).round() as usize;
    let line_h = (height / 32).max(2);
    let pitch = line_h * 2;
    let glyph_w = (line_h * 3 / 5).max(1);
    let glyph_gap = (line_h / 4).max(1);
    let (left, right) = (margin_x, width - margin_x);

    let mut row = margin_y;
    while row + line_h < height - margin_y {
        if rng.gen_bool(0.06) {
            // Figure block spanning a few line pitches.
            let lines = rng.gen_range(3..7);
            let bottom = (row + lines * pitch).min(height - margin_y);
            let c1 = left + ((right - left) as f64 * rng.gen_range(0.4..0.9)) as usize;
            let shade = rng.gen_range(0.45..0.75);
            fill_rect(
                &mut img,
                row,
                bottom,
                left,
                c1,
                [shade * 0.9, shade, shade * 1.05],
            );
            fill_rect(&mut img, row, bottom, left, left + 1, [0.2; 3]);
            fill_rect(&mut img, row, bottom, c1 - 1, c1, [0.2; 3]);
            fill_rect(&mut img, row, row + 1, left, c1, [0.2; 3]);
            fill_rect(&mut img, bottom - 1, bottom, left, c1, [0.2; 3]);
            row = bottom + pitch;
            continue;
        }
        let ink = rng.gen_range(0.08..0.25);
        let end = if rng.gen_bool(0.2) {
            left + ((right - left) as f64 * rng.gen_range(0.2..0.8)) as usize
        } else {
            right
        };
        let mut col = left;
        while col < end {
            let word = rng.gen_range(2..9);
            for _ in 0..word {
                if col + glyph_w > end {
                    break;
                }
                let top = if rng.gen_bool(0.2) {
                    row.saturating_sub(line_h / 3)
                } else {
                    row
                };
                fill_rect(&mut img, top, row + line_h, col, col + glyph_w, [ink; 3]);
                col += glyph_w + glyph_gap;
            }
            col += glyph_w * 2;
        }
        row += pitch;
    }
    Ok(soften(&img))
}

/// Separable `[1, 2, 1] / 4` smoothing with clamped borders, giving the page
/// the soft edges of a scan.
fn soften(img: &ImageBuffer) -> ImageBuffer {
    let (h, w, ch) = (img.height, img.width, img.channels);
    let mut horiz = img.clone();
    for r in 0..h {
        for c in 0..w {
            for k in 0..ch {
                let l = img.get(r, c.saturating_sub(1), k);
                let m = img.get(r, c, k);
                let rr = img.get(r, (c + 1).min(w - 1), k);
                horiz.set(r, c, k, 0.25 * l + 0.5 * m + 0.25 * rr);
            }
        }
    }
    let mut out = horiz.clone();
    for r in 0..h {
        for c in 0..w {
            for k in 0..ch {
                let u = horiz.get(r.saturating_sub(1), c, k);
                let m = horiz.get(r, c, k);
                let d = horiz.get((r + 1).min(h - 1), c, k);
                out.set(r, c, k, 0.25 * u + 0.5 * m + 0.25 * d);
            }
        }
    }
    out
}

/// Two-color tiling with square cells of `cell` pixels.
pub fn gen_checkerboard(
    height: usize,
    width: usize,
    cell: usize,
    dark: f64,
    light: f64,
) -> Result<ImageBuffer> {
    check_size(height, width)?;
    if cell == 0 {
        return Err(Error::InvalidArgument(
            "checkerboard cell must be positive".into(),
        ));
    }
    let mut img = ImageBuffer::filled(height, width, 3, 0.0);
    for r in 0..height {
        for c in 0..width {
            let v = if (r / cell + c / cell).is_multiple_of(2) {
                light
            } else {
                dark
            };
            for k in 0..3 {
                img.set(r, c, k, v);
            }
        }
    }
    Ok(img)
}

/// Seeded procedural background: a color gradient plus smooth value noise.
pub fn background_texture(seed: u64, height: usize, width: usize) -> ImageBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let base: [f64; 3] = [
        rng.gen_range(0.1..0.6),
        rng.gen_range(0.1..0.6),
        rng.gen_range(0.1..0.6),
    ];
    let tilt: [f64; 2] = [rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)];
    let cells = 8;
    let noise: Vec<f64> = (0..(cells + 1) * (cells + 1))
        .map(|_| rng.gen_range(-0.12..0.12))
        .collect();
    let mut img = ImageBuffer::filled(height, width, 3, 0.0);
    for r in 0..height {
        let y = r as f64 / (height.max(2) - 1) as f64;
        let fy = y * cells as f64;
        let iy = (fy.floor() as usize).min(cells - 1);
        let ty = fy - iy as f64;
        for c in 0..width {
            let x = c as f64 / (width.max(2) - 1) as f64;
            let fx = x * cells as f64;
            let ix = (fx.floor() as usize).min(cells - 1);
            let tx = fx - ix as f64;
            let at = |i: usize, j: usize| noise[i * (cells + 1) + j];
            let n = (1.0 - ty) * ((1.0 - tx) * at(iy, ix) + tx * at(iy, ix + 1))
                + ty * ((1.0 - tx) * at(iy + 1, ix) + tx * at(iy + 1, ix + 1));
            let g = tilt[0] * (x - 0.5) + tilt[1] * (y - 0.5);
            for (k, b) in base.iter().enumerate() {
                img.set(r, c, k, (b + g + n).clamp(0.0, 1.0));
            }
        }
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(
            gen_flat_doc(11, 96, 80).unwrap(),
            gen_flat_doc(11, 96, 80).unwrap()
        );
        assert_ne!(
            gen_flat_doc(11, 96, 80).unwrap(),
            gen_flat_doc(12, 96, 80).unwrap()
        );
        assert_eq!(background_texture(3, 40, 50), background_texture(3, 40, 50));
    }

    #[test]
    fn mostly_white_page() {
        for seed in 0..20 {
            let m = gen_flat_doc(seed, 128, 128).unwrap().mean();
            assert!(m > 0.6 && m < 0.98, "seed {seed}: {m}");
        }
    }

    #[test]
    fn page_has_ink() {
        let img = gen_flat_doc(4, 256, 256).unwrap();
        let dark = img.data.iter().filter(|&&v| v < 0.3).count();
        assert!(dark > 1000);
    }

    #[test]
    fn checkerboard_exact_tiling() {
        let img = gen_checkerboard(64, 96, 8, 0.1, 0.9).unwrap();
        for r in 0..64 {
            for c in 0..96 {
                let want = if (r / 8 + c / 8) % 2 == 0 { 0.9 } else { 0.1 };
                for k in 0..3 {
                    assert_eq!(img.get(r, c, k), want);
                }
            }
        }
    }

    #[test]
    fn rejects_small_pages() {
        assert!(gen_flat_doc(0, 63, 100).is_err());
        assert!(gen_checkerboard(64, 10, 4, 0.0, 1.0).is_err());
    }
}
