use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::image::{ImageBuffer, Mask};
use crate::warp::BackwardMap;

fn check(pred: &BackwardMap, gt: &BackwardMap, mask: &Mask) -> Result<()> {
    if !pred.same_size(gt) || mask.height != gt.height || mask.width != gt.width {
        return Err(Error::ShapeMismatch(format!(
            "maps {}x{} / {}x{} and mask {}x{}",
            pred.height, pred.width, gt.height, gt.width, mask.height, mask.width
        )));
    }
    if mask.count() == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(())
}

/// Normalized map coordinates to pixels of a `height × width` source image.
fn to_px(p: Point2, source: (usize, usize)) -> Point2 {
    let (h, w) = source;
    Point2::new(p.x * (w.max(2) - 1) as f64, p.y * (h.max(2) - 1) as f64)
}

/// Mean pixel displacement between two maps over the mask, measured in the
/// `source = (height, width)` image the maps sample.
pub fn ld_exact(
    pred: &BackwardMap,
    gt: &BackwardMap,
    mask: &Mask,
    source: (usize, usize),
) -> Result<f64> {
    check(pred, gt, mask)?;
    let mut sum = 0.0;
    for (i, _) in mask.data.iter().enumerate().filter(|(_, &m)| m) {
        sum += to_px(pred.coords[i], source).distance(to_px(gt.coords[i], source));
    }
    Ok(sum / mask.count() as f64)
}

/// Gradient magnitude of the gray reference; central differences inside,
/// one-sided at the border.
fn gradient_magnitude(img: &ImageBuffer) -> Vec<f64> {
    let g = img.to_gray();
    let (h, w) = (g.height, g.width);
    let d = |lo: usize, hi: usize, f: &dyn Fn(usize) -> f64| {
        if hi == lo {
            0.0
        } else {
            (f(hi) - f(lo)) / (hi - lo) as f64
        }
    };
    let mut out = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            let gx = d(c.saturating_sub(1), (c + 1).min(w - 1), &|cc| {
                g.get(r, cc, 0)
            });
            let gy = d(r.saturating_sub(1), (r + 1).min(h - 1), &|rr| {
                g.get(rr, c, 0)
            });
            out.push(gx.hypot(gy));
        }
    }
    out
}

/// Weighted residual after removing the best global translation and uniform
/// scale, divided by the source image diagonal.
///
/// The alignment `s·pred + t ≈ gt` is an unweighted least-squares fit over the
/// mask. Residual norms are then averaged with weights proportional to the
/// reference image's gradient magnitude (uniform if the reference is flat).
pub fn ad_simplified(
    pred: &BackwardMap,
    gt: &BackwardMap,
    reference: &ImageBuffer,
    mask: &Mask,
    source: (usize, usize),
) -> Result<f64> {
    check(pred, gt, mask)?;
    if reference.height != gt.height || reference.width != gt.width {
        return Err(Error::ShapeMismatch(format!(
            "reference {}x{} vs map {}x{}",
            reference.height, reference.width, gt.height, gt.width
        )));
    }
    let idx: Vec<usize> = (0..mask.data.len()).filter(|&i| mask.data[i]).collect();
    let p: Vec<Point2> = idx.iter().map(|&i| to_px(pred.coords[i], source)).collect();
    let g: Vec<Point2> = idx.iter().map(|&i| to_px(gt.coords[i], source)).collect();
    let n = idx.len() as f64;
    let mean = |v: &[Point2]| {
        let (sx, sy) = v.iter().fold((0.0, 0.0), |(a, b), q| (a + q.x, b + q.y));
        Point2::new(sx / n, sy / n)
    };
    let (pm, gm) = (mean(&p), mean(&g));
    let (mut num, mut den) = (0.0, 0.0);
    for (a, b) in p.iter().zip(&g) {
        let (ax, ay) = (a.x - pm.x, a.y - pm.y);
        num += ax * (b.x - gm.x) + ay * (b.y - gm.y);
        den += ax * ax + ay * ay;
    }
    let spread = p
        .iter()
        .map(|q| q.x.abs().max(q.y.abs()))
        .fold(0.0, f64::max)
        .max(1.0);
    if den <= 1e-18 * n * spread * spread {
        return Err(Error::DegenerateAlignment);
    }
    let s = num / den;
    let t = Point2::new(gm.x - s * pm.x, gm.y - s * pm.y);

    let grad = gradient_magnitude(reference);
    let mut weights: Vec<f64> = idx.iter().map(|&i| grad[i]).collect();
    if weights.iter().sum::<f64>() <= 0.0 {
        weights.iter_mut().for_each(|w| *w = 1.0);
    }
    let wsum: f64 = weights.iter().sum();
    let mut acc = 0.0;
    for ((a, b), w) in p.iter().zip(&g).zip(&weights) {
        acc += w * (s * a.x + t.x - b.x).hypot(s * a.y + t.y - b.y);
    }
    let diag = (source.0 as f64).hypot(source.1 as f64);
    Ok(acc / wsum / diag)
}
