//! On-disk formats. Every file starts with a four-letter magic followed by a
//! format version digit.
//!
//! * `.pdoc`: ASCII header `PDOC1 <kind> <dims...>\n`, then little-endian
//!   `f64` payload. `grid4 h w` stores `(x, y, θ, ρ)` per point;
//!   `contour a b` stores the origin `(x, y)` then `a × b` radii;
//!   `shape3d h w` stores `(x, y, z)` per point.
//! * `.pmap`: ASCII header `PMAP1 width height\n`, then `(x, y)` as
//!   little-endian `f32` per pixel, row-major; invalid pixels are NaN.
//! * Text records (`meta`, traces, loss curves): a magic line, then lines.
//! * Images: 8-bit PNG, or PGM/PPM by extension.

use std::fs;
use std::path::Path;

use polardoc_core::geometry::Point2;
use polardoc_core::{BackwardMap, ContourSet, ImageBuffer, MappingGrid, Mask, Shape3DField};

use crate::error::{CliError, CliResult};

pub const PDOC_MAGIC: &str = "PDOC1";
pub const PMAP_MAGIC: &str = "PMAP1";
pub const META_MAGIC: &str = "PMET1";
pub const TRACE_MAGIC: &str = "PTRC1";
pub const LOSSES_MAGIC: &str = "PLOS1";

/// Largest difference tolerated between stored and recomputed Polar channels.
const POLAR_TOLERANCE: f64 = 1e-9;

pub fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

fn split_header<'a>(bytes: &'a [u8], magic: &str) -> CliResult<(Vec<&'a str>, &'a [u8])> {
    let family = &magic[..4];
    let end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| CliError::invalid(format!("missing {magic} header line")))?;
    let header =
        std::str::from_utf8(&bytes[..end]).map_err(|_| CliError::invalid("header is not ASCII"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    match fields.first() {
        Some(&m) if m == magic => Ok((fields, &bytes[end + 1..])),
        Some(m) if m.starts_with(family) => Err(CliError::invalid(format!(
            "format version mismatch: file is {m}, expected {magic}"
        ))),
        _ => Err(CliError::invalid(format!("not a {family} file"))),
    }
}

fn dims(fields: &[&str], kind: &str, count: usize) -> CliResult<Vec<usize>> {
    if fields.len() != 2 + count || fields[1] != kind {
        return Err(CliError::invalid(format!(
            "expected `{PDOC_MAGIC} {kind}` with {count} dimensions, got `{}`",
            fields.join(" ")
        )));
    }
    fields[2..]
        .iter()
        .map(|f| {
            f.parse()
                .map_err(|_| CliError::invalid(format!("bad dimension {f:?}")))
        })
        .collect()
}

fn f64_payload(payload: &[u8], expected: usize) -> CliResult<Vec<f64>> {
    if payload.len() != 8 * expected {
        return Err(CliError::invalid(format!(
            "payload holds {} bytes, expected {}",
            payload.len(),
            8 * expected
        )));
    }
    Ok(payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

fn pdoc(header: String, values: impl IntoIterator<Item = f64>) -> Vec<u8> {
    let mut out = header.into_bytes();
    out.push(b'\n');
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn encode_grid(grid: &MappingGrid) -> Vec<u8> {
    pdoc(
        format!("{PDOC_MAGIC} grid4 {} {}", grid.h, grid.w),
        grid.points.iter().flat_map(|p| [p.x, p.y, p.theta, p.rho]),
    )
}

pub fn decode_grid(bytes: &[u8]) -> CliResult<MappingGrid> {
    let (fields, payload) = split_header(bytes, PDOC_MAGIC)?;
    let d = dims(&fields, "grid4", 2)?;
    let (h, w) = (d[0], d[1]);
    let values = f64_payload(payload, 4 * h * w)?;
    let xy: Vec<f64> = values.chunks_exact(4).flat_map(|c| [c[0], c[1]]).collect();
    let grid = MappingGrid::from_flat(h, w, &xy)?;
    let drift = grid
        .points
        .iter()
        .zip(values.chunks_exact(4))
        .map(|(p, c)| {
            let dt = polardoc_core::geometry::wrap_difference(p.theta - c[2]).abs();
            dt.max((p.rho - c[3]).abs())
        })
        .fold(0.0, f64::max);
    if !(drift <= POLAR_TOLERANCE) {
        return Err(CliError::invalid(format!(
            "stored polar channels disagree with (x, y) by {drift:e}"
        )));
    }
    Ok(grid)
}

pub fn encode_contours(c: &ContourSet) -> Vec<u8> {
    pdoc(
        format!("{PDOC_MAGIC} contour {} {}", c.a, c.b),
        [c.origin.x, c.origin.y]
            .into_iter()
            .chain(c.radii.iter().copied()),
    )
}

pub fn decode_contours(bytes: &[u8]) -> CliResult<ContourSet> {
    let (fields, payload) = split_header(bytes, PDOC_MAGIC)?;
    let d = dims(&fields, "contour", 2)?;
    let values = f64_payload(payload, 2 + d[0] * d[1])?;
    let origin = Point2::new(values[0], values[1]);
    Ok(ContourSet::new(d[0], d[1], values[2..].to_vec(), origin)?)
}

pub fn encode_shape3d(f: &Shape3DField) -> Vec<u8> {
    pdoc(
        format!("{PDOC_MAGIC} shape3d {} {}", f.height, f.width),
        f.data.iter().copied(),
    )
}

pub fn decode_shape3d(bytes: &[u8]) -> CliResult<Shape3DField> {
    let (fields, payload) = split_header(bytes, PDOC_MAGIC)?;
    let d = dims(&fields, "shape3d", 2)?;
    let values = f64_payload(payload, 3 * d[0] * d[1])?;
    Ok(Shape3DField::new(d[0], d[1], values)?)
}

pub fn encode_map(map: &BackwardMap) -> Vec<u8> {
    let mut out = format!("{PMAP_MAGIC} {} {}\n", map.width, map.height).into_bytes();
    for (p, &ok) in map.coords.iter().zip(&map.valid) {
        let (x, y) = if ok {
            (p.x as f32, p.y as f32)
        } else {
            (f32::NAN, f32::NAN)
        };
        out.extend_from_slice(&x.to_le_bytes());
        out.extend_from_slice(&y.to_le_bytes());
    }
    out
}

pub fn decode_map(bytes: &[u8]) -> CliResult<BackwardMap> {
    let (fields, payload) = split_header(bytes, PMAP_MAGIC)?;
    if fields.len() != 3 {
        return Err(CliError::invalid(format!(
            "bad {PMAP_MAGIC} header `{}`",
            fields.join(" ")
        )));
    }
    let parse = |f: &str| {
        f.parse::<usize>()
            .map_err(|_| CliError::invalid(format!("bad dimension {f:?}")))
    };
    let (width, height) = (parse(fields[1])?, parse(fields[2])?);
    if payload.len() != 8 * width * height {
        return Err(CliError::invalid(format!(
            "map payload holds {} bytes, expected {}",
            payload.len(),
            8 * width * height
        )));
    }
    let mut coords = Vec::with_capacity(width * height);
    let mut valid = Vec::with_capacity(width * height);
    for c in payload.chunks_exact(8) {
        let x = f32::from_le_bytes(c[..4].try_into().expect("4 bytes"));
        let y = f32::from_le_bytes(c[4..].try_into().expect("4 bytes"));
        let ok = x.is_finite() && y.is_finite();
        valid.push(ok);
        coords.push(if ok {
            Point2::new(x as f64, y as f64)
        } else {
            Point2::new(0.0, 0.0)
        });
    }
    Ok(BackwardMap {
        height,
        width,
        coords,
        valid,
    })
}

/// Magic line followed by one line per entry.
pub fn encode_lines(magic: &str, lines: impl IntoIterator<Item = String>) -> String {
    let mut s = format!("{magic}\n");
    for l in lines {
        s.push_str(&l);
        s.push('\n');
    }
    s
}

pub fn decode_lines<'a>(magic: &str, text: &'a str) -> CliResult<Vec<&'a str>> {
    let mut it = text.lines();
    match it.next() {
        Some(m) if m.trim() == magic => Ok(it.collect()),
        Some(m) if m.starts_with(&magic[..4]) => Err(CliError::invalid(format!(
            "format version mismatch: file is {m}, expected {magic}"
        ))),
        _ => Err(CliError::invalid(format!("missing {magic} header"))),
    }
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn image_error(path: &Path, e: image::ImageError) -> CliError {
    match e {
        image::ImageError::IoError(io) => CliError::io(path, io),
        other => CliError::invalid(format!("{}: {other}", path.display())),
    }
}

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Reads an 8-bit image as gray or RGB in `[0, 1]`.
pub fn read_image(path: &Path) -> CliResult<ImageBuffer> {
    let img = image::open(path).map_err(|e| image_error(path, e))?;
    let (data, channels, w, h) = if img.color().has_color() {
        let rgb = img.to_rgb8();
        let (w, h) = rgb.dimensions();
        (rgb.into_raw(), 3, w, h)
    } else {
        let l = img.to_luma8();
        let (w, h) = l.dimensions();
        (l.into_raw(), 1, w, h)
    };
    let values = data.into_iter().map(|b| b as f64 / 255.0).collect();
    Ok(ImageBuffer::from_vec(
        h as usize, w as usize, channels, values,
    )?)
}

/// Writes gray or RGB images; the format follows the extension.
pub fn write_image(path: &Path, img: &ImageBuffer) -> CliResult<()> {
    let (w, h) = (img.width as u32, img.height as u32);
    let bytes: Vec<u8> = img.data.iter().map(|&v| to_u8(v)).collect();
    let color = match img.channels {
        1 => image::ExtendedColorType::L8,
        3 => image::ExtendedColorType::Rgb8,
        c => {
            return Err(CliError::invalid(format!(
                "cannot write a {c}-channel image"
            )))
        }
    };
    image::save_buffer(path, &bytes, w, h, color).map_err(|e| image_error(path, e))
}

pub fn write_mask(path: &Path, mask: &Mask) -> CliResult<()> {
    let data = mask
        .data
        .iter()
        .map(|&m| if m { 1.0 } else { 0.0 })
        .collect();
    write_image(
        path,
        &ImageBuffer::from_vec(mask.height, mask.width, 1, data)?,
    )
}

pub fn read_mask(path: &Path) -> CliResult<Mask> {
    let img = read_image(path)?.to_gray();
    Ok(Mask {
        height: img.height,
        width: img.width,
        data: img.data.iter().map(|&v| v >= 0.5).collect(),
    })
}
