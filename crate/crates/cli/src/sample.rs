//! Directory layout of one synthetic sample.

use std::path::{Path, PathBuf};

use polardoc_core::losses::ControlPoints;
use polardoc_core::synth::SynthSample;
use polardoc_core::ImageBuffer;

use crate::error::CliResult;
use crate::formats::{self, read_bytes, write_bytes};

pub const FLAT: &str = "flat.png";
pub const WARPED: &str = "warped.png";
pub const MASK: &str = "mask.png";
pub const GRID: &str = "grid.pdoc";
pub const CONTOUR: &str = "contour.pdoc";
pub const SHAPE3D: &str = "shape3d.pdoc";
pub const MAP: &str = "map.pmap";
pub const META: &str = "meta";

pub fn sample_dir(root: &Path, index: usize) -> PathBuf {
    root.join(format!("sample_{index:04}"))
}

/// Writes every file of `s` into `dir`, with `meta` lines describing it.
pub fn write_sample(dir: &Path, s: &SynthSample, meta: &[(String, String)]) -> CliResult<()> {
    formats::create_dir(dir)?;
    formats::write_image(&dir.join(FLAT), &s.flat)?;
    formats::write_image(&dir.join(WARPED), &s.warped)?;
    formats::write_mask(&dir.join(MASK), &s.mask)?;
    write_bytes(&dir.join(GRID), &formats::encode_grid(&s.gt_grid))?;
    write_bytes(
        &dir.join(CONTOUR),
        &formats::encode_contours(&s.gt_contours),
    )?;
    write_bytes(&dir.join(SHAPE3D), &formats::encode_shape3d(&s.gt_shape3d))?;
    write_bytes(&dir.join(MAP), &formats::encode_map(&s.gt_map))?;
    let text = formats::encode_lines(
        formats::META_MAGIC,
        meta.iter().map(|(k, v)| format!("{k}={v}")),
    );
    formats::write_text(&dir.join(META), &text)
}

/// Ground-truth control points stored in a sample directory.
pub fn read_targets(dir: &Path, with_shape3d: bool) -> CliResult<ControlPoints> {
    let grid = formats::decode_grid(&read_bytes(&dir.join(GRID))?)?;
    let contours = formats::decode_contours(&read_bytes(&dir.join(CONTOUR))?)?;
    let shape3d = if with_shape3d {
        Some(formats::decode_shape3d(&read_bytes(&dir.join(SHAPE3D))?)?)
    } else {
        None
    };
    Ok(ControlPoints {
        grid,
        contours,
        shape3d,
    })
}

pub fn read_warped(dir: &Path) -> CliResult<ImageBuffer> {
    formats::read_image(&dir.join(WARPED))
}

/// Sample directories directly under `root`, in name order.
pub fn list_samples(root: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = std::fs::read_dir(root).map_err(|e| crate::error::CliError::io(root, e))?;
    let mut dirs = Vec::new();
    for entry in entries {
        let path = entry
            .map_err(|e| crate::error::CliError::io(root, e))?
            .path();
        if path.join(GRID).is_file() {
            dirs.push(path);
        }
    }
    dirs.sort();
    Ok(dirs)
}
