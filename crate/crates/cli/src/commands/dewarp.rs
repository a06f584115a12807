use std::path::{Path, PathBuf};

use polardoc_core::fit::TinyPredictor;
use polardoc_core::warp::{build_backward_map, resample, MapConfig};

use crate::args::DewarpArgs;
use crate::config::Settings;
use crate::error::{CliError, CliResult};
use crate::formats::{self, read_bytes, write_bytes};

pub fn dewarp(a: &DewarpArgs) -> CliResult<()> {
    let mut s = Settings::load(a.common.config.as_deref())?;
    let image_path = PathBuf::from(s.required::<String>("image", a.image.clone())?);
    let out = PathBuf::from(s.required::<String>("out", a.out.clone())?);
    let predictor = s.optional::<String>("predictor", a.predictor.clone())?;
    let grid = s.optional::<String>("grid", a.grid.clone())?;
    let map_out = s.optional::<String>("map_out", a.map_out.clone())?;
    let image = formats::read_image(&image_path)?;
    let height = s.value("height", a.height, image.height)?;
    let width = s.value("width", a.width, image.width)?;
    let d = MapConfig::default();
    let coarse = s.value("coarse", a.coarse, d.coarse_h)?;
    let lambda = s.value("lambda", a.lambda, d.lambda)?;
    let fill = s.value("fill", a.fill, 0.0)?;
    let resolved = s.finish()?;
    resolved.log("dewarp");

    let grid = match (predictor, grid) {
        (Some(p), None) => {
            let model = TinyPredictor::from_bytes(&read_bytes(Path::new(&p))?)?;
            model.forward(&image)?.0
        }
        (None, Some(g)) => formats::decode_grid(&read_bytes(Path::new(&g))?)?,
        _ => return Err(CliError::usage("give exactly one of --predictor or --grid")),
    };
    let cfg = MapConfig {
        coarse_h: coarse,
        coarse_w: coarse,
        lambda,
    };
    let map = build_backward_map(&grid, height, width, &cfg)?;
    let flat = resample(&image, &map, fill);

    let dir = out
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    formats::create_dir(dir)?;
    resolved.write(dir)?;
    formats::write_image(&out, &flat)?;
    if let Some(m) = map_out {
        write_bytes(Path::new(&m), &formats::encode_map(&map))?;
    }
    println!(
        "wrote {}x{} image to {}",
        flat.height,
        flat.width,
        out.display()
    );
    Ok(())
}
