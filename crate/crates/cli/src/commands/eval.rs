use std::path::{Path, PathBuf};

use polardoc_core::metrics::{ad_simplified, cer, edit_distance, ld_exact, ms_ssim, MetricReport};
use polardoc_core::{ImageBuffer, Mask};

use crate::args::EvalArgs;
use crate::config::Settings;
use crate::error::{CliError, CliResult};
use crate::formats::{self, read_bytes};

fn comparable(a: ImageBuffer, b: ImageBuffer) -> (ImageBuffer, ImageBuffer) {
    if a.channels == b.channels {
        (a, b)
    } else {
        (a.to_gray(), b.to_gray())
    }
}

fn read_transcript(path: &Path) -> CliResult<String> {
    Ok(formats::read_text(path)?
        .trim_end_matches(['\n', '\r'])
        .to_string())
}

pub fn eval(a: &EvalArgs) -> CliResult<()> {
    let mut s = Settings::load(a.common.config.as_deref())?;
    let pred = PathBuf::from(s.required::<String>("pred", a.pred.clone())?);
    let reference = PathBuf::from(s.required::<String>("reference", a.reference.clone())?);
    let crop = s.value("crop", a.crop, 1.0)?;
    let pred_map = s.optional::<String>("pred_map", a.pred_map.clone())?;
    let gt_map = s.optional::<String>("gt_map", a.gt_map.clone())?;
    let source = s.optional::<String>("source", a.source.clone())?;
    let pred_text = s.optional::<String>("pred_text", a.pred_text.clone())?;
    let ref_text = s.optional::<String>("ref_text", a.ref_text.clone())?;
    let resolved = s.finish()?;
    resolved.log("eval");
    if !(crop > 0.0 && crop <= 1.0) {
        return Err(CliError::usage(format!(
            "crop must lie in (0, 1], got {crop}"
        )));
    }

    let reference_img = formats::read_image(&reference)?;
    let (p, r) = comparable(formats::read_image(&pred)?, reference_img.clone());
    let (p, r) = if crop < 1.0 {
        (p.center_crop(crop), r.center_crop(crop))
    } else {
        (p, r)
    };
    let mut report = MetricReport {
        ms_ssim: ms_ssim(&p, &r)?,
        ..MetricReport::default()
    };

    match (pred_map, gt_map) {
        (Some(pm), Some(gm)) => {
            let pm = formats::decode_map(&read_bytes(Path::new(&pm))?)?;
            let gm = formats::decode_map(&read_bytes(Path::new(&gm))?)?;
            if !pm.same_size(&gm) {
                return Err(CliError::invalid(
                    "predicted and ground-truth maps differ in size",
                ));
            }
            let size = match source {
                Some(src) => {
                    let img = formats::read_image(Path::new(&src))?;
                    (img.height, img.width)
                }
                None => (gm.height, gm.width),
            };
            let mask = Mask {
                height: gm.height,
                width: gm.width,
                data: pm
                    .valid
                    .iter()
                    .zip(&gm.valid)
                    .map(|(a, b)| *a && *b)
                    .collect(),
            };
            report.ld_exact = Some(ld_exact(&pm, &gm, &mask, size)?);
            if reference_img.height == gm.height && reference_img.width == gm.width {
                report.ad_simplified = Some(ad_simplified(&pm, &gm, &reference_img, &mask, size)?);
            }
        }
        (None, None) => {}
        _ => return Err(CliError::usage("--pred-map and --gt-map go together")),
    }

    match (pred_text, ref_text) {
        (Some(pt), Some(rt)) => {
            let hyp = read_transcript(Path::new(&pt))?;
            let truth = read_transcript(Path::new(&rt))?;
            report.ed = Some(edit_distance(&hyp, &truth));
            report.cer = Some(cer(&hyp, &truth));
        }
        (None, None) => {}
        _ => return Err(CliError::usage("--pred-text and --ref-text go together")),
    }

    println!("{}", report.to_record());
    print!("{}", report.to_table());
    Ok(())
}
