use std::path::PathBuf;

use polardoc_core::fit::{
    predictor_rmse, predictor_train, PredictorShape, TinyPredictor, TrainConfig, TrainExample,
};

use super::with_jobs;
use crate::args::{resolve_weights, TrainArgs};
use crate::config::Settings;
use crate::error::{CliError, CliResult};
use crate::formats::{self, write_bytes};
use crate::sample::{list_samples, read_targets, read_warped};

pub const PREDICTOR: &str = "predictor.pdw";
pub const LOSSES: &str = "losses";

pub fn train(a: &TrainArgs) -> CliResult<()> {
    let mut s = Settings::load(a.common.config.as_deref())?;
    let data = PathBuf::from(s.required::<String>("data", a.data.clone())?);
    let out = PathBuf::from(s.required::<String>("out", a.out.clone())?);
    let d = TrainConfig::default();
    let ds = PredictorShape::default();
    let epochs = s.value("epochs", a.epochs, d.epochs)?;
    let step = s.value("step", a.step, d.step)?;
    let batch = s.value("batch", a.batch, d.batch_size)?;
    let seed = s.value("seed", a.seed, d.seed)?;
    let hidden = s.value("hidden", a.hidden, ds.hidden)?;
    let side = s.value("side", a.side, ds.side)?;
    let jobs = s.value("jobs", a.jobs, 0)?;
    let weights = resolve_weights(&mut s, &a.loss)?;
    let resolved = s.finish()?;
    resolved.log("train");

    let dirs = list_samples(&data)?;
    let first = dirs.first().ok_or_else(|| {
        CliError::invalid(format!("no sample directories under {}", data.display()))
    })?;
    let probe = read_targets(first, false)?;
    let shape = PredictorShape {
        side,
        hidden,
        grid_h: probe.grid.h,
        grid_w: probe.grid.w,
        contour_layers: 1,
        contour_samples: probe.contours.b,
    };
    let examples = dirs
        .iter()
        .map(|dir| {
            let target = read_targets(dir, false)?;
            let image = read_warped(dir)?;
            TrainExample::new(&image, &target, &shape)
                .map_err(|e| CliError::invalid(format!("{}: {e}", dir.display())))
        })
        .collect::<CliResult<Vec<_>>>()?;

    let cfg = TrainConfig {
        epochs,
        step,
        batch_size: batch,
        weights,
        seed,
        ..d
    };
    let mut predictor = TinyPredictor::init(shape, seed)?;
    let (report, rmse) = with_jobs(jobs, || -> CliResult<_> {
        let report = predictor_train(&mut predictor, &examples, &cfg)?;
        let rmse = predictor_rmse(&predictor, &examples)?;
        Ok((report, rmse))
    })??;

    formats::create_dir(&out)?;
    resolved.write(&out)?;
    write_bytes(&out.join(PREDICTOR), &predictor.to_bytes())?;
    let losses = formats::encode_lines(
        formats::LOSSES_MAGIC,
        report.epoch_losses.iter().map(|v| v.to_string()),
    );
    formats::write_text(&out.join(LOSSES), &losses)?;
    let last = report
        .epoch_losses
        .last()
        .map_or("na".to_string(), |v| v.to_string());
    println!(
        "samples={} epochs={} final_loss={last} train_rmse={rmse}",
        examples.len(),
        report.epoch_losses.len()
    );
    Ok(())
}
