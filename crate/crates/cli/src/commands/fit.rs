use std::path::PathBuf;

use polardoc_core::fit::{fit_control_points, FitConfig, Init};

use crate::args::{resolve_weights, FitArgs, InitArg, ScheduleArg};
use crate::config::Settings;
use crate::error::CliResult;
use crate::formats::{self, write_bytes};
use crate::sample::{read_targets, CONTOUR, GRID, SHAPE3D};

pub const TRACE: &str = "trace";

pub fn fit(a: &FitArgs) -> CliResult<()> {
    let mut s = Settings::load(a.common.config.as_deref())?;
    let sample = PathBuf::from(s.required::<String>("sample", a.sample.clone())?);
    let out = PathBuf::from(s.required::<String>("out", a.out.clone())?);
    let d = FitConfig::default();
    let iterations = s.value("iterations", a.iterations, d.iterations)?;
    let step = s.value("step", a.step, d.step)?;
    let init = s.value("init", a.init, InitArg::Lattice)?;
    let init_scale = s.value("init_scale", a.init_scale, 0.01)?;
    let seed = s.value("seed", a.seed, 0)?;
    let schedule = s.value("schedule", a.schedule, ScheduleArg::Cosine)?;
    let shape3d = s.value("shape3d", a.shape3d, d.fit_shape3d)?;
    let weights = resolve_weights(&mut s, &a.loss)?;
    let resolved = s.finish()?;
    resolved.log("fit");

    let cfg = FitConfig {
        iterations,
        step,
        weights,
        init: match init {
            InitArg::Lattice => Init::Lattice,
            InitArg::Perturbed => Init::PerturbedLattice {
                seed,
                scale: init_scale,
            },
        },
        schedule: schedule.schedule(),
        fit_shape3d: shape3d,
        ..d
    };
    cfg.validate()?;
    let target = read_targets(&sample, shape3d)?;
    let outcome = fit_control_points(&target, &cfg)?;

    formats::create_dir(&out)?;
    resolved.write(&out)?;
    write_bytes(&out.join(GRID), &formats::encode_grid(&outcome.grid))?;
    write_bytes(
        &out.join(CONTOUR),
        &formats::encode_contours(&outcome.contours),
    )?;
    if let Some(f) = &outcome.shape3d {
        write_bytes(&out.join(SHAPE3D), &formats::encode_shape3d(f))?;
    }
    let trace = formats::encode_lines(
        formats::TRACE_MAGIC,
        outcome.trace.iter().map(|v| v.to_string()),
    );
    formats::write_text(&out.join(TRACE), &trace)?;
    println!(
        "rmse={} contour_iou={} loss0={} loss={} steps={}",
        outcome.mapping_rmse,
        outcome.contour_iou,
        outcome.trace[0],
        outcome.trace.last().expect("trace holds the initial loss"),
        outcome.trace.len() - 1
    );
    Ok(())
}
