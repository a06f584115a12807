use std::path::PathBuf;

use polardoc_core::synth::{render_sample, suite_specs, DeformationSpec, SampleConfig};
use rayon::prelude::*;

use super::with_jobs;
use crate::args::{FamilyArg, SynthArgs};
use crate::config::Settings;
use crate::error::{CliError, CliResult};
use crate::formats;
use crate::sample::{sample_dir, write_sample};

/// Multiplier spreading per-sample seeds of one run.
const SEED_STRIDE: u64 = 1_000_003;

pub fn synth(a: &SynthArgs) -> CliResult<()> {
    let mut s = Settings::load(a.common.config.as_deref())?;
    let out = PathBuf::from(s.required::<String>("out", a.out.clone())?);
    let count = s.value("count", a.count, 20)?;
    let seed = s.value("seed", a.seed, 0)?;
    let family = s.value("family", a.family, FamilyArg::Suite)?;
    let amplitude = s.value("amplitude", a.amplitude, 0.04)?;
    let frequency = s.value("frequency", a.frequency, 1.0)?;
    let inset = s.value("inset", a.inset, 0.08)?;
    let d = SampleConfig::default();
    let base = SampleConfig {
        height: s.value("height", a.height, d.height)?,
        width: s.value("width", a.width, d.width)?,
        grid_h: s.value("grid_h", a.grid_h, d.grid_h)?,
        grid_w: s.value("grid_w", a.grid_w, d.grid_w)?,
        contour_layers: s.value("layers", a.layers, d.contour_layers)?,
        contour_samples: s.value("samples", a.samples, d.contour_samples)?,
        ..d
    };
    let jobs = s.value("jobs", a.jobs, 0)?;
    let resolved = s.finish()?;
    resolved.log("synth");

    let jobs_list: Vec<(DeformationSpec, SampleConfig)> = match family.family() {
        None => suite_specs(count, seed)
            .into_iter()
            .map(|(spec, cfg)| {
                let cfg = SampleConfig {
                    doc_seed: cfg.doc_seed,
                    background_seed: cfg.background_seed,
                    ..base
                };
                (spec, cfg)
            })
            .collect(),
        Some(f) => (0..count as u64)
            .map(|i| {
                let sd = seed.wrapping_mul(SEED_STRIDE).wrapping_add(i);
                let spec = DeformationSpec::new(f, amplitude, sd)
                    .with_frequency(frequency)
                    .with_inset(inset);
                let cfg = SampleConfig {
                    doc_seed: sd,
                    background_seed: sd.wrapping_add(17),
                    ..base
                };
                (spec, cfg)
            })
            .collect(),
    };
    for (spec, _) in &jobs_list {
        spec.validate()?;
    }

    formats::create_dir(&out)?;
    resolved.write(&out)?;
    let results: Vec<CliResult<()>> = with_jobs(jobs, || {
        jobs_list
            .par_iter()
            .enumerate()
            .map(|(i, (spec, cfg))| {
                let sample = render_sample(spec, cfg)
                    .map_err(|e| CliError::invalid(format!("sample {i}: {e}")))?;
                let meta = vec![
                    ("family".to_string(), spec.family.name().to_string()),
                    ("amplitude".to_string(), spec.amplitude.to_string()),
                    ("frequency".to_string(), spec.frequency.to_string()),
                    ("inset".to_string(), spec.inset.to_string()),
                    ("seed".to_string(), spec.seed.to_string()),
                    ("doc_seed".to_string(), cfg.doc_seed.to_string()),
                    (
                        "background_seed".to_string(),
                        cfg.background_seed.to_string(),
                    ),
                    ("height".to_string(), cfg.height.to_string()),
                    ("width".to_string(), cfg.width.to_string()),
                    ("grid_h".to_string(), cfg.grid_h.to_string()),
                    ("grid_w".to_string(), cfg.grid_w.to_string()),
                    ("layers".to_string(), cfg.contour_layers.to_string()),
                    ("samples".to_string(), cfg.contour_samples.to_string()),
                ];
                write_sample(&sample_dir(&out, i), &sample, &meta)
            })
            .collect()
    })?;
    results.into_iter().collect::<CliResult<Vec<()>>>()?;
    println!("wrote {count} samples to {}", out.display());
    Ok(())
}
