//! Fixtures shared by the benchmarks.

use polardoc_core::fit::{fit_control_points, sample_targets, FitConfig};
use polardoc_core::losses::ControlPoints;
use polardoc_core::synth::{render_sample, suite_specs, SynthSample};

/// First sample of the convergence suite at the default resolution.
pub fn suite_sample() -> SynthSample {
    let (spec, cfg) = suite_specs(1, 0).remove(0);
    render_sample(&spec, &cfg).expect("suite sample renders")
}

/// Ground truth and a briefly fitted prediction for `sample`, so losses are
/// evaluated away from their optimum.
pub fn loss_pair(sample: &SynthSample) -> (ControlPoints, ControlPoints) {
    let target = sample_targets(sample, true);
    let cfg = FitConfig {
        iterations: 20,
        fit_shape3d: true,
        ..FitConfig::default()
    };
    let fitted = fit_control_points(&target, &cfg).expect("fit runs");
    let pred = ControlPoints {
        grid: fitted.grid,
        contours: fitted.contours,
        shape3d: fitted.shape3d,
    };
    (pred, target)
}
