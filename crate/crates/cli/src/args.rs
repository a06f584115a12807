use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use polardoc_core::fit::Schedule;
use polardoc_core::losses::{FocalMode, LossWeights};
use polardoc_core::synth::Family;

/// Declares a string-named enum usable both as a flag value and a config value.
macro_rules! named_enum {
    ($(#[$m:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const NAMES: &'static [&'static str] = &[$($text),+];
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(format!("unknown value {other:?}, expected one of: {}", Self::NAMES.join(", "))),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self {
                    $($name::$variant => $text),+
                })
            }
        }
    };
}

named_enum!(
    /// Deformation family for `synth`; `suite` cycles the three convergence-suite families.
    FamilyArg {
        Suite => "suite",
        Identity => "identity",
        Perspective => "perspective",
        FoldSine => "fold-sine",
        CurlCylinder => "curl-cylinder",
        TpsRandom => "tps-random",
        Composite => "composite",
    }
);

impl FamilyArg {
    pub fn family(self) -> Option<Family> {
        match self {
            FamilyArg::Suite => None,
            FamilyArg::Identity => Some(Family::Identity),
            FamilyArg::Perspective => Some(Family::Perspective),
            FamilyArg::FoldSine => Some(Family::FoldSine),
            FamilyArg::CurlCylinder => Some(Family::CurlCylinder),
            FamilyArg::TpsRandom => Some(Family::TpsRandom),
            FamilyArg::Composite => Some(Family::Composite),
        }
    }
}

named_enum!(
    /// Loss configuration rows of the ablation.
    Preset {
        Full => "full",
        SmoothL1 => "sl1",
        Global => "global",
        Local => "local",
    }
);

impl Preset {
    pub fn weights(self) -> LossWeights {
        let full = LossWeights::default();
        match self {
            Preset::Full => full,
            Preset::SmoothL1 => LossWeights::smooth_l1_only(),
            Preset::Global => LossWeights {
                alpha1: 0.0,
                alpha3: 0.0,
                ..full
            },
            Preset::Local => LossWeights {
                alpha1: 0.0,
                alpha2: 0.0,
                ..full
            },
        }
    }
}

named_enum!(InitArg { Lattice => "lattice", Perturbed => "perturbed" });
named_enum!(ScheduleArg { Cosine => "cosine", Constant => "constant" });
named_enum!(FocalArg { IouFocal => "iou-focal", Literal => "literal" });

impl ScheduleArg {
    pub fn schedule(self) -> Schedule {
        match self {
            ScheduleArg::Cosine => Schedule::Cosine,
            ScheduleArg::Constant => Schedule::Constant,
        }
    }
}

impl FocalArg {
    pub fn mode(self) -> FocalMode {
        match self {
            FocalArg::IouFocal => FocalMode::IouFocal,
            FocalArg::Literal => FocalMode::Literal,
        }
    }

    pub fn of(mode: FocalMode) -> Self {
        match mode {
            FocalMode::IouFocal => FocalArg::IouFocal,
            FocalMode::Literal => FocalArg::Literal,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "polardoc",
    version,
    about = "Polar control-point document dewarping toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render synthetic warped documents with full ground truth.
    Synth(SynthArgs),
    /// Fit control points to one sample's ground truth.
    Fit(FitArgs),
    /// Train the tiny two-headed predictor on a directory of samples.
    Train(TrainArgs),
    /// Dewarp an image through a predictor or a stored grid.
    Dewarp(DewarpArgs),
    /// Compare images, maps and transcripts.
    Eval(EvalArgs),
    /// Check every analytic loss gradient against finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// key=value file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LossArgs {
    /// Loss row: full, sl1, global or local.
    #[arg(long)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub alpha1: Option<f64>,
    #[arg(long)]
    pub alpha2: Option<f64>,
    #[arg(long)]
    pub alpha3: Option<f64>,
    #[arg(long)]
    pub alpha4: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// iou-focal or literal.
    #[arg(long)]
    pub focal: Option<FocalArg>,
    /// Pixels per normalized unit inside the smooth-L1 term.
    #[arg(long)]
    pub sl1_scale: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub family: Option<FamilyArg>,
    /// Ignored by the `suite` family, which sets its own amplitudes.
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub frequency: Option<f64>,
    #[arg(long)]
    pub inset: Option<f64>,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub grid_h: Option<usize>,
    #[arg(long)]
    pub grid_w: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: Common,
    /// Sample directory written by `synth`.
    #[arg(long)]
    pub sample: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub step: Option<f64>,
    /// lattice or perturbed.
    #[arg(long)]
    pub init: Option<InitArg>,
    #[arg(long)]
    pub init_scale: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// cosine or constant.
    #[arg(long)]
    pub schedule: Option<ScheduleArg>,
    /// Also fit the 3D field.
    #[arg(long)]
    pub shape3d: Option<bool>,
    #[command(flatten)]
    pub loss: LossArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    /// Directory holding `synth` sample directories.
    #[arg(long)]
    pub data: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Side of the grayscale input thumbnail.
    #[arg(long)]
    pub side: Option<usize>,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub loss: LossArgs,
}

#[derive(Debug, Args)]
pub struct DewarpArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub image: Option<String>,
    /// Output image path.
    #[arg(long)]
    pub out: Option<String>,
    /// Trained predictor (`PDW1`).
    #[arg(long)]
    pub predictor: Option<String>,
    /// Mapping grid (`.pdoc`), used instead of a predictor.
    #[arg(long)]
    pub grid: Option<String>,
    /// Also write the dense backward map (`.pmap`).
    #[arg(long)]
    pub map_out: Option<String>,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub coarse: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Value written where the map points off the image.
    #[arg(long)]
    pub fill: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub pred: Option<String>,
    #[arg(long)]
    pub reference: Option<String>,
    /// Central crop fraction applied before MS-SSIM.
    #[arg(long)]
    pub crop: Option<f64>,
    #[arg(long)]
    pub pred_map: Option<String>,
    #[arg(long)]
    pub gt_map: Option<String>,
    /// Image the maps sample from; sets the pixel scale and the AD weights.
    #[arg(long)]
    pub source: Option<String>,
    #[arg(long)]
    pub pred_text: Option<String>,
    #[arg(long)]
    pub ref_text: Option<String>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub seeds: Option<u64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
}

/// Loss weights resolved from a preset plus individual overrides.
pub fn resolve_weights(
    s: &mut crate::config::Settings,
    a: &LossArgs,
) -> crate::error::CliResult<LossWeights> {
    let preset = s.value("preset", a.preset, Preset::Full)?;
    let base = preset.weights();
    let w = LossWeights {
        alpha1: s.value("alpha1", a.alpha1, base.alpha1)?,
        alpha2: s.value("alpha2", a.alpha2, base.alpha2)?,
        alpha3: s.value("alpha3", a.alpha3, base.alpha3)?,
        alpha4: s.value("alpha4", a.alpha4, base.alpha4)?,
        gamma: s.value("gamma", a.gamma, base.gamma)?,
        focal_mode: s
            .value("focal", a.focal, FocalArg::of(base.focal_mode))?
            .mode(),
        sl1_scale: s.value("sl1_scale", a.sl1_scale, base.sl1_scale)?,
        ..base
    };
    w.validate()?;
    Ok(w)
}
