use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "kakeya-lab", version, about = "Kakeya-map regularity experiments")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Flat `key=value` file mirroring the flags (`command=` selects the subcommand).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Signed volume SV(t) over t in [0, 1] with a polynomial fit.
    Sweep(SweepArgs),
    /// One slice loop: winding field, signed volume, isoperimetric ratio.
    Slice(SliceArgs),
    /// Lebesgue measure of the image by rasterization (n = 3).
    Measure(MeasureArgs),
    /// δ-tube family over a δ-net and its union volume.
    Tubes(TubesArgs),
    /// Mollification deviation and gradient bounds across scales.
    Moll(MollArgs),
    /// Hölder fit, net Lipschitz constant and Slobodeckij seminorms.
    Regularity(RegularityArgs),
    /// Fixed-point directions for the line-Kakeya cover.
    LineKakeya(LineKakeyaArgs),
    /// Run an invariant suite and summarize pass/fail.
    Verify(VerifyArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Sweep(_) => "sweep",
            Command::Slice(_) => "slice",
            Command::Measure(_) => "measure",
            Command::Tubes(_) => "tubes",
            Command::Moll(_) => "moll",
            Command::Regularity(_) => "regularity",
            Command::LineKakeya(_) => "line-kakeya",
            Command::Verify(_) => "verify",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Sweep(a) => &a.common,
            Command::Slice(a) => &a.common,
            Command::Measure(a) => &a.common,
            Command::Tubes(a) => &a.common,
            Command::Moll(a) => &a.common,
            Command::Regularity(a) => &a.common,
            Command::LineKakeya(a) => &a.common,
            Command::Verify(a) => &a.common,
        }
    }
}

/// Flags shared by every subcommand. `jobs` and `out` never reach the report.
#[derive(Clone, Debug, Args, Serialize)]
pub struct Common {
    /// Ambient dimension; 4 enables the reduced feature set.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(3..=4))]
    pub n: u8,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads (overridden by KAKEYA_LAB_JOBS).
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..=1024))]
    #[serde(skip)]
    pub jobs: Option<u16>,

    /// Primary output file; companions share its stem.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SvMethodArg {
    Stokes,
    Grid,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindingArg {
    AngleSum,
    Ray,
    Scanline,
    SolidAngle,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Core,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,

    #[arg(long, default_value = "zero")]
    pub map: String,

    #[arg(long, default_value_t = 2048, value_parser = clap::value_parser!(u32).range(16..=1_000_000))]
    pub mesh: u32,

    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u32).range(2..=100_000))]
    pub t_steps: u32,

    /// Mollification scale; omitted means the raw boundary map.
    #[arg(long)]
    pub epsilon: Option<f64>,

    #[arg(long, value_enum, default_value_t = SvMethodArg::Stokes)]
    pub method: SvMethodArg,

    /// Grid spacing for `--method grid`.
    #[arg(long, default_value_t = 0.01)]
    pub h: f64,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct SliceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,

    #[arg(long, default_value = "zero")]
    pub map: String,

    #[arg(long, default_value_t = 2048, value_parser = clap::value_parser!(u32).range(16..=1_000_000))]
    pub mesh: u32,

    #[arg(long, default_value_t = 0.5)]
    pub t: f64,

    #[arg(long)]
    pub epsilon: Option<f64>,

    #[arg(long, default_value_t = 0.01)]
    pub h: f64,

    /// Defaults to scanline for n = 3 and solid-angle for n = 4.
    #[arg(long, value_enum)]
    pub method: Option<WindingArg>,

    /// Radius of the neighbourhood whose measure is reported.
    #[arg(long)]
    pub r: Option<f64>,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct MeasureArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,

    #[arg(long, default_value = "zero")]
    pub map: String,

    #[arg(long, default_value_t = 0.01)]
    pub h: f64,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct TubesArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,

    #[arg(long, default_value = "zero")]
    pub map: String,

    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,

    /// Grid spacing; defaults to δ/4.
    #[arg(long)]
    pub h: Option<f64>,

    /// Scalings L of the map for the tube-volume experiment.
    #[arg(long, value_delimiter = ',')]
    pub l_values: Vec<f64>,

    /// Visit net candidates in a `--seed`-shuffled order.
    #[arg(long)]
    pub shuffle: bool,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct MollArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,

    #[arg(long, default_value = "zero")]
    pub map: String,

    #[arg(long, default_value_t = 4096, value_parser = clap::value_parser!(u32).range(16..=1_000_000))]
    pub mesh: u32,

    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.05, 0.025])]
    pub epsilons: Vec<f64>,

    /// Hölder exponent for the ratios; defaults to the lacunary α, else 1.
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Height of the slice whose mollified length is reported.
    #[arg(long, default_value_t = 0.5)]
    pub t: f64,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct RegularityArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,

    #[arg(long, default_value = "zero")]
    pub map: String,

    #[arg(long, default_value_t = 512, value_parser = clap::value_parser!(u32).range(16..=1_000_000))]
    pub mesh: u32,

    /// Finest fit scale is 2^-finest.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(i32).range(1..=30))]
    pub finest: i32,

    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(i32).range(1..=30))]
    pub coarsest: i32,

    #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.75])]
    pub theta: Vec<f64>,

    #[arg(long, default_value_t = 2.0)]
    pub p: f64,

    /// Net spacing for the Lipschitz constant on a δ-net.
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct LineKakeyaArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,

    /// Sphere-domain map, ignored when `--trials` is given.
    #[arg(long, default_value = "zero")]
    pub map: String,

    #[arg(long, value_delimiter = ',', default_values_t = [2.0, 0.0, 0.0])]
    pub x: Vec<f64>,

    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,

    /// Random polynomial maps with seeds `seed .. seed + trials`.
    #[arg(long)]
    pub trials: Option<u32>,

    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..=12))]
    pub degree: u32,

    #[arg(long, default_value_t = 0.5)]
    pub sup: f64,

    /// Cap radius for the cone coverage check.
    #[arg(long)]
    pub cap: Option<f64>,

    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u32).range(1..=1_000_000))]
    pub samples: u32,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,

    #[arg(long, value_enum, default_value_t = Suite::Core)]
    pub suite: Suite,
}
