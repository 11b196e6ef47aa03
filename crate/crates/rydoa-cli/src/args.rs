//! Command-line surface: `rydoa {spectrum|qcrb-sweep|compare|doa}`.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "rydoa", version, about = "Polarization-aware DoA toolkit for a single Rydberg receiver")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Synthesize a Zeeman-resolved EIT spectrum and extract its peaks.
    Spectrum(SpectrumArgs),
    /// Sweep the per-angle QCRB over scene or bias variables.
    QcrbSweep(QcrbSweepArgs),
    /// Tabulate single-cell QCRB against ULA and VSA baselines.
    Compare(CompareArgs),
    /// Run the end-to-end DoA reconstruction, optionally with Monte Carlo noise.
    Doa(DoaArgs),
}

/// Flags shared by every subcommand.
#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Scenario preset name (also searched on RYDOA_PRESET_PATH).
    #[arg(long)]
    pub preset: Option<String>,

    /// Scenario override as key=value (flat scenario keys, JSON values);
    /// repeatable, applied after any dedicated flag.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,

    /// Output path; stdout when omitted. Sidecar files derive from it.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Worker threads for sweep points (defaults to the logical core count).
    #[arg(long)]
    pub jobs: Option<usize>,

    /// RNG seed recorded in the output header.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Transition {
    E1,
    M1,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Which ladder to read out.
    #[arg(long, value_enum, default_value_t = Transition::E1)]
    pub transition: Transition,

    /// Scene polarization angle override, degrees.
    #[arg(long, value_name = "DEG")]
    pub theta_rf: Option<f64>,

    /// Bias magnitude override, millitesla.
    #[arg(long, value_name = "MT")]
    pub b_bias: Option<f64>,

    /// Bias tilt override, degrees.
    #[arg(long, value_name = "DEG")]
    pub theta_bias: Option<f64>,

    /// Also write a matplotlib stub next to --out.
    #[arg(long, requires = "out")]
    pub plot_script: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepVar {
    ThetaRf,
    ThetaBias,
    E0,
    BBias,
    Snr,
    NElements,
    Distance,
    NAtoms,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::ThetaRf => "theta_rf_deg",
            SweepVar::ThetaBias => "theta_bias_deg",
            SweepVar::E0 => "e0_v_per_m",
            SweepVar::BBias => "b_bias_t",
            SweepVar::Snr => "snr",
            SweepVar::NElements => "n_elements",
            SweepVar::Distance => "distance_m",
            SweepVar::NAtoms => "n_atoms",
        }
    }
}

/// One sweep axis: endpoints, point count, spacing.
#[derive(Debug, Clone, Copy, Args)]
pub struct AxisArgs {
    /// Swept variable.
    #[arg(long, value_enum)]
    pub variable: SweepVar,

    /// First grid value (degrees / SI units of the variable).
    #[arg(long, allow_hyphen_values = true)]
    pub start: f64,

    /// Last grid value.
    #[arg(long, allow_hyphen_values = true)]
    pub stop: f64,

    /// Number of grid points (>= 2).
    #[arg(long)]
    pub steps: usize,

    /// Logarithmic spacing (endpoints must be positive).
    #[arg(long)]
    pub log: bool,
}

#[derive(Debug, Args)]
pub struct QcrbSweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    #[command(flatten)]
    pub axis: AxisArgs,

    /// Secondary sweep variable for 2-D grids.
    #[arg(long, value_enum)]
    pub variable2: Option<SweepVar>,

    #[arg(long, requires = "variable2", allow_hyphen_values = true)]
    pub start2: Option<f64>,

    #[arg(long, requires = "variable2", allow_hyphen_values = true)]
    pub stop2: Option<f64>,

    #[arg(long, requires = "variable2")]
    pub steps2: Option<usize>,

    #[arg(long, requires = "variable2")]
    pub log2: bool,

    /// Also write a matplotlib stub next to --out.
    #[arg(long, requires = "out")]
    pub plot_script: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    #[command(flatten)]
    pub axis: AxisArgs,

    /// Array size for the ULA/VSA columns when n_elements is not swept.
    #[arg(long, default_value_t = 16)]
    pub n_elements: usize,

    /// Readout SNR when snr is not the swept variable.
    #[arg(long, default_value_t = 1.0)]
    pub snr: f64,

    /// Also write a matplotlib stub next to --out.
    #[arg(long, requires = "out")]
    pub plot_script: bool,
}

#[derive(Debug, Args)]
pub struct DoaArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Relative readout noise on line areas and projection magnitudes.
    #[arg(long, default_value_t = 0.0)]
    pub noise_rel: f64,

    /// Monte Carlo trial count (0 disables the noise study).
    #[arg(long, default_value_t = 0)]
    pub trials: usize,
}
