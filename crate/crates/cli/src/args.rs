use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug, Clone)]
#[command(name = "casimir", version, about = "Photon creation in a cavity with a vibrating wall")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Integrate the full mode equations and extract the photon spectrum.
    Simulate,
    /// Evaluate the closed-form perturbative spectra.
    Perturb,
    /// Full, linearised and analytic spectra side by side.
    Compare,
    /// Run `simulate` over the Cartesian product of the parameter lists.
    Sweep,
    /// Run the property suite and report each check.
    Validate(ValidateArgs),
}

impl Command {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            Command::Simulate => ExperimentKind::Simulate,
            Command::Perturb => ExperimentKind::Perturb,
            Command::Compare => ExperimentKind::Compare,
            Command::Sweep => ExperimentKind::Sweep,
            Command::Validate(_) => ExperimentKind::Validate,
        }
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// Drive ratio Ω/ω₁ (comma-separated list for sweeps).
    #[arg(long, global = true, value_delimiter = ',')]
    pub gamma: Vec<f64>,

    /// Relative wall amplitude (two values for a scaling study in `compare`).
    #[arg(long, global = true, value_delimiter = ',')]
    pub epsilon: Vec<f64>,

    /// Duration in whole drive periods, T = M·2π/Ω.
    #[arg(long = "periods", global = true, value_delimiter = ',', value_name = "M")]
    pub periods: Vec<u32>,

    /// Number of cavity modes kept, K.
    #[arg(long = "modes", global = true, value_delimiter = ',', value_name = "K")]
    pub modes: Vec<usize>,

    #[arg(long, global = true, value_enum)]
    pub scheme: Option<SchemeName>,

    /// RK4 steps per drive period.
    #[arg(long = "step-per-period", global = true)]
    pub steps_per_period: Option<u32>,

    /// Relative tolerance of the adaptive scheme.
    #[arg(long, global = true)]
    pub rtol: Option<f64>,

    /// TOML file with any of the settings above.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads; 0 uses every core, 1 runs sequentially.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ValidateArgs {
    /// Largest accepted unitarity defect of the numeric pair.
    #[arg(long)]
    pub unitarity_threshold: Option<f64>,

    /// Deliberately corrupt an input to exercise the report.
    #[arg(long, value_enum, hide = true)]
    pub inject_fault: Option<Fault>,
}

#[derive(ValueEnum, Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    Rk4,
    Adaptive,
}

#[derive(ValueEnum, Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Records,
    #[default]
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    pub fn records(self) -> bool {
        matches!(self, Format::Records | Format::Both)
    }
}

#[derive(ValueEnum, Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Flip the sign of g₁₂ only.
    GSign,
}

#[derive(Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Simulate,
    Perturb,
    Compare,
    Sweep,
    Validate,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Perturb => "perturb",
            ExperimentKind::Compare => "compare",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::Validate => "validate",
        }
    }
}
