//! Run configuration: defaults, config file and flags merged into a
//! [`RunSpec`]. Flags win over the file, the file wins over defaults.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::Context;
use casimir_core::bogoliubov::{FIRST_ORDER_DEFECT_C, NUMERIC_DEFECT_TOL};
use casimir_core::integrator::{DEFAULT_MAX_STEPS, DEFAULT_RTOL, DEFAULT_STEPS_PER_PERIOD};
use casimir_core::{CavityParams, Frame, IntegratorConfig, Scheme, Start};
use serde::{Deserialize, Serialize};

use crate::args::{Cli, Command, ExperimentKind, Fault, Format, SchemeName};

pub const DEFAULT_GAMMA: f64 = 2.0;
pub const DEFAULT_EPSILON: f64 = 1e-3;
pub const DEFAULT_PERIODS: u32 = 16;
pub const DEFAULT_ATOL: f64 = 1e-13;
pub const DEFAULT_OUT: &str = "casimir-out";

/// Bad user input; maps to exit code 2.
#[derive(Debug)]
pub struct InvalidInput(pub String);

impl fmt::Display for InvalidInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InvalidInput {}

pub fn invalid(msg: impl Into<String>) -> anyhow::Error {
    InvalidInput(msg.into()).into()
}

#[derive(Deserialize, Debug, Clone, PartialEq)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

/// Contents of a `--config` file. Every key is optional.
#[derive(Deserialize, Debug, Clone, Default, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub l0: Option<f64>,
    pub gamma: Option<OneOrMany<f64>>,
    pub epsilon: Option<OneOrMany<f64>>,
    pub periods: Option<OneOrMany<u32>>,
    pub modes: Option<OneOrMany<usize>>,
    pub scheme: Option<SchemeName>,
    pub steps_per_period: Option<u32>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub frame: Option<Frame>,
    pub start: Option<Start>,
    pub max_steps: Option<usize>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
    pub defect_c: Option<f64>,
    pub unitarity_threshold: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| invalid(format!("bad config {}: {e}", path.display())))
    }
}

/// Lists of values spanning the run; single runs have one entry per axis.
/// An empty `modes` list means the default truncation for each `γ`.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct Axes {
    pub gamma: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub periods: Vec<u32>,
    pub modes: Vec<usize>,
}

/// One parameter combination.
#[derive(Serialize, Deserialize, Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub gamma: f64,
    pub epsilon: f64,
    pub periods: u32,
    pub modes: usize,
}

impl Point {
    pub fn params(&self, l0: f64) -> anyhow::Result<CavityParams> {
        CavityParams::with_periods(l0, self.epsilon, self.gamma, self.periods, self.modes).map_err(anyhow::Error::from)
    }

    pub fn label(&self) -> String {
        format!("g{}-e{:e}-M{}-K{}", self.gamma, self.epsilon, self.periods, self.modes)
    }
}

/// Fully resolved run description, echoed into every record.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub kind: ExperimentKind,
    pub tool_version: String,
    pub l0: f64,
    pub out: PathBuf,
    pub format: Format,
    pub workers: usize,
    pub seed: u64,
    pub defect_c: f64,
    pub unitarity_threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inject_fault: Option<Fault>,
    pub axes: Axes,
    pub integrator: IntegratorConfig,
}

fn pick<T>(flag: Vec<T>, file: Option<OneOrMany<T>>, default: Vec<T>) -> Vec<T> {
    if !flag.is_empty() {
        flag
    } else if let Some(v) = file {
        v.into_vec()
    } else {
        default
    }
}

impl RunSpec {
    pub fn resolve(cli: &Cli) -> anyhow::Result<Self> {
        let file = match &cli.common.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        RunSpec::merge(cli, file)
    }

    pub fn merge(cli: &Cli, file: FileConfig) -> anyhow::Result<Self> {
        let c = &cli.common;
        let kind = cli.command.kind();
        let (threshold_flag, fault) = match &cli.command {
            Command::Validate(v) => (v.unitarity_threshold, v.inject_fault),
            _ => (None, None),
        };
        let axes = Axes {
            gamma: pick(c.gamma.clone(), file.gamma, vec![DEFAULT_GAMMA]),
            epsilon: pick(c.epsilon.clone(), file.epsilon, vec![DEFAULT_EPSILON]),
            periods: pick(c.periods.clone(), file.periods, vec![DEFAULT_PERIODS]),
            modes: pick(c.modes.clone(), file.modes, Vec::new()),
        };
        let scheme = match c.scheme.or(file.scheme).unwrap_or(SchemeName::Rk4) {
            SchemeName::Rk4 => Scheme::Rk4 {
                steps_per_period: c.steps_per_period.or(file.steps_per_period).unwrap_or(DEFAULT_STEPS_PER_PERIOD),
            },
            SchemeName::Adaptive => Scheme::Adaptive {
                rtol: c.rtol.or(file.rtol).unwrap_or(DEFAULT_RTOL),
                atol: file.atol.unwrap_or(DEFAULT_ATOL),
            },
        };
        let integrator = IntegratorConfig {
            scheme,
            frame: file.frame.unwrap_or(Frame::Interaction),
            start: file.start.unwrap_or_default(),
            max_steps: file.max_steps.unwrap_or(DEFAULT_MAX_STEPS),
        };
        let spec = RunSpec {
            kind,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            l0: file.l0.unwrap_or(1.0),
            out: c.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            format: c.format.or(file.format).unwrap_or_default(),
            workers: c.workers.or(file.workers).unwrap_or(0),
            seed: file.seed.unwrap_or(0),
            defect_c: file.defect_c.unwrap_or(FIRST_ORDER_DEFECT_C),
            unitarity_threshold: threshold_flag.or(file.unitarity_threshold).unwrap_or(NUMERIC_DEFECT_TOL),
            inject_fault: fault,
            axes,
            integrator,
        };
        spec.check()?;
        Ok(spec)
    }

    fn check(&self) -> anyhow::Result<()> {
        let a = &self.axes;
        if a.gamma.is_empty() || a.epsilon.is_empty() || a.periods.is_empty() {
            return Err(invalid("every sweep axis needs at least one value"));
        }
        if self.defect_c.is_nan() || self.defect_c <= 0.0 || self.unitarity_threshold.is_nan() || self.unitarity_threshold < 0.0 {
            return Err(invalid("defect_c must be positive and unitarity_threshold nonnegative"));
        }
        let single = |name: &str, n: usize, max: usize| {
            if n > max {
                Err(invalid(format!(
                    "{} takes at most {max} value(s) for {name}; use `sweep` for lists",
                    self.kind.as_str()
                )))
            } else {
                Ok(())
            }
        };
        match self.kind {
            ExperimentKind::Sweep => {}
            ExperimentKind::Compare => {
                single("--gamma", a.gamma.len(), 1)?;
                single("--epsilon", a.epsilon.len(), 2)?;
                single("--periods", a.periods.len(), 1)?;
                single("--modes", a.modes.len(), 1)?;
            }
            _ => {
                single("--gamma", a.gamma.len(), 1)?;
                single("--epsilon", a.epsilon.len(), 1)?;
                single("--periods", a.periods.len(), 1)?;
                single("--modes", a.modes.len(), 1)?;
            }
        }
        for p in self.points() {
            p.params(self.l0)?;
            self.integrator.validate(&p.params(self.l0)?)?;
        }
        Ok(())
    }

    /// Cartesian product of the axes, sorted by `(γ, ε, M, K)` with duplicates
    /// removed.
    pub fn points(&self) -> Vec<Point> {
        let a = &self.axes;
        let mut out = Vec::new();
        for &gamma in &a.gamma {
            let modes = if a.modes.is_empty() {
                vec![CavityParams::default_modes(gamma)]
            } else {
                a.modes.clone()
            };
            for &epsilon in &a.epsilon {
                for &periods in &a.periods {
                    for &k in &modes {
                        out.push(Point {
                            gamma,
                            epsilon,
                            periods,
                            modes: k,
                        });
                    }
                }
            }
        }
        out.sort_by(|x, y| {
            x.gamma
                .total_cmp(&y.gamma)
                .then(x.epsilon.total_cmp(&y.epsilon))
                .then(x.periods.cmp(&y.periods))
                .then(x.modes.cmp(&y.modes))
        });
        out.dedup();
        out
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        toml::to_string(self).context("serialising run spec")
    }
}
