//! Per-run TOML records and the rows of the summary CSV.

use anyhow::Context;
use casimir_core::bogoliubov::{peak_mode_within, unitarity_defect_within, BogoliubovPair, PhotonSpectrum, Provenance};
use casimir_core::CavityParams;
use serde::{Deserialize, Serialize};

use crate::spec::{Point, RunSpec};

/// Modes within this fraction of the largest count are reported as peaks.
pub const PEAK_REL_TOL: f64 = 0.01;

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct SpectrumRecord {
    pub provenance: Provenance,
    pub epsilon: f64,
    pub counts: Vec<f64>,
    pub peak_modes: Vec<usize>,
}

impl SpectrumRecord {
    pub fn new(s: &PhotonSpectrum, epsilon: f64) -> Self {
        SpectrumRecord {
            provenance: s.provenance,
            epsilon,
            counts: s.counts().to_vec(),
            peak_modes: peak_mode_within(s, PEAK_REL_TOL)
                .modes()
                .map(|m| m.iter().copied().collect())
                .unwrap_or_default(),
        }
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct DefectRecord {
    pub provenance: Provenance,
    pub epsilon: f64,
    /// Rows and columns `n, m ≤ window` enter the maximum.
    pub window: usize,
    pub defect: f64,
    pub tolerance: f64,
    pub within: bool,
}

impl DefectRecord {
    pub fn new(pair: &BogoliubovPair, p: &CavityParams, defect_c: f64) -> Self {
        let window = p.modes() / 2;
        let defect = unitarity_defect_within(pair, window);
        let tolerance = pair.provenance.defect_tolerance(p, defect_c);
        DefectRecord {
            provenance: pair.provenance,
            epsilon: p.epsilon(),
            window,
            defect,
            tolerance,
            within: defect <= tolerance,
        }
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct ComparisonRecord {
    pub provenance: String,
    pub epsilon: Vec<f64>,
    /// `max |Q_full − Q_lin|` over the sample grid, one entry per `ε`.
    pub max_deviation: Vec<f64>,
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling_exponent: Option<f64>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct PropertyRecord {
    pub name: String,
    pub measured: f64,
    pub bound: String,
    pub passed: bool,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub tool: String,
    pub version: String,
    pub elapsed_seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default)]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_omega_t: Option<f64>,
    pub spec: RunSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<CavityParams>,
    #[serde(default)]
    pub spectra: Vec<SpectrumRecord>,
    #[serde(default)]
    pub defects: Vec<DefectRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<ComparisonRecord>,
    #[serde(default)]
    pub properties: Vec<PropertyRecord>,
}

impl RunRecord {
    pub fn new(spec: &RunSpec, point: Option<Point>) -> Self {
        let params = point.and_then(|pt| pt.params(spec.l0).ok());
        RunRecord {
            tool: "casimir".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            elapsed_seconds: 0.0,
            error: None,
            warnings: Vec::new(),
            epsilon_omega_t: params.map(|p| p.epsilon_omega_t()),
            spec: spec.clone(),
            point,
            params,
            spectra: Vec::new(),
            defects: Vec::new(),
            comparison: None,
            properties: Vec::new(),
        }
    }

    pub fn spectrum(&self, provenance: Provenance, epsilon: f64) -> Option<&SpectrumRecord> {
        self.spectra.iter().find(|s| s.provenance == provenance && s.epsilon == epsilon)
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        toml::to_string(self).context("serialising run record")
    }
}

/// One line of `summary.csv`.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub gamma: f64,
    pub epsilon: f64,
    #[serde(rename = "M")]
    pub periods: u32,
    #[serde(rename = "K")]
    pub modes: usize,
    pub k: Option<usize>,
    #[serde(rename = "N_numeric")]
    pub n_numeric: Option<f64>,
    #[serde(rename = "N_analytic")]
    pub n_analytic: Option<f64>,
    pub rel_err: Option<f64>,
    pub provenance: String,
}

fn rel_err(numeric: Option<f64>, analytic: Option<f64>) -> Option<f64> {
    match (numeric, analytic) {
        (Some(n), Some(a)) if a > 0.0 => Some((n - a).abs() / a),
        _ => None,
    }
}

impl SummaryRow {
    fn at(point: &Point, epsilon: f64, k: Option<usize>, provenance: String) -> Self {
        SummaryRow {
            gamma: point.gamma,
            epsilon,
            periods: point.periods,
            modes: point.modes,
            k,
            n_numeric: None,
            n_analytic: None,
            rel_err: None,
            provenance,
        }
    }

    /// One row per mode pairing a numeric spectrum with an optional analytic
    /// one.
    pub fn compare(point: &Point, numeric: &SpectrumRecord, analytic: Option<&SpectrumRecord>) -> Vec<Self> {
        let provenance = match analytic {
            Some(a) => format!("{}/{}", numeric.provenance, a.provenance),
            None => numeric.provenance.to_string(),
        };
        (0..numeric.counts.len())
            .map(|i| {
                let n = Some(numeric.counts[i]);
                let a = analytic.map(|a| a.counts[i]);
                SummaryRow {
                    n_numeric: n,
                    n_analytic: a,
                    rel_err: rel_err(n, a),
                    ..SummaryRow::at(point, numeric.epsilon, Some(i + 1), provenance.clone())
                }
            })
            .collect()
    }

    /// One row per mode for a closed-form spectrum.
    pub fn analytic(point: &Point, s: &SpectrumRecord) -> Vec<Self> {
        (0..s.counts.len())
            .map(|i| SummaryRow {
                n_analytic: Some(s.counts[i]),
                ..SummaryRow::at(point, s.epsilon, Some(i + 1), s.provenance.to_string())
            })
            .collect()
    }

    pub fn failed(point: &Point, msg: &str) -> Self {
        SummaryRow::at(point, point.epsilon, None, format!("failed: {msg}"))
    }
}
