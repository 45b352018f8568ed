//! Bogoliubov coefficients at wall-stop time and the resulting photon spectra.

use std::collections::BTreeSet;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::cavity::{self, CouplingMatrix};
use crate::error::{CasimirError, Result};
use crate::evolution;
use crate::integrator::IntegratorConfig;
use crate::par::Execution;
use crate::params::{CavityParams, Sign};
use crate::perturbation;
use crate::state::{qp_from_x, QPState, XState};

/// Tolerance on `|sin ΩT|` when checking that the wall is back at `L0`.
pub const STOP_PHASE_TOL: f64 = 1e-9;

/// Unitarity-defect allowance for numeric runs with a tight integrator.
pub const NUMERIC_DEFECT_TOL: f64 = 1e-6;

/// Default multiplier `C` in the `C·(εω₁T)²` defect allowance for first-order sources.
pub const FIRST_ORDER_DEFECT_C: f64 = 50.0;

/// Which computation a number came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    NumericFull,
    NumericLinearized,
    AnalyticResonant,
    AnalyticFirstOrder,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::NumericFull => "numeric-full",
            Provenance::NumericLinearized => "numeric-linearized",
            Provenance::AnalyticResonant => "analytic-resonant",
            Provenance::AnalyticFirstOrder => "analytic-first-order",
        }
    }

    /// Largest acceptable unitarity defect for a pair of this provenance.
    pub fn defect_tolerance(self, p: &CavityParams, c: f64) -> f64 {
        match self {
            Provenance::NumericFull => NUMERIC_DEFECT_TOL,
            _ => c * p.epsilon_omega_t().powi(2),
        }
    }
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `(α_nk, β_nk)`; rows are initial modes `n`, columns final modes `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BogoliubovPair {
    pub alpha: Array2<C64>,
    pub beta: Array2<C64>,
    pub stop_time: f64,
    pub provenance: Provenance,
}

impl BogoliubovPair {
    pub fn modes(&self) -> usize {
        self.alpha.nrows()
    }

    /// `α = I`, `β = 0`.
    pub fn identity(modes: usize, stop_time: f64, provenance: Provenance) -> Self {
        BogoliubovPair {
            alpha: Array2::eye(modes),
            beta: Array2::zeros((modes, modes)),
            stop_time,
            provenance,
        }
    }
}

/// Photon numbers `N_k = Σ_n |β_nk|²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonSpectrum {
    counts: Vec<f64>,
    pub provenance: Provenance,
}

impl PhotonSpectrum {
    pub fn new(counts: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if let Some(bad) = counts.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(CasimirError::InvalidParameter(format!(
                "photon numbers must be finite and nonnegative, got {bad}"
            )));
        }
        Ok(PhotonSpectrum { counts, provenance })
    }

    pub fn modes(&self) -> usize {
        self.counts.len()
    }

    /// `N_k` (1-based); `None` beyond the truncation, where it is unknown.
    pub fn get(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.counts.get(i)).copied()
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }
}

/// Result of [`peak_mode`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Peak {
    Modes(BTreeSet<usize>),
    /// Every entry is zero, so there is no maximum to report.
    Empty,
}

impl Peak {
    pub fn modes(&self) -> Option<&BTreeSet<usize>> {
        match self {
            Peak::Modes(m) => Some(m),
            Peak::Empty => None,
        }
    }
}

/// Check that the wall is back at `L0` at time `t`, i.e. `ε sin Ωt = 0`.
pub fn check_stop_time(t: f64, p: &CavityParams) -> Result<()> {
    if p.epsilon() == 0.0 {
        return Ok(());
    }
    let phase = (p.drive_frequency() * t).sin();
    if phase.abs() <= STOP_PHASE_TOL {
        return Ok(());
    }
    let nearest = (t / p.drive_period()).round() * p.drive_period();
    Err(CasimirError::MatchingDomain {
        t,
        offset: p.epsilon() * phase,
        nearest,
    })
}

/// Match the evolved mode functions onto static-cavity modes at `T = state.t`.
///
/// `lambda_t` is `L̇/L` at `T`; the wall still moves when it passes `L0`, and
/// the `λ Σ_l g_kl Q_nl` terms account for that.
pub fn project_bogoliubov(state: &QPState, lambda_t: f64, p: &CavityParams, provenance: Provenance) -> Result<BogoliubovPair> {
    let k_max = p.modes();
    if state.q.dim() != (k_max, k_max) || state.p.dim() != (k_max, k_max) {
        return Err(CasimirError::DimensionMismatch {
            expected: k_max,
            got: state.q.nrows(),
        });
    }
    let t = state.t;
    check_stop_time(t, p)?;
    let g = CouplingMatrix::new(k_max);
    let mut alpha = Array2::zeros((k_max, k_max));
    let mut beta = Array2::zeros((k_max, k_max));
    for n in 0..k_max {
        for k in 0..k_max {
            let w = p.omega(k + 1);
            let q = state.q[[n, k]];
            let qdot = state.p[[n, k]];
            let drag: C64 = (0..k_max).map(|l| g.get(k + 1, l + 1) * state.q[[n, l]]).sum::<C64>() * lambda_t;
            let denom = C64::i() * (2.0 * w).sqrt();
            let iwq = C64::i() * w * q;
            alpha[[n, k]] = (iwq - qdot + drag) * C64::cis(w * t) / denom;
            beta[[n, k]] = (iwq + qdot - drag) * C64::cis(-w * t) / denom;
        }
    }
    Ok(BogoliubovPair {
        alpha,
        beta,
        stop_time: t,
        provenance,
    })
}

/// Projection using `λ(T)` from the wall law.
pub fn project_at_stop(state: &QPState, p: &CavityParams, provenance: Provenance) -> Result<BogoliubovPair> {
    project_bogoliubov(state, cavity::wall_log_derivative(state.t, p), p, provenance)
}

/// Integrate the full system to `T` and project.
pub fn numeric_pair(p: &CavityParams, cfg: &IntegratorConfig, exec: Execution) -> Result<BogoliubovPair> {
    check_stop_time(p.duration(), p)?;
    let state = evolution::evolve_full(p, cfg, exec)?;
    project_at_stop(&state, p, Provenance::NumericFull)
}

/// Integrate the linearised system to `T`, map back to `(Q, Q̇)` and project.
pub fn linearized_pair(p: &CavityParams, cfg: &IntegratorConfig, exec: Execution) -> Result<BogoliubovPair> {
    check_stop_time(p.duration(), p)?;
    let x = evolution::integrate_linearized(p, cfg, &[p.duration()], exec)?;
    let state = qp_from_x(&x[0], p)?;
    project_at_stop(&state, p, Provenance::NumericLinearized)
}

/// Pair obtained by projecting the closed-form `X⁽⁰⁾ + εX⁽¹⁾` at `T`.
pub fn first_order_pair(p: &CavityParams) -> Result<BogoliubovPair> {
    let t = p.duration();
    check_stop_time(t, p)?;
    let k_max = p.modes();
    let mut x = XState::zeros(k_max, t);
    for n in 1..=k_max {
        for k in 1..=k_max {
            for sigma in Sign::BOTH {
                let v = perturbation::x_zeroth(n, k, sigma, t, p)? + p.epsilon() * perturbation::x_first_order(n, k, sigma, t, p)?;
                x.x[[n - 1, cavity::slot(k, sigma)]] = v;
            }
        }
    }
    project_at_stop(&qp_from_x(&x, p)?, p, Provenance::AnalyticFirstOrder)
}

/// Dominant (secular) `β_nk = −εω₁T v⁺_{k−,n−} δ_{k,γ−n} e^{−iω_k T}`.
pub fn beta_resonant_analytic(n: usize, k: usize, p: &CavityParams) -> Result<C64> {
    let gamma = p.integer_gamma()?;
    p.check_mode(n)?;
    p.check_mode(k)?;
    if k as i64 != gamma - n as i64 {
        return Ok(C64::new(0.0, 0.0));
    }
    let v = cavity::drive_coefficient(Sign::Plus, k, Sign::Minus, n, Sign::Minus, p);
    let t = p.duration();
    Ok(-p.epsilon_omega_t() * v * C64::cis(-p.omega(k) * t))
}

/// Resonant Bogoliubov pair to first order: `β` from
/// [`beta_resonant_analytic`] and `α = I` plus its secular corrections on the
/// lines `k = n ± γ`.
pub fn bogoliubov_resonant_analytic(p: &CavityParams) -> Result<BogoliubovPair> {
    let gamma = p.integer_gamma()?;
    let k_max = p.modes();
    let mut pair = BogoliubovPair::identity(k_max, p.duration(), Provenance::AnalyticResonant);
    let growth = p.epsilon_omega_t();
    for n in 1..=k_max {
        for k in 1..=k_max {
            pair.beta[[n - 1, k - 1]] = beta_resonant_analytic(n, k, p)?;
            let (ni, ki) = (n as i64, k as i64);
            let s = if ki == ni + gamma {
                Some(Sign::Minus)
            } else if ki == ni - gamma {
                Some(Sign::Plus)
            } else {
                None
            };
            if let Some(s) = s {
                let v = cavity::drive_coefficient(s, k, Sign::Minus, n, Sign::Minus, p);
                pair.alpha[[n - 1, k - 1]] += growth * v;
            }
        }
    }
    Ok(pair)
}

/// `N_k = Σ_n |β_nk|²`.
pub fn photon_number(b: &BogoliubovPair) -> PhotonSpectrum {
    let counts = b.beta.columns().into_iter().map(|col| col.iter().map(|z| z.norm_sqr()).sum()).collect();
    PhotonSpectrum {
        counts,
        provenance: b.provenance,
    }
}

/// `N_k = ¼ (γ − k) k (εω₁T)²` for `k < γ`, zero otherwise.
pub fn photon_number_analytic(k: usize, p: &CavityParams) -> Result<f64> {
    let gamma = p.integer_gamma()?;
    let ki = k as i64;
    if k == 0 || ki >= gamma {
        return Ok(0.0);
    }
    let x = p.epsilon_omega_t();
    Ok(0.25 * ((gamma - ki) * ki) as f64 * x * x)
}

/// [`photon_number_analytic`] for `k = 1..=K`.
pub fn spectrum_analytic(p: &CavityParams) -> Result<PhotonSpectrum> {
    let counts = (1..=p.modes()).map(|k| photon_number_analytic(k, p)).collect::<Result<Vec<_>>>()?;
    Ok(PhotonSpectrum {
        counts,
        provenance: Provenance::AnalyticResonant,
    })
}

/// All modes attaining the maximum photon number.
pub fn peak_mode(s: &PhotonSpectrum) -> Peak {
    peak_mode_within(s, 0.0)
}

/// Modes whose photon number is within `rel_tol` (relative) of the maximum.
pub fn peak_mode_within(s: &PhotonSpectrum, rel_tol: f64) -> Peak {
    let max = s.counts.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Peak::Empty;
    }
    let floor = max * (1.0 - rel_tol);
    Peak::Modes(s.counts.iter().enumerate().filter(|(_, &c)| c >= floor).map(|(i, _)| i + 1).collect())
}

/// `max_{n,m} |Σ_k (α_nk α*_mk − β_nk β*_mk) − δ_nm|`, the departure from the
/// Bogoliubov normalisation of the rows.
pub fn unitarity_defect(b: &BogoliubovPair) -> f64 {
    unitarity_defect_within(b, b.modes())
}

/// As [`unitarity_defect`] but restricted to `n, m ≤ limit`.
pub fn unitarity_defect_within(b: &BogoliubovPair, limit: usize) -> f64 {
    let rows = limit.min(b.modes());
    let k_max = b.alpha.ncols();
    let mut worst: f64 = 0.0;
    for n in 0..rows {
        for m in 0..rows {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..k_max {
                acc += b.alpha[[n, k]] * b.alpha[[m, k]].conj() - b.beta[[n, k]] * b.beta[[m, k]].conj();
            }
            if n == m {
                acc -= 1.0;
            }
            worst = worst.max(acc.norm());
        }
    }
    worst
}
