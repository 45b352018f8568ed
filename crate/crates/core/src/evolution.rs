//! Time evolution of the truncated mode equations from the vacuum state.
//!
//! Two systems are integrated:
//!
//! * the full second-order system
//!   `Q̈_nk + ω_k(t)² Q_nk = 2λ Σ_j g_kj Q̇_nj + λ̇ Σ_j g_kj Q_nj + λ² Σ_jl g_jk g_jl Q_nl`
//!   with exact `λ(t)`, `λ̇(t)` and `ω_k(t)`;
//! * the first-order-in-`ε` system `Ẋ = V⁽⁰⁾X + εV⁽¹⁾(t)X`.
//!
//! Every row `n` evolves independently of the others, so rows are integrated
//! as separate ODEs and may be distributed over threads.

use num_complex::Complex64 as C64;

use crate::cavity::{self, CouplingMatrix, DriveTable};
use crate::error::{CasimirError, Result};
use crate::integrator::{integrate_dopri5, integrate_rk4, Frame, IntegratorConfig, OdeSystem, Scheme, Start};
use crate::par::{self, Execution};
use crate::params::CavityParams;
use crate::state::{pair_to_qp, qp_to_pair, QPState, XState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum System {
    Full,
    Linearized,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Trajectory {
    Full(Vec<QPState>),
    Linearized(Vec<XState>),
}

/// Coefficients of the full system that do not depend on the state.
#[derive(Debug, Clone)]
struct FullCoefficients {
    modes: usize,
    omega1: f64,
    g: Vec<f64>,
    gram: Vec<f64>,
}

impl FullCoefficients {
    fn new(p: &CavityParams) -> Self {
        let g = CouplingMatrix::new(p.modes());
        FullCoefficients {
            modes: p.modes(),
            omega1: p.omega1(),
            gram: g.gram(),
            g: g.as_slice().to_vec(),
        }
    }

    /// Coupling part of `Ṗ_k` plus `(ω_k² − ω_k(t)²) Q_k`, i.e. everything
    /// except the static restoring force `−ω_k² Q_k`.
    fn drive_force(&self, p: &CavityParams, t: f64, q: &[C64], pdot: &[C64], out: &mut [C64]) {
        let k_max = self.modes;
        let lambda = cavity::wall_log_derivative(t, p);
        let lambda_rate = cavity::wall_log_derivative_rate(t, p);
        let l_ratio = cavity::wall_position(t, p) / p.l0();
        let inv_l2 = 1.0 / (l_ratio * l_ratio);
        let lambda2 = lambda * lambda;
        let u: Vec<C64> = (0..k_max).map(|j| 2.0 * lambda * pdot[j] + lambda_rate * q[j]).collect();
        for k in 0..k_max {
            let g_row = &self.g[k * k_max..(k + 1) * k_max];
            let h_row = &self.gram[k * k_max..(k + 1) * k_max];
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..k_max {
                acc += g_row[j] * u[j] + (lambda2 * h_row[j]) * q[j];
            }
            let w0 = (k + 1) as f64 * self.omega1;
            out[k] = acc + w0 * w0 * (1.0 - inv_l2) * q[k];
        }
    }
}

/// `(Q̇, Ṗ)` of the full system for one state of all rows.
pub fn rhs_full(t: f64, state: &QPState, p: &CavityParams) -> Result<QPState> {
    let k_max = p.modes();
    for m in [&state.q, &state.p] {
        if m.dim() != (k_max, k_max) {
            return Err(CasimirError::DimensionMismatch {
                expected: k_max,
                got: m.nrows(),
            });
        }
    }
    let coeffs = FullCoefficients::new(p);
    let mut out = QPState::zeros(k_max, t);
    let mut force = vec![C64::new(0.0, 0.0); k_max];
    for n in 0..k_max {
        let q: Vec<C64> = state.q.row(n).to_vec();
        let pd: Vec<C64> = state.p.row(n).to_vec();
        coeffs.drive_force(p, t, &q, &pd, &mut force);
        for k in 0..k_max {
            let w0 = p.omega(k + 1);
            out.q[[n, k]] = pd[k];
            out.p[[n, k]] = force[k] - w0 * w0 * q[k];
        }
    }
    Ok(out)
}

/// `dX/dt = V⁽⁰⁾X + εV⁽¹⁾(t)X` for one state of all rows.
pub fn rhs_linearized(t: f64, state: &XState, p: &CavityParams) -> Result<XState> {
    let k_max = p.modes();
    if state.x.dim() != (k_max, 2 * k_max) {
        return Err(CasimirError::DimensionMismatch {
            expected: 2 * k_max,
            got: state.x.ncols(),
        });
    }
    let sys = LinearizedRow::new(p, Frame::Lab);
    let mut out = XState::zeros(k_max, t);
    let mut dy = vec![C64::new(0.0, 0.0); 2 * k_max];
    for n in 0..k_max {
        let y: Vec<C64> = state.x.row(n).to_vec();
        sys.rhs(t, &y, &mut dy);
        out.x.row_mut(n).assign(&ndarray::ArrayView1::from(&dy));
    }
    Ok(out)
}

/// Phases `e^{iω_k t}` for `k = 1..=K`.
fn free_phases(omega1: f64, k_max: usize, t: f64) -> Vec<C64> {
    (1..=k_max).map(|k| C64::cis(k as f64 * omega1 * t)).collect()
}

struct FullRow<'a> {
    params: &'a CavityParams,
    coeffs: &'a FullCoefficients,
    frame: Frame,
}

impl OdeSystem for FullRow<'_> {
    fn dim(&self) -> usize {
        2 * self.coeffs.modes
    }

    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
        let k_max = self.coeffs.modes;
        let mut force = vec![C64::new(0.0, 0.0); k_max];
        match self.frame {
            Frame::Lab => {
                let (q, pd) = y.split_at(k_max);
                self.coeffs.drive_force(self.params, t, q, pd, &mut force);
                for k in 0..k_max {
                    let w0 = self.params.omega(k + 1);
                    dy[k] = pd[k];
                    dy[k_max + k] = force[k] - w0 * w0 * q[k];
                }
            }
            Frame::Interaction => {
                let phases = free_phases(self.coeffs.omega1, k_max, t);
                let mut q = vec![C64::new(0.0, 0.0); k_max];
                let mut pd = vec![C64::new(0.0, 0.0); k_max];
                for k in 0..k_max {
                    let ph = phases[k];
                    let (qq, pp) = pair_to_qp(y[2 * k] * ph.conj(), y[2 * k + 1] * ph, self.params.omega(k + 1));
                    q[k] = qq;
                    pd[k] = pp;
                }
                self.coeffs.drive_force(self.params, t, &q, &pd, &mut force);
                for k in 0..k_max {
                    let w = self.params.omega(k + 1);
                    // only Ṗ is driven, so dX∓ = ±i f / √(2ω)
                    let dx = C64::i() * force[k] / (2.0 * w).sqrt();
                    dy[2 * k] = dx * phases[k];
                    dy[2 * k + 1] = -dx * phases[k].conj();
                }
            }
        }
    }
}

struct LinearizedRow {
    modes: usize,
    omega1: f64,
    drive_frequency: f64,
    epsilon: f64,
    table: DriveTable,
    frame: Frame,
}

impl LinearizedRow {
    fn new(p: &CavityParams, frame: Frame) -> Self {
        LinearizedRow {
            modes: p.modes(),
            omega1: p.omega1(),
            drive_frequency: p.drive_frequency(),
            epsilon: p.epsilon(),
            table: DriveTable::new(p),
            frame,
        }
    }

    /// Writes `ε V⁽¹⁾(t) x` into `out`.
    fn apply_drive(&self, t: f64, x: &[C64], out: &mut [C64]) {
        let dim = 2 * self.modes;
        let c_plus = self.epsilon * self.omega1 * C64::cis(self.drive_frequency * t);
        let c_minus = c_plus.conj();
        let (vp, vm) = (self.table.plus(), self.table.minus());
        for r in 0..dim {
            let (mut ap, mut am) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
            for c in 0..dim {
                ap += vp[r * dim + c] * x[c];
                am += vm[r * dim + c] * x[c];
            }
            out[r] = c_plus * ap + c_minus * am;
        }
    }
}

impl OdeSystem for LinearizedRow {
    fn dim(&self) -> usize {
        2 * self.modes
    }

    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
        let k_max = self.modes;
        match self.frame {
            Frame::Lab => {
                self.apply_drive(t, y, dy);
                for k in 0..k_max {
                    let w = (k + 1) as f64 * self.omega1;
                    dy[2 * k] += C64::new(0.0, -w) * y[2 * k];
                    dy[2 * k + 1] += C64::new(0.0, w) * y[2 * k + 1];
                }
            }
            Frame::Interaction => {
                let phases = free_phases(self.omega1, k_max, t);
                let mut x = vec![C64::new(0.0, 0.0); 2 * k_max];
                for k in 0..k_max {
                    x[2 * k] = y[2 * k] * phases[k].conj();
                    x[2 * k + 1] = y[2 * k + 1] * phases[k];
                }
                self.apply_drive(t, &x, dy);
                for k in 0..k_max {
                    dy[2 * k] *= phases[k];
                    dy[2 * k + 1] *= phases[k].conj();
                }
            }
        }
    }
}

fn check_sample_times(times: &[f64], p: &CavityParams) -> Result<()> {
    let stop = p.duration();
    let slack = 1e-12 * stop.max(1.0);
    let sorted = times.windows(2).all(|w| w[0] <= w[1]);
    let inside = times.iter().all(|&t| t.is_finite() && t >= 0.0 && t <= stop + slack);
    if sorted && inside {
        Ok(())
    } else {
        Err(CasimirError::SampleTimes { stop })
    }
}

fn run_rows<S: OdeSystem + Sync>(
    sys_for_row: &S,
    initial: impl Fn(usize) -> Vec<C64> + Sync,
    p: &CavityParams,
    cfg: &IntegratorConfig,
    times: &[f64],
    exec: Execution,
) -> Result<Vec<Vec<Vec<C64>>>> {
    cfg.validate(p)?;
    check_sample_times(times, p)?;
    let rows = par::map_range(exec, p.modes(), |n| {
        let y0 = initial(n);
        match cfg.scheme {
            Scheme::Rk4 { .. } => {
                let h = cfg.step_size(p).expect("fixed-step scheme has a step");
                integrate_rk4(sys_for_row, &y0, 0.0, h, times, cfg.max_steps)
            }
            Scheme::Adaptive { rtol, atol } => integrate_dopri5(sys_for_row, &y0, 0.0, rtol, atol, times, cfg.max_steps),
        }
    });
    rows.into_iter().collect()
}

/// Integrate the full system from the vacuum (joined at `t = 0` according to
/// `cfg.start`), returning `(Q, Q̇)` at each sample time.
pub fn integrate_full(p: &CavityParams, cfg: &IntegratorConfig, sample_times: &[f64], exec: Execution) -> Result<Vec<QPState>> {
    let initial = match cfg.start {
        Start::Matched => QPState::vacuum_matched(p),
        Start::Static => QPState::vacuum(p),
    };
    integrate_full_from(&initial, p, cfg, sample_times, exec)
}

/// Integrate the full system from an arbitrary `(Q, Q̇)` given at `t = 0`.
pub fn integrate_full_from(initial: &QPState, p: &CavityParams, cfg: &IntegratorConfig, sample_times: &[f64], exec: Execution) -> Result<Vec<QPState>> {
    let k_max = p.modes();
    if initial.q.dim() != (k_max, k_max) || initial.p.dim() != (k_max, k_max) {
        return Err(CasimirError::DimensionMismatch {
            expected: k_max,
            got: initial.q.nrows(),
        });
    }
    let coeffs = FullCoefficients::new(p);
    let sys = FullRow {
        params: p,
        coeffs: &coeffs,
        frame: cfg.frame,
    };
    let to_vars = |n: usize| {
        let mut y = vec![C64::new(0.0, 0.0); 2 * k_max];
        for k in 0..k_max {
            let (q, pd) = (initial.q[[n, k]], initial.p[[n, k]]);
            match cfg.frame {
                Frame::Lab => {
                    y[k] = q;
                    y[k_max + k] = pd;
                }
                Frame::Interaction => {
                    let (m, pl) = qp_to_pair(q, pd, p.omega(k + 1));
                    y[2 * k] = m;
                    y[2 * k + 1] = pl;
                }
            }
        }
        y
    };
    let rows = run_rows(&sys, to_vars, p, cfg, sample_times, exec)?;
    let mut out: Vec<QPState> = sample_times.iter().map(|&t| QPState::zeros(k_max, t)).collect();
    for (n, row) in rows.iter().enumerate() {
        for (s, y) in out.iter_mut().zip(row) {
            match cfg.frame {
                Frame::Lab => {
                    for k in 0..k_max {
                        s.q[[n, k]] = y[k];
                        s.p[[n, k]] = y[k_max + k];
                    }
                }
                Frame::Interaction => {
                    let phases = free_phases(p.omega1(), k_max, s.t);
                    for k in 0..k_max {
                        let (q, pd) = pair_to_qp(y[2 * k] * phases[k].conj(), y[2 * k + 1] * phases[k], p.omega(k + 1));
                        s.q[[n, k]] = q;
                        s.p[[n, k]] = pd;
                    }
                }
            }
        }
    }
    if let Some(bad) = out.iter().find(|s| !s.is_finite()) {
        return Err(CasimirError::NonFinite(bad.t));
    }
    Ok(out)
}

/// Integrate the linearised X system from the vacuum.
pub fn integrate_linearized(p: &CavityParams, cfg: &IntegratorConfig, sample_times: &[f64], exec: Execution) -> Result<Vec<XState>> {
    let sys = LinearizedRow::new(p, cfg.frame);
    let k_max = p.modes();
    let initial = |n: usize| {
        let mut y = vec![C64::new(0.0, 0.0); 2 * k_max];
        y[2 * n] = C64::new(1.0, 0.0);
        y
    };
    let rows = run_rows(&sys, initial, p, cfg, sample_times, exec)?;
    let mut out: Vec<XState> = sample_times.iter().map(|&t| XState::zeros(k_max, t)).collect();
    for (n, row) in rows.iter().enumerate() {
        for (s, y) in out.iter_mut().zip(row) {
            let phases = match cfg.frame {
                Frame::Lab => vec![C64::new(1.0, 0.0); k_max],
                Frame::Interaction => free_phases(p.omega1(), k_max, s.t),
            };
            for k in 0..k_max {
                s.x[[n, 2 * k]] = y[2 * k] * phases[k].conj();
                s.x[[n, 2 * k + 1]] = y[2 * k + 1] * phases[k];
            }
        }
    }
    Ok(out)
}

pub fn integrate(system: System, p: &CavityParams, cfg: &IntegratorConfig, sample_times: &[f64], exec: Execution) -> Result<Trajectory> {
    match system {
        System::Full => integrate_full(p, cfg, sample_times, exec).map(Trajectory::Full),
        System::Linearized => integrate_linearized(p, cfg, sample_times, exec).map(Trajectory::Linearized),
    }
}

/// Full-system state at the wall-stop time `T`.
pub fn evolve_full(p: &CavityParams, cfg: &IntegratorConfig, exec: Execution) -> Result<QPState> {
    let mut v = integrate_full(p, cfg, &[p.duration()], exec)?;
    Ok(v.pop().expect("one sample requested"))
}
