//! Explicit Runge–Kutta integrators for complex first-order systems.
//!
//! Two schemes are provided: classical fixed-step RK4, which is
//! bit-reproducible for a given step, and the adaptive Dormand–Prince 5(4)
//! embedded pair.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{CasimirError, Result};
use crate::params::CavityParams;

/// A system `dy/dt = f(t, y)` on `ℂ^dim`.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scheme {
    /// Classical RK4 with `steps_per_period` steps per drive period `2π/Ω`.
    Rk4 { steps_per_period: u32 },
    /// Dormand–Prince 5(4) with mixed relative/absolute error control.
    Adaptive { rtol: f64, atol: f64 },
}

/// Variables the integrator advances.
///
/// `Interaction` factors out the static free evolution `e^{∓iω_k t}` so that
/// only the drive-induced part of the motion is time-stepped; `Lab`
/// integrates the equations exactly as written. Both describe the same ODE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Frame {
    Lab,
    Interaction,
}

/// How the vacuum mode functions are joined onto the moving-wall equations
/// at `t = 0`.
///
/// The wall leaves `L0` with velocity `εΩL0`, so continuity of `ψ` and `∂ψ/∂t`
/// gives `Q̇_nk(0) = −iω_k Q_nk(0) + λ(0) Σ_l g_kl Q_nl(0)`; that is `Matched`.
/// `Static` drops the `λ(0)` term and starts from `Q̇ = −iωQ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Start {
    #[default]
    Matched,
    Static,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    pub frame: Frame,
    #[serde(default)]
    pub start: Start,
    pub max_steps: usize,
}

pub const DEFAULT_STEPS_PER_PERIOD: u32 = 200;
pub const DEFAULT_RTOL: f64 = 1e-10;
pub const DEFAULT_MAX_STEPS: usize = 50_000_000;

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig::rk4(DEFAULT_STEPS_PER_PERIOD)
    }
}

impl IntegratorConfig {
    pub fn rk4(steps_per_period: u32) -> Self {
        IntegratorConfig {
            scheme: Scheme::Rk4 { steps_per_period },
            frame: Frame::Interaction,
            start: Start::Matched,
            max_steps: DEFAULT_MAX_STEPS,
        }
    }

    pub fn adaptive(rtol: f64, atol: f64) -> Self {
        IntegratorConfig {
            scheme: Scheme::Adaptive { rtol, atol },
            frame: Frame::Interaction,
            start: Start::Matched,
            max_steps: DEFAULT_MAX_STEPS,
        }
    }

    pub fn in_frame(mut self, frame: Frame) -> Self {
        self.frame = frame;
        self
    }

    pub fn with_start(mut self, start: Start) -> Self {
        self.start = start;
        self
    }

    /// Nominal RK4 step for these parameters, or `None` for adaptive runs.
    pub fn step_size(&self, p: &CavityParams) -> Option<f64> {
        match self.scheme {
            Scheme::Rk4 { steps_per_period } => Some(p.drive_period() / steps_per_period as f64),
            Scheme::Adaptive { .. } => None,
        }
    }

    pub fn validate(&self, p: &CavityParams) -> Result<()> {
        let bad = |m: String| Err(CasimirError::InvalidParameter(m));
        if self.max_steps == 0 {
            return bad("max_steps must be positive".into());
        }
        match self.scheme {
            Scheme::Rk4 { steps_per_period } => {
                if steps_per_period == 0 {
                    return bad("steps per period must be positive".into());
                }
                let h = p.drive_period() / steps_per_period as f64;
                let n = p.duration() / h;
                if (n - n.round()).abs() > 1e-6 * n.max(1.0) {
                    return bad(format!("fixed step {h} does not divide T = {} into an integer number of steps", p.duration()));
                }
            }
            Scheme::Adaptive { rtol, atol } => {
                if !(rtol > 0.0 && rtol.is_finite() && atol > 0.0 && atol.is_finite()) {
                    return bad(format!("tolerances must be positive, got rtol={rtol} atol={atol}"));
                }
            }
        }
        Ok(())
    }
}

fn check_finite(y: &[C64], t: f64) -> Result<()> {
    if y.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(CasimirError::NonFinite(t))
    }
}

#[inline]
fn axpy_into(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for i in 0..out.len() {
        let mut acc = C64::new(0.0, 0.0);
        for (c, k) in terms {
            acc += *c * k[i];
        }
        out[i] = y[i] + h * acc;
    }
}

/// Advance `y0` from `t0` with fixed-step RK4, returning the state at each of
/// `targets` (sorted, `≥ t0`). Each gap between consecutive targets is split
/// into the fewest equal steps no longer than `h`.
pub fn integrate_rk4<S: OdeSystem>(sys: &S, y0: &[C64], t0: f64, h: f64, targets: &[f64], max_steps: usize) -> Result<Vec<Vec<C64>>> {
    let dim = sys.dim();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut steps = 0usize;
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![C64::new(0.0, 0.0); dim],
        vec![C64::new(0.0, 0.0); dim],
        vec![C64::new(0.0, 0.0); dim],
        vec![C64::new(0.0, 0.0); dim],
        vec![C64::new(0.0, 0.0); dim],
    );
    let mut out = Vec::with_capacity(targets.len());
    for &target in targets {
        let span = target - t;
        if span > 0.0 {
            let n = ((span / h) - 1e-9).ceil().max(1.0) as usize;
            let he = span / n as f64;
            let start = t;
            for i in 0..n {
                if steps >= max_steps {
                    return Err(CasimirError::StepLimitExceeded { max_steps, target });
                }
                let ts = start + i as f64 * he;
                sys.rhs(ts, &y, &mut k1);
                axpy_into(&mut tmp, &y, he, &[(0.5, &k1)]);
                sys.rhs(ts + 0.5 * he, &tmp, &mut k2);
                axpy_into(&mut tmp, &y, he, &[(0.5, &k2)]);
                sys.rhs(ts + 0.5 * he, &tmp, &mut k3);
                axpy_into(&mut tmp, &y, he, &[(1.0, &k3)]);
                sys.rhs(ts + he, &tmp, &mut k4);
                for j in 0..dim {
                    y[j] += he / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
                }
                steps += 1;
                check_finite(&y, ts + he)?;
            }
            t = target;
        }
        out.push(y.clone());
    }
    Ok(out)
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn scaled_rms(v: &[C64], y: &[C64], y_new: &[C64], rtol: f64, atol: f64) -> f64 {
    let sum: f64 = v
        .iter()
        .zip(y.iter().zip(y_new))
        .map(|(e, (a, b))| {
            let sc = atol + rtol * a.norm().max(b.norm());
            (e.norm() / sc).powi(2)
        })
        .sum();
    (sum / v.len().max(1) as f64).sqrt()
}

fn initial_step<S: OdeSystem>(sys: &S, t0: f64, y0: &[C64], f0: &[C64], rtol: f64, atol: f64, span: f64) -> f64 {
    let d0 = scaled_rms(y0, y0, y0, rtol, atol);
    let d1 = scaled_rms(f0, y0, y0, rtol, atol);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let y1: Vec<C64> = y0.iter().zip(f0).map(|(y, f)| y + h0 * f).collect();
    let mut f1 = vec![C64::new(0.0, 0.0); y0.len()];
    sys.rhs(t0 + h0, &y1, &mut f1);
    let diff: Vec<C64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = scaled_rms(&diff, y0, y0, rtol, atol) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}

/// Advance `y0` with adaptive Dormand–Prince 5(4), landing exactly on every
/// entry of `targets`.
pub fn integrate_dopri5<S: OdeSystem>(sys: &S, y0: &[C64], t0: f64, rtol: f64, atol: f64, targets: &[f64], max_steps: usize) -> Result<Vec<Vec<C64>>> {
    let dim = sys.dim();
    let zero = C64::new(0.0, 0.0);
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut k1 = vec![zero; dim];
    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) = (
        vec![zero; dim],
        vec![zero; dim],
        vec![zero; dim],
        vec![zero; dim],
        vec![zero; dim],
        vec![zero; dim],
    );
    let mut tmp = vec![zero; dim];
    let mut y_new = vec![zero; dim];
    let mut err = vec![zero; dim];
    sys.rhs(t, &y, &mut k1);
    let mut h = None;
    let mut steps = 0usize;
    let mut out = Vec::with_capacity(targets.len());
    for &target in targets {
        while target - t > 1e-14 * target.abs().max(1.0) {
            if steps >= max_steps {
                return Err(CasimirError::StepLimitExceeded { max_steps, target });
            }
            let span = target - t;
            let mut hh = *h.get_or_insert_with(|| initial_step(sys, t, &y, &k1, rtol, atol, span));
            let last = hh >= span;
            if last {
                hh = span;
            }
            axpy_into(&mut tmp, &y, hh, &[(A21, &k1)]);
            sys.rhs(t + C2 * hh, &tmp, &mut k2);
            axpy_into(&mut tmp, &y, hh, &[(A31, &k1), (A32, &k2)]);
            sys.rhs(t + C3 * hh, &tmp, &mut k3);
            axpy_into(&mut tmp, &y, hh, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
            sys.rhs(t + C4 * hh, &tmp, &mut k4);
            axpy_into(&mut tmp, &y, hh, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
            sys.rhs(t + C5 * hh, &tmp, &mut k5);
            axpy_into(&mut tmp, &y, hh, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
            sys.rhs(t + hh, &tmp, &mut k6);
            axpy_into(&mut y_new, &y, hh, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let t_new = if last { target } else { t + hh };
            sys.rhs(t_new, &y_new, &mut k7);
            for i in 0..dim {
                err[i] = hh * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            }
            let e = scaled_rms(&err, &y, &y_new, rtol, atol);
            steps += 1;
            if !e.is_finite() {
                return Err(CasimirError::NonFinite(t_new));
            }
            let factor = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
            if e <= 1.0 {
                check_finite(&y_new, t_new)?;
                std::mem::swap(&mut y, &mut y_new);
                std::mem::swap(&mut k1, &mut k7);
                t = t_new;
                // keep the controller's step, not the clipped landing step
                let base = if last { h.unwrap_or(hh).max(hh) } else { hh };
                h = Some(base * factor);
            } else {
                let next = hh * factor.min(1.0);
                if next <= 1e-14 * t.abs().max(1.0) {
                    return Err(CasimirError::ToleranceFailure { t, h: next });
                }
                h = Some(next);
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}
