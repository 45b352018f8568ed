//! Dynamical state containers and the `(Q, P) ↔ X` change of variables.
//!
//! Row `n` of every matrix is the mode function that started as cavity mode
//! `n`; column `k` (or the column pair `2(k−1)`, `2(k−1)+1` for X) is the
//! instantaneous mode `k`.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{CasimirError, Result};
use crate::params::{CavityParams, Sign};

/// Mode amplitudes `Q_nk` and their time derivatives `P_nk = Q̇_nk`.
#[derive(Debug, Clone, PartialEq)]
pub struct QPState {
    pub t: f64,
    pub q: Array2<C64>,
    pub p: Array2<C64>,
}

/// Linearised amplitudes `X_{n,kσ}` stored as a `K × 2K` array with columns
/// interleaved `(1−, 1+, 2−, 2+, …)`.
#[derive(Debug, Clone, PartialEq)]
pub struct XState {
    pub t: f64,
    pub x: Array2<C64>,
}

impl QPState {
    pub fn zeros(modes: usize, t: f64) -> Self {
        QPState {
            t,
            q: Array2::zeros((modes, modes)),
            p: Array2::zeros((modes, modes)),
        }
    }

    /// `Q_nk = δ_nk / √(2ω_k)`, `P_nk = −i √(ω_k/2) δ_nk` at `t = 0`.
    pub fn vacuum(params: &CavityParams) -> Self {
        let k_max = params.modes();
        let mut s = QPState::zeros(k_max, 0.0);
        for k in 1..=k_max {
            let w = params.omega(k);
            s.q[[k - 1, k - 1]] = C64::new(1.0 / (2.0 * w).sqrt(), 0.0);
            s.p[[k - 1, k - 1]] = C64::new(0.0, -(w / 2.0).sqrt());
        }
        s
    }

    /// [`QPState::vacuum`] with the wall-velocity term added to `Q̇`:
    /// `Q̇_nk(0) = −iω_k Q_nk + λ(0) Σ_l g_kl Q_nl`.
    pub fn vacuum_matched(params: &CavityParams) -> Self {
        let mut s = QPState::vacuum(params);
        let lambda = crate::cavity::wall_log_derivative(0.0, params);
        if lambda != 0.0 {
            for n in 1..=params.modes() {
                let q = 1.0 / (2.0 * params.omega(n)).sqrt();
                for k in 1..=params.modes() {
                    s.p[[n - 1, k - 1]] += lambda * crate::cavity::coupling_g(k, n) * q;
                }
            }
        }
        s
    }

    pub fn modes(&self) -> usize {
        self.q.nrows()
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.p.iter()).all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl XState {
    pub fn zeros(modes: usize, t: f64) -> Self {
        XState {
            t,
            x: Array2::zeros((modes, 2 * modes)),
        }
    }

    /// `X_{n,k−} = δ_nk`, `X_{n,k+} = 0`.
    pub fn vacuum(modes: usize) -> Self {
        let mut s = XState::zeros(modes, 0.0);
        for k in 0..modes {
            s.x[[k, 2 * k]] = C64::new(1.0, 0.0);
        }
        s
    }

    pub fn modes(&self) -> usize {
        self.x.nrows()
    }

    /// `X_{n,kσ}` with 1-based `n`, `k`.
    pub fn get(&self, n: usize, k: usize, sigma: Sign) -> C64 {
        self.x[[n - 1, crate::cavity::slot(k, sigma)]]
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

fn check_dims(rows: usize, cols: usize, expect_cols: usize, params: &CavityParams) -> Result<()> {
    if rows != params.modes() {
        return Err(CasimirError::DimensionMismatch {
            expected: params.modes(),
            got: rows,
        });
    }
    if cols != expect_cols {
        return Err(CasimirError::DimensionMismatch {
            expected: expect_cols,
            got: cols,
        });
    }
    Ok(())
}

/// `X_{n,k∓} = √(ω_k/2) (Q_nk ± i P_nk / ω_k)` with static `ω_k = k ω₁`.
pub fn x_from_qp(state: &QPState, params: &CavityParams) -> Result<XState> {
    let k_max = params.modes();
    check_dims(state.q.nrows(), state.q.ncols(), k_max, params)?;
    check_dims(state.p.nrows(), state.p.ncols(), k_max, params)?;
    let mut out = XState::zeros(k_max, state.t);
    for n in 0..k_max {
        for k in 0..k_max {
            let (minus, plus) = qp_to_pair(state.q[[n, k]], state.p[[n, k]], params.omega(k + 1));
            out.x[[n, 2 * k]] = minus;
            out.x[[n, 2 * k + 1]] = plus;
        }
    }
    Ok(out)
}

/// `Q = (X₋ + X₊)/√(2ω_k)`, `P = i √(ω_k/2) (−X₋ + X₊)`.
pub fn qp_from_x(state: &XState, params: &CavityParams) -> Result<QPState> {
    let k_max = params.modes();
    check_dims(state.x.nrows(), state.x.ncols(), 2 * k_max, params)?;
    let mut out = QPState::zeros(k_max, state.t);
    for n in 0..k_max {
        for k in 0..k_max {
            let (q, p) = pair_to_qp(state.x[[n, 2 * k]], state.x[[n, 2 * k + 1]], params.omega(k + 1));
            out.q[[n, k]] = q;
            out.p[[n, k]] = p;
        }
    }
    Ok(out)
}

#[inline]
pub(crate) fn qp_to_pair(q: C64, p: C64, omega: f64) -> (C64, C64) {
    let a = (omega / 2.0).sqrt();
    let ip = C64::i() * p / omega;
    (a * (q + ip), a * (q - ip))
}

#[inline]
pub(crate) fn pair_to_qp(minus: C64, plus: C64, omega: f64) -> (C64, C64) {
    let q = (minus + plus) / (2.0 * omega).sqrt();
    let p = C64::i() * (omega / 2.0).sqrt() * (plus - minus);
    (q, p)
}
