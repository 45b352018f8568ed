//! Closed-form perturbative solution of the linearised mode equations.
//!
//! Amplitudes are expanded as `X = X⁽⁰⁾ + ε X⁽¹⁾ + ε² X⁽²⁾ + …`. The first
//! order is exact for the linearised system; the second order keeps only the
//! secular `(ω₁t)²` chain.

use num_complex::Complex64 as C64;

use crate::cavity::drive_coefficient;
use crate::error::Result;
use crate::params::{CavityParams, Sign};

/// Below this `|m|` the kernel uses its resonant branch.
pub const M_TOL: f64 = 1e-9;

/// `E^k_m(t)`: `ω₁t e^{−ikω₁t}` on resonance, otherwise
/// `(i/m)(e^{−i(m+k)ω₁t} − e^{−ikω₁t})`.
///
/// The off-resonant branch is evaluated as
/// `e^{−ikθ} (sin mθ − 2i sin²(mθ/2)) / m`, which has no cancellation as
/// `m → 0` and tends continuously to the resonant value.
pub fn e_kernel(m: f64, k: f64, t: f64, p: &CavityParams) -> C64 {
    let theta = p.omega1() * t;
    let carrier = C64::cis(-k * theta);
    if m.abs() <= M_TOL {
        return carrier * theta;
    }
    let x = m * theta;
    let half = (0.5 * x).sin();
    carrier * C64::new(x.sin(), -2.0 * half * half) / m
}

/// `X⁽⁰⁾_{n,kσ}(t) = δ_nk δ_{σ−} e^{−iω_k t}`.
pub fn x_zeroth(n: usize, k: usize, sigma: Sign, t: f64, p: &CavityParams) -> Result<C64> {
    p.check_mode(n)?;
    p.check_mode(k)?;
    Ok(if n == k && sigma == Sign::Minus {
        C64::cis(-p.omega(k) * t)
    } else {
        C64::new(0.0, 0.0)
    })
}

/// Bare first-order coefficient `X⁽¹⁾_{n,kσ}(t)` (not multiplied by `ε`).
pub fn x_first_order(n: usize, k: usize, sigma: Sign, t: f64, p: &CavityParams) -> Result<C64> {
    p.check_mode(n)?;
    p.check_mode(k)?;
    Ok(first_order_terms(n, k, sigma, t, p, false))
}

fn first_order_terms(n: usize, k: usize, sigma: Sign, t: f64, p: &CavityParams, resonant_only: bool) -> C64 {
    let vm = drive_coefficient(Sign::Minus, k, Sign::Minus, n, Sign::Minus, p);
    let vp = drive_coefficient(Sign::Plus, k, Sign::Minus, n, Sign::Minus, p);
    let (nf, kf, g) = (n as f64, k as f64, p.gamma());
    let (sign, kk, m_minus, m_plus) = match sigma {
        Sign::Plus => (-1.0, -kf, nf + g + kf, nf - g + kf),
        Sign::Minus => (1.0, kf, nf + g - kf, nf - g - kf),
    };
    let term = |v: f64, m: f64| {
        if v == 0.0 || (resonant_only && m.abs() > M_TOL) {
            C64::new(0.0, 0.0)
        } else {
            v * e_kernel(m, kk, t, p)
        }
    };
    sign * (term(vm, m_minus) + term(vp, m_plus))
}

/// `Q_nk(t)` through first order in `ε`.
pub fn q_first_order(n: usize, k: usize, t: f64, p: &CavityParams) -> Result<C64> {
    let zeroth = x_zeroth(n, k, Sign::Minus, t, p)?;
    let first = x_first_order(n, k, Sign::Minus, t, p)? + x_first_order(n, k, Sign::Plus, t, p)?;
    Ok((zeroth + p.epsilon() * first) / (2.0 * p.omega(k)).sqrt())
}

/// `Q_nk(t)` keeping only the secular first-order terms, those on the lines
/// `k = γ − n`, `k = n + γ` and `k = n − γ`.
pub fn q_resonant(n: usize, k: usize, t: f64, p: &CavityParams) -> Result<C64> {
    let gamma = p.integer_gamma()?;
    let zeroth = x_zeroth(n, k, Sign::Minus, t, p)?;
    let (ni, ki) = (n as i64, k as i64);
    let w = p.omega(k);
    let vm = drive_coefficient(Sign::Minus, k, Sign::Minus, n, Sign::Minus, p);
    let vp = drive_coefficient(Sign::Plus, k, Sign::Minus, n, Sign::Minus, p);
    let mut secular = C64::new(0.0, 0.0);
    if ki == gamma - ni {
        secular -= vp * C64::cis(w * t);
    }
    if ki == ni + gamma {
        secular += vm * C64::cis(-w * t);
    }
    if ki == ni - gamma {
        secular += vp * C64::cis(-w * t);
    }
    let growth = p.epsilon() * p.omega1() * t;
    Ok((zeroth + growth * secular) / (2.0 * w).sqrt())
}

/// Secular part of the bare second-order coefficient `X⁽²⁾_{n,kσ}(t)`:
///
/// `½(ω₁t)² e^{σikω₁t} Σ_{σ₁,s₁,s₂} δ_{0,−σk+(s₁+s₂)γ−n} v^{s₂}_{kσ;jσ₁} v^{s₁}_{jσ₁;n−}`
///
/// with `j = σ₁(s₁γ − n)`. Chains whose intermediate `j` is outside `1..=K`
/// are dropped.
pub fn x_second_order_resonant(n: usize, k: usize, sigma: Sign, t: f64, p: &CavityParams) -> Result<C64> {
    let gamma = p.integer_gamma()?;
    p.check_mode(n)?;
    p.check_mode(k)?;
    let (ni, ki) = (n as i64, k as i64);
    let sv = sigma.value() as i64;
    let mut chain = 0.0;
    for s1 in Sign::BOTH {
        for s2 in Sign::BOTH {
            let total = (s1.value() + s2.value()) as i64;
            if -sv * ki + total * gamma - ni != 0 {
                continue;
            }
            for sigma1 in Sign::BOTH {
                let j = sigma1.value() as i64 * (s1.value() as i64 * gamma - ni);
                if j < 1 || j > p.modes() as i64 {
                    continue;
                }
                let j = j as usize;
                chain += drive_coefficient(s2, k, sigma, j, sigma1, p) * drive_coefficient(s1, j, sigma1, n, Sign::Minus, p);
            }
        }
    }
    let theta = p.omega1() * t;
    Ok(0.5 * theta * theta * C64::cis(sigma.value() * k as f64 * theta) * chain)
}

/// Truncated series `Σ_{q≤order} ε^q X⁽q⁾` evaluated on demand.
#[derive(Debug, Clone, Copy)]
pub struct PerturbativeSolution {
    params: CavityParams,
    order: u8,
    resonant_only: bool,
}

impl PerturbativeSolution {
    /// `order` is capped at 2. Order 2 always uses the secular chain and
    /// requires integer `γ`.
    pub fn new(params: CavityParams, order: u8, resonant_only: bool) -> Result<Self> {
        let order = order.min(2);
        if order == 2 || resonant_only {
            params.integer_gamma()?;
        }
        Ok(PerturbativeSolution { params, order, resonant_only })
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn resonant_only(&self) -> bool {
        self.resonant_only
    }

    pub fn params(&self) -> &CavityParams {
        &self.params
    }

    pub fn x(&self, n: usize, k: usize, sigma: Sign, t: f64) -> Result<C64> {
        let p = &self.params;
        let mut x = x_zeroth(n, k, sigma, t, p)?;
        if self.order >= 1 {
            x += p.epsilon() * first_order_terms(n, k, sigma, t, p, self.resonant_only);
        }
        if self.order >= 2 {
            x += p.epsilon().powi(2) * x_second_order_resonant(n, k, sigma, t, p)?;
        }
        Ok(x)
    }

    /// `Q_nk = (X_{k−} + X_{k+}) / √(2ω_k)`.
    pub fn q(&self, n: usize, k: usize, t: f64) -> Result<C64> {
        let sum = self.x(n, k, Sign::Minus, t)? + self.x(n, k, Sign::Plus, t)?;
        Ok(sum / (2.0 * self.params.omega(k)).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn params(eps: f64, gamma: f64) -> CavityParams {
        CavityParams::new(1.0, eps, gamma, 100.0, 8).unwrap()
    }

    // ω₁ = π at L0 = 1, so ω₁t = θ means t = θ/π
    fn at(theta: f64) -> f64 {
        theta / PI
    }

    #[test]
    fn kernel_values() {
        let p = params(1e-3, 2.0);
        let e = e_kernel(1.0, 1.0, at(PI), &p);
        assert!((e - C64::new(0.0, 2.0)).norm() < 1e-14);
        assert_eq!(e_kernel(3.0, 2.0, 0.0, &p), C64::new(0.0, 0.0));
        assert_eq!(e_kernel(0.0, 2.0, 0.0, &p), C64::new(0.0, 0.0));
        assert_relative_eq!(e_kernel(0.0, 3.0, at(7.5), &p).norm(), 7.5, max_relative = 1e-15);
    }

    #[test]
    fn kernel_matches_direct_form_away_from_zero() {
        let p = params(1e-3, 2.0);
        for &(m, k, th) in &[(1.0, 1.0, 0.7), (-2.5, 3.0, 12.0), (0.37, -2.0, 40.0)] {
            let direct = C64::i() / m * (C64::cis(-(m + k) * th) - C64::cis(-k * th));
            assert!((e_kernel(m, k, at(th), &p) - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn kernel_continuous_at_resonance() {
        let p = params(1e-3, 2.0);
        for &th in &[1.0, 10.0, 50.0, 100.0] {
            let e0 = e_kernel(0.0, 2.0, at(th), &p);
            for &m in &[1e-6, 1e-8, -1e-6] {
                let gap = (e_kernel(m, 2.0, at(th), &p) - e0).norm() / e0.norm();
                assert!(gap < 1e-4, "m={m} θ={th} gap={gap}");
            }
        }
    }

    #[test]
    fn zeroth_order() {
        let p = params(1e-3, 2.0);
        assert_eq!(x_zeroth(2, 2, Sign::Minus, 0.0, &p).unwrap(), C64::new(1.0, 0.0));
        assert_eq!(x_zeroth(2, 2, Sign::Plus, 0.3, &p).unwrap(), C64::new(0.0, 0.0));
        assert!((x_zeroth(1, 1, Sign::Minus, at(PI / 2.0), &p).unwrap() - C64::new(0.0, -1.0)).norm() < 1e-15);
        assert!(x_zeroth(0, 1, Sign::Minus, 0.0, &p).is_err());
        assert!(x_zeroth(1, 9, Sign::Minus, 0.0, &p).is_err());
    }

    #[test]
    fn first_order_resonant_term() {
        let p = params(1e-3, 2.0);
        let th = 60.0;
        let full = x_first_order(1, 1, Sign::Plus, at(th), &p).unwrap();
        let secular = -0.5 * th * C64::cis(th);
        // remaining term is E⁻¹_4 with |E| ≤ 1/2
        let v_minus = drive_coefficient(Sign::Minus, 1, Sign::Minus, 1, Sign::Minus, &p);
        assert!((full - secular).norm() <= 0.5 * v_minus.abs() + 1e-12);
        assert!(x_first_order(1, 1, Sign::Minus, at(th), &p).unwrap().norm() < 1.0);
    }

    #[test]
    fn q_first_order_limits() {
        let p = params(0.0, 2.0);
        let t = 0.731;
        let expect = C64::cis(-p.omega(3) * t) / (2.0 * p.omega(3)).sqrt();
        assert!((q_first_order(3, 3, t, &p).unwrap() - expect).norm() < 1e-15);
        assert_eq!(q_first_order(2, 3, t, &p).unwrap(), C64::new(0.0, 0.0));
        let q = params(1e-3, 2.0);
        for n in 1..=4 {
            for k in 1..=4 {
                let expect = if n == k { 1.0 / (2.0 * q.omega(k)).sqrt() } else { 0.0 };
                assert!((q_first_order(n, k, 0.0, &q).unwrap() - expect).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn q_resonant_example() {
        let p = params(1e-3, 2.0);
        let th = 10.0;
        let q = q_resonant(1, 1, at(th), &p).unwrap();
        let zeroth = C64::cis(-th) / (2.0 * PI).sqrt();
        let expect = -1e-3 * th * 0.5 * C64::cis(th) / (2.0 * PI).sqrt();
        assert!((q - zeroth - expect).norm() < 1e-15);
        assert_eq!(q_resonant(1, 5, at(th), &p).unwrap(), C64::new(0.0, 0.0));
        assert!(q_resonant(1, 1, 1.0, &params(1e-3, 2.5)).is_err());
    }

    #[test]
    fn resonant_approximation_error_is_bounded() {
        let p = params(1e-3, 3.0);
        for n in 1..=6 {
            for k in 1..=6 {
                let (nf, kf, g) = (n as f64, k as f64, 3.0);
                let vm = drive_coefficient(Sign::Minus, k, Sign::Minus, n, Sign::Minus, &p).abs();
                let vp = drive_coefficient(Sign::Plus, k, Sign::Minus, n, Sign::Minus, &p).abs();
                let detunings = [nf + g + kf, nf - g + kf, nf + g - kf, nf - g - kf];
                let min_m = detunings.iter().map(|m| m.abs()).filter(|m| *m > 0.5).fold(f64::INFINITY, f64::min);
                let bound = 2.0 * 1e-3 * 2.0 * (vm + vp) / (min_m * (2.0 * p.omega(k)).sqrt());
                for i in 0..400 {
                    let t = at(0.5 * i as f64);
                    let gap = (q_resonant(n, k, t, &p).unwrap() - q_first_order(n, k, t, &p).unwrap()).norm();
                    assert!(gap <= bound + 1e-15, "n={n} k={k} gap={gap} bound={bound}");
                }
            }
        }
    }

    #[test]
    fn detuned_first_order_stays_bounded() {
        let p = params(1e-3, 2.5);
        let sup = |lo: f64, hi: f64| {
            (0..=2000)
                .map(|i| lo + (hi - lo) * i as f64 / 2000.0)
                .map(|th| {
                    (1..=4)
                        .flat_map(|n| (1..=4).map(move |k| (n, k)))
                        .map(|(n, k)| x_first_order(n, k, Sign::Minus, at(th), &p).unwrap().norm())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max)
        };
        let early = sup(0.0, 100.0);
        let late = sup(100.0, 200.0);
        assert!(late < 1.05 * early, "early={early} late={late}");
        assert!(early < 10.0);
    }

    #[test]
    fn second_order_chain_gamma_two() {
        let p = params(1e-3, 2.0);
        let th = 4.0;
        let x = x_second_order_resonant(1, 1, Sign::Minus, at(th), &p).unwrap();
        let expect = 0.5 * th * th * C64::cis(-th) * -0.5;
        assert!((x - expect).norm() < 1e-12, "{x} vs {expect}");
        assert_eq!(x_second_order_resonant(1, 1, Sign::Minus, 0.0, &p).unwrap(), C64::new(0.0, 0.0));
        assert!(x_second_order_resonant(1, 1, Sign::Minus, 1.0, &params(1e-3, 2.5)).is_err());
    }

    #[test]
    fn second_order_drops_chains_outside_truncation() {
        // with K = 2 the chain through mode 3 is gone, leaving 1/4
        let p = CavityParams::new(1.0, 1e-3, 2.0, 10.0, 2).unwrap();
        let th = 2.0;
        let x = x_second_order_resonant(1, 1, Sign::Minus, at(th), &p).unwrap();
        assert!((x - 0.5 * th * th * C64::cis(-th) * 0.25).norm() < 1e-12);
    }

    #[test]
    fn solution_orders() {
        let p = params(1e-3, 2.0);
        let t = at(20.0);
        let s0 = PerturbativeSolution::new(p, 0, false).unwrap();
        let s1 = PerturbativeSolution::new(p, 1, false).unwrap();
        let s2 = PerturbativeSolution::new(p, 5, false).unwrap();
        assert_eq!(s2.order(), 2);
        assert_eq!(s0.x(1, 1, Sign::Minus, t).unwrap(), x_zeroth(1, 1, Sign::Minus, t, &p).unwrap());
        assert!((s1.q(2, 3, t).unwrap() - q_first_order(2, 3, t, &p).unwrap()).norm() < 1e-15);
        let resonant = PerturbativeSolution::new(p, 1, true).unwrap();
        assert!((resonant.q(1, 3, t).unwrap() - q_resonant(1, 3, t, &p).unwrap()).norm() < 1e-15);
        for sol in [s1, s2, resonant] {
            for n in 1..=3 {
                for k in 1..=3 {
                    for sigma in Sign::BOTH {
                        assert_eq!(sol.x(n, k, sigma, 0.0).unwrap(), x_zeroth(n, k, sigma, 0.0, &p).unwrap());
                    }
                }
            }
        }
        assert!(PerturbativeSolution::new(params(1e-3, 2.5), 2, false).is_err());
        assert!(PerturbativeSolution::new(params(1e-3, 2.5), 1, false).is_ok());
    }

    proptest! {
        #[test]
        fn kernel_bounded_by_detuning(m in 0.01f64..20.0, k in -8i32..8, th in 0.0f64..500.0) {
            let p = params(1e-3, 2.0);
            let e = e_kernel(m, k as f64, at(th), &p);
            prop_assert!(e.norm() <= 2.0 / m + 1e-12);
            prop_assert!(e.norm() <= th + 1e-12);
        }

        #[test]
        fn first_order_vanishes_at_start(n in 1usize..=8, k in 1usize..=8, plus in any::<bool>(), gamma in 0.5f64..6.0) {
            let p = params(1e-3, gamma);
            let sigma = if plus { Sign::Plus } else { Sign::Minus };
            prop_assert_eq!(x_first_order(n, k, sigma, 0.0, &p).unwrap(), C64::new(0.0, 0.0));
        }
    }
}
