//! Cavity geometry: wall trajectory, instantaneous sine basis, inter-mode
//! couplings `g_kj` and the drive coefficients `v^s_{kσ,jσ'}`.

use num_complex::Complex64 as C64;

use crate::error::{CasimirError, Result};
use crate::params::{CavityParams, Sign};

/// `L(t) = L0 (1 + ε sin Ωt)`.
pub fn wall_position(t: f64, p: &CavityParams) -> f64 {
    p.l0() * (1.0 + p.epsilon() * (p.drive_frequency() * t).sin())
}

/// `λ(t) = L̇ / L`, exact in `ε`.
pub fn wall_log_derivative(t: f64, p: &CavityParams) -> f64 {
    let w = p.drive_frequency();
    let (s, c) = (w * t).sin_cos();
    p.epsilon() * w * c / (1.0 + p.epsilon() * s)
}

/// `L̈ / L`, exact in `ε`.
pub fn wall_accel_ratio(t: f64, p: &CavityParams) -> f64 {
    let w = p.drive_frequency();
    let s = (w * t).sin();
    -p.epsilon() * w * w * s / (1.0 + p.epsilon() * s)
}

/// `λ̇ = L̈/L − λ²`.
pub fn wall_log_derivative_rate(t: f64, p: &CavityParams) -> f64 {
    let lambda = wall_log_derivative(t, p);
    wall_accel_ratio(t, p) - lambda * lambda
}

/// Instantaneous mode frequency `ω_k(t) = kπ / L(t)`.
pub fn mode_frequency(k: usize, t: f64, p: &CavityParams) -> Result<f64> {
    p.check_mode(k)?;
    Ok(k as f64 * std::f64::consts::PI / wall_position(t, p))
}

/// Coupling `g_kj = (−1)^(k−j) 2kj / (j² − k²)`, zero on the diagonal.
///
/// Indices are 1-based.
pub fn coupling_g(k: usize, j: usize) -> f64 {
    debug_assert!(k >= 1 && j >= 1);
    if k == j {
        return 0.0;
    }
    let (kf, jf) = (k as f64, j as f64);
    let parity = if (k + j).is_multiple_of(2) { 1.0 } else { -1.0 };
    parity * 2.0 * kf * jf / (jf * jf - kf * kf)
}

/// Dense antisymmetric `K × K` table of [`coupling_g`].
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl CouplingMatrix {
    pub fn new(size: usize) -> Self {
        let mut entries = vec![0.0; size * size];
        for k in 1..=size {
            for j in 1..=size {
                entries[(k - 1) * size + (j - 1)] = coupling_g(k, j);
            }
        }
        CouplingMatrix { size, entries }
    }

    /// Build from raw row-major entries, e.g. to inject a fault in tests.
    pub fn from_entries(size: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != size * size {
            return Err(CasimirError::DimensionMismatch {
                expected: size * size,
                got: entries.len(),
            });
        }
        Ok(CouplingMatrix { size, entries })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// `g_kj` with 1-based indices.
    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.entries[(k - 1) * self.size + (j - 1)]
    }

    /// Row-major entries with 0-based layout.
    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    /// `H_kl = Σ_j g_jk g_jl` (that is `GᵀG`), the kernel of the `λ²` term.
    pub fn gram(&self) -> Vec<f64> {
        let n = self.size;
        let mut h = vec![0.0; n * n];
        for k in 0..n {
            for l in 0..n {
                h[k * n + l] = (0..n).map(|j| self.entries[j * n + k] * self.entries[j * n + l]).sum();
            }
        }
        h
    }

    /// Largest `|g_kj + g_jk|` over all pairs.
    pub fn antisymmetry_defect(&self) -> f64 {
        let n = self.size;
        let mut worst: f64 = 0.0;
        for k in 0..n {
            for j in 0..n {
                worst = worst.max((self.entries[k * n + j] + self.entries[j * n + k]).abs());
            }
        }
        worst
    }
}

/// Drive coefficient
/// `v^s_{kσ,jσ'} = σγ g_kj √(j/k) (σ'/2 + sγ/(4j)) − sσ (k/2) δ_kj`.
pub fn drive_coefficient(s: Sign, k: usize, sigma: Sign, j: usize, sigma_p: Sign, p: &CavityParams) -> f64 {
    drive_value(s, k, sigma, j, sigma_p, p.gamma())
}

fn drive_value(s: Sign, k: usize, sigma: Sign, j: usize, sigma_p: Sign, gamma: f64) -> f64 {
    let (kf, jf) = (k as f64, j as f64);
    let (s, sigma, sigma_p) = (s.value(), sigma.value(), sigma_p.value());
    let coupled = sigma * gamma * coupling_g(k, j) * (jf / kf).sqrt() * (0.5 * sigma_p + s * gamma / (4.0 * jf));
    let diagonal = if k == j { s * sigma * 0.5 * kf } else { 0.0 };
    coupled - diagonal
}

/// Dense tables of `v^+` and `v^−` on the interleaved `(1−, 1+, 2−, …)`
/// layout, each `2K × 2K` row-major.
#[derive(Debug, Clone)]
pub struct DriveTable {
    modes: usize,
    plus: Vec<f64>,
    minus: Vec<f64>,
}

impl DriveTable {
    pub fn new(p: &CavityParams) -> Self {
        let k_max = p.modes();
        let dim = 2 * k_max;
        let mut plus = vec![0.0; dim * dim];
        let mut minus = vec![0.0; dim * dim];
        for k in 1..=k_max {
            for sigma in Sign::BOTH {
                let row = slot(k, sigma);
                for j in 1..=k_max {
                    for sigma_p in Sign::BOTH {
                        let col = slot(j, sigma_p);
                        plus[row * dim + col] = drive_value(Sign::Plus, k, sigma, j, sigma_p, p.gamma());
                        minus[row * dim + col] = drive_value(Sign::Minus, k, sigma, j, sigma_p, p.gamma());
                    }
                }
            }
        }
        DriveTable { modes: k_max, plus, minus }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn get(&self, s: Sign, k: usize, sigma: Sign, j: usize, sigma_p: Sign) -> f64 {
        let dim = 2 * self.modes;
        let idx = slot(k, sigma) * dim + slot(j, sigma_p);
        match s {
            Sign::Plus => self.plus[idx],
            Sign::Minus => self.minus[idx],
        }
    }

    pub fn plus(&self) -> &[f64] {
        &self.plus
    }

    pub fn minus(&self) -> &[f64] {
        &self.minus
    }
}

/// Position of `(k, σ)` in an interleaved X vector (`k` is 1-based).
#[inline]
pub fn slot(k: usize, sigma: Sign) -> usize {
    2 * (k - 1) + sigma.index()
}

/// `φ_k(x, L) = √(2/L) sin(kπx/L)`.
pub fn instantaneous_basis(k: usize, x: f64, length: f64) -> Result<f64> {
    if length.is_nan() || length <= 0.0 || !(0.0..=length).contains(&x) {
        return Err(CasimirError::Domain { x, length });
    }
    Ok((2.0 / length).sqrt() * (k as f64 * std::f64::consts::PI * x / length).sin())
}

/// `ψ_n(x, t) = Σ_k Q_nk(t) φ_k(x, L(t))` for one row `Q_n·` of mode amplitudes.
pub fn mode_function_eval(x: f64, t: f64, row: &[C64], p: &CavityParams) -> Result<C64> {
    if row.len() != p.modes() {
        return Err(CasimirError::DimensionMismatch {
            expected: p.modes(),
            got: row.len(),
        });
    }
    let length = wall_position(t, p);
    let mut acc = C64::new(0.0, 0.0);
    for (i, q) in row.iter().enumerate() {
        acc += q * instantaneous_basis(i + 1, x, length)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn params(eps: f64, gamma: f64) -> CavityParams {
        CavityParams::new(1.0, eps, gamma, 10.0, 8).unwrap()
    }

    #[test]
    fn wall_law_values() {
        let p = params(1e-3, 2.0);
        assert_eq!(wall_position(0.0, &p), 1.0);
        assert_eq!(wall_position(0.37, &params(0.0, 2.0)), 1.0);
        // Ωt = π/2 with Ω = 2π
        assert_relative_eq!(wall_position(0.25, &p), 1.001, max_relative = 1e-14);
    }

    #[test]
    fn log_derivative_values() {
        let p = params(1e-3, 2.0);
        assert_eq!(wall_log_derivative(1.3, &params(0.0, 2.0)), 0.0);
        assert_relative_eq!(wall_log_derivative(0.0, &p), 1e-3 * 2.0 * PI, max_relative = 1e-14);
        assert!(wall_log_derivative(0.25, &p).abs() < 1e-17);
    }

    #[test]
    fn accel_ratio_values() {
        let p = params(1e-3, 2.0);
        assert_eq!(wall_accel_ratio(0.8, &params(0.0, 2.0)), 0.0);
        assert_eq!(wall_accel_ratio(0.0, &p), 0.0);
        let expect = -0.001 * (2.0 * PI).powi(2) / 1.001;
        assert_relative_eq!(wall_accel_ratio(0.25, &p), expect, max_relative = 1e-12);
    }

    #[test]
    fn log_derivative_matches_finite_difference() {
        for &(eps, gamma) in &[(1e-3, 2.0), (0.3, 3.0), (0.05, 2.5)] {
            let p = params(eps, gamma);
            let h = 1e-4 * p.drive_period();
            for i in 0..20 {
                let t = 0.137 * i as f64;
                let fd = (wall_position(t + h, &p).ln() - wall_position(t - h, &p).ln()) / (2.0 * h);
                let exact = wall_log_derivative(t, &p);
                let scale = eps * p.drive_frequency();
                assert!((fd - exact).abs() <= 1e-6 * scale, "t={t} fd={fd} exact={exact}");
            }
        }
    }

    #[test]
    fn log_derivative_rate_matches_finite_difference() {
        let p = params(0.1, 2.0);
        let h = 1e-5;
        for i in 0..10 {
            let t = 0.09 * i as f64;
            let fd = (wall_log_derivative(t + h, &p) - wall_log_derivative(t - h, &p)) / (2.0 * h);
            assert_relative_eq!(fd, wall_log_derivative_rate(t, &p), epsilon = 1e-6, max_relative = 1e-7);
        }
    }

    #[test]
    fn mode_frequency_values() {
        let p = params(0.0, 2.0);
        assert_relative_eq!(mode_frequency(3, 0.4, &p).unwrap(), 3.0 * PI);
        let q = params(1e-3, 2.0);
        assert_relative_eq!(mode_frequency(5, 0.0, &q).unwrap(), 5.0 * PI);
        assert_relative_eq!(mode_frequency(1, 0.25, &q).unwrap(), PI / 1.001, max_relative = 1e-14);
        assert!(matches!(mode_frequency(0, 0.0, &q), Err(CasimirError::IndexRange { .. })));
        assert!(matches!(mode_frequency(9, 0.0, &q), Err(CasimirError::IndexRange { .. })));
    }

    #[test]
    fn coupling_values() {
        assert_eq!(coupling_g(1, 1), 0.0);
        assert_relative_eq!(coupling_g(1, 2), -4.0 / 3.0);
        assert_relative_eq!(coupling_g(2, 1), 4.0 / 3.0);
        assert_relative_eq!(coupling_g(1, 3), 0.75);
    }

    #[test]
    fn coupling_matrix_matches_pointwise() {
        let g = CouplingMatrix::new(6);
        assert_eq!(g.antisymmetry_defect(), 0.0);
        assert_eq!(g.get(2, 5), coupling_g(2, 5));
        let h = g.gram();
        let direct: f64 = (1..=6).map(|j| coupling_g(j, 2) * coupling_g(j, 4)).sum();
        assert_relative_eq!(h[6 + 3], direct);
        assert!(CouplingMatrix::from_entries(3, vec![0.0; 8]).is_err());
    }

    #[test]
    fn drive_coefficient_values() {
        let p = params(1e-3, 2.0);
        use Sign::*;
        assert_relative_eq!(drive_coefficient(Plus, 1, Minus, 1, Minus, &p), 0.5);
        assert_relative_eq!(drive_coefficient(Minus, 1, Minus, 1, Minus, &p), -0.5);
        assert_relative_eq!(drive_coefficient(Plus, 1, Minus, 3, Minus, &p), 0.5 * 3f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn drive_table_matches_function() {
        let p = params(1e-3, 3.0);
        let t = DriveTable::new(&p);
        for s in Sign::BOTH {
            for k in 1..=8 {
                for j in 1..=8 {
                    for a in Sign::BOTH {
                        for b in Sign::BOTH {
                            assert_eq!(t.get(s, k, a, j, b), drive_coefficient(s, k, a, j, b, &p));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn basis_boundary_and_domain() {
        assert_eq!(instantaneous_basis(3, 0.0, 1.3).unwrap(), 0.0);
        assert!(instantaneous_basis(3, 1.3, 1.3).unwrap().abs() < 1e-14);
        assert!(matches!(instantaneous_basis(1, -0.1, 1.0), Err(CasimirError::Domain { .. })));
        assert!(matches!(instantaneous_basis(1, 1.1, 1.0), Err(CasimirError::Domain { .. })));
    }

    /// Composite Gauss–Legendre (5-point) quadrature of `φ_k φ_j` on `[0, L]`.
    fn overlap(k: usize, j: usize, length: f64) -> f64 {
        const NODES: [f64; 5] = [
            0.0,
            -0.538_469_310_105_683_1,
            0.538_469_310_105_683_1,
            -0.906_179_845_938_664,
            0.906_179_845_938_664,
        ];
        const WEIGHTS: [f64; 5] = [
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_5,
            0.478_628_670_499_366_5,
            0.236_926_885_056_189_1,
            0.236_926_885_056_189_1,
        ];
        let panels = 200;
        let w = length / panels as f64;
        let mut acc = 0.0;
        for i in 0..panels {
            let mid = (i as f64 + 0.5) * w;
            for (x, wt) in NODES.iter().zip(WEIGHTS) {
                let xx = mid + 0.5 * w * x;
                acc += 0.5 * w * wt * instantaneous_basis(k, xx, length).unwrap() * instantaneous_basis(j, xx, length).unwrap();
            }
        }
        acc
    }

    #[test]
    fn basis_orthonormal() {
        for &length in &[1.0, 1.37] {
            for k in 1..=8 {
                for j in 1..=8 {
                    let expect = if k == j { 1.0 } else { 0.0 };
                    assert!((overlap(k, j, length) - expect).abs() < 1e-10, "k={k} j={j}");
                }
            }
        }
    }

    #[test]
    fn mode_function_vanishes_at_walls() {
        let p = params(0.01, 2.0);
        let row: Vec<C64> = (0..8).map(|i| C64::new(1.0 / (i + 1) as f64, 0.3)).collect();
        let t = 0.13;
        let l = wall_position(t, &p);
        assert_eq!(mode_function_eval(0.0, t, &row, &p).unwrap(), C64::new(0.0, 0.0));
        assert!(mode_function_eval(l, t, &row, &p).unwrap().norm() < 1e-13);
        assert!(mode_function_eval(l * 1.01, t, &row, &p).is_err());
        assert!(mode_function_eval(0.5, t, &row[..3], &p).is_err());
    }

    #[test]
    fn mode_function_initial_condition() {
        let p = params(0.0, 2.0);
        let n = 3;
        let w = p.omega(n);
        let mut row = vec![C64::new(0.0, 0.0); 8];
        row[n - 1] = C64::new(1.0 / (2.0 * w).sqrt(), 0.0);
        for &x in &[0.1, 0.45, 0.77] {
            let psi = mode_function_eval(x, 0.0, &row, &p).unwrap();
            assert_relative_eq!(psi.re, instantaneous_basis(n, x, 1.0).unwrap() / (2.0 * w).sqrt(), max_relative = 1e-14);
            assert_eq!(psi.im, 0.0);
        }
    }

    proptest! {
        #[test]
        fn coupling_antisymmetric(k in 1usize..64, j in 1usize..64) {
            prop_assert_eq!(coupling_g(k, j), -coupling_g(j, k));
        }

        #[test]
        fn diagonal_drive_independent_of_sigma_p(k in 1usize..40, gamma in 0.5f64..8.0, s in 0usize..2, sg in 0usize..2) {
            let p = CavityParams::new(1.0, 1e-3, gamma, 1.0, 40).unwrap();
            let (s, sg) = (Sign::from_index(s), Sign::from_index(sg));
            let expect = -s.value() * sg.value() * k as f64 / 2.0;
            for sp in Sign::BOTH {
                prop_assert_eq!(drive_coefficient(s, k, sg, k, sp, &p), expect);
            }
        }

        #[test]
        fn drive_coefficient_finite(k in 1usize..40, j in 1usize..40, gamma in 0.1f64..10.0) {
            let p = CavityParams::new(1.0, 1e-3, gamma, 1.0, 40).unwrap();
            for s in Sign::BOTH { for a in Sign::BOTH { for b in Sign::BOTH {
                prop_assert!(drive_coefficient(s, k, a, j, b, &p).is_finite());
            }}}
        }

        #[test]
        fn wall_stays_positive(eps in 0.0f64..0.999, t in -100.0f64..100.0, gamma in 0.1f64..10.0) {
            let p = CavityParams::new(1.0, eps, gamma, 1.0, 1).unwrap();
            prop_assert!(wall_position(t, &p) > 0.0);
        }
    }
}
