//! Closed-form model of the readout statistics and Fisher information.
//!
//! The control measurement has visibility
//!
//! ```text
//! x(ω) = Re{ e^{i(n+1)ω} cos^l(ω) [cos ω + iε sin ω]^m },   ω = θ − φ
//! ```
//!
//! and outcome probabilities `q± = (1 ± x)/2`. Everything here is a pure
//! function of a [`ModelConfig`] and a [`Detuning`].

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::{Error, Result};

/// Largest `m + l` accepted by [`qfi_binomial_sum`].
pub const BINOMIAL_GUARD: usize = 1024;

/// Below this value of `1 − x²` the classical Fisher information is taken
/// from its limit instead of the ratio.
const SINGULAR_THRESHOLD: f64 = 1e-12;

/// Resource vector of the protocol: `n` pure, `m` partially pure (bias
/// `epsilon`) and `l` fully mixed register qubits next to one pure control.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelConfig {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub epsilon: f64,
}

impl ModelConfig {
    pub fn new(n: usize, m: usize, l: usize, epsilon: f64) -> Result<Self> {
        if !epsilon.is_finite() || !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must lie in [0, 1], got {epsilon}"
            )));
        }
        Ok(Self { n, m, l, epsilon })
    }

    /// Control qubit plus `l` fully mixed qubits, the DQC1 arrangement.
    pub fn mixed(l: usize) -> Self {
        Self { n: 0, m: 0, l, epsilon: 0.0 }
    }

    /// Control qubit plus `n` pure register qubits (a GHZ probe).
    pub fn pure(n: usize) -> Self {
        Self { n, m: 0, l: 0, epsilon: 0.0 }
    }

    pub fn register_qubits(&self) -> usize {
        self.n + self.m + self.l
    }

    pub fn total_qubits(&self) -> usize {
        1 + self.register_qubits()
    }

    /// Fisher information of `1 + n + m + l` uncorrelated pure qubits.
    pub fn standard_quantum_limit(&self) -> f64 {
        self.total_qubits() as f64
    }
}

/// Detuning `ω = θ − φ` between the readout setting and the true phase, in
/// radians.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Detuning(pub f64);

impl Detuning {
    pub fn between(theta: f64, phi: f64) -> Self {
        Detuning(theta - phi)
    }

    pub fn radians(self) -> f64 {
        self.0
    }
}

/// Two-outcome distribution of the control measurement along `σ_x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutcomeDistribution {
    pub q_plus: f64,
    pub q_minus: f64,
}

impl OutcomeDistribution {
    /// Builds the distribution from `q+`, clamping rounding noise into
    /// `[0, 1]`. `q−` is always `1 − q+`.
    pub fn from_q_plus(q_plus: f64) -> Self {
        let q_plus = q_plus.clamp(0.0, 1.0);
        Self { q_plus, q_minus: 1.0 - q_plus }
    }

    pub fn from_visibility(x: f64) -> Self {
        Self::from_q_plus(0.5 * (1.0 + x))
    }

    pub fn probability(&self, outcome: Outcome) -> f64 {
        match outcome {
            Outcome::Plus => self.q_plus,
            Outcome::Minus => self.q_minus,
        }
    }
}

/// Result of one `σ_x` measurement of the control.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Plus,
    Minus,
}

/// `w^k` for complex `w` with `|w| ≤ 1`, magnitude and phase accumulated
/// separately. `w^0 = 1` including `w = 0`.
fn polar_pow(w: Complex64, k: usize) -> Complex64 {
    if k == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let (r, arg) = w.to_polar();
    Complex64::from_polar(r.powi(k as i32), arg * k as f64)
}

/// Complex amplitude `z(ω)` whose real part is the visibility.
fn amplitude(cfg: &ModelConfig, omega: f64) -> Complex64 {
    let (s, c) = omega.sin_cos();
    let phase = Complex64::from_polar(1.0, (cfg.n + 1) as f64 * omega);
    let semi = polar_pow(Complex64::new(c, cfg.epsilon * s), cfg.m);
    phase * c.powi(cfg.l as i32) * semi
}

/// `z(ω)`, `z'(ω)` and `z''(ω)` for the complex amplitude whose real part is
/// the visibility.
fn amplitude_jet(cfg: &ModelConfig, omega: f64) -> [Complex64; 3] {
    let i = Complex64::i();
    let (s, c) = omega.sin_cos();

    // e^{i(n+1)ω}
    let k = (cfg.n + 1) as f64;
    let a0 = Complex64::from_polar(1.0, k * omega);
    let a1 = i * k * a0;
    let a2 = -k * k * a0;

    // cos^l ω
    let l = cfg.l;
    let lf = l as f64;
    let b0 = c.powi(l as i32);
    let b1 = if l >= 1 { -lf * c.powi(l as i32 - 1) * s } else { 0.0 };
    let b2 = match l {
        0 => 0.0,
        1 => -c,
        _ => lf * (lf - 1.0) * c.powi(l as i32 - 2) * s * s - lf * b0,
    };

    // [cos ω + iε sin ω]^m
    let m = cfg.m;
    let mf = m as f64;
    let w = Complex64::new(c, cfg.epsilon * s);
    let w1 = Complex64::new(-s, cfg.epsilon * c);
    let c0 = polar_pow(w, m);
    let (c1, c2) = match m {
        0 => (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)),
        1 => (w1, -w),
        _ => {
            let wm1 = polar_pow(w, m - 1);
            let wm2 = polar_pow(w, m - 2);
            (mf * wm1 * w1, mf * (mf - 1.0) * wm2 * w1 * w1 - mf * c0)
        }
    };

    let z0 = a0 * b0 * c0;
    let z1 = a1 * b0 * c0 + a0 * b1 * c0 + a0 * b0 * c1;
    let z2 = a2 * b0 * c0
        + a0 * b2 * c0
        + a0 * b0 * c2
        + 2.0 * (a1 * b1 * c0 + a1 * b0 * c1 + a0 * b1 * c1);
    [z0, z1, z2]
}

/// `1 − x(ω)²` without cancellation: with `z = R e^{iΦ}`,
/// `1 − x² = (1 − R²) + R² sin²Φ`, and `ln R` is accumulated with `ln1p`.
fn one_minus_visibility_squared(cfg: &ModelConfig, omega: f64) -> f64 {
    let (s, c) = omega.sin_cos();
    let s2 = s * s;
    let mut ln_r = 0.0;
    if cfg.l > 0 {
        ln_r += 0.5 * cfg.l as f64 * (-s2).ln_1p();
    }
    if cfg.m > 0 {
        let eps = cfg.epsilon;
        ln_r += 0.5 * cfg.m as f64 * (-(1.0 - eps * eps) * s2).ln_1p();
    }
    let mut phase = (cfg.n + 1) as f64 * omega;
    if cfg.m > 0 {
        phase += cfg.m as f64 * (cfg.epsilon * s).atan2(c);
    }
    if cfg.l % 2 == 1 && c < 0.0 {
        phase += PI;
    }
    let r2 = (2.0 * ln_r).exp();
    -(2.0 * ln_r).exp_m1() + r2 * phase.sin().powi(2)
}

/// Visibility `x(ω) = ⟨σ_x⟩` of the control after readout.
pub fn visibility(cfg: &ModelConfig, w: Detuning) -> f64 {
    amplitude(cfg, w.0).re.clamp(-1.0, 1.0)
}

pub fn outcome_probs(cfg: &ModelConfig, w: Detuning) -> OutcomeDistribution {
    OutcomeDistribution::from_visibility(visibility(cfg, w))
}

/// `dx/dω` in closed form.
///
/// Since `ω = θ − φ`, derivatives with respect to the unknown phase carry
/// the opposite sign: `∂_φ q± = ∓½ dx/dω`.
pub fn visibility_derivative(cfg: &ModelConfig, w: Detuning) -> f64 {
    amplitude_jet(cfg, w.0)[1].re
}

/// `d²x/dω²` in closed form.
pub fn visibility_second_derivative(cfg: &ModelConfig, w: Detuning) -> f64 {
    amplitude_jet(cfg, w.0)[2].re
}

/// Classical Fisher information of the two-outcome readout,
/// `F(ω) = (dx/dω)² / (1 − x²)`.
///
/// Where `|x| → 1` the ratio is `0/0`; expanding numerator and denominator to
/// second order around the extremum gives the limit `|d²x/dω²|`, which is
/// used once `1 − x²` drops below `1e-12`.
pub fn classical_fisher(cfg: &ModelConfig, w: Detuning) -> f64 {
    let jet = amplitude_jet(cfg, w.0);
    let denom = one_minus_visibility_squared(cfg, w.0);
    if denom < SINGULAR_THRESHOLD {
        jet[2].re.abs()
    } else {
        jet[1].re * jet[1].re / denom
    }
}

/// Quantum Fisher information of the prepared probe,
/// `l + m(1 − ε²) + (1 + n + εm)²`.
pub fn qfi_closed_form(cfg: &ModelConfig) -> f64 {
    let (n, m, l) = (cfg.n as f64, cfg.m as f64, cfg.l as f64);
    let eps = cfg.epsilon;
    let coherent = 1.0 + n + eps * m;
    l + m * (1.0 - eps * eps) + coherent * coherent
}

/// Binomial distribution `C(trials, j) p^{trials−j} (1−p)^j` over `j`,
/// built row by row so no binomial coefficient is ever formed on its own.
fn binomial_weights(trials: usize, p: f64) -> Vec<f64> {
    let q = 1.0 - p;
    let mut row = Vec::with_capacity(trials + 1);
    row.push(1.0);
    for _ in 0..trials {
        let mut next = vec![0.0; row.len() + 1];
        for (j, &w) in row.iter().enumerate() {
            next[j] += p * w;
            next[j + 1] += q * w;
        }
        row = next;
    }
    row
}

/// Quantum Fisher information from the eigen-decomposition of the probe:
/// each probe eigenvector `ψ⁺_{jk}` (weight `C(m,j) C(l,k) λ_j⁺`) couples
/// through the generator only to its partner `ψ⁻_{jk}` of zero weight, with
/// matrix element `½[(j + k) − (n + m + l − j − k + 1)]`.
///
/// Independent of [`qfi_closed_form`]; the two must agree.
pub fn qfi_binomial_sum(cfg: &ModelConfig) -> Result<f64> {
    let total = cfg.m + cfg.l;
    if total > BINOMIAL_GUARD {
        return Err(Error::BinomialGuard { total, guard: BINOMIAL_GUARD });
    }
    let semi = binomial_weights(cfg.m, 0.5 * (1.0 + cfg.epsilon));
    let mixed = binomial_weights(cfg.l, 0.5);
    let top = cfg.total_qubits() as f64;
    let mut fq = 0.0;
    for (j, &wj) in semi.iter().enumerate() {
        if wj == 0.0 {
            continue;
        }
        let inner: f64 = mixed
            .iter()
            .enumerate()
            .map(|(k, &wk)| {
                let ones = (j + k) as f64;
                // 4 |⟨ψ⁻|G|ψ⁺⟩|² = (ones − (top − ones))²
                let gap = 2.0 * ones - top;
                wk * gap * gap
            })
            .sum();
        fq += wj * inner;
    }
    Ok(fq)
}

/// Probe eigenvalue `λ_j⁺ = (1+ε)^{m−j} (1−ε)^j / 2^{m+l}`, attached to
/// `C(m, j) · 2^l` eigenvectors.
pub fn eigenvalue(cfg: &ModelConfig, j: usize) -> Result<f64> {
    if j > cfg.m {
        return Err(Error::IndexOutOfRange { index: j, max: cfg.m });
    }
    let eps = cfg.epsilon;
    let scale = 0.5f64.powi((cfg.m + cfg.l) as i32);
    Ok(scale * (1.0 + eps).powi((cfg.m - j) as i32) * (1.0 - eps).powi(j as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(n: usize, m: usize, l: usize, epsilon: f64) -> ModelConfig {
        ModelConfig::new(n, m, l, epsilon).unwrap()
    }

    fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn rejects_epsilon_outside_unit_interval() {
        assert!(ModelConfig::new(0, 1, 0, 1.5).is_err());
        assert!(ModelConfig::new(0, 1, 0, -0.1).is_err());
        assert!(ModelConfig::new(0, 1, 0, f64::NAN).is_err());
        assert!(ModelConfig::new(0, 0, 0, 0.0).is_ok());
        assert!(ModelConfig::new(0, 0, 0, 1.0).is_ok());
    }

    #[test]
    fn visibility_is_one_at_zero_detuning() {
        for c in [cfg(0, 0, 0, 0.0), cfg(3, 2, 5, 0.4), cfg(0, 7, 0, 0.0)] {
            assert_eq!(visibility(&c, Detuning(0.0)), 1.0);
        }
    }

    #[test]
    fn visibility_mixed_register_is_cosine_power() {
        let x = visibility(&ModelConfig::mixed(2), Detuning(PI / 4.0));
        let expected = (PI / 4.0).cos().powi(3);
        assert!((x - expected).abs() < 1e-15);
        assert!((x - 2f64.powf(-1.5)).abs() < 1e-15);
    }

    #[test]
    fn visibility_pure_register_is_cos_of_multiple() {
        let c = ModelConfig::pure(6);
        for i in 0..50 {
            let omega = -3.0 + 0.12 * i as f64;
            assert!((visibility(&c, Detuning(omega)) - (7.0 * omega).cos()).abs() < 1e-13);
        }
        assert!(visibility(&c, Detuning(PI / 14.0)).abs() < 1e-15);
    }

    #[test]
    fn outcome_probs_examples() {
        let d = outcome_probs(&cfg(2, 1, 3, 0.2), Detuning(0.0));
        assert_eq!((d.q_plus, d.q_minus), (1.0, 0.0));

        let d = outcome_probs(&ModelConfig::mixed(1), Detuning(PI / 2.0));
        assert!((d.q_plus - 0.5).abs() < 1e-15);
        assert!((d.q_minus - 0.5).abs() < 1e-15);

        // Re{i · (0.5 i)} = -0.5
        let d = outcome_probs(&cfg(0, 1, 0, 0.5), Detuning(PI / 2.0));
        assert!((d.q_plus - 0.25).abs() < 1e-15);
        assert_eq!(d.q_plus + d.q_minus, 1.0);
    }

    #[test]
    fn derivative_examples() {
        for c in [cfg(0, 0, 1, 0.0), cfg(2, 3, 4, 0.3), cfg(5, 0, 0, 0.0)] {
            assert!(visibility_derivative(&c, Detuning(0.0)).abs() < 1e-15);
        }
        let c = ModelConfig::mixed(0);
        for omega in [-2.0, -0.4, 0.3, 1.7] {
            assert!((visibility_derivative(&c, Detuning(omega)) + omega.sin()).abs() < 1e-15);
        }
    }

    #[test]
    fn amplitude_matches_jet() {
        let c = cfg(2, 3, 5, 0.35);
        for i in 0..60 {
            let omega = -3.0 + 0.1 * i as f64;
            assert!((amplitude(&c, omega) - amplitude_jet(&c, omega)[0]).norm() < 1e-15);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let configs = [
            cfg(0, 0, 0, 0.0),
            cfg(1, 0, 3, 0.0),
            cfg(0, 2, 1, 0.6),
            cfg(2, 3, 4, 0.3),
            cfg(0, 5, 0, 0.0),
            cfg(3, 1, 0, 1.0),
        ];
        for c in configs {
            for i in 0..41 {
                let omega = -3.1 + 0.155 * i as f64;
                let fd = central_difference(|t| amplitude_jet(&c, t)[0].re, omega, 1e-6);
                let exact = visibility_derivative(&c, Detuning(omega));
                assert!((fd - exact).abs() < 1e-8, "{c:?} ω={omega}: {fd} vs {exact}");
                let fd2 = central_difference(|t| amplitude_jet(&c, t)[1].re, omega, 1e-6);
                let exact2 = visibility_second_derivative(&c, Detuning(omega));
                assert!((fd2 - exact2).abs() < 1e-7, "{c:?} ω={omega}: {fd2} vs {exact2}");
            }
        }
    }

    #[test]
    fn classical_fisher_examples() {
        let ghz = ModelConfig::pure(6);
        for i in 0..=40 {
            let omega = -PI / 2.0 + PI * i as f64 / 40.0;
            let f = classical_fisher(&ghz, Detuning(omega));
            assert!((f - 49.0).abs() < 1e-9, "ω={omega}: {f}");
        }
        let single = ModelConfig::mixed(0);
        for omega in [-1.3, 0.0, 0.2, 2.9] {
            assert!((classical_fisher(&single, Detuning(omega)) - 1.0).abs() < 1e-12);
        }
        let dqc1 = ModelConfig::mixed(48);
        assert!((classical_fisher(&dqc1, Detuning(0.0)) - 49.0).abs() < 1e-9);
        assert!((classical_fisher(&dqc1, Detuning(1e-4)) - 49.0).abs() < 1e-3 * 49.0);
    }

    #[test]
    fn classical_fisher_is_continuous_through_singular_threshold() {
        let c = cfg(1, 2, 3, 0.4);
        let fq = qfi_closed_form(&c);
        for omega in [1e-9, 1e-8, 1e-7, 1e-6, 1e-5] {
            let f = classical_fisher(&c, Detuning(omega));
            assert!((f - fq).abs() / fq < 1e-6, "ω={omega}: {f} vs {fq}");
        }
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(qfi_closed_form(&cfg(0, 0, 0, 0.3)), 1.0);
        for l in 0..20 {
            assert_eq!(qfi_closed_form(&ModelConfig::mixed(l)), (l + 1) as f64);
            for eps in [0.0, 0.25, 0.5, 1.0] {
                let fq = qfi_closed_form(&cfg(0, 1, l, eps));
                assert_eq!(fq, l as f64 + 2.0 + 2.0 * eps);
            }
        }
        let dashed = qfi_closed_form(&cfg(0, 11, 0, 0.49));
        // 11 * (1 - 0.2401) + 6.39^2
        assert!((dashed - (8.3589 + 40.8321)).abs() < 1e-12);
        assert!((dashed - 49.191).abs() < 1e-3);
    }

    #[test]
    fn binomial_sum_examples() {
        assert_eq!(qfi_binomial_sum(&ModelConfig::mixed(5)).unwrap(), 6.0);
        assert_eq!(qfi_binomial_sum(&ModelConfig::mixed(0)).unwrap(), 1.0);
        let c = cfg(2, 3, 4, 0.3);
        let diff = qfi_binomial_sum(&c).unwrap() - qfi_closed_form(&c);
        assert!(diff.abs() < 1e-10);
    }

    #[test]
    fn binomial_sum_guard() {
        let ok = cfg(0, 512, 512, 0.5);
        let rel = (qfi_binomial_sum(&ok).unwrap() - qfi_closed_form(&ok)) / qfi_closed_form(&ok);
        assert!(rel.abs() < 1e-9);
        assert!(matches!(
            qfi_binomial_sum(&cfg(0, 600, 425, 0.5)),
            Err(Error::BinomialGuard { total: 1025, .. })
        ));
    }

    #[test]
    fn eigenvalue_examples() {
        assert_eq!(eigenvalue(&cfg(0, 1, 0, 0.5), 0).unwrap(), 0.75);
        assert_eq!(eigenvalue(&ModelConfig::mixed(3), 0).unwrap(), 0.125);
        assert!(matches!(eigenvalue(&cfg(0, 2, 0, 0.5), 3), Err(Error::IndexOutOfRange { .. })));

        let c = cfg(0, 4, 2, 0.7);
        let total: f64 = (0..=4)
            .map(|j| {
                let binom = [1.0, 4.0, 6.0, 4.0, 1.0][j];
                binom * 4.0 * eigenvalue(&c, j).unwrap()
            })
            .sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sql_bound_with_equality_for_mixed_register() {
        for n in 0..7 {
            for m in 0..7 {
                for l in 0..7 {
                    for eps in [0.0, 0.25, 0.5, 0.75, 1.0] {
                        let c = cfg(n, m, l, eps);
                        let fq = qfi_closed_form(&c);
                        assert!(fq >= c.standard_quantum_limit() - 1e-12);
                        if n == 0 && m == 0 {
                            assert_eq!(fq, c.standard_quantum_limit());
                        }
                    }
                }
            }
        }
    }

    fn arb_config() -> impl Strategy<Value = ModelConfig> {
        (0usize..7, 0usize..7, 0usize..7, 0.0f64..=1.0)
            .prop_map(|(n, m, l, epsilon)| ModelConfig { n, m, l, epsilon })
    }

    proptest! {
        #[test]
        fn visibility_bounded_and_periodic(c in arb_config(), omega in -10.0f64..10.0) {
            let x = visibility(&c, Detuning(omega));
            prop_assert!(x.abs() <= 1.0);
            let shifted = visibility(&c, Detuning(omega + 2.0 * PI));
            prop_assert!((x - shifted).abs() < 1e-9);
            let f = classical_fisher(&c, Detuning(omega));
            let f_shifted = classical_fisher(&c, Detuning(omega + 2.0 * PI));
            prop_assert!((f - f_shifted).abs() <= 1e-6 * (1.0 + f));
        }

        #[test]
        fn classical_fisher_never_exceeds_qfi(c in arb_config(), omega in -PI..PI) {
            let f = classical_fisher(&c, Detuning(omega));
            prop_assert!(f >= 0.0);
            prop_assert!(f <= qfi_closed_form(&c) + 1e-9, "{} > {}", f, qfi_closed_form(&c));
        }

        #[test]
        fn classical_fisher_approaches_qfi(c in arb_config()) {
            let fq = qfi_closed_form(&c);
            let f = classical_fisher(&c, Detuning(1e-4));
            prop_assert!((f - fq).abs() / fq < 1e-3);
        }

        #[test]
        fn two_qfi_routes_agree(c in arb_config()) {
            let closed = qfi_closed_form(&c);
            let summed = qfi_binomial_sum(&c).unwrap();
            prop_assert!((closed - summed).abs() <= 1e-9 * closed);
        }
    }
}
