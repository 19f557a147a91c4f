//! Correlation diagnostics across the control-vs-register cut.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::analytic::ModelConfig;
use crate::oracle::{hadamard, hermitian_eigenvalues, partial_transpose, DensityMatrix};
use crate::{Error, Execution, Result};

type C = Complex64;

/// Largest total qubit count accepted by the discord routines.
pub const MAX_DISCORD_QUBITS: usize = 10;

/// Polar grid points over `[0, π]`.
pub const POLAR_STEPS: usize = 64;
/// Azimuthal grid points over `[0, 2π)`.
pub const AZIMUTH_STEPS: usize = 64;
/// Local refinement stops once both step sizes are below this.
pub const REFINE_STEP: f64 = 1e-8;

const DISCORD_CLAMP: f64 = 1e-9;

fn check_qubits(rho: &DensityMatrix) -> Result<()> {
    if rho.qubits() > MAX_DISCORD_QUBITS {
        return Err(Error::SizeCap { qubits: rho.qubits(), cap: MAX_DISCORD_QUBITS });
    }
    Ok(())
}

/// Von Neumann entropy in bits of a spectrum. Non-positive values are
/// eigenvalue noise and are skipped.
pub fn entropy_bits(eigenvalues: &[f64]) -> f64 {
    eigenvalues.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum()
}

/// `(‖ρ^{T_control}‖₁ − 1)/2`, computed as the total weight of the negative
/// part of the spectrum.
pub fn negativity(rho: &DensityMatrix) -> f64 {
    hermitian_eigenvalues(&partial_transpose(rho))
        .into_iter()
        .filter(|&v| v < 0.0)
        .fold(0.0, |acc, v| acc - v)
}

/// Projective measurement direction on the control Bloch sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasurementDirection {
    pub polar: f64,
    pub azimuth: f64,
}

impl MeasurementDirection {
    fn bloch(self) -> [f64; 3] {
        let (sp, cp) = self.polar.sin_cos();
        let (sa, ca) = self.azimuth.sin_cos();
        [sp * ca, sp * sa, cp]
    }
}

/// Outcome of the control-side discord optimisation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscordReport {
    /// Discord in bits, clamped at zero.
    pub discord: f64,
    /// Unclamped value, for diagnostics.
    pub raw: f64,
    /// Minimising measurement direction.
    pub direction: MeasurementDirection,
    /// `min Σ_k p_k S(ρ_register|k)` at that direction.
    pub conditional_entropy: f64,
}

/// Register-side conditional entropy after measuring the control along
/// `±n̂`, with the control blocks of `ρ` precomputed.
struct ConditionalEntropy {
    b00: DMatrix<C>,
    b01: DMatrix<C>,
    b10: DMatrix<C>,
    b11: DMatrix<C>,
}

impl ConditionalEntropy {
    fn new(rho: &DensityMatrix) -> Self {
        let [b00, b01, b10, b11] = rho.control_blocks();
        Self { b00, b01, b10, b11 }
    }

    /// `Σ_± p_± S(ρ_±)` where `p_± ρ_± = tr_c[(Π_± ⊗ 𝟙) ρ]` and
    /// `Π_± = (𝟙 ± n̂·σ)/2`.
    fn evaluate(&self, direction: MeasurementDirection) -> f64 {
        let [nx, ny, nz] = direction.bloch();
        let mut total = 0.0;
        for sign in [1.0, -1.0] {
            let unnormalised = self.b00.scale(0.5 * (1.0 + sign * nz))
                + self.b11.scale(0.5 * (1.0 - sign * nz))
                + &self.b01 * C::new(0.5 * sign * nx, 0.5 * sign * ny)
                + &self.b10 * C::new(0.5 * sign * nx, -0.5 * sign * ny);
            let spectrum = hermitian_eigenvalues(&unnormalised);
            let p: f64 = spectrum.iter().filter(|&&v| v > 0.0).sum();
            if p <= 0.0 {
                continue;
            }
            // p S(ρ/p) = −Σ μ log2(μ/p)
            total += spectrum
                .iter()
                .filter(|&&mu| mu > 0.0)
                .map(|&mu| -mu * (mu / p).log2())
                .sum::<f64>();
        }
        total
    }
}

/// Ollivier–Zurek discord for projective measurements on the control qubit,
/// `D = S(ρ_control) − S(ρ) + min_{n̂} Σ_k p_k S(ρ_register|k)`, in bits.
pub fn discord_control(rho: &DensityMatrix) -> Result<f64> {
    Ok(discord_control_report(rho, Execution::default())?.discord)
}

/// [`discord_control`] with the full optimisation result.
///
/// The minimum is located on a 64 × 64 grid over polar angle `[0, π]` and
/// azimuth `[0, 2π)`; ties go to the smallest polar, then smallest azimuthal
/// angle. A compass search then refines the best grid point until both step
/// sizes fall below `1e-8`. Grid points may be evaluated concurrently; the
/// result does not depend on the execution mode.
pub fn discord_control_report(rho: &DensityMatrix, exec: Execution) -> Result<DiscordReport> {
    check_qubits(rho)?;
    let ctrl = rho.control_state();
    let ctrl = DMatrix::from_fn(2, 2, |i, j| ctrl[i][j]);
    let s_control = entropy_bits(&hermitian_eigenvalues(&ctrl));
    let s_total = entropy_bits(&rho.eigenvalues());
    let conditional = ConditionalEntropy::new(rho);

    let polar_step = PI / (POLAR_STEPS - 1) as f64;
    let azimuth_step = 2.0 * PI / AZIMUTH_STEPS as f64;
    let grid_point = |idx: usize| MeasurementDirection {
        polar: (idx / AZIMUTH_STEPS) as f64 * polar_step,
        azimuth: (idx % AZIMUTH_STEPS) as f64 * azimuth_step,
    };
    let values = exec.map_range(POLAR_STEPS * AZIMUTH_STEPS, |idx| conditional.evaluate(grid_point(idx)));
    let mut best_idx = 0;
    for (idx, &v) in values.iter().enumerate() {
        if v < values[best_idx] {
            best_idx = idx;
        }
    }

    let (direction, minimum) = compass_refine(
        |d| conditional.evaluate(d),
        grid_point(best_idx),
        values[best_idx],
        polar_step,
        azimuth_step,
    );
    let raw = s_control - s_total + minimum;
    let discord = if (-DISCORD_CLAMP..0.0).contains(&raw) { 0.0 } else { raw.max(0.0) };
    Ok(DiscordReport { discord, raw, direction, conditional_entropy: minimum })
}

/// Derivative-free coordinate search with step halving.
fn compass_refine(
    f: impl Fn(MeasurementDirection) -> f64,
    start: MeasurementDirection,
    start_value: f64,
    polar_step: f64,
    azimuth_step: f64,
) -> (MeasurementDirection, f64) {
    let mut best = start;
    let mut best_value = start_value;
    let (mut dp, mut da) = (polar_step, azimuth_step);
    let mut iterations = 0;
    while (dp >= REFINE_STEP || da >= REFINE_STEP) && iterations < 10_000 {
        iterations += 1;
        let candidates = [
            MeasurementDirection { polar: best.polar - dp, ..best },
            MeasurementDirection { polar: best.polar + dp, ..best },
            MeasurementDirection { azimuth: best.azimuth - da, ..best },
            MeasurementDirection { azimuth: best.azimuth + da, ..best },
        ];
        let mut improved = None;
        for cand in candidates {
            let v = f(cand);
            if v < improved.map_or(best_value, |(_, bv)| bv) {
                improved = Some((cand, v));
            }
        }
        match improved {
            Some((cand, v)) => {
                best = cand;
                best_value = v;
            }
            None => {
                dp *= 0.5;
                da *= 0.5;
            }
        }
    }
    (best, best_value)
}

/// `max |ρ_ij|` over off-diagonal entries after conjugating every qubit by
/// `u`.
fn off_diagonal_in_rotated_basis(rho: &DensityMatrix, u: Option<[[C; 2]; 2]>) -> f64 {
    let rotated = match u {
        Some(u) => (0..rho.qubits()).fold(rho.clone(), |acc, q| acc.conjugate_single(q, u)),
        None => rho.clone(),
    };
    let m = rotated.matrix();
    let mut worst: f64 = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if i != j {
                worst = worst.max(m[(i, j)].norm());
            }
        }
    }
    worst
}

/// Zero control-side discord and diagonal in a product basis of `σ_x` (or
/// `σ_z`) eigenstates, both to `tol`.
///
/// The product-basis test is exact for the probes this model prepares with
/// a fully mixed register; it is not a general classicality certificate.
pub fn is_classically_correlated(rho: &DensityMatrix, tol: f64) -> Result<bool> {
    check_qubits(rho)?;
    let diagonal = off_diagonal_in_rotated_basis(rho, Some(hadamard())) <= tol
        || off_diagonal_in_rotated_basis(rho, None) <= tol;
    if !diagonal {
        return Ok(false);
    }
    Ok(discord_control(rho)? <= tol)
}

/// Single-qubit factor `u_φ† v_θ σ_x u_φ σ_x` of the bulk controlled readout
/// unitary.
pub fn bulk_readout_factor(phi: f64, theta: f64) -> [[C; 2]; 2] {
    let o = C::new(0.0, 0.0);
    let one = C::new(1.0, 0.0);
    let u = [[one, o], [o, C::from_polar(1.0, phi)]];
    let u_dag = [[one, o], [o, C::from_polar(1.0, -phi)]];
    let v = [[C::from_polar(1.0, -theta), o], [o, C::from_polar(1.0, theta)]];
    let x = [[o, one], [one, o]];
    [u_dag, v, x, u, x].into_iter().reduce(mul2).expect("non-empty product")
}

fn mul2(a: [[C; 2]; 2], b: [[C; 2]; 2]) -> [[C; 2]; 2] {
    let mut out = [[C::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// `max |w − w†|` for the bulk readout factor `w`; zero exactly when the
/// controlled register unitary is Hermitian. An empty register carries the
/// identity, which is Hermitian.
pub fn hermiticity_defect(cfg: &ModelConfig, phi: f64, theta: f64) -> f64 {
    if cfg.register_qubits() == 0 {
        return 0.0;
    }
    let w = bulk_readout_factor(phi, theta);
    [(0, 0), (0, 1), (1, 0), (1, 1)]
        .into_iter()
        .map(|(i, j)| (w[i][j] - w[j][i].conj()).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{evolve_protocol, prepare_probe, semi_pure_qubit};

    fn cfg(n: usize, m: usize, l: usize, epsilon: f64) -> ModelConfig {
        ModelConfig::new(n, m, l, epsilon).unwrap()
    }

    fn output(c: &ModelConfig, omega: f64) -> DensityMatrix {
        let phi = 0.4;
        evolve_protocol(c, phi, phi + omega).unwrap().output().clone()
    }

    #[test]
    fn negativity_examples() {
        let product = semi_pure_qubit(0.3).tensor(&semi_pure_qubit(0.8));
        assert!(negativity(&product) < 1e-12);

        let ghz_like = prepare_probe(&cfg(0, 1, 1, 1.0)).unwrap();
        assert!((negativity(&ghz_like) - 0.5).abs() < 1e-12);

        let at_zero = prepare_probe(&cfg(0, 1, 2, 0.0)).unwrap();
        assert!(negativity(&at_zero) < 1e-12);
        for k in 1..10 {
            let probe = prepare_probe(&cfg(0, 1, 2, k as f64 / 10.0)).unwrap();
            assert!(negativity(&probe) > 1e-6, "ε={}", k as f64 / 10.0);
        }
    }

    #[test]
    fn negativity_matches_trace_norm_definition() {
        let probe = prepare_probe(&cfg(1, 1, 1, 0.6)).unwrap();
        let spectrum = hermitian_eigenvalues(&partial_transpose(&probe));
        let trace_norm: f64 = spectrum.iter().map(|v| v.abs()).sum();
        assert!((negativity(&probe) - 0.5 * (trace_norm - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn discord_of_product_state_vanishes() {
        let product = semi_pure_qubit(0.3).tensor(&semi_pure_qubit(0.8)).tensor(&semi_pure_qubit(0.1));
        assert!(discord_control(&product).unwrap() < 1e-6);
        assert!(discord_control(&DensityMatrix::maximally_mixed(3)).unwrap() < 1e-6);
    }

    #[test]
    fn discord_of_output_state() {
        let c = ModelConfig::mixed(2);
        assert!(discord_control(&output(&c, 0.0)).unwrap() < 1e-6);
        assert!(discord_control(&output(&c, 0.3)).unwrap() > 1e-4);
    }

    #[test]
    fn discord_of_bell_state_is_one_bit() {
        // Hadamard + CNOT on |00⟩ gives a Bell pair
        let bell = prepare_probe(&ModelConfig::pure(1)).unwrap();
        let d = discord_control(&bell).unwrap();
        assert!((d - 1.0).abs() < 1e-9, "{d}");
    }

    #[test]
    fn discord_is_execution_mode_independent() {
        let rho = output(&cfg(0, 1, 1, 0.5), 0.7);
        let seq = discord_control_report(&rho, Execution::Sequential).unwrap();
        let par = discord_control_report(&rho, Execution::Parallel).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn discord_size_cap() {
        let rho = DensityMatrix::maximally_mixed(MAX_DISCORD_QUBITS + 1);
        assert!(matches!(discord_control(&rho), Err(Error::SizeCap { .. })));
    }

    #[test]
    fn classical_correlation_examples() {
        let probe = prepare_probe(&ModelConfig::mixed(3)).unwrap();
        assert!(is_classically_correlated(&probe, 1e-9).unwrap());

        let entangled = prepare_probe(&cfg(0, 1, 1, 0.5)).unwrap();
        assert!(!is_classically_correlated(&entangled, 1e-9).unwrap());

        assert!(is_classically_correlated(&DensityMatrix::maximally_mixed(3), 1e-9).unwrap());
    }

    #[test]
    fn hermiticity_defect_examples() {
        let c = ModelConfig::mixed(2);
        assert!(hermiticity_defect(&c, 0.4, 0.4) < 1e-12);
        assert!(hermiticity_defect(&c, 0.0, 0.3) > 0.01);
        assert!(hermiticity_defect(&c, 0.2, 0.2 + 2.0 * PI) < 1e-12);
        // w = diag(e^{−iω}, e^{iω}), so the defect is |2 sin ω|
        for omega in [-2.0, -0.5, 0.1, 1.3] {
            let d = hermiticity_defect(&c, 0.3, 0.3 + omega);
            assert!((d - 2.0 * omega.sin().abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn half_turn_detuning_is_also_hermitian() {
        // w = −𝟙 at ω = π: the controlled unitary is a phase on the control
        let c = ModelConfig::mixed(2);
        assert!(hermiticity_defect(&c, 0.1, 0.1 + PI) < 1e-12);
        assert!(discord_control(&output(&c, PI)).unwrap() < 1e-6);
    }

    #[test]
    fn empty_register_never_correlates() {
        let c = ModelConfig::mixed(0);
        for omega in [0.0, 0.3, 1.1, -2.5] {
            let rho = output(&c, omega);
            assert!(discord_control(&rho).unwrap() < 1e-6);
            assert!(negativity(&rho) < 1e-12);
        }
    }

    #[test]
    fn mixed_register_probe_is_separable() {
        for l in 0..=9 {
            let eps = [0.0, 0.5, 1.0][l % 3];
            assert!(negativity(&prepare_probe(&cfg(0, 0, l, eps)).unwrap()) < 1e-12, "l={l}");
        }
    }

    #[test]
    fn mixed_register_output_is_ppt() {
        for l in 1..=4 {
            for k in 0..12 {
                let omega = -3.0 + 0.5 * k as f64;
                assert!(negativity(&output(&cfg(0, 0, l, 0.0), omega)) < 1e-12, "l={l} omega={omega}");
            }
        }
    }

    #[test]
    fn pure_register_output_has_no_correlations() {
        for n in 1..=3 {
            for omega in [-2.0, -0.7, 0.0, 0.3, 1.9] {
                let rho = output(&cfg(n, 0, 0, 0.0), omega);
                assert!(discord_control(&rho).unwrap() < 1e-6, "n={n} omega={omega}");
                assert!(negativity(&rho) < 1e-12, "n={n} omega={omega}");
            }
        }
    }

    #[test]
    fn discord_vanishes_with_the_hermiticity_defect() {
        for c in [cfg(0, 0, 1, 0.0), cfg(0, 1, 1, 0.5), cfg(1, 1, 1, 0.3)] {
            for k in -6..=6 {
                let omega = 0.45 * k as f64;
                let hermitian = hermiticity_defect(&c, 0.4, 0.4 + omega) <= 1e-12;
                let classical = discord_control(&output(&c, omega)).unwrap() <= 1e-6;
                assert_eq!(hermitian, classical, "{c:?} omega={omega}");
            }
        }
    }
}
