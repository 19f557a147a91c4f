//! Dense density-matrix simulation of the full metrology circuit.
//!
//! Qubits are ordered `[control, pure (n), semi-pure (m), mixed (l)]` and
//! the control is the most significant bit of a basis index. Gates are
//! applied as bit-indexed updates of the matrix entries; no gate matrix is
//! ever expanded to full dimension.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::analytic::{ModelConfig, OutcomeDistribution};
pub use crate::linalg::hermitian_eigenvalues;
use crate::linalg::diagonal_pair_sum;
use crate::{Error, Result};

/// Largest total qubit count (control included) the oracle will build.
pub const MAX_ORACLE_QUBITS: usize = 12;

/// Pairs of probe eigenvalues whose sum is below this contribute nothing to
/// the numeric quantum Fisher information.
pub const QFI_PAIR_THRESHOLD: f64 = 1e-12;

const HERMITIAN_TOLERANCE: f64 = 1e-10;

type C = Complex64;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// Checks the oracle size cap for a configuration.
pub fn check_size(cfg: &ModelConfig, cap: usize) -> Result<()> {
    let qubits = cfg.total_qubits();
    if qubits > cap {
        return Err(Error::SizeCap { qubits, cap });
    }
    Ok(())
}

/// Dense `2^q × 2^q` density matrix over `q` qubits, control first.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    qubits: usize,
    data: DMatrix<C>,
}

impl DensityMatrix {
    /// Wraps a square matrix of dimension `2^qubits`. No physical validity is
    /// checked; see [`DensityMatrix::validate`].
    pub fn from_matrix(qubits: usize, data: DMatrix<C>) -> Result<Self> {
        let expected = 1usize << qubits;
        if data.nrows() != expected || data.ncols() != expected {
            return Err(Error::DimensionMismatch { expected, found: data.nrows() });
        }
        Ok(Self { qubits, data })
    }

    /// `𝟙/2^q`.
    pub fn maximally_mixed(qubits: usize) -> Self {
        let dim = 1usize << qubits;
        let data = DMatrix::from_diagonal_element(dim, dim, c(1.0 / dim as f64, 0.0));
        Self { qubits, data }
    }

    /// Tensor product `self ⊗ other`, with `self` on the most significant
    /// qubits.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        Self {
            qubits: self.qubits + other.qubits,
            data: self.data.kronecker(&other.data),
        }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<C> {
        self.data
    }

    pub fn trace(&self) -> C {
        self.data.trace()
    }

    /// `tr ρ²`.
    pub fn purity(&self) -> f64 {
        // tr(ρ ρ) = Σ_ij ρ_ij ρ_ji = Σ_ij |ρ_ij|² for Hermitian ρ
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `max |ρ − ρ†|` over entries.
    pub fn hermiticity_deviation(&self) -> f64 {
        hermiticity_deviation(&self.data)
    }

    /// Eigenvalues in ascending order. The Hermitian part of the matrix is
    /// decomposed.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.data)
    }

    /// Checks Hermiticity and unit trace to `tol`, and positivity to
    /// `-1e-10`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let deviation = self.hermiticity_deviation();
        if deviation > tol {
            return Err(Error::NonHermitian { deviation });
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidConfig(format!("trace {tr} is not 1")));
        }
        let min = self.eigenvalues().first().copied().unwrap_or(0.0);
        if min < -1e-10 {
            return Err(Error::InvalidConfig(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// `σ ↦ D σ D†` for a diagonal unitary `D`, given as one phase per basis
    /// index.
    fn conjugate_diagonal(&self, phase: impl Fn(usize) -> C) -> DensityMatrix {
        let dim = self.dim();
        let phases: Vec<C> = (0..dim).map(phase).collect();
        let data = DMatrix::from_fn(dim, dim, |i, j| phases[i] * self.data[(i, j)] * phases[j].conj());
        Self { qubits: self.qubits, data }
    }

    /// `σ ↦ P σ P†` for a permutation `P|i⟩ = |perm(i)⟩` that is its own
    /// inverse.
    fn conjugate_involution(&self, perm: impl Fn(usize) -> usize) -> DensityMatrix {
        let dim = self.dim();
        let map: Vec<usize> = (0..dim).map(perm).collect();
        let data = DMatrix::from_fn(dim, dim, |i, j| self.data[(map[i], map[j])]);
        Self { qubits: self.qubits, data }
    }

    /// `σ ↦ U σ U†` for a single-qubit `U` on `qubit`.
    pub(crate) fn conjugate_single(&self, qubit: usize, u: [[C; 2]; 2]) -> DensityMatrix {
        let dim = self.dim();
        let bit = self.mask(qubit);
        let mut data = self.data.clone();
        // rows: U ρ
        for col in 0..dim {
            for i0 in (0..dim).filter(|i| i & bit == 0) {
                let i1 = i0 | bit;
                let (a, b) = (data[(i0, col)], data[(i1, col)]);
                data[(i0, col)] = u[0][0] * a + u[0][1] * b;
                data[(i1, col)] = u[1][0] * a + u[1][1] * b;
            }
        }
        // columns: (U ρ) U†
        for row in 0..dim {
            for j0 in (0..dim).filter(|j| j & bit == 0) {
                let j1 = j0 | bit;
                let (a, b) = (data[(row, j0)], data[(row, j1)]);
                data[(row, j0)] = a * u[0][0].conj() + b * u[0][1].conj();
                data[(row, j1)] = a * u[1][0].conj() + b * u[1][1].conj();
            }
        }
        Self { qubits: self.qubits, data }
    }

    fn mask(&self, qubit: usize) -> usize {
        1usize << (self.qubits - 1 - qubit)
    }

    fn control_mask(&self) -> usize {
        self.mask(0)
    }

    fn register_mask(&self) -> usize {
        self.control_mask() - 1
    }

    /// Reduced state of the control qubit.
    pub fn control_state(&self) -> [[C; 2]; 2] {
        let half = self.dim() / 2;
        let mut out = [[C::new(0.0, 0.0); 2]; 2];
        for r in 0..half {
            out[0][0] += self.data[(r, r)];
            out[0][1] += self.data[(r, r + half)];
            out[1][0] += self.data[(r + half, r)];
            out[1][1] += self.data[(r + half, r + half)];
        }
        out
    }

    /// Blocks `⟨a|σ|b⟩` of the register for control values `a, b`, in the
    /// order `[00, 01, 10, 11]`.
    pub fn control_blocks(&self) -> [DMatrix<C>; 4] {
        let half = self.dim() / 2;
        let block = |a: usize, b: usize| {
            self.data.view((a * half, b * half), (half, half)).into_owned()
        };
        [block(0, 0), block(0, 1), block(1, 0), block(1, 1)]
    }
}

/// `max |m_ij − conj(m_ji)|`.
pub fn hermiticity_deviation(m: &DMatrix<C>) -> f64 {
    let dim = m.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..dim {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Single-qubit factor `ρ_ε = diag(1+ε, 1−ε)/2`.
pub fn semi_pure_qubit(epsilon: f64) -> DensityMatrix {
    let data = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        c(0.5 * (1.0 + epsilon), 0.0),
        c(0.5 * (1.0 - epsilon), 0.0),
    ]));
    DensityMatrix { qubits: 1, data }
}

/// Initial product state `|0⟩⟨0| ⊗ |0⟩⟨0|^{⊗n} ⊗ ρ_ε^{⊗m} ⊗ (𝟙/2)^{⊗l}`.
///
/// Built directly on the diagonal from per-qubit weights.
pub fn build_initial_state(cfg: &ModelConfig) -> Result<DensityMatrix> {
    check_size(cfg, MAX_ORACLE_QUBITS)?;
    let qubits = cfg.total_qubits();
    let mut weights = vec![1.0f64];
    let mut push = |p0: f64, p1: f64| {
        weights = weights.iter().flat_map(|&w| [w * p0, w * p1]).collect();
    };
    push(1.0, 0.0);
    for _ in 0..cfg.n {
        push(1.0, 0.0);
    }
    for _ in 0..cfg.m {
        push(0.5 * (1.0 + cfg.epsilon), 0.5 * (1.0 - cfg.epsilon));
    }
    for _ in 0..cfg.l {
        push(0.5, 0.5);
    }
    let diag: Vec<C> = weights.into_iter().map(|w| c(w, 0.0)).collect();
    let data = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag));
    DensityMatrix::from_matrix(qubits, data)
}

pub(crate) fn hadamard() -> [[C; 2]; 2] {
    let h = c(FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

/// Hadamard on the control.
pub fn apply_control_hadamard(rho: &DensityMatrix) -> DensityMatrix {
    rho.conjugate_single(0, hadamard())
}

/// CNOT from the control onto every register qubit.
pub fn apply_bulk_cnot(rho: &DensityMatrix) -> DensityMatrix {
    let control = rho.control_mask();
    let register = rho.register_mask();
    rho.conjugate_involution(|i| if i & control != 0 { i ^ register } else { i })
}

/// `u_φ = e^{iφ|1⟩⟨1|}` on every qubit, control included.
pub fn apply_phase_encoding(rho: &DensityMatrix, phi: f64) -> DensityMatrix {
    rho.conjugate_diagonal(|i| C::from_polar(1.0, phi * i.count_ones() as f64))
}

/// Readout rotation: controlled-`v_θ` with `v_θ = e^{−iθσ_z}` onto every
/// register qubit, and `e^{−iθ|1⟩⟨1|}` on the control line.
///
/// The control-line factor is fixed by the visibility formula: it must give
/// the `|1⟩`-branch of the control a relative phase `e^{−iθ}`, so that the
/// combined control phase cancels the `e^{iφ}` picked up during encoding
/// when `θ = φ`. A literal `e^{−iθσ_z}` on the control would contribute
/// `e^{2iθ}` instead and shift the fringe.
pub fn apply_readout_rotation(rho: &DensityMatrix, theta: f64) -> DensityMatrix {
    let control = rho.control_mask();
    let register = rho.register_mask();
    let register_qubits = (rho.qubits - 1) as f64;
    rho.conjugate_diagonal(|i| {
        if i & control == 0 {
            return c(1.0, 0.0);
        }
        // Π_x e^{−iθ(1 − 2b_x)} on the register, e^{−iθ} on the control
        let ones = (i & register).count_ones() as f64;
        C::from_polar(1.0, -theta * (register_qubits - 2.0 * ones) - theta)
    })
}

/// The five checkpoints of one protocol run.
#[derive(Clone, Debug)]
pub struct ProtocolTrace {
    /// `σ₀` initial, `σ₁` probe (Hadamard + CNOT), `σ₂` after phase encoding,
    /// `σ₃` after the second CNOT, `σ₄` after the readout rotation.
    pub states: [DensityMatrix; 5],
    pub phi: f64,
    pub theta: f64,
    pub config: ModelConfig,
}

impl ProtocolTrace {
    pub fn initial(&self) -> &DensityMatrix {
        &self.states[0]
    }

    pub fn probe(&self) -> &DensityMatrix {
        &self.states[1]
    }

    pub fn output(&self) -> &DensityMatrix {
        &self.states[4]
    }
}

/// Prepared probe `σ`: Hadamard on the control, then the bulk CNOT.
pub fn prepare_probe(cfg: &ModelConfig) -> Result<DensityMatrix> {
    let initial = build_initial_state(cfg)?;
    Ok(apply_bulk_cnot(&apply_control_hadamard(&initial)))
}

pub fn evolve_protocol(cfg: &ModelConfig, phi: f64, theta: f64) -> Result<ProtocolTrace> {
    let s0 = build_initial_state(cfg)?;
    let s1 = apply_bulk_cnot(&apply_control_hadamard(&s0));
    let s2 = apply_phase_encoding(&s1, phi);
    let s3 = apply_bulk_cnot(&s2);
    let s4 = apply_readout_rotation(&s3, theta);
    Ok(ProtocolTrace { states: [s0, s1, s2, s3, s4], phi, theta, config: *cfg })
}

/// Projects the control of the final state onto `|±⟩`.
pub fn measure_control_x(trace: &ProtocolTrace) -> OutcomeDistribution {
    measure_x(trace.output())
}

/// `⟨±|ρ_control|±⟩` for any state.
pub fn measure_x(rho: &DensityMatrix) -> OutcomeDistribution {
    let ctrl = rho.control_state();
    let q_plus = 0.5 * (ctrl[0][0].re + ctrl[1][1].re) + ctrl[0][1].re;
    OutcomeDistribution::from_q_plus(q_plus)
}

/// Phase generator `G = Σ_x |1⟩⟨1|_x`: diagonal, entry = Hamming weight of
/// the basis index.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorMatrix {
    diagonal: Vec<f64>,
}

impl GeneratorMatrix {
    pub fn new(qubits: usize) -> Self {
        let diagonal = (0..1usize << qubits).map(|i| i.count_ones() as f64).collect();
        Self { diagonal }
    }

    pub fn for_config(cfg: &ModelConfig) -> Self {
        Self::new(cfg.total_qubits())
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }
}

/// `4 Σ_{i>j} (λ_i − λ_j)²/(λ_i + λ_j) |⟨ψ_i|G|ψ_j⟩|²` from a full
/// eigendecomposition of `probe`.
pub fn qfi_numeric(probe: &DensityMatrix, generator: &GeneratorMatrix) -> Result<f64> {
    if generator.dim() != probe.dim() {
        return Err(Error::DimensionMismatch { expected: probe.dim(), found: generator.dim() });
    }
    let deviation = probe.hermiticity_deviation();
    if deviation > HERMITIAN_TOLERANCE {
        return Err(Error::NonHermitian { deviation });
    }
    let total = diagonal_pair_sum(probe.matrix(), generator.diagonal(), |a, b| {
        let sum = a + b;
        if sum <= QFI_PAIR_THRESHOLD {
            0.0
        } else {
            (a - b) * (a - b) / sum
        }
    });
    Ok(4.0 * total)
}

/// Partial transpose over the control qubit, `⟨a,r|ρ^{T_c}|b,s⟩ = ⟨b,r|ρ|a,s⟩`.
pub fn partial_transpose(rho: &DensityMatrix) -> DMatrix<C> {
    let dim = rho.dim();
    let half = dim / 2;
    DMatrix::from_fn(dim, dim, |i, j| {
        let (a, r) = (i / half, i % half);
        let (b, s) = (j / half, j % half);
        rho.data[(b * half + r, a * half + s)]
    })
}
