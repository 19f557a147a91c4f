//! Simulation and verification toolkit for one-clean-qubit phase estimation.
//!
//! A single pure control qubit is entangled through a bulk CNOT with a
//! register of `n` pure, `m` partially pure and `l` fully mixed qubits. Each
//! qubit picks up the phase `φ`, a second bulk CNOT plus bulk controlled
//! rotation by the current estimate `θ` is applied, and only the control is
//! measured in the `σ_x` basis.
//!
//! The crate is split into:
//!
//! - [`analytic`]: closed-form visibility, outcome probabilities, classical
//!   Fisher information and two independent routes to the quantum Fisher
//!   information.
//! - [`oracle`]: dense density-matrix simulation of the full circuit, used as
//!   ground truth.
//! - [`correlations`]: negativity, control-side discord and the hermiticity
//!   test of the bulk readout unitary.
//! - [`estimator`]: grid-posterior adaptive Bayesian phase estimation and a
//!   Cramér-Rao benchmark.
//! - [`harness`]: scans, figure data, cross-checks and CSV emission.
//!
//! Data-parallel loops go through [`Execution`]; with the `parallel` feature
//! disabled every mode runs sequentially.

pub mod analytic;
pub mod correlations;
mod error;
pub mod estimator;
mod exec;
pub mod harness;
mod linalg;
pub mod oracle;

pub use analytic::{Detuning, ModelConfig, OutcomeDistribution};
pub use error::{Error, Result};
pub use exec::Execution;
