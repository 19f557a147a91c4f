//! Adaptive Bayesian phase estimation on a discretised circular posterior.
//!
//! Each round picks a readout setting `θ(r)` from the current posterior,
//! draws a batch of control outcomes from the exact readout distribution and
//! folds every outcome into the posterior by Bayes' rule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};

use crate::analytic::{outcome_probs, qfi_closed_form, Detuning, ModelConfig, Outcome};
use crate::{Error, Execution, Result};

pub const DEFAULT_GRID_SIZE: usize = 2048;
pub const MIN_GRID_SIZE: usize = 16;
pub const DEFAULT_SHOTS_PER_ROUND: usize = 20;
/// Readout offset in units of the posterior's circular standard deviation.
pub const DITHER_WIDTH_FACTOR: f64 = 2.0;
/// Below this many trials a benchmark summary is flagged low-confidence.
pub const MIN_CONFIDENT_TRIALS: usize = 100;

/// Name of the PRNG recorded with every trace.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng/seed_from_u64";

const UNDERFLOW: f64 = 1e-300;

/// Wraps an angle into `[−π, π)`.
pub fn wrap_angle(angle: f64) -> f64 {
    let wrapped = (angle + PI).rem_euclid(TAU) - PI;
    if wrapped >= PI {
        wrapped - TAU
    } else {
        wrapped
    }
}

/// What [`Posterior::update`] had to do to keep the weights normalised.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpdateStatus {
    Normal,
    /// The normaliser fell below `1e-300`; weights were rescaled by their
    /// maximum first.
    Rescaled,
    /// Every weight vanished; the posterior was reset to uniform.
    Reset,
}

/// Probability weights on `G` equally spaced phases covering `[−π, π)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Posterior {
    grid: Vec<f64>,
    weights: Vec<f64>,
}

/// Uniform posterior: no prior knowledge of the phase.
pub fn init_posterior(grid_size: usize) -> Result<Posterior> {
    Posterior::uniform(grid_size)
}

impl Posterior {
    pub fn uniform(grid_size: usize) -> Result<Self> {
        if grid_size < MIN_GRID_SIZE {
            return Err(Error::GridSize(grid_size));
        }
        let step = TAU / grid_size as f64;
        let grid = (0..grid_size).map(|i| -PI + step * i as f64).collect();
        let weights = vec![1.0 / grid_size as f64; grid_size];
        Ok(Self { grid, weights })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// First circular moment `Σ_i w_i e^{iφ_i}` as `(re, im)`.
    fn first_moment(&self) -> (f64, f64) {
        self.grid.iter().zip(&self.weights).fold((0.0, 0.0), |(re, im), (&phi, &w)| {
            let (s, c) = phi.sin_cos();
            (re + w * c, im + w * s)
        })
    }

    /// Circular mean; defined as 0 when the resultant length is negligible.
    pub fn circular_mean(&self) -> f64 {
        let (re, im) = self.first_moment();
        if re.hypot(im) < 1e-12 {
            0.0
        } else {
            im.atan2(re)
        }
    }

    /// `1 − |Σ_i w_i e^{iφ_i}|`, in `[0, 1]`.
    pub fn circular_variance(&self) -> f64 {
        let (re, im) = self.first_moment();
        (1.0 - re.hypot(im)).clamp(0.0, 1.0)
    }

    /// Circular standard deviation `√(−2 ln R)`; infinite for a uniform
    /// posterior.
    pub fn circular_std(&self) -> f64 {
        let (re, im) = self.first_moment();
        let r = re.hypot(im).min(1.0);
        (-2.0 * r.ln()).sqrt()
    }

    /// Folds one control outcome observed at readout setting `theta` into
    /// the posterior, with likelihood `q^±(θ − φ_i)`.
    pub fn update(&mut self, cfg: &ModelConfig, theta: f64, outcome: Outcome) -> UpdateStatus {
        let likelihood = self.likelihood_plus(cfg, theta);
        self.apply(&likelihood, outcome)
    }

    /// Folds a batch of `plus` and `minus` outcomes observed at the same
    /// readout setting. Identical in exact arithmetic to `plus + minus`
    /// calls of [`Posterior::update`], with a single normalisation.
    pub fn update_batch(&mut self, cfg: &ModelConfig, theta: f64, plus: usize, minus: usize) -> UpdateStatus {
        let likelihood = self.likelihood_plus(cfg, theta);
        self.apply_batch(&likelihood, plus, minus)
    }

    /// `q⁺(θ − φ_i)` for every grid point.
    fn likelihood_plus(&self, cfg: &ModelConfig, theta: f64) -> Vec<f64> {
        self.grid.iter().map(|&phi| outcome_probs(cfg, Detuning::between(theta, phi)).q_plus).collect()
    }

    fn apply_batch(&mut self, likelihood_plus: &[f64], plus: usize, minus: usize) -> UpdateStatus {
        let (plus, minus) = (plus as i32, minus as i32);
        let mut total = 0.0;
        for (w, &qp) in self.weights.iter_mut().zip(likelihood_plus) {
            *w *= qp.powi(plus) * (1.0 - qp).powi(minus);
            total += *w;
        }
        self.normalise(total)
    }

    fn apply(&mut self, likelihood_plus: &[f64], outcome: Outcome) -> UpdateStatus {
        let mut total = 0.0;
        for (w, &qp) in self.weights.iter_mut().zip(likelihood_plus) {
            *w *= match outcome {
                Outcome::Plus => qp,
                Outcome::Minus => 1.0 - qp,
            };
            total += *w;
        }
        self.normalise(total)
    }

    fn normalise(&mut self, total: f64) -> UpdateStatus {
        let mut status = UpdateStatus::Normal;
        let mut total = total;
        if !(total.is_finite() && total > 0.0) {
            self.reset();
            return UpdateStatus::Reset;
        }
        if total < UNDERFLOW {
            let max = self.weights.iter().copied().fold(0.0, f64::max);
            self.weights.iter_mut().for_each(|w| *w /= max);
            total = self.weights.iter().sum();
            status = UpdateStatus::Rescaled;
        }
        self.weights.iter_mut().for_each(|w| *w /= total);
        status
    }

    fn reset(&mut self) {
        let uniform = 1.0 / self.len() as f64;
        self.weights.iter_mut().for_each(|w| *w = uniform);
    }
}

/// Functional form of [`Posterior::update`].
pub fn bayes_update(
    post: &Posterior,
    cfg: &ModelConfig,
    theta: f64,
    outcome: Outcome,
) -> (Posterior, UpdateStatus) {
    let mut next = post.clone();
    let status = next.update(cfg, theta, outcome);
    (next, status)
}

/// Readout-setting rule: the circular posterior mean, offset by `±offset`
/// with the sign alternating by round parity.
///
/// For a fully mixed register the visibility is even in `ω`, so readout
/// exactly at the posterior mean cannot tell `φ` from its mirror image, and
/// the mean of a symmetric posterior never moves. The offset breaks that
/// symmetry. It starts at `max_offset` and shrinks with the posterior to
/// `width_factor` circular standard deviations, so the readout converges on
/// `ω → 0` where the classical Fisher information reaches its maximum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaPolicy {
    pub max_offset: f64,
    pub width_factor: f64,
}

impl ThetaPolicy {
    /// Offset `min(π / (2 (1 + n + m + l)), 2 σ)`.
    pub fn for_config(cfg: &ModelConfig) -> Self {
        Self { max_offset: PI / (2.0 * cfg.total_qubits() as f64), width_factor: DITHER_WIDTH_FACTOR }
    }

    pub fn offset(&self, post: &Posterior) -> f64 {
        let width = post.circular_std();
        (self.width_factor * width).min(self.max_offset)
    }

    pub fn select(&self, post: &Posterior, round: usize) -> f64 {
        let sign = if round.is_multiple_of(2) { 1.0 } else { -1.0 };
        wrap_angle(post.circular_mean() + sign * self.offset(post))
    }
}

pub fn select_theta(post: &Posterior, cfg: &ModelConfig, round: usize) -> f64 {
    ThetaPolicy::for_config(cfg).select(post, round)
}

/// Budget and resolution of one adaptive run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AdaptiveSettings {
    pub rounds: usize,
    pub shots_per_round: usize,
    pub grid_size: usize,
}

impl Default for AdaptiveSettings {
    fn default() -> Self {
        Self { rounds: 50, shots_per_round: DEFAULT_SHOTS_PER_ROUND, grid_size: DEFAULT_GRID_SIZE }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub theta: f64,
    pub plus: usize,
    pub minus: usize,
    /// Circular posterior mean after the round.
    pub estimate: f64,
    pub circ_variance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimationTrace {
    pub rounds: Vec<RoundRecord>,
    pub config: ModelConfig,
    pub phi_true: f64,
    pub seed: u64,
    pub rng: &'static str,
    /// Number of posterior resets forced by a vanishing normaliser.
    pub resets: usize,
}

impl EstimationTrace {
    pub fn final_estimate(&self) -> f64 {
        self.rounds.last().map_or(0.0, |r| r.estimate)
    }

    pub fn final_circ_variance(&self) -> f64 {
        self.rounds.last().map_or(1.0, |r| r.circ_variance)
    }

    /// Wrapped error of the final estimate.
    pub fn final_error(&self) -> f64 {
        wrap_angle(self.final_estimate() - self.phi_true)
    }
}

/// Simulates `settings.rounds` adaptive rounds against a true phase.
/// Deterministic in `(cfg, phi_true, settings, seed)`.
pub fn run_adaptive(
    cfg: &ModelConfig,
    phi_true: f64,
    settings: &AdaptiveSettings,
    seed: u64,
) -> Result<EstimationTrace> {
    if settings.rounds == 0 || settings.shots_per_round == 0 {
        return Err(Error::InvalidConfig("rounds and shots per round must be at least 1".into()));
    }
    let schedule = vec![settings.shots_per_round; settings.rounds];
    run_schedule(cfg, phi_true, &schedule, settings.grid_size, seed)
}

fn run_schedule(
    cfg: &ModelConfig,
    phi_true: f64,
    schedule: &[usize],
    grid_size: usize,
    seed: u64,
) -> Result<EstimationTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut post = Posterior::uniform(grid_size)?;
    let policy = ThetaPolicy::for_config(cfg);
    let mut rounds = Vec::with_capacity(schedule.len());
    let mut resets = 0;
    for (round, &shots) in schedule.iter().enumerate() {
        let theta = policy.select(&post, round);
        let q_plus = outcome_probs(cfg, Detuning::between(theta, phi_true)).q_plus;
        let plus = (0..shots).filter(|_| rng.random::<f64>() < q_plus).count();
        let minus = shots - plus;
        if post.update_batch(cfg, theta, plus, minus) == UpdateStatus::Reset {
            resets += 1;
        }
        rounds.push(RoundRecord {
            round,
            theta,
            plus,
            minus,
            estimate: post.circular_mean(),
            circ_variance: post.circular_variance(),
        });
    }
    Ok(EstimationTrace { rounds, config: *cfg, phi_true, seed, rng: RNG_ALGORITHM, resets })
}

/// Ensemble statistics of final estimates against the Cramér-Rao bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchmarkSummary {
    pub trials: usize,
    pub total_shots: usize,
    /// Mean squared wrapped error of the final estimates.
    pub mse: f64,
    /// Quantum Fisher information of the probe.
    pub fq: f64,
    /// `1 / (total_shots · F_q)`.
    pub crb: f64,
    /// `mse / crb`.
    pub ratio: f64,
    pub mean_final_circ_variance: f64,
    /// Fewer than [`MIN_CONFIDENT_TRIALS`] trials.
    pub low_confidence: bool,
}

impl BenchmarkSummary {
    /// Lowest MSE compatible with the bound at this ensemble size,
    /// `crb · (1 − 3/√trials)`.
    pub fn mse_floor(&self) -> f64 {
        self.crb * (1.0 - 3.0 / (self.trials as f64).sqrt())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BenchmarkSettings {
    pub total_shots: usize,
    pub trials: usize,
    pub shots_per_round: usize,
    pub grid_size: usize,
}

impl Default for BenchmarkSettings {
    fn default() -> Self {
        Self {
            total_shots: 2000,
            trials: 200,
            shots_per_round: DEFAULT_SHOTS_PER_ROUND,
            grid_size: DEFAULT_GRID_SIZE,
        }
    }
}

/// Runs `trials` independent adaptive estimations, trial `t` seeded with
/// `seed + t`, each spending exactly `total_shots` shots (a short final round
/// absorbs any remainder).
pub fn crb_benchmark(
    cfg: &ModelConfig,
    phi_true: f64,
    settings: &BenchmarkSettings,
    seed: u64,
    exec: Execution,
) -> Result<BenchmarkSummary> {
    let BenchmarkSettings { total_shots, trials, shots_per_round, grid_size } = *settings;
    if total_shots == 0 || trials == 0 || shots_per_round == 0 {
        return Err(Error::InvalidConfig("shots, trials and shots per round must be at least 1".into()));
    }
    let mut schedule = vec![shots_per_round; total_shots / shots_per_round];
    if total_shots % shots_per_round != 0 {
        schedule.push(total_shots % shots_per_round);
    }
    let outcomes = exec.map_range(trials, |t| {
        run_schedule(cfg, phi_true, &schedule, grid_size, seed.wrapping_add(t as u64))
            .map(|trace| (trace.final_error(), trace.final_circ_variance()))
    });
    let mut sq_err = 0.0;
    let mut circ = 0.0;
    for outcome in outcomes {
        let (err, var) = outcome?;
        sq_err += err * err;
        circ += var;
    }
    let fq = qfi_closed_form(cfg);
    let mse = sq_err / trials as f64;
    let crb = 1.0 / (total_shots as f64 * fq);
    Ok(BenchmarkSummary {
        trials,
        total_shots,
        mse,
        fq,
        crb,
        ratio: mse / crb,
        mean_final_circ_variance: circ / trials as f64,
        low_confidence: trials < MIN_CONFIDENT_TRIALS,
    })
}
