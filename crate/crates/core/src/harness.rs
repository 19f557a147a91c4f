//! Scans, figure data, cross-checks and CSV emission.
//!
//! Every scan produces [`ScanRow`]s which serialise to a fixed CSV schema,
//!
//! ```text
//! n,m,l,epsilon,x_variable,x_value,kind,value
//! ```
//!
//! with reals written at 17 significant digits so that parsing the emitted
//! text gives back the same doubles. Lines starting with `#` are comments.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytic::{self, ModelConfig};
use crate::correlations::{self, MAX_DISCORD_QUBITS};
use crate::estimator::{BenchmarkSummary, EstimationTrace};
use crate::oracle::{self, GeneratorMatrix, MAX_ORACLE_QUBITS};
use crate::{Detuning, Error, Execution, Result};

pub const CSV_HEADER: [&str; 8] = ["n", "m", "l", "epsilon", "x_variable", "x_value", "kind", "value"];
pub const TRACE_HEADER: [&str; 6] = ["round", "theta", "plus", "minus", "estimate", "circ_variance"];

/// Points per fig3 curve.
pub const FIG3_POINTS: usize = 401;
/// Largest total qubit count used for the numeric QFI check in
/// [`crosscheck`].
pub const CROSSCHECK_QFI_QUBITS: usize = 8;
pub const DEFAULT_CROSSCHECK_SAMPLES: usize = 100;

/// Quantity stored in a [`ScanRow`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    ClassicalFisher,
    Qfi,
    Discord,
    Negativity,
    Mse,
    HermiticityDefect,
    Crb,
    MseRatio,
}

impl Kind {
    pub const ALL: [Kind; 8] = [
        Kind::ClassicalFisher,
        Kind::Qfi,
        Kind::Discord,
        Kind::Negativity,
        Kind::Mse,
        Kind::HermiticityDefect,
        Kind::Crb,
        Kind::MseRatio,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::ClassicalFisher => "classical_fisher",
            Kind::Qfi => "qfi",
            Kind::Discord => "discord",
            Kind::Negativity => "negativity",
            Kind::Mse => "mse",
            Kind::HermiticityDefect => "hermiticity_defect",
            Kind::Crb => "crb",
            Kind::MseRatio => "mse_ratio",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Kind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown kind `{s}`")))
    }
}

/// Independent variable of a scan.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScanVariable {
    Omega,
    Phi,
    Epsilon,
    Shots,
    /// Scalar rows that do not belong to a scan point.
    None,
}

impl ScanVariable {
    pub const ALL: [ScanVariable; 5] =
        [ScanVariable::Omega, ScanVariable::Phi, ScanVariable::Epsilon, ScanVariable::Shots, ScanVariable::None];

    pub fn as_str(self) -> &'static str {
        match self {
            ScanVariable::Omega => "omega",
            ScanVariable::Phi => "phi",
            ScanVariable::Epsilon => "epsilon",
            ScanVariable::Shots => "shots",
            ScanVariable::None => "none",
        }
    }
}

impl fmt::Display for ScanVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScanVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScanVariable::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown scan variable `{s}`")))
    }
}

/// One record of a scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanRow {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub epsilon: f64,
    pub x_variable: ScanVariable,
    pub x_value: f64,
    pub kind: Kind,
    pub value: f64,
}

impl ScanRow {
    pub fn new(cfg: &ModelConfig, x_variable: ScanVariable, x_value: f64, kind: Kind, value: f64) -> Self {
        Self { n: cfg.n, m: cfg.m, l: cfg.l, epsilon: cfg.epsilon, x_variable, x_value, kind, value }
    }

    pub fn config(&self) -> ModelConfig {
        ModelConfig { n: self.n, m: self.m, l: self.l, epsilon: self.epsilon }
    }

    fn check_finite(&self) -> Result<()> {
        if self.epsilon.is_finite() && self.x_value.is_finite() && self.value.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("non-finite value in {} row at {}={}", self.kind, self.x_variable, self.x_value)))
        }
    }
}

/// Formats a double with 17 significant digits.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_real(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Parse(format!("invalid real `{s}`")))
}

fn parse_count(s: &str) -> Result<usize> {
    s.parse().map_err(|_| Error::Parse(format!("invalid count `{s}`")))
}

fn write_comments(out: &mut Vec<u8>, comments: &[String]) {
    for comment in comments {
        for line in comment.split('\n') {
            out.extend_from_slice(b"# ");
            out.extend_from_slice(line.as_bytes());
            out.push(b'\n');
        }
    }
}

fn csv_writer(out: &mut Vec<u8>) -> csv::Writer<&mut Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

fn comment_lines(text: &str) -> Vec<String> {
    text.lines()
        .filter_map(|line| line.strip_prefix('#'))
        .map(|line| line.strip_prefix(' ').unwrap_or(line).to_string())
        .collect()
}

/// Scan rows plus the `#` comment lines that precede them.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScanTable {
    pub comments: Vec<String>,
    pub rows: Vec<ScanRow>,
}

impl ScanTable {
    pub fn new(comments: Vec<String>, rows: Vec<ScanRow>) -> Self {
        Self { comments, rows }
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut out = Vec::new();
        write_comments(&mut out, &self.comments);
        {
            let mut w = csv_writer(&mut out);
            w.write_record(CSV_HEADER)?;
            for row in &self.rows {
                row.check_finite()?;
                w.write_record([
                    row.n.to_string(),
                    row.m.to_string(),
                    row.l.to_string(),
                    format_real(row.epsilon),
                    row.x_variable.to_string(),
                    format_real(row.x_value),
                    row.kind.to_string(),
                    format_real(row.value),
                ])?;
            }
            w.flush()?;
        }
        Ok(String::from_utf8(out).expect("csv output is UTF-8"))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let header = reader.headers()?;
        if header.iter().ne(CSV_HEADER) {
            return Err(Error::Parse(format!("unexpected header {header:?}")));
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            if record.len() != CSV_HEADER.len() {
                return Err(Error::Parse(format!("expected 8 fields, found {}", record.len())));
            }
            rows.push(ScanRow {
                n: parse_count(&record[0])?,
                m: parse_count(&record[1])?,
                l: parse_count(&record[2])?,
                epsilon: parse_real(&record[3])?,
                x_variable: record[4].parse()?,
                x_value: parse_real(&record[5])?,
                kind: record[6].parse()?,
                value: parse_real(&record[7])?,
            });
        }
        Ok(Self { comments: comment_lines(text), rows })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()?)?;
        Ok(())
    }
}

/// `steps` evenly spaced points from `min` to `max`, endpoints included.
/// The midpoint of a symmetric range is exactly zero.
pub fn linear_grid(min: f64, max: f64, steps: usize) -> Result<Vec<f64>> {
    if steps < 2 {
        return Err(Error::InvalidRange(format!("steps must be at least 2, got {steps}")));
    }
    if !min.is_finite() || !max.is_finite() || min >= max {
        return Err(Error::InvalidRange(format!("need finite min < max, got [{min}, {max}]")));
    }
    let last = (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| {
            let t = i as f64 / last;
            min * (1.0 - t) + max * t
        })
        .collect())
}

pub fn fisher_scan(cfg: &ModelConfig, omega_min: f64, omega_max: f64, steps: usize) -> Result<Vec<ScanRow>> {
    fisher_scan_with(cfg, omega_min, omega_max, steps, Execution::default())
}

/// Classical Fisher information over an ω grid, followed by one `qfi` row
/// (`x_variable = none`) for reference.
pub fn fisher_scan_with(
    cfg: &ModelConfig,
    omega_min: f64,
    omega_max: f64,
    steps: usize,
    exec: Execution,
) -> Result<Vec<ScanRow>> {
    let grid = linear_grid(omega_min, omega_max, steps)?;
    let mut rows = exec.map(&grid, |&omega| {
        ScanRow::new(cfg, ScanVariable::Omega, omega, Kind::ClassicalFisher, analytic::classical_fisher(cfg, Detuning(omega)))
    });
    rows.push(ScanRow::new(cfg, ScanVariable::None, 0.0, Kind::Qfi, analytic::qfi_closed_form(cfg)));
    for row in &rows {
        row.check_finite()?;
    }
    Ok(rows)
}

/// Bias that gives `m` semi-pure qubits (and nothing else) the quantum
/// Fisher information `target`: the positive root of
/// `m(m − 1)ε² + 2mε + (m + 1 − target) = 0`.
pub fn epsilon_for_qfi(m: usize, target: f64) -> Option<f64> {
    let mf = m as f64;
    let (a, b, c) = (mf * (mf - 1.0), 2.0 * mf, mf + 1.0 - target);
    let eps = if a == 0.0 {
        if b == 0.0 {
            return None;
        }
        -c / b
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return None;
        }
        (-b + disc.sqrt()) / (2.0 * a)
    };
    (0.0..=1.0).contains(&eps).then_some(eps)
}

/// One of the three reference curves.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fig3Curve {
    pub name: &'static str,
    pub config: ModelConfig,
}

impl Fig3Curve {
    pub fn file_name(&self) -> String {
        format!("fig3_{}.csv", self.name)
    }
}

pub const FIG3_CURVES: [Fig3Curve; 3] = [
    Fig3Curve { name: "dotted", config: ModelConfig { n: 6, m: 0, l: 0, epsilon: 0.0 } },
    Fig3Curve { name: "dashed", config: ModelConfig { n: 0, m: 11, l: 0, epsilon: 0.49 } },
    Fig3Curve { name: "solid", config: ModelConfig { n: 0, m: 0, l: 48, epsilon: 0.0 } },
];

#[derive(Clone, Debug, PartialEq)]
pub struct Fig3CurveSummary {
    pub curve: Fig3Curve,
    pub path: PathBuf,
    pub rows: usize,
    pub qfi: f64,
    /// Classical Fisher information at `ω = 0`.
    pub at_zero: f64,
    /// `max − min` of the classical Fisher information over the scan.
    pub spread: f64,
    /// Largest excess of the classical Fisher information over the QFI.
    pub max_excess: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fig3Summary {
    pub curves: Vec<Fig3CurveSummary>,
}

impl Fig3Summary {
    pub fn curve(&self, name: &str) -> Option<&Fig3CurveSummary> {
        self.curves.iter().find(|c| c.curve.name == name)
    }

    /// Messages for every failed reference check; empty when all hold.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        let (Some(dotted), Some(dashed), Some(solid)) = (self.curve("dotted"), self.curve("dashed"), self.curve("solid"))
        else {
            return vec!["missing curve".into()];
        };
        if dotted.spread >= 1e-9 {
            out.push(format!("dotted spread {:e} >= 1e-9", dotted.spread));
        }
        if (solid.at_zero - dotted.at_zero).abs() >= 1e-9 {
            out.push(format!("solid {} and dotted {} differ at omega=0", solid.at_zero, dotted.at_zero));
        }
        if (dashed.at_zero - 49.191).abs() > 1e-3 {
            out.push(format!("dashed at omega=0 is {}, expected 49.191", dashed.at_zero));
        }
        for c in &self.curves {
            if (c.at_zero - dotted.at_zero).abs() > 5e-3 * dotted.at_zero {
                out.push(format!("{} at omega=0 is not within 0.5% of dotted", c.curve.name));
            }
            if c.max_excess > 1e-9 {
                out.push(format!("{} exceeds its QFI by {:e}", c.curve.name, c.max_excess));
            }
            if c.rows != FIG3_POINTS {
                out.push(format!("{} has {} rows", c.curve.name, c.rows));
            }
        }
        out
    }
}

/// Table for one reference curve: 401 classical Fisher rows over
/// `[−π/2, π/2]` with the QFI and notes in the comments.
pub fn fig3_table(curve: &Fig3Curve, exec: Execution) -> Result<ScanTable> {
    let cfg = curve.config;
    let half = std::f64::consts::FRAC_PI_2;
    let mut rows = fisher_scan_with(&cfg, -half, half, FIG3_POINTS, exec)?;
    rows.retain(|r| r.kind == Kind::ClassicalFisher);
    let qfi = analytic::qfi_closed_form(&cfg);
    let mut comments = vec![
        format!("fig3 {} curve: n={} m={} l={} epsilon={}", curve.name, cfg.n, cfg.m, cfg.l, cfg.epsilon),
        format!("omega range [-pi/2, pi/2], {FIG3_POINTS} points; chosen to show the full lobe structure of the l=48 curve"),
        format!("qfi_closed_form={}", format_real(qfi)),
    ];
    if (qfi - 49.0).abs() > 1e-9 {
        let matching = epsilon_for_qfi(cfg.m, 49.0).map_or_else(|| "none".to_string(), format_real);
        comments.push(format!(
            "discrepancy: the three curves are meant to share qfi=49, but epsilon={} gives {:.6}; qfi=49 needs epsilon={}",
            cfg.epsilon, qfi, matching
        ));
    }
    Ok(ScanTable::new(comments, rows))
}

pub fn fig3(out_dir: &Path) -> Result<Fig3Summary> {
    fig3_with(out_dir, Execution::default())
}

/// Writes the three reference curves into `out_dir`.
pub fn fig3_with(out_dir: &Path, exec: Execution) -> Result<Fig3Summary> {
    fs::create_dir_all(out_dir)?;
    let mut curves = Vec::new();
    for curve in FIG3_CURVES {
        let table = fig3_table(&curve, exec)?;
        let path = out_dir.join(curve.file_name());
        table.write(&path)?;
        let values: Vec<f64> = table.rows.iter().map(|r| r.value).collect();
        let qfi = analytic::qfi_closed_form(&curve.config);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let at_zero = table
            .rows
            .iter()
            .find(|r| r.x_value == 0.0)
            .map_or(f64::NAN, |r| r.value);
        curves.push(Fig3CurveSummary {
            curve,
            path,
            rows: table.rows.len(),
            qfi,
            at_zero,
            spread: max - min,
            max_excess: max - qfi,
        });
    }
    Ok(Fig3Summary { curves })
}

/// Outcome of one named check inside [`crosscheck`].
#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    /// Largest deviation seen; infinite if any case errored.
    pub worst: f64,
    pub tolerance: f64,
}

impl CheckResult {
    fn from_deviations(name: &'static str, tolerance: f64, deviations: &[Result<f64>]) -> Self {
        let mut worst: f64 = 0.0;
        let mut failures = 0;
        for d in deviations {
            match d {
                Ok(d) if *d <= tolerance => worst = worst.max(*d),
                Ok(d) => {
                    failures += 1;
                    worst = if d.is_nan() { f64::INFINITY } else { worst.max(*d) };
                }
                Err(_) => {
                    failures += 1;
                    worst = f64::INFINITY;
                }
            }
        }
        Self { name, cases: deviations.len(), failures, worst, tolerance }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrosscheckReport {
    pub max_qubits: usize,
    pub seed: u64,
    pub samples: usize,
    pub checks: Vec<CheckResult>,
}

impl CrosscheckReport {
    pub fn cases(&self) -> usize {
        self.checks.iter().map(|c| c.cases).sum()
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().map(|c| c.failures).sum()
    }

    pub fn passed(&self) -> bool {
        self.failures() == 0
    }

    pub fn worst(&self, name: &str) -> Option<f64> {
        self.checks.iter().find(|c| c.name == name).map(|c| c.worst)
    }
}

impl fmt::Display for CrosscheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "crosscheck max_qubits={} seed={} samples={}", self.max_qubits, self.seed, self.samples)?;
        for c in &self.checks {
            writeln!(
                f,
                "{:<24} cases={:<5} failures={:<4} worst={:.3e} tol={:.1e}",
                c.name, c.cases, c.failures, c.worst, c.tolerance
            )?;
        }
        write!(f, "total cases={} failures={}", self.cases(), self.failures())
    }
}

/// Random configuration with `1..=max_qubits` total qubits.
fn random_config(rng: &mut ChaCha8Rng, max_qubits: usize) -> ModelConfig {
    let register = rng.random_range(0..max_qubits);
    let n = rng.random_range(0..=register);
    let m = rng.random_range(0..=register - n);
    let l = register - n - m;
    ModelConfig { n, m, l, epsilon: rng.random::<f64>() }
}

#[derive(Clone, Copy, Debug)]
struct Case {
    cfg: ModelConfig,
    phi: f64,
    theta: f64,
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

pub fn crosscheck(max_qubits: usize, seed: u64, samples: usize) -> Result<CrosscheckReport> {
    crosscheck_with(max_qubits, seed, samples, Execution::default())
}

/// Randomised sweep of the analytic model against itself and the oracle.
/// Numerical failures are counted, not raised; only invalid arguments
/// return an error.
pub fn crosscheck_with(max_qubits: usize, seed: u64, samples: usize, exec: Execution) -> Result<CrosscheckReport> {
    if max_qubits == 0 || max_qubits > MAX_ORACLE_QUBITS {
        return Err(Error::SizeCap { qubits: max_qubits, cap: MAX_ORACLE_QUBITS });
    }
    if samples == 0 {
        return Err(Error::InvalidConfig("samples must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let angle = |rng: &mut ChaCha8Rng| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    let cases: Vec<Case> = (0..samples)
        .map(|_| {
            let cfg = random_config(&mut rng, max_qubits);
            Case { cfg, phi: angle(&mut rng), theta: angle(&mut rng) }
        })
        .collect();
    let qfi_cap = max_qubits.min(CROSSCHECK_QFI_QUBITS);
    let qfi_cases: Vec<ModelConfig> = (0..samples).map(|_| random_config(&mut rng, qfi_cap)).collect();

    let mut checks = Vec::new();

    let dev = exec.map(&cases, |c| {
        analytic::qfi_binomial_sum(&c.cfg).map(|b| relative(b, analytic::qfi_closed_form(&c.cfg)))
    });
    checks.push(CheckResult::from_deviations("qfi_dual_path", 1e-9, &dev));

    let dev = exec.map(&cases, |c| {
        let w = Detuning::between(c.theta, c.phi);
        let f = analytic::classical_fisher(&c.cfg, w);
        let fq = analytic::qfi_closed_form(&c.cfg);
        Ok(if f.is_finite() { ((f - fq) / fq.max(1.0)).max(0.0) } else { f64::NAN })
    });
    checks.push(CheckResult::from_deviations("fisher_below_qfi", 1e-9, &dev));

    let dev = exec.map(&cases, |c| {
        let w = c.theta - c.phi;
        let x = analytic::visibility(&c.cfg, Detuning(w));
        let shifted = analytic::visibility(&c.cfg, Detuning(w + 2.0 * std::f64::consts::PI));
        Ok((x - shifted).abs())
    });
    checks.push(CheckResult::from_deviations("visibility_periodic", 1e-10, &dev));

    let traces = exec.map(&cases, |c| oracle::evolve_protocol(&c.cfg, c.phi, c.theta));

    let dev: Vec<Result<f64>> = cases
        .iter()
        .zip(&traces)
        .map(|(c, t)| {
            let t = t.as_ref().map_err(|e| Error::InvalidConfig(e.to_string()))?;
            let q_oracle = oracle::measure_control_x(t).q_plus;
            let q_analytic = analytic::outcome_probs(&c.cfg, Detuning::between(c.theta, c.phi)).q_plus;
            Ok((q_oracle - q_analytic).abs())
        })
        .collect();
    checks.push(CheckResult::from_deviations("probability_oracle", 1e-10, &dev));

    let dev: Vec<Result<f64>> = traces
        .iter()
        .map(|t| {
            let t = t.as_ref().map_err(|e| Error::InvalidConfig(e.to_string()))?;
            let p0 = t.initial().purity();
            Ok(t.states.iter().map(|s| (s.purity() - p0).abs()).fold(0.0, f64::max))
        })
        .collect();
    checks.push(CheckResult::from_deviations("purity_conserved", 1e-10, &dev));

    let dev: Vec<Result<f64>> = traces
        .iter()
        .map(|t| {
            let t = t.as_ref().map_err(|e| Error::InvalidConfig(e.to_string()))?;
            t.output().validate(1e-10)?;
            Ok(t.output().hermiticity_deviation())
        })
        .collect();
    checks.push(CheckResult::from_deviations("output_state_valid", 1e-10, &dev));

    let dev = exec.map(&qfi_cases, |cfg| {
        let probe = oracle::prepare_probe(cfg)?;
        let numeric = oracle::qfi_numeric(&probe, &GeneratorMatrix::for_config(cfg))?;
        Ok(relative(numeric, analytic::qfi_closed_form(cfg)))
    });
    checks.push(CheckResult::from_deviations("qfi_oracle", 1e-8, &dev));

    Ok(CrosscheckReport { max_qubits, seed, samples, checks })
}

fn check_discord_size(cfg: &ModelConfig) -> Result<()> {
    oracle::check_size(cfg, MAX_DISCORD_QUBITS)
}

/// Output-state discord and the readout hermiticity defect over `omegas`,
/// with `θ = φ + ω`. Rows are ordered by ω, discord first.
pub fn discord_scan(cfg: &ModelConfig, phi: f64, omegas: &[f64], exec: Execution) -> Result<Vec<ScanRow>> {
    check_discord_size(cfg)?;
    let mut sorted = omegas.to_vec();
    sorted.sort_by(f64::total_cmp);
    let points = exec.map(&sorted, |&omega| -> Result<[ScanRow; 2]> {
        let theta = phi + omega;
        let trace = oracle::evolve_protocol(cfg, phi, theta)?;
        let discord = correlations::discord_control_report(trace.output(), Execution::Sequential)?.discord;
        let defect = correlations::hermiticity_defect(cfg, phi, theta);
        Ok([
            ScanRow::new(cfg, ScanVariable::Omega, omega, Kind::Discord, discord),
            ScanRow::new(cfg, ScanVariable::Omega, omega, Kind::HermiticityDefect, defect),
        ])
    });
    let mut rows = Vec::with_capacity(2 * points.len());
    for p in points {
        rows.extend(p?);
    }
    Ok(rows)
}

/// State whose negativity is scanned.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NegativityTarget {
    /// Probe state, varying the bias `ε`.
    Probe,
    /// Output state, varying `ω` at fixed `φ`.
    Output,
}

/// Negativity across the control cut. For [`NegativityTarget::Probe`] the
/// points are values of `ε`; for [`NegativityTarget::Output`] they are
/// detunings with `θ = φ + ω`.
pub fn negativity_scan(
    cfg: &ModelConfig,
    target: NegativityTarget,
    points: &[f64],
    phi: f64,
    exec: Execution,
) -> Result<Vec<ScanRow>> {
    check_discord_size(cfg)?;
    let mut sorted = points.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rows = exec.map(&sorted, |&x| -> Result<ScanRow> {
        match target {
            NegativityTarget::Probe => {
                let cfg = ModelConfig::new(cfg.n, cfg.m, cfg.l, x)?;
                let probe = oracle::prepare_probe(&cfg)?;
                Ok(ScanRow::new(&cfg, ScanVariable::Epsilon, x, Kind::Negativity, correlations::negativity(&probe)))
            }
            NegativityTarget::Output => {
                let trace = oracle::evolve_protocol(cfg, phi, phi + x)?;
                Ok(ScanRow::new(cfg, ScanVariable::Omega, x, Kind::Negativity, correlations::negativity(trace.output())))
            }
        }
    });
    rows.into_iter().collect()
}

/// QFI of one configuration by every available route.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QfiReport {
    pub config: ModelConfig,
    pub closed_form: f64,
    pub binomial_sum: f64,
    /// Oracle value, when the configuration fits the oracle.
    pub numeric: Option<f64>,
}

impl QfiReport {
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if relative(self.binomial_sum, self.closed_form) > 1e-9 {
            out.push(format!("binomial sum {} differs from closed form {}", self.binomial_sum, self.closed_form));
        }
        if let Some(numeric) = self.numeric {
            if relative(numeric, self.closed_form) > 1e-8 {
                out.push(format!("oracle {} differs from closed form {}", numeric, self.closed_form));
            }
        }
        out
    }

    pub fn table(&self) -> ScanTable {
        let cfg = &self.config;
        let mut comments = vec![
            format!("qfi n={} m={} l={} epsilon={}", cfg.n, cfg.m, cfg.l, cfg.epsilon),
            format!("closed_form={}", format_real(self.closed_form)),
            format!("binomial_sum={}", format_real(self.binomial_sum)),
            format!("standard_quantum_limit={}", format_real(cfg.standard_quantum_limit())),
        ];
        if let Some(numeric) = self.numeric {
            comments.push(format!("oracle={}", format_real(numeric)));
        }
        ScanTable::new(comments, vec![ScanRow::new(cfg, ScanVariable::None, 0.0, Kind::Qfi, self.closed_form)])
    }
}

/// Closed form, binomial sum and, up to `oracle_qubits` total qubits, the
/// oracle eigen-decomposition.
pub fn qfi_report(cfg: &ModelConfig, oracle_qubits: usize) -> Result<QfiReport> {
    let closed_form = analytic::qfi_closed_form(cfg);
    let binomial_sum = analytic::qfi_binomial_sum(cfg)?;
    let numeric = if cfg.total_qubits() <= oracle_qubits.min(MAX_ORACLE_QUBITS) {
        let probe = oracle::prepare_probe(cfg)?;
        Some(oracle::qfi_numeric(&probe, &GeneratorMatrix::for_config(cfg))?)
    } else {
        None
    };
    Ok(QfiReport { config: *cfg, closed_form, binomial_sum, numeric })
}

/// Per-round CSV of an adaptive run.
pub fn trace_csv(trace: &EstimationTrace) -> Result<String> {
    let cfg = &trace.config;
    let comments = vec![
        format!("simulate n={} m={} l={} epsilon={}", cfg.n, cfg.m, cfg.l, cfg.epsilon),
        format!("phi_true={} seed={} rng={}", format_real(trace.phi_true), trace.seed, trace.rng),
        format!(
            "final_estimate={} final_error={} resets={}",
            format_real(trace.final_estimate()),
            format_real(trace.final_error()),
            trace.resets
        ),
    ];
    let mut out = Vec::new();
    write_comments(&mut out, &comments);
    {
        let mut w = csv_writer(&mut out);
        w.write_record(TRACE_HEADER)?;
        for r in &trace.rounds {
            w.write_record([
                r.round.to_string(),
                format_real(r.theta),
                r.plus.to_string(),
                r.minus.to_string(),
                format_real(r.estimate),
                format_real(r.circ_variance),
            ])?;
        }
        w.flush()?;
    }
    Ok(String::from_utf8(out).expect("csv output is UTF-8"))
}

/// Benchmark summary as scan rows over the total shot count.
pub fn benchmark_table(cfg: &ModelConfig, phi_true: f64, seed: u64, summary: &BenchmarkSummary) -> ScanTable {
    let shots = summary.total_shots as f64;
    let row = |kind, value| ScanRow::new(cfg, ScanVariable::Shots, shots, kind, value);
    let mut comments = vec![
        format!("benchmark n={} m={} l={} epsilon={}", cfg.n, cfg.m, cfg.l, cfg.epsilon),
        format!(
            "phi_true={} seed={} trials={} total_shots={}",
            format_real(phi_true),
            seed,
            summary.trials,
            summary.total_shots
        ),
        format!("mean_final_circ_variance={}", format_real(summary.mean_final_circ_variance)),
    ];
    if summary.low_confidence {
        comments.push(format!("warning: fewer than {} trials, low confidence", crate::estimator::MIN_CONFIDENT_TRIALS));
    }
    ScanTable::new(
        comments,
        vec![
            row(Kind::Qfi, summary.fq),
            row(Kind::Mse, summary.mse),
            row(Kind::Crb, summary.crb),
            row(Kind::MseRatio, summary.ratio),
        ],
    )
}
