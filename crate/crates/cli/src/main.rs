//! `dqc1`: command-line front end for the one-clean-qubit metrology toolkit.
//!
//! Every subcommand echoes its resolved parameters to stderr before running
//! and writes CSV to `--out` or, without it, to stdout. Relative output paths
//! are resolved under `DQC1_OUT_DIR` when that variable is set.
//!
//! Exit status: 0 on success, 1 when a verification check fails, 2 on
//! usage errors.

use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dqc1_metrology::estimator::{self, AdaptiveSettings, BenchmarkSettings};
use dqc1_metrology::harness::{self, NegativityTarget, ScanTable};
use dqc1_metrology::{Error, Execution, ModelConfig};

const OUT_DIR_VAR: &str = "DQC1_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "dqc1", version, about = "One-clean-qubit phase estimation: Fisher information, oracle checks and adaptive estimation")]
struct Cli {
    /// Evaluate every data-parallel loop on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
struct ConfigArgs {
    /// Pure register qubits.
    #[arg(long, default_value_t = 0)]
    n: usize,
    /// Partially pure register qubits.
    #[arg(long, default_value_t = 0)]
    m: usize,
    /// Fully mixed register qubits.
    #[arg(long, default_value_t = 0)]
    l: usize,
    /// Purity bias of the partially pure qubits, in [0, 1].
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    epsilon: f64,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ModelConfig, Error> {
        ModelConfig::new(self.n, self.m, self.l, self.epsilon)
    }
}

#[derive(Args, Debug, Clone, Copy)]
struct OmegaGrid {
    #[arg(long, default_value_t = -FRAC_PI_2, allow_negative_numbers = true)]
    omega_min: f64,
    #[arg(long, default_value_t = FRAC_PI_2, allow_negative_numbers = true)]
    omega_max: f64,
    /// Grid points, endpoints included.
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Target {
    Probe,
    Output,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Quantum Fisher information by closed form, binomial sum and oracle.
    Qfi {
        #[command(flatten)]
        config: ConfigArgs,
        /// Largest total qubit count sent to the oracle.
        #[arg(long, default_value_t = 10)]
        max_qubits: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classical Fisher information over a detuning grid.
    FisherScan {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        grid: OmegaGrid,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Writes the three reference Fisher curves into a directory.
    Fig3 {
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One adaptive Bayesian estimation run, one CSV row per round.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        /// True phase.
        #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
        phi: f64,
        #[arg(long, default_value_t = 50)]
        rounds: usize,
        /// Shots per round.
        #[arg(long, default_value_t = estimator::DEFAULT_SHOTS_PER_ROUND)]
        shots: usize,
        #[arg(long, default_value_t = estimator::DEFAULT_GRID_SIZE)]
        grid_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ensemble MSE of adaptive estimation against the Cramér-Rao bound.
    Benchmark {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
        phi: f64,
        /// Total shots per trial.
        #[arg(long, default_value_t = 2000)]
        shots: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Shots per adaptive round.
        #[arg(long, default_value_t = estimator::DEFAULT_SHOTS_PER_ROUND)]
        shots_per_round: usize,
        #[arg(long, default_value_t = estimator::DEFAULT_GRID_SIZE)]
        grid_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Randomised analytic-versus-oracle verification sweep.
    Crosscheck {
        #[arg(long, default_value_t = 6)]
        max_qubits: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = harness::DEFAULT_CROSSCHECK_SAMPLES)]
        samples: usize,
    },
    /// Control-side discord of the output state and the readout hermiticity
    /// defect over a detuning grid.
    DiscordScan {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        grid: OmegaGrid,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        phi: f64,
        /// Evaluate the single readout setting θ instead of the grid.
        #[arg(long, allow_negative_numbers = true)]
        theta: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Negativity of the probe over ε in [0, 1], or of the output state over
    /// a detuning grid.
    NegativityScan {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_enum, default_value_t = Target::Probe)]
        target: Target,
        #[command(flatten)]
        grid: OmegaGrid,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        phi: f64,
        /// Output target only: evaluate the single readout setting θ.
        #[arg(long, allow_negative_numbers = true)]
        theta: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Verification(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_)
            | Error::SizeCap { .. }
            | Error::BinomialGuard { .. }
            | Error::GridSize(_)
            | Error::InvalidRange(_)
            | Error::IndexOutOfRange { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

/// Collects `key=value` pairs and prints them to stderr.
struct Manifest(Vec<(&'static str, String)>);

impl Manifest {
    fn new(command: &str, exec: Execution) -> Self {
        Manifest(vec![
            ("command", command.to_string()),
            ("execution", if exec.is_parallel() { "parallel" } else { "sequential" }.to_string()),
        ])
    }

    fn add(&mut self, key: &'static str, value: impl ToString) -> &mut Self {
        self.0.push((key, value.to_string()));
        self
    }

    fn config(&mut self, cfg: &ModelConfig) -> &mut Self {
        self.add("n", cfg.n).add("m", cfg.m).add("l", cfg.l).add("epsilon", cfg.epsilon)
    }

    fn out(&mut self, out: &Option<PathBuf>) -> &mut Self {
        let shown = out.as_ref().map_or_else(|| "stdout".to_string(), |p| p.display().to_string());
        self.add("out", shown)
    }

    fn echo(&self) {
        let mut err = std::io::stderr().lock();
        for (k, v) in &self.0 {
            let _ = writeln!(err, "# {k} = {v}");
        }
    }
}

fn resolve_out(out: Option<PathBuf>) -> Option<PathBuf> {
    let base = std::env::var_os(OUT_DIR_VAR).map(PathBuf::from);
    match (out, base) {
        (Some(p), Some(base)) if p.is_relative() => Some(base.join(p)),
        (out, _) => out,
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, text)?;
        }
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn emit_table(out: &Option<PathBuf>, table: &ScanTable) -> Result<(), Failure> {
    emit(out, &table.to_csv()?)
}

fn single_point(grid: &OmegaGrid, phi: f64, theta: Option<f64>, default_steps: usize) -> Result<Vec<f64>, Failure> {
    match theta {
        Some(theta) => Ok(vec![theta - phi]),
        None => Ok(harness::linear_grid(grid.omega_min, grid.omega_max, grid.steps.unwrap_or(default_steps))?),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    match cli.command {
        Command::Qfi { config, max_qubits, out } => {
            let cfg = config.resolve()?;
            let out = resolve_out(out);
            Manifest::new("qfi", exec).config(&cfg).add("max_qubits", max_qubits).out(&out).echo();
            let report = harness::qfi_report(&cfg, max_qubits)?;
            emit_table(&out, &report.table())?;
            let failures = report.failures();
            if !failures.is_empty() {
                return Err(Failure::Verification(failures.join("; ")));
            }
        }
        Command::FisherScan { config, grid, out } => {
            let cfg = config.resolve()?;
            let steps = grid.steps.unwrap_or(harness::FIG3_POINTS);
            let out = resolve_out(out);
            Manifest::new("fisher-scan", exec)
                .config(&cfg)
                .add("omega_min", grid.omega_min)
                .add("omega_max", grid.omega_max)
                .add("steps", steps)
                .out(&out)
                .echo();
            let rows = harness::fisher_scan_with(&cfg, grid.omega_min, grid.omega_max, steps, exec)?;
            let comments = vec![format!(
                "fisher-scan n={} m={} l={} epsilon={} omega=[{}, {}] steps={steps}",
                cfg.n, cfg.m, cfg.l, cfg.epsilon, grid.omega_min, grid.omega_max
            )];
            emit_table(&out, &ScanTable::new(comments, rows))?;
        }
        Command::Fig3 { out } => {
            let dir = resolve_out(out)
                .or_else(|| std::env::var_os(OUT_DIR_VAR).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("."));
            Manifest::new("fig3", exec).add("out", dir.display()).add("points", harness::FIG3_POINTS).echo();
            let summary = harness::fig3_with(&dir, exec)?;
            for c in &summary.curves {
                println!(
                    "{} {} qfi={:.6} at_zero={:.6} spread={:.3e}",
                    c.curve.name,
                    c.path.display(),
                    c.qfi,
                    c.at_zero,
                    c.spread
                );
            }
            let failures = summary.failures();
            if !failures.is_empty() {
                return Err(Failure::Verification(failures.join("; ")));
            }
        }
        Command::Simulate { config, phi, rounds, shots, grid_size, seed, out } => {
            let cfg = config.resolve()?;
            let out = resolve_out(out);
            Manifest::new("simulate", exec)
                .config(&cfg)
                .add("phi", phi)
                .add("rounds", rounds)
                .add("shots", shots)
                .add("grid_size", grid_size)
                .add("seed", seed)
                .add("rng", estimator::RNG_ALGORITHM)
                .out(&out)
                .echo();
            let settings = AdaptiveSettings { rounds, shots_per_round: shots, grid_size };
            let trace = estimator::run_adaptive(&cfg, phi, &settings, seed)?;
            emit(&out, &harness::trace_csv(&trace)?)?;
        }
        Command::Benchmark { config, phi, shots, trials, shots_per_round, grid_size, seed, out } => {
            let cfg = config.resolve()?;
            let out = resolve_out(out);
            Manifest::new("benchmark", exec)
                .config(&cfg)
                .add("phi", phi)
                .add("shots", shots)
                .add("trials", trials)
                .add("shots_per_round", shots_per_round)
                .add("grid_size", grid_size)
                .add("seed", seed)
                .add("rng", estimator::RNG_ALGORITHM)
                .out(&out)
                .echo();
            let settings = BenchmarkSettings { total_shots: shots, trials, shots_per_round, grid_size };
            let summary = estimator::crb_benchmark(&cfg, phi, &settings, seed, exec)?;
            emit_table(&out, &harness::benchmark_table(&cfg, phi, seed, &summary))?;
        }
        Command::Crosscheck { max_qubits, seed, samples } => {
            Manifest::new("crosscheck", exec)
                .add("max_qubits", max_qubits)
                .add("seed", seed)
                .add("samples", samples)
                .echo();
            let report = harness::crosscheck_with(max_qubits, seed, samples, exec)?;
            println!("{report}");
            if !report.passed() {
                return Err(Failure::Verification(format!("{} crosscheck failures", report.failures())));
            }
        }
        Command::DiscordScan { config, grid, phi, theta, out } => {
            let cfg = config.resolve()?;
            let omegas = single_point(&grid, phi, theta, 21)?;
            let out = resolve_out(out);
            Manifest::new("discord-scan", exec)
                .config(&cfg)
                .add("phi", phi)
                .add("omega_min", omegas[0])
                .add("omega_max", omegas[omegas.len() - 1])
                .add("steps", omegas.len())
                .out(&out)
                .echo();
            let rows = harness::discord_scan(&cfg, phi, &omegas, exec)?;
            let comments = vec![format!(
                "discord-scan n={} m={} l={} epsilon={} phi={phi}; theta = phi + omega; discord in bits",
                cfg.n, cfg.m, cfg.l, cfg.epsilon
            )];
            emit_table(&out, &ScanTable::new(comments, rows))?;
        }
        Command::NegativityScan { config, target, grid, phi, theta, out } => {
            let cfg = config.resolve()?;
            let steps = grid.steps.unwrap_or(11);
            let (target, points) = match target {
                Target::Probe => (NegativityTarget::Probe, harness::linear_grid(0.0, 1.0, steps)?),
                Target::Output => (NegativityTarget::Output, single_point(&grid, phi, theta, steps)?),
            };
            let out = resolve_out(out);
            Manifest::new("negativity-scan", exec)
                .config(&cfg)
                .add("target", format!("{target:?}").to_lowercase())
                .add("phi", phi)
                .add("x_min", points[0])
                .add("x_max", points[points.len() - 1])
                .add("steps", points.len())
                .out(&out)
                .echo();
            let rows = harness::negativity_scan(&cfg, target, &points, phi, exec)?;
            let comments = vec![format!(
                "negativity-scan target={target:?} n={} m={} l={} phi={phi}",
                cfg.n, cfg.m, cfg.l
            )];
            emit_table(&out, &ScanTable::new(comments, rows))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn relative_out_paths_stay_relative_without_override() {
        if std::env::var_os(OUT_DIR_VAR).is_none() {
            assert_eq!(resolve_out(Some("a.csv".into())), Some(PathBuf::from("a.csv")));
        }
        assert_eq!(resolve_out(Some("/tmp/a.csv".into())), Some(PathBuf::from("/tmp/a.csv")));
    }

    #[test]
    fn theta_overrides_the_grid() {
        let grid = OmegaGrid { omega_min: -1.0, omega_max: 1.0, steps: Some(5) };
        let points = single_point(&grid, 0.25, Some(1.0), 3).ok().unwrap();
        assert_eq!(points, vec![0.75]);
        assert_eq!(single_point(&grid, 0.0, None, 3).ok().unwrap().len(), 5);
    }

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert!(matches!(Failure::from(Error::InvalidRange("x".into())), Failure::Usage(_)));
        assert!(matches!(Failure::from(Error::Parse("x".into())), Failure::Runtime(_)));
    }
}
