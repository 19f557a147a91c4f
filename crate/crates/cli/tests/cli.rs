use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dqc1(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dqc1"))
        .args(args)
        .env_remove("DQC1_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

#[test]
fn qfi_prints_closed_form_row_and_manifest() {
    let out = dqc1(&["qfi", "--n", "0", "--m", "1", "--l", "2", "--epsilon", "0.5"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("n,m,l,epsilon,x_variable,x_value,kind,value"));
    assert!(text.contains("0,1,2,5.0000000000000000e-1,none,0.0000000000000000e0,qfi,5.0000000000000000e0"));
    let manifest = stderr(&out);
    assert!(manifest.contains("# command = qfi"));
    assert!(manifest.contains("# epsilon = 0.5"));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(dqc1(&["qfi", "--epsilon", "1.5"]).status.code(), Some(2));
    assert_eq!(dqc1(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(dqc1(&["fisher-scan", "--steps", "1"]).status.code(), Some(2));
    assert_eq!(dqc1(&["crosscheck", "--max-qubits", "13"]).status.code(), Some(2));
    assert_eq!(dqc1(&["discord-scan", "--l", "12"]).status.code(), Some(2));
}

#[test]
fn help_exits_with_zero() {
    assert_eq!(dqc1(&["--help"]).status.code(), Some(0));
}

#[test]
fn fisher_scan_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scan.csv");
    let out = dqc1(&["fisher-scan", "--n", "6", "--steps", "11", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = fs::read_to_string(&path).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 12);
    for r in rows {
        let value: f64 = r.rsplit(',').next().unwrap().parse().unwrap();
        assert!((value - 49.0).abs() < 1e-9, "{r}");
    }
}

#[test]
fn fig3_honours_output_directory_override() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_dqc1"))
        .arg("fig3")
        .env("DQC1_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    for name in ["dotted", "dashed", "solid"] {
        let text = fs::read_to_string(dir.path().join(format!("fig3_{name}.csv"))).unwrap();
        let rows = text.lines().filter(|l| !l.starts_with('#')).count() - 1;
        assert_eq!(rows, 401);
    }
}

fn run_to(dir: &Path, name: &str, args: &[&str]) -> Vec<u8> {
    let path = dir.join(name);
    let mut full: Vec<&str> = args.to_vec();
    let p = path.to_str().unwrap().to_string();
    full.extend(["--out", &p]);
    let out = dqc1(&full);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    fs::read(&path).unwrap()
}

#[test]
fn simulate_is_byte_identical_across_runs_and_modes() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["simulate", "--l", "3", "--phi", "-1.2", "--rounds", "20", "--seed", "11"];
    let a = run_to(dir.path(), "a.csv", &args);
    let b = run_to(dir.path(), "b.csv", &args);
    let mut seq = args.to_vec();
    seq.push("--sequential");
    let c = run_to(dir.path(), "c.csv", &seq);
    assert_eq!(a, b);
    assert_eq!(a, c);
    let text = String::from_utf8(a).unwrap();
    assert!(text.contains("round,theta,plus,minus,estimate,circ_variance"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 21);
}

#[test]
fn benchmark_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["benchmark", "--l", "2", "--shots", "200", "--trials", "20", "--seed", "5"];
    let a = run_to(dir.path(), "a.csv", &args);
    let b = run_to(dir.path(), "b.csv", &args);
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.contains(",mse_ratio,"));
    assert!(text.contains("low confidence"));
}

#[test]
fn crosscheck_passes_on_small_registers() {
    let out = dqc1(&["crosscheck", "--max-qubits", "4", "--samples", "30", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("failures=0"));
}

#[test]
fn discord_and_negativity_scans() {
    let out = dqc1(&["discord-scan", "--l", "2", "--theta", "0.3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains(",discord,"));
    assert!(text.contains(",hermiticity_defect,"));

    let out = dqc1(&["negativity-scan", "--m", "1", "--l", "1", "--steps", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.matches(",negativity,").count(), 3);
    assert!(text.contains(",epsilon,"));

    let out = dqc1(&["negativity-scan", "--target", "output", "--m", "1", "--epsilon", "0.5", "--steps", "4"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out).matches(",omega,").count(), 4);
}
