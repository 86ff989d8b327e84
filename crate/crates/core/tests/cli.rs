use std::path::Path;
use std::process::{Command, Output};

use qcfd::harness::{parse_csv, FOCK_DIM_ENV};

fn qcfd(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcfd"))
        .args(args)
        .current_dir(dir)
        .env_remove(FOCK_DIM_ENV)
        .output()
        .unwrap()
}

fn qcfd_env(args: &[&str], dir: &Path, dim: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcfd"))
        .args(args)
        .current_dir(dir)
        .env(FOCK_DIM_ENV, dim)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    std::fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

const SMALL: &str = "coupling = jcm\nlambda = 0.1\nalpha = 3\nfield = coherent\nt_end = 20\nn_points = 201\nengines = exact, fbrwa\n";

#[test]
fn simulate_prints_csv_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.cfg", SMALL);
    let out = qcfd(&["simulate", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let series = parse_csv(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(series.len(), 2);
    assert_eq!(series[0].t.len(), 201);
}

#[test]
fn simulate_flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.cfg", SMALL);
    let out = qcfd(
        &["simulate", &cfg, "--engine", "exact", "--n-points", "11", "--out", "run"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("run.csv")).unwrap();
    let series = parse_csv(&text).unwrap();
    assert_eq!(series.len(), 1);
    assert_eq!(series[0].t.len(), 11);
}

#[test]
fn figure_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let out = qcfd(&["figure", "fig1b", "--out-dir", "."], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("fig1b.csv")).unwrap();
    assert_eq!(parse_csv(&csv).unwrap().len(), 3);
    let svg = std::fs::read_to_string(dir.path().join("fig1b.svg")).unwrap();
    roxmltree::Document::parse(&svg).unwrap();
}

#[test]
fn floquet_prints_quasienergies_and_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "rwa.cfg",
        "coupling = jcm\nlambda = 0.05\nalpha = 10\nfloquet_backend = numerical\n",
    );
    let out = qcfd(&["floquet", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let value = |key: &str| -> f64 {
        let line = text.lines().find(|l| l.starts_with(key)).unwrap();
        line.rsplit(',').next().unwrap().parse().unwrap()
    };
    assert!((value("lambda_eff,") - 0.025).abs() < 1e-9);
    assert!((value("A,0,") - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-8);
    assert!((value("B,1,") - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-8);
}

#[test]
fn compare_reports_metrics_per_engine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.cfg", SMALL);
    assert_eq!(qcfd(&["simulate", &cfg, "--out", "a"], dir.path()).status.code(), Some(0));
    assert_eq!(qcfd(&["simulate", &cfg, "--out", "b", "--lambda", "0.11"], dir.path()).status.code(), Some(0));
    let out = qcfd(&["compare", "a.csv", "b.csv", "--window", "0,10"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert!(rows[0].starts_with("engine_a,engine_b,samples,sup_norm"));
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("exact,exact,101,"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.cfg", "coupling = jcm\nlambda = nope\n");
    assert_eq!(qcfd(&["simulate", &bad], dir.path()).status.code(), Some(2));
    assert_eq!(qcfd(&["figure", "fig9"], dir.path()).status.code(), Some(2));
    let closed = write(dir.path(), "closed.cfg", "coupling = rabi\nlambda = 0.02\nalpha = 10\nengines = closed_form\n");
    assert_eq!(qcfd(&["simulate", &closed], dir.path()).status.code(), Some(2));
    assert_eq!(qcfd(&["simulate", "missing.cfg"], dir.path()).status.code(), Some(4));
    assert_eq!(qcfd(&["compare", "x.csv", "y.csv"], dir.path()).status.code(), Some(4));
    let resonant = write(
        dir.path(),
        "res.cfg",
        "coupling = jcm\nlambda = 0.1\nalpha = 10\nfloquet_backend = numerical\n",
    );
    assert_eq!(qcfd(&["floquet", &resonant], dir.path()).status.code(), Some(3));
}

#[test]
fn mismatched_grids_fail_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.cfg", SMALL);
    qcfd(&["simulate", &cfg, "--out", "a"], dir.path());
    qcfd(&["simulate", &cfg, "--out", "b", "--n-points", "150"], dir.path());
    assert_eq!(qcfd(&["compare", "a.csv", "b.csv"], dir.path()).status.code(), Some(2));
}

#[test]
fn environment_overrides_truncation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.cfg", SMALL);
    assert_eq!(qcfd_env(&["simulate", &cfg], dir.path(), "abc").status.code(), Some(2));
    // far too small for |alpha| = 3
    assert_eq!(qcfd_env(&["simulate", &cfg], dir.path(), "4").status.code(), Some(3));
    let narrow = qcfd_env(&["simulate", &cfg, "--engine", "exact"], dir.path(), "60");
    let wide = qcfd_env(&["simulate", &cfg, "--engine", "exact"], dir.path(), "100");
    assert_eq!(narrow.status.code(), Some(0));
    let a = parse_csv(&String::from_utf8(narrow.stdout).unwrap()).unwrap();
    let b = parse_csv(&String::from_utf8(wide.stdout).unwrap()).unwrap();
    let sup = a[0].p.iter().zip(&b[0].p).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(sup < 1e-6, "{sup}");
}
