use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gridless(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridless"))
        .args(args)
        .env_remove("GRIDLESS_WORKERS")
        .env("RUST_BACKTRACE", "0")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("exp.toml");
    fs::write(
        &path,
        "kind = \"m_sweep\"\nL = 32\nK = 1\nm_values = [12, 16]\nn_trials = 2\nseed = 5\n",
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn solve_writes_a_replayable_instance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let out = out.to_str().unwrap();
    let first = stdout(&gridless(&[
        "solve", "-L", "32", "-M", "16", "-K", "1", "--seed", "3", "--out", out,
    ]));
    assert!(first.contains("success true"), "{first}");
    assert!(fs::metadata(dir.path().join("run/outcome.json")).is_ok());

    let instance = dir.path().join("run/instance.json");
    let replay = stdout(&gridless(&[
        "solve",
        "--instance",
        instance.to_str().unwrap(),
    ]));
    assert_eq!(first, replay);
}

#[test]
fn solve_traces_to_stderr() {
    let out = gridless(&["solve", "-L", "16", "-M", "10", "-K", "1", "--trace"]);
    assert!(out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    let lines: Vec<&str> = err.lines().collect();
    assert!(!lines.is_empty());
    assert!(
        lines[0].starts_with('{') && lines[0].contains("\"iteration\""),
        "{}",
        lines[0]
    );
}

#[test]
fn sweep_then_report_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let run = dir.path().join("sweep");
    let run = run.to_str().unwrap();
    let csv = stdout(&gridless(&[
        "sweep-m",
        "--config",
        &cfg,
        "--out",
        run,
        "--methods",
        "fixed_grid,oracle_ls",
    ]));
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("axis,method,mean_rsnr_db,success_rate,n_trials")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    assert!(
        rows[0].starts_with("12,fixed_grid,") && rows[0].ends_with(",2"),
        "{}",
        rows[0]
    );
    assert!(rows[3].starts_with("16,oracle_ls,"), "{}", rows[3]);
    assert_eq!(
        fs::read_to_string(dir.path().join("sweep/summary.csv")).unwrap(),
        csv
    );

    fs::remove_file(dir.path().join("sweep/summary.csv")).unwrap();
    let again = stdout(&gridless(&["report", "--out", run]));
    assert_eq!(again, csv);
    assert_eq!(
        fs::read_to_string(dir.path().join("sweep/summary.csv")).unwrap(),
        csv
    );
}

#[test]
fn sweep_spacing_overrides_axis_values() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("sp");
    let csv = stdout(&gridless(&[
        "sweep-spacing",
        "--trials",
        "1",
        "--values",
        "1.5",
        "--methods",
        "oracle_ls",
        "--out",
        run.to_str().unwrap(),
    ]));
    assert_eq!(
        csv.lines().nth(1).map(|l| l.starts_with("1.5,oracle_ls,")),
        Some(true),
        "{csv}"
    );
}

#[test]
fn errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let cases: Vec<Vec<&str>> = vec![
        vec!["sweep-m", "--config", "/nonexistent/exp.toml"],
        vec!["sweep-m", "--config", &cfg, "--methods", "music"],
        vec!["sweep-m", "--config", &cfg, "--values", "40"],
        vec!["solve", "-L", "8", "-M", "9"],
        vec!["report", "--out", "/nonexistent/run"],
        vec!["frobnicate"],
    ];
    for args in cases {
        let out = gridless(&args);
        assert!(!out.status.success(), "{args:?} succeeded");
        assert!(!out.stderr.is_empty(), "{args:?} printed no error");
    }
}
