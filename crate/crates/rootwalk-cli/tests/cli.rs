//! End-to-end checks of the binary: flag and config parsing, output schemas,
//! exit codes, and byte-for-byte determinism across runs and worker counts.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rootwalk"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

#[test]
fn moments_csv_has_exact_zeros_off_lattice() {
    let out = run(&[
        "moments", "--N", "3", "--alpha", "1", "--n", "100", "--t", "1", "--kmax", "9",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "k,exact_re,exact_im,leading_re,leading_im,bound,on_grid"
    );
    for (k, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 7);
        assert_eq!(cols[0], k.to_string());
        let exact_re: f64 = cols[1].parse().unwrap();
        if k % 3 != 0 {
            assert_eq!(exact_re, 0.0, "k={k} must vanish exactly");
            assert_eq!(cols[2].parse::<f64>().unwrap(), 0.0);
        }
    }
}

#[test]
fn invalid_spec_exits_2() {
    let out = run(&["moments", "--N", "3", "--alpha", "0", "--n", "10"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, "{\"N\": 2").unwrap();
    let out = run(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn atom_budget_exits_3() {
    let out = bin()
        .env("ROOTWALK_ATOM_BUDGET", "10")
        .args([
            "expect", "--N", "3", "--n", "64", "--t", "1", "--exp", "1", "--route", "exact",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn expect_output_is_deterministic_across_workers() {
    let base = [
        "expect", "--N", "3", "--n", "200", "--t", "1", "--exp", "1", "--route", "mc", "--paths",
        "20000", "--seed", "42",
    ];
    let a = run(&[&base[..], &["--workers", "1"]].concat());
    let b = run(&[&base[..], &["--workers", "8"]].concat());
    assert!(a.status.success() && b.status.success());
    assert_eq!(
        a.stdout, b.stdout,
        "MC output must not depend on the worker count"
    );
}

#[test]
fn solve_config_run_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("solve.json");
    fs::write(
        &cfg,
        r#"{"N": 2, "alpha": 1.0, "phi": {"const": 1.0}, "init": {"series": {"exp": 1.0}},
           "t": 1.0, "z": 0.0, "n": 200, "paths": 5000, "seed": 3}"#,
    )
    .unwrap();
    let out_path = dir.path().join("u.json");
    let out = run(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--route",
        "both",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = fs::read_to_string(&out_path).unwrap();
    assert!(text.contains("\"series\":["));
    assert!(text.contains("\"mc\":["));
    // e^{1/2} to a loose MC band
    let series_re: f64 = text
        .split("\"series\":[")
        .nth(1)
        .unwrap()
        .split(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((series_re - 0.5f64.exp()).abs() < 1e-9);

    // manifest sits next to the output and embeds the config
    let manifest = fs::read_to_string(dir.path().join("u.json.manifest.json")).unwrap();
    assert!(manifest.contains("\"subcommand\":\"solve\""));
    assert!(manifest.contains("\"config\":{"));
    assert!(manifest.contains("\"output_sha256\""));
}

#[test]
fn ito_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("trace.csv");
    let out = run(&[
        "ito",
        "--N",
        "2",
        "--n",
        "10",
        "--t",
        "1",
        "--k",
        "2",
        "--monomial",
        "0",
        "--paths",
        "3",
        "--seed",
        "7",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv = fs::read_to_string(&out_path).unwrap();
    assert!(csv.starts_with("path,tau,W_re,W_im,H_re,H_im\n"));
    assert_eq!(csv.lines().count(), 1 + 3 * 10);
    let summary = fs::read_to_string(dir.path().join("trace.csv.summary.json")).unwrap();
    // k = N = 2, g = 1: the integral is alpha * floor(nt)/n = 1 exactly
    assert!(summary.contains("\"mean\":[1.0000000000000000e0,0.0000000000000000e0]"));
}

#[test]
fn fk_matches_reference_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fk.json");
    fs::write(
        &cfg,
        r#"{"N": 2, "alpha": 1.0, "A": [1.0], "mu": {"atoms": [[1.0, [1.0, 0.0]]]},
           "t": 1.0, "x": 0.0, "n": 200, "paths": 20000, "seed": 5}"#,
    )
    .unwrap();
    let out = run(&["fk", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    // closed form exp(-1/3 + i/2)
    let want = (num_complex::Complex64::new(-1.0 / 3.0, 0.5)).exp();
    let closed: Vec<f64> = text
        .split("\"closed\":[")
        .nth(1)
        .unwrap()
        .split(']')
        .next()
        .unwrap()
        .split(',')
        .map(|s| s.parse().unwrap())
        .collect();
    assert!((closed[0] - want.re).abs() < 1e-12);
    assert!((closed[1] - want.im).abs() < 1e-12);
}

#[test]
fn derive_reports_schedule() {
    let out = run(&[
        "derive",
        "--N",
        "3",
        "--R",
        "0.5",
        "--monomial",
        "3",
        "--n-schedule",
        "100,200",
        "--paths",
        "500",
        "--seed",
        "1",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"per_n\":[{\"n\":100,"));
    assert!(text.contains("{\"n\":200,"));
    assert!(text.contains("\"extrapolated\":["));
}

#[test]
fn verify_subset_deterministic_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    let d1 = dir.path().join("w1");
    let d8 = dir.path().join("w8");
    let d1b = dir.path().join("w1b");
    for (d, workers) in [(&d1, "1"), (&d8, "8"), (&d1b, "1")] {
        let out = run(&[
            "verify",
            "--criterion",
            "1",
            "--criterion",
            "4",
            "--criterion",
            "6",
            "--seed",
            "7",
            "--workers",
            workers,
            "--out",
            d.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "verify subset should pass");
    }
    let r1 = fs::read(d1.join("results.txt")).unwrap();
    let r8 = fs::read(d8.join("results.txt")).unwrap();
    let r1b = fs::read(d1b.join("results.txt")).unwrap();
    assert_eq!(
        r1, r8,
        "results must be byte-identical across worker counts"
    );
    assert_eq!(r1, r1b, "results must be byte-identical across repeat runs");
    assert!(Path::new(&d1.join("results.json")).exists());
}

#[test]
fn verify_reports_failures_with_nonzero_exit() {
    // criterion 10 exercises the displayed exit-time bound, which correct
    // simulations violate; the runner must say FAIL and exit nonzero
    let out = run(&["verify", "--criterion", "10", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("FAIL"));
}
