//! End-to-end tests of the `latdisc` binary: output formats, exit codes,
//! artifact writing, and thread-count independence of emitted CSV.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use latdisc_core::body::gen_ellipse;
use latdisc_core::lattice::count_points;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_latdisc")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn stdout_field(out: &Output, key: &str) -> String {
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    let prefix = format!("{key}: ");
    text.lines()
        .find_map(|l| l.strip_prefix(&prefix).map(str::to_owned))
        .unwrap_or_else(|| panic!("no `{key}:` line in output:\n{text}"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn count_matches_the_library() {
    let out = run(&[
        "count", "--body", "gen_ellipse", "--gamma", "3", "--R", "7.5", "--z", "0.3,0.4",
    ]);
    assert!(out.status.success());
    let cli_count: i64 = stdout_field(&out, "count").parse().unwrap();
    let body = gen_ellipse(3.0).unwrap();
    assert_eq!(cli_count, count_points(&body, 7.5, [0.3, 0.4]).unwrap());
    let disc: f64 = stdout_field(&out, "discrepancy").parse().unwrap();
    assert!(disc.is_finite());
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["count", "--help"]).status.code(), Some(0));
}

#[test]
fn usage_and_runtime_errors_exit_one() {
    // Unknown flag.
    assert_eq!(run(&["count", "--R", "4", "--bogus"]).status.code(), Some(1));
    // Missing required seed.
    assert_eq!(
        run(&["lpnorm", "--R", "8", "--p", "2"]).status.code(),
        Some(1)
    );
    // Fourier needs exactly one of --zeta / --s.
    assert_eq!(run(&["fourier"]).status.code(), Some(1));
    assert_eq!(
        run(&["fourier", "--zeta", "1,0", "--s", "2"]).status.code(),
        Some(1)
    );
    // Unreadable config and unreadable csv surface as runtime errors.
    assert_eq!(run(&["run", "/nonexistent.toml"]).status.code(), Some(1));
    assert_eq!(run(&["refit", "/nonexistent.csv"]).status.code(), Some(1));
    // Invalid body parameters.
    let out = run(&["count", "--body", "gen_ellipse", "--gamma", "0.5", "--R", "4"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn lpnorm_is_reproducible_from_the_seed() {
    let args = [
        "lpnorm", "--R", "9.5", "--p", "2", "--samples", "64", "--seed", "42",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let value: f64 = stdout_field(&a, "value").parse().unwrap();
    assert!(value.is_finite() && value > 0.0);
    assert_eq!(stdout_field(&a, "seed"), "42");
}

#[test]
fn fourier_slice_flag_matches_axis_vector() {
    let by_s = run(&["fourier", "--body", "gen_ellipse", "--gamma", "4", "--s", "2.5"]);
    let by_zeta = run(&[
        "fourier", "--body", "gen_ellipse", "--gamma", "4", "--zeta", "0,2.5",
    ]);
    assert!(by_s.status.success() && by_zeta.status.success());
    let a: f64 = stdout_field(&by_s, "abs").parse().unwrap();
    let b: f64 = stdout_field(&by_zeta, "abs").parse().unwrap();
    assert!((a - b).abs() <= 1e-6 * a.abs().max(1e-300), "{a} vs {b}");
}

#[test]
fn run_exit_codes_follow_the_report_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let ok_cfg = write_config(
        dir.path(),
        "ok.toml",
        &format!(
            "experiment = \"identity_suite\"\nseed = 3\nout = {:?}\n",
            dir.path().join("ok_run").to_str().unwrap()
        ),
    );
    let out = run(&["run", &ok_cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_field(&out, "pass"), "true");
    let csv_path = stdout_field(&out, "csv");
    let json_path = stdout_field(&out, "json");
    assert!(Path::new(&csv_path).is_file());
    assert!(Path::new(&json_path).is_file());

    // An unattainable tolerance flips the verdict and the exit code.
    let bad_cfg = write_config(
        dir.path(),
        "bad.toml",
        &format!(
            "experiment = \"identity_suite\"\nseed = 3\nout = {:?}\n\
             [tolerances]\nidentity = 0.0\n",
            dir.path().join("bad_run").to_str().unwrap()
        ),
    );
    let out = run(&["run", &bad_cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_field(&out, "pass"), "false");
}

#[test]
fn thread_count_never_changes_emitted_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut artifacts = Vec::new();
    for (name, threads) in [("t1", "1"), ("t2", "2")] {
        let cfg = write_config(
            dir.path(),
            &format!("{name}.toml"),
            &format!(
                "experiment = \"exponent_scan\"\nbody = \"disk\"\nseed = 11\n\
                 r_min = 8.0\nr_max = 64.0\nr_count = 8\nm = 16\np = [2.0]\n\
                 out = {:?}\n",
                dir.path().join(name).to_str().unwrap()
            ),
        );
        let out = run(&["--threads", threads, "run", &cfg]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        artifacts.push(fs::read(stdout_field(&out, "csv")).unwrap());
    }
    // Same scan driven by the environment override instead of the flag.
    let cfg = write_config(
        dir.path(),
        "env.toml",
        &format!(
            "experiment = \"exponent_scan\"\nbody = \"disk\"\nseed = 11\n\
             r_min = 8.0\nr_max = 64.0\nr_count = 8\nm = 16\np = [2.0]\n\
             out = {:?}\n",
            dir.path().join("env_run").to_str().unwrap()
        ),
    );
    let out = Command::new(bin())
        .args(["run", &cfg])
        .env("RAYON_NUM_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    artifacts.push(fs::read(stdout_field(&out, "csv")).unwrap());

    assert_eq!(artifacts[0], artifacts[1]);
    assert_eq!(artifacts[0], artifacts[2]);
}

#[test]
fn refit_reproduces_the_reported_fit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "scan.toml",
        &format!(
            "experiment = \"exponent_scan\"\nbody = \"disk\"\nseed = 11\n\
             r_min = 8.0\nr_max = 64.0\nr_count = 8\nm = 16\np = [2.0]\n\
             out = {:?}\n",
            dir.path().join("scan").to_str().unwrap()
        ),
    );
    let out = run(&["run", &cfg]);
    assert!(out.status.success());
    let csv_path = stdout_field(&out, "csv");
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(stdout_field(&out, "json")).unwrap()).unwrap();
    let reported = json["fits"][0]["fit"]["exponent"].as_f64().unwrap();

    let out = run(&["refit", &csv_path, "--p", "2"]);
    assert!(out.status.success());
    let refit: f64 = stdout_field(&out, "exponent").parse().unwrap();
    assert_eq!(refit.to_bits(), reported.to_bits());
}
