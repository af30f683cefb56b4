//! End-to-end tests of the `lab` binary: exit codes, CSV determinism,
//! configuration precedence, and the cache lifecycle.
//!
//! Machine-model invocations stay on a tiny program-length budget so the
//! enumeration cost is negligible; every run gets its own cache directory
//! through `LAB_CACHE_DIR`.

use std::path::Path;
use std::process::{Command, Output};

use seqlab_cli::table::ResultTable;
use tempfile::TempDir;

fn lab(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lab"))
        .args(args)
        .env("LAB_CACHE_DIR", cache)
        .output()
        .expect("binary launches")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

#[test]
fn healthy_run_exits_zero_and_prints_parseable_csv() {
    let tmp = TempDir::new().unwrap();
    let output = lab(tmp.path(), &["run", "raven-confirmation"]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));

    let csv = stdout(&output);
    assert!(csv.contains("# experiment = raven-confirmation"));
    let table = ResultTable::parse_csv(&csv).expect("stdout is a result table");
    assert_eq!(table.rows().len(), 101);
    assert_eq!(table.to_csv_string(), csv);
}

#[test]
fn rerun_with_same_flags_is_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let first = tmp.path().join("first.csv");
    let second = tmp.path().join("second.csv");
    for out in [&first, &second] {
        let output = lab(
            tmp.path(),
            &["run", "raven-confirmation", "--n", "60", "--out", out.to_str().unwrap()],
        );
        assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    }
    let a = std::fs::read(&first).unwrap();
    let b = std::fs::read(&second).unwrap();
    assert_eq!(a, b);
}

#[test]
fn config_file_applies_and_flags_override_it() {
    let tmp = TempDir::new().unwrap();
    let config = tmp.path().join("lab.conf");
    std::fs::write(&config, "# sweep length\nn = 40\n").unwrap();

    let from_file = lab(
        tmp.path(),
        &["run", "raven-confirmation", "--config", config.to_str().unwrap()],
    );
    assert_eq!(from_file.status.code(), Some(0), "{}", stderr(&from_file));
    assert!(stdout(&from_file).contains("# n = 40"));

    let overridden = lab(
        tmp.path(),
        &[
            "run",
            "raven-confirmation",
            "--config",
            config.to_str().unwrap(),
            "--n",
            "60",
        ],
    );
    assert_eq!(overridden.status.code(), Some(0), "{}", stderr(&overridden));
    assert!(stdout(&overridden).contains("# n = 60"));
}

#[test]
fn unknown_config_key_exits_two() {
    let tmp = TempDir::new().unwrap();
    let config = tmp.path().join("lab.conf");
    std::fs::write(&config, "bogus = 1\n").unwrap();
    let output = lab(
        tmp.path(),
        &["run", "raven-confirmation", "--config", config.to_str().unwrap()],
    );
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("bogus"));
}

#[test]
fn unknown_experiment_exits_two_and_lists_the_catalog() {
    let tmp = TempDir::new().unwrap();
    let output = lab(tmp.path(), &["run", "no-such-experiment"]);
    assert_eq!(output.status.code(), Some(2));
    let err = stderr(&output);
    assert!(err.contains("no-such-experiment"));
    assert!(err.contains("raven-confirmation"), "{err}");
}

#[test]
fn stochastic_experiment_without_seed_exits_two() {
    let tmp = TempDir::new().unwrap();
    let output = lab(tmp.path(), &["run", "bound-suite"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("seed"), "{}", stderr(&output));
}

#[test]
fn oversized_length_budget_exits_two() {
    let tmp = TempDir::new().unwrap();
    let output = lab(tmp.path(), &["cache", "build", "--L", "60"]);
    assert_eq!(output.status.code(), Some(2), "{}", stderr(&output));
}

#[test]
fn cache_lifecycle_build_verify_info() {
    let tmp = TempDir::new().unwrap();
    let budget = ["--L", "12", "--T", "500"];

    let build = lab(tmp.path(), &[&["cache", "build"], &budget[..]].concat());
    assert_eq!(build.status.code(), Some(0), "{}", stderr(&build));
    assert!(stdout(&build).contains("programs"));

    let verify = lab(tmp.path(), &[&["cache", "verify"], &budget[..]].concat());
    assert_eq!(verify.status.code(), Some(0), "{}", stderr(&verify));
    assert!(stdout(&verify).starts_with("ok:"));

    let info = lab(tmp.path(), &[&["cache", "info"], &budget[..]].concat());
    assert_eq!(info.status.code(), Some(0), "{}", stderr(&info));
    assert!(stdout(&info).contains("L = 12"));
}

#[test]
fn truncated_cache_file_fails_verification_with_exit_one() {
    let tmp = TempDir::new().unwrap();
    let budget = ["--L", "12", "--T", "500"];
    let build = lab(tmp.path(), &[&["cache", "build"], &budget[..]].concat());
    assert_eq!(build.status.code(), Some(0), "{}", stderr(&build));

    let file = std::fs::read_dir(tmp.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.is_file())
        .expect("build wrote a cache file");
    let bytes = std::fs::read(&file).unwrap();
    std::fs::write(&file, &bytes[..bytes.len() / 2]).unwrap();

    let verify = lab(tmp.path(), &[&["cache", "verify"], &budget[..]].concat());
    assert_eq!(verify.status.code(), Some(1), "{}", stderr(&verify));
    assert!(stderr(&verify).contains("cache verification failed"));
}

#[test]
fn machine_experiment_through_the_binary_reruns_identically() {
    let tmp = TempDir::new().unwrap();
    let first = tmp.path().join("first.csv");
    let second = tmp.path().join("second.csv");
    for out in [&first, &second] {
        let output = lab(
            tmp.path(),
            &[
                "run",
                "computable-convergence",
                "--L",
                "12",
                "--T",
                "500",
                "--n",
                "40",
                "--out",
                out.to_str().unwrap(),
            ],
        );
        assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    }
    let a = std::fs::read(&first).unwrap();
    let b = std::fs::read(&second).unwrap();
    assert_eq!(a, b);
    assert!(!a.is_empty());
    let table = ResultTable::parse_csv(std::str::from_utf8(&a).unwrap()).unwrap();
    assert_eq!(table.rows().len(), 40);
}
