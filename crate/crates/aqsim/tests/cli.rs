//! End-to-end checks of the `aqsim` binary: argument handling, config
//! merging, and the file formats the subcommands leave behind.

use std::path::Path;
use std::process::{Command, Output};

use aqsim::harness::parse_record_line;
use aqsim::instances::Ec3Instance;

fn aqsim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aqsim"))
        .args(args)
        .current_dir(dir)
        .env_remove("AQSIM_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn assert_ok(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} failed with {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        stdout(out),
        stderr(out)
    );
}

#[test]
fn gen_writes_loadable_instances() {
    let tmp = tempfile::tempdir().unwrap();
    let out = aqsim(
        tmp.path(),
        &["gen", "--n", "5", "--instances", "2", "--seed", "11", "--out", "inst"],
    );
    assert_ok(&out, "gen");
    let text = stdout(&out);
    assert!(
        text.contains("wrote 2 instance(s)"),
        "gen should report its count, got: {text}"
    );
    let mut loaded = 0;
    for entry in std::fs::read_dir(tmp.path().join("inst")).unwrap() {
        let path = entry.unwrap().path();
        let inst = Ec3Instance::load(&path).expect("generated file parses");
        assert_eq!(inst.n(), 5, "wrong qubit count in {path:?}");
        assert!(inst.solution().is_some(), "missing solution in {path:?}");
        loaded += 1;
    }
    assert_eq!(loaded, 2, "expected exactly the generated files");
}

#[test]
fn min_time_appends_a_parseable_record() {
    let tmp = tempfile::tempdir().unwrap();
    let out = aqsim(
        tmp.path(),
        &["min-time", "--scheme", "grover", "--n", "4", "--out", "rec.jsonl"],
    );
    assert_ok(&out, "min-time");
    assert!(
        stdout(&out).contains("T_min"),
        "expected a converged report, got: {}",
        stdout(&out)
    );
    let text = std::fs::read_to_string(tmp.path().join("rec.jsonl")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1, "exactly one record line");
    let record = parse_record_line(lines[0]).expect("record parses");
    assert_eq!(record.scheme, "grover");
    assert_eq!(record.n, 4);
    assert!(
        record.t_min.is_some() && record.fidelity >= 0.125,
        "record should reflect the converged search: {record:?}"
    );
    assert!(record.wall_secs > 0.0, "wall time should be measured");
}

#[test]
fn gap_sweep_writes_the_expected_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out = aqsim(
        tmp.path(),
        &["gap-sweep", "--scheme", "grover", "--n", "4", "--grid", "41", "--out", "gap.csv"],
    );
    assert_ok(&out, "gap-sweep");
    let text = std::fs::read_to_string(tmp.path().join("gap.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "g,E0,E1", "header mismatch");
    assert_eq!(lines.len(), 1 + 41, "one row per grid point");
    // n=4: minimum gap is 2^{-2} = 0.25
    let report = stdout(&out);
    assert!(
        report.contains("2.5") && report.contains("min gap"),
        "expected the analytic minimum gap near 0.25 in: {report}"
    );
}

#[test]
fn order_param_flags_column_is_present() {
    let tmp = tempfile::tempdir().unwrap();
    let out = aqsim(
        tmp.path(),
        &["order-param", "--scheme", "ising", "--n", "4", "--grid", "21", "--out", "op.csv"],
    );
    assert_ok(&out, "order-param");
    let text = std::fs::read_to_string(tmp.path().join("op.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "g,value,flag", "header mismatch");
    assert_eq!(lines.len(), 1 + 21, "one row per grid point");
    for line in &lines[1..] {
        let flag = line.rsplit(',').next().unwrap();
        assert!(flag == "0" || flag == "1", "flag column must be 0/1, got {line:?}");
    }
}

#[test]
fn config_file_is_merged_and_flags_win() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = tmp.path().join("exp.conf");
    std::fs::write(
        &conf,
        "# experiment settings\nn = 4\nscheme = conventional\ninstances = 2\nseed = 5\nt-max = 64\nout = runs\n",
    )
    .unwrap();
    let out = aqsim(
        tmp.path(),
        &["experiment", "--config", "exp.conf", "--instances", "3"],
    );
    assert_ok(&out, "experiment with config");
    let text = stdout(&out);
    assert!(
        text.contains("completed 3"),
        "flag --instances 3 should override the file's 2, got: {text}"
    );
    let records = std::fs::read_to_string(tmp.path().join("runs/records.jsonl")).unwrap();
    assert_eq!(records.lines().count(), 3, "three records on disk");
    assert!(
        tmp.path().join("runs/fig3.csv").exists(),
        "experiment should auto-write the summary"
    );

    // a rerun skips everything
    let out = aqsim(tmp.path(), &["experiment", "--config", "exp.conf", "--instances", "3"]);
    assert_ok(&out, "experiment rerun");
    assert!(
        stdout(&out).contains("completed 0 (skipped 3"),
        "rerun should skip, got: {}",
        stdout(&out)
    );
}

#[test]
fn summarize_recomputes_from_records_alone() {
    let tmp = tempfile::tempdir().unwrap();
    let out = aqsim(
        tmp.path(),
        &[
            "experiment", "--n", "4", "--scheme", "xy_ec3", "--instances", "6", "--seed", "2",
            "--t-max", "64", "--out", "runs",
        ],
    );
    assert_ok(&out, "experiment");
    let first = std::fs::read_to_string(tmp.path().join("runs/fig3.csv")).unwrap();
    std::fs::remove_file(tmp.path().join("runs/fig3.csv")).unwrap();
    let out = aqsim(tmp.path(), &["summarize", "--out", "runs"]);
    assert_ok(&out, "summarize");
    let second = std::fs::read_to_string(tmp.path().join("runs/fig3.csv")).unwrap();
    assert_eq!(first, second, "summary must be a pure function of the records");
    assert!(
        second.lines().count() >= 2,
        "six uncensored runs admit a CI row, got: {second}"
    );
}

#[test]
fn unknown_config_key_is_a_hard_error() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("bad.conf"), "n = 4\njunk = 1\n").unwrap();
    let out = aqsim(tmp.path(), &["experiment", "--config", "bad.conf"]);
    assert!(!out.status.success(), "unknown key must fail");
    assert!(
        stderr(&out).contains("junk"),
        "error should name the offending key, got: {}",
        stderr(&out)
    );
}

#[test]
fn missing_required_settings_abort_before_work() {
    let tmp = tempfile::tempdir().unwrap();
    let out = aqsim(tmp.path(), &["experiment", "--scheme", "grover"]);
    assert!(!out.status.success(), "missing n must fail");
    assert!(
        stderr(&out).contains('n'),
        "error should point at the missing key, got: {}",
        stderr(&out)
    );
    assert!(
        !tmp.path().join("runs").exists(),
        "validation failures must not create output directories"
    );
}

#[test]
fn sector_and_full_conflict() {
    let tmp = tempfile::tempdir().unwrap();
    let out = aqsim(
        tmp.path(),
        &["min-time", "--scheme", "grover", "--n", "4", "--sector", "--full"],
    );
    assert!(!out.status.success(), "--sector with --full must be rejected");
}

#[test]
fn bad_scheme_name_lists_the_vocabulary() {
    let tmp = tempfile::tempdir().unwrap();
    let out = aqsim(tmp.path(), &["min-time", "--scheme", "grovre", "--n", "4"]);
    assert!(!out.status.success());
    assert!(
        stderr(&out).contains("xy_ec3"),
        "the error should list valid schemes, got: {}",
        stderr(&out)
    );
}

#[test]
fn env_var_sets_the_thread_count() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_aqsim"))
        .args([
            "experiment", "--n", "4", "--scheme", "conventional", "--instances", "2", "--seed",
            "9", "--t-max", "64", "--out", "runs",
        ])
        .current_dir(tmp.path())
        .env("AQSIM_THREADS", "1")
        .output()
        .expect("binary runs");
    assert_ok(&out, "experiment under AQSIM_THREADS=1");
    let records = std::fs::read_to_string(tmp.path().join("runs/records.jsonl")).unwrap();
    assert_eq!(records.lines().count(), 2, "both runs recorded");
}
