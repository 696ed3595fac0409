//! End-to-end checks of the command-line surface: output formats, exit
//! codes, and byte-level determinism under a fixed seed.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cellcount"))
}

fn write_temp(name: &str, contents: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("cellcount-cli-test-{}-{name}", std::process::id()));
    std::fs::write(&path, contents).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn count_small_instance_exact() {
    let f = write_temp("count.cnf", "p cnf 2 2\n1 -2 0\n-1 2 0\n");
    let out = run(&["count", "--seed", "7", f.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("s mc 2"), "{text}");
    assert!(text.contains("c seed 7"));

    let out = run(&["count", "--seed", "7", "--output", "json", f.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["estimate"], "2");
    assert_eq!(v["exact"], true);
    assert_eq!(v["seed"], 7);
    assert!(v["sat_calls"].as_u64().unwrap() > 0);
    let _ = std::fs::remove_file(f);
}

#[test]
fn count_is_byte_deterministic() {
    let f = write_temp(
        "det.cnf",
        "p cnf 12 3\n1 2 3 0\n-4 5 0\n6 -7 8 0\n",
    );
    let args = ["count", "--epsilon", "0.8", "--delta", "0.2", "--seed", "42"];
    let a = run(&[&args[..], &[f.to_str().unwrap()]].concat());
    let b = run(&[&args[..], &[f.to_str().unwrap()]].concat());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout, "same argv + seed must be byte-identical");
    let _ = std::fs::remove_file(f);
}

#[test]
fn exit_codes() {
    // 2: input error.
    let bad = write_temp("bad.cnf", "p cnf 1 1\n2 0\n");
    let out = run(&["count", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let _ = std::fs::remove_file(bad);

    // 2: missing file.
    let out = run(&["count", "/nonexistent/path.cnf"]);
    assert_eq!(out.status.code(), Some(2));

    // 1: usage (clap) errors.
    let out = bin().arg("bogus-subcommand").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));

    // 1: relnet without endpoints.
    let g = write_temp("g.graph", "p graph 2 1\ne 1 2\n");
    let out = run(&["relnet", g.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let _ = std::fs::remove_file(g);
}

#[test]
fn sample_emits_witness_lines() {
    let f = write_temp("sample.cnf", "p cnf 4 1\n1 2 3 4 0\n");
    let out = run(&[
        "sample", "--variant", "unigen2", "-N", "22", "--seed", "1",
        f.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let witness_lines: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('c'))
        .collect();
    assert_eq!(witness_lines.len(), 22);
    for line in witness_lines {
        assert!(line.ends_with(" 0"), "line `{line}` not 0-terminated");
        // Four literals per witness (S = all four variables).
        assert_eq!(line.split_whitespace().count(), 5);
    }
    let _ = std::fs::remove_file(f);
}

#[test]
fn sample_freq_aggregates() {
    let f = write_temp("freq.cnf", "p cnf 2 1\n1 2 0\n");
    let out = run(&[
        "sample", "-N", "50", "--seed", "3", "--freq",
        f.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut total = 0u64;
    for line in text.lines().filter(|l| !l.starts_with('c')) {
        let parts: Vec<&str> = line.split_whitespace().collect();
        // "<lit> <lit> 0 <count>"
        assert_eq!(parts[parts.len() - 2], "0");
        total += parts.last().unwrap().parse::<u64>().unwrap();
    }
    assert_eq!(total, 50);
    let _ = std::fs::remove_file(f);
}

#[test]
fn sample_unigen_variant_and_determinism() {
    let f = write_temp("ug.cnf", "p cnf 4 1\n1 2 3 4 0\n");
    let args = [
        "sample", "--variant", "unigen", "-N", "5", "--seed", "11",
        f.to_str().unwrap(),
    ];
    let a = run(&args);
    assert!(a.status.success());
    let text = stdout(&a);
    assert_eq!(text.lines().filter(|l| !l.starts_with('c')).count(), 5);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let _ = std::fs::remove_file(f);
}

#[test]
fn sample_mis_first_projects_witnesses() {
    // x₂ is determined by x₁; a minimized support has one variable, so
    // witnesses carry a single literal.
    let f = write_temp("misfirst.cnf", "p cnf 2 2\n1 -2 0\n-1 2 0\n");
    let out = run(&[
        "sample", "--mis-first", "-N", "4", "--seed", "3",
        f.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    for line in stdout(&out).lines().filter(|l| !l.starts_with('c')) {
        assert_eq!(line.split_whitespace().count(), 2, "line `{line}`");
    }
    let _ = std::fs::remove_file(f);
}

#[test]
fn wsample_draws_weighted_witnesses() {
    let f = write_temp("ws.cnf", "p cnf 2 2\nc w 1 0.75\n1 2 0\n-1 -2 0\n");
    let out = run(&[
        "wsample", "--tilt", "3", "-N", "40", "--seed", "5",
        f.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('c')).collect();
    assert_eq!(lines.len(), 40);
    // The 3:1-weighted witness should dominate.
    let heavy = lines.iter().filter(|l| l.starts_with("1 ")).count();
    assert!(heavy > 20, "heavy witness drawn only {heavy}/40 times");
    let _ = std::fs::remove_file(f);
}

#[test]
fn count_autodetects_dnf() {
    let f = write_temp("dnf.cnf", "p dnf 3 2\n1 0\n-1 2 0\n");
    let out = run(&["count", "--seed", "2", "--output", "json", f.to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["oracle"], "dnf");
    // 6 models: x₁ free on x₂x₃ (4) plus ¬x₁x₂ on x₃ (2).
    assert_eq!(v["estimate"], "6");
    let _ = std::fs::remove_file(f);
}

#[test]
fn mis_emits_ind_line() {
    let f = write_temp("mis.cnf", "p cnf 2 2\n1 -2 0\n-1 2 0\n");
    let out = run(&["mis", "--seed", "2", f.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("c size 1"), "{text}");
    assert!(text.lines().any(|l| l.starts_with("c ind ") && l.ends_with(" 0")));
    let _ = std::fs::remove_file(f);
}

#[test]
fn relnet_reports_rational() {
    let g = write_temp("relnet.graph", "p graph 3 2\ne 1 3\ne 3 2\n");
    let out = run(&["relnet", "--source", "1", "--sink", "2", "--seed", "4", g.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("r(1,2) = 3/4"), "{}", stdout(&out));

    let out = run(&[
        "relnet", "--all-pairs", "--seed", "4", "--output", "json",
        g.to_str().unwrap(),
    ]);
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    let _ = std::fs::remove_file(g);
}

#[test]
fn reduce_emits_constant_header() {
    let f = write_temp("reduce.cnf", "p cnf 1 1\nc w 1 0.3125\n1 0\n");
    let out = run(&["reduce", "--mode", "conjunctive", f.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("c C_F 2^-4\n"), "{text}");
    assert!(text.contains("p cnf 5 "), "{text}");
    let _ = std::fs::remove_file(f);
}

#[test]
fn wcount_exact_small() {
    let f = write_temp("wcount.cnf", "p cnf 1 1\nc w 1 0.3125\n1 0\n");
    let out = run(&["wcount", "--tilt", "4", "--seed", "9", f.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("s wmc 5/16"), "{}", stdout(&out));
    let _ = std::fs::remove_file(f);
}
