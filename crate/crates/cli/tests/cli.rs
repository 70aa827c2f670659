// SPDX-License-Identifier: Apache-2.0

//! End-to-end runs of the `mjl` binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/corpus")
        .join(format!("{name}.mjl"))
}

fn mjl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mjl"))
        .args(args)
        .output()
        .expect("spawn mjl")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn sim_power() {
    let f = corpus("power");
    for (args, expected) in [("2,10", "1024"), ("2,0", "1"), ("-3,3", "-27")] {
        let o = mjl(&["sim", path(&f), "--sig", "i64,i64", "--args", args]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert_eq!(stdout(&o).trim(), expected);
        assert!(stderr(&o).contains("cycles: "));
    }
}

#[test]
fn sim_newton_converges() {
    let o = mjl(&["sim", path(&corpus("newton_raphson")), "--args", "1.0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let x: f64 = stdout(&o).trim().parse().unwrap();
    assert!((x - std::f64::consts::SQRT_2).abs() < 1e-6, "{x}");
}

#[test]
fn unoptimized_graph_gives_the_same_result() {
    let f = corpus("if_else");
    for args in ["3,4", "-5,2", "0,0"] {
        let a = mjl(&["sim", path(&f), "--sig", "i64,i64", "--args", args]);
        let b = mjl(&[
            "sim",
            path(&f),
            "--sig",
            "i64,i64",
            "--args",
            args,
            "--no-opt",
        ]);
        assert!(a.status.success() && b.status.success());
        assert_eq!(stdout(&a), stdout(&b), "{args}");
    }
}

#[test]
fn diff_sweeps_pass() {
    let o = mjl(&[
        "diff",
        path(&corpus("power")),
        "--sig",
        "i64,i64",
        "--sweep",
        "-3..3,0..12",
    ]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(
        stdout(&o).trim(),
        "91/91 match, 0 deadlocks, 0 merge conflicts"
    );
    let o = mjl(&[
        "diff",
        path(&corpus("newton_raphson")),
        "--sweep",
        "0.5|1.0|2.0|4.0",
    ]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("4/4 match"));
}

#[test]
fn empty_sweep_warns() {
    let o = mjl(&["diff", path(&corpus("power")), "--sig", "i64,i64"]);
    assert!(stderr(&o).contains("empty sweep"), "{}", stderr(&o));
}

#[test]
fn parse_error_names_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("broken.mjl");
    std::fs::write(&f, "function f(a)\n  return a +\nend\n").unwrap();
    let o = mjl(&["sim", path(&f), "--sig", "i64", "--args", "1"]);
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("error[parse]"), "{}", stderr(&o));
}

#[test]
fn strict_mode_rejects_a_mixed_join_and_lenient_runs_it() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("mixed.mjl");
    std::fs::write(
        &f,
        "function f(c::Bool)\n  if c\n    x = 1\n  else\n    x = 2.5\n  end\n  return x\nend\n",
    )
    .unwrap();
    let o = mjl(&["compile", path(&f), "--out", path(dir.path())]);
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("error[typeinfer]"), "{}", stderr(&o));
    let o = mjl(&["run", path(&f), "--lenient", "--args", "false"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "2.5");
}

#[test]
fn compile_writes_the_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let o = mjl(&[
        "compile",
        path(&corpus("power")),
        "--sig",
        "i64,i64",
        "--out",
        path(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "manifest.json",
            "power.dot",
            "power_lib.vhd",
            "power_top.vhd",
            "stats.tsv"
        ]
    );
    let tsv = std::fs::read_to_string(dir.path().join("stats.tsv")).unwrap();
    assert_eq!(tsv, stdout(&o));
}

#[test]
fn stats_reports_the_corpus() {
    let o = mjl(&["stats"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("program\tbb_unopt\tbb_opt\tcomponents_total"));
    assert_eq!(text, stdout(&mjl(&["stats"])));
}

#[test]
fn dispatch_table_is_printed() {
    let o = mjl(&["--dump-dispatch"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(
        text.lines()
            .any(|l| l.starts_with("+\ti64,f64\tfadd_f64") && l.contains("sitofp")),
        "{text}"
    );
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mjl.toml");
    std::fs::write(&cfg, "sig = \"i64,i64\"\nmax_cycles = 10\n").unwrap();
    let f = corpus("power");
    let o = mjl(&["sim", path(&f), "--config", path(&cfg), "--args", "2,10"]);
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("error[sim]"), "{}", stderr(&o));
    let o = mjl(&[
        "sim",
        path(&f),
        "--config",
        path(&cfg),
        "--max-cycles",
        "100000",
        "--args",
        "2,10",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "1024");
}

#[test]
fn missing_subcommand_exits_with_usage_code() {
    assert_eq!(mjl(&[]).status.code(), Some(2));
}
