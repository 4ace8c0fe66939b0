//! End-to-end runs of the `prslack` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn synth(name: &str) -> Vec<String> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/synth");
    let f = |suffix: &str| dir.join(format!("{name}{suffix}")).display().to_string();
    vec![
        "--lib-early".into(),
        f("_early.lib"),
        "--lib-late".into(),
        f("_late.lib"),
        "--def".into(),
        f(".def"),
        "--sdc".into(),
        f(".sdc"),
    ]
}

fn sdf(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../core/tests/data/synth/{name}.sdf"))
}

fn prslack(args: &[&str], inputs: &[String]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prslack"))
        .args(args)
        .args(inputs)
        .env_clear()
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn negative_slack_exits_one() {
    let o = prslack(&["slack"], &synth("chain4"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("TNS -1.000 WNS -1.000\n"), "{}", stdout(&o));
    let o = prslack(&["slack", "--no-fail-on-wns"], &synth("chain4"));
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn clean_design_exits_zero() {
    let d = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data");
    let inputs: Vec<String> = [
        ("--lib-early", "cells.lib"),
        ("--lib-late", "cells.lib"),
        ("--def", "top.def"),
        ("--sdc", "top.sdc"),
    ]
    .iter()
    .flat_map(|(flag, file)| [flag.to_string(), d.join(file).display().to_string()])
    .collect();
    let o = prslack(&["slack"], &inputs);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("TNS 0.000 WNS 0.000\n"));
}

#[test]
fn missing_input_is_a_usage_error() {
    let mut inputs = synth("chain4");
    inputs.drain(4..6);
    let o = prslack(&["slack"], &inputs);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("DEF"));
}

#[test]
fn unreadable_file_is_a_failure() {
    let mut inputs = synth("chain4");
    inputs[1] = "/nonexistent/early.lib".into();
    let o = prslack(&["slack"], &inputs);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr).into_owned();
    assert_eq!(err.matches("/nonexistent/early.lib").count(), 1, "{err}");
}

#[test]
fn labels_source_needs_labels() {
    let o = prslack(&["slack", "--at", "labels"], &synth("synth_1"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn parse_reports_graph_statistics() {
    let tmp = tempfile::tempdir().unwrap();
    let graph = tmp.path().join("g.json");
    let mut args = vec!["parse".to_string(), "--out-graph".into(), graph.display().to_string()];
    args.extend(synth("chain4"));
    let o = Command::new(env!("CARGO_BIN_EXE_prslack"))
        .args(&args)
        .env_clear()
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("nodes=11 cell_edges=4 net_edges=5 endpoints=2 removed_edges=0\n"));
    assert!(std::fs::metadata(&graph).unwrap().len() > 0);
}

#[test]
fn compare_against_own_labels_is_exact() {
    let tmp = tempfile::tempdir().unwrap();
    let summary = tmp.path().join("summary.json");
    let o = prslack(
        &[
            "compare",
            "--sdf",
            sdf("synth_1").to_str().unwrap(),
            "--out-summary",
            summary.to_str().unwrap(),
        ],
        &synth("synth_1"),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let last = out.lines().last().unwrap();
    assert!(
        last.starts_with("at_r2=1.000000 rat_mae=0.000000 slack_mae=0.000000 tns_delta=0.000000"),
        "{last}"
    );
    assert!(std::fs::read_to_string(&summary).unwrap().contains("\"rat_mae\""));
}

#[test]
fn gen_known_slack_round_trips_through_slack() {
    let tmp = tempfile::tempdir().unwrap();
    let o = prslack(
        &[
            "gen",
            "--out-dir",
            tmp.path().to_str().unwrap(),
            "--known-slack",
            "-0.25",
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(0));
    let line = stdout(&o);
    let field = |key: &str| {
        line.split_whitespace()
            .find_map(|w| w.strip_prefix(&format!("{key}=")))
            .unwrap()
            .to_string()
    };
    let inputs: Vec<String> = ["lib-early", "lib-late", "def", "sdc"]
        .iter()
        .flat_map(|k| [format!("--{k}"), field(&k.replace('-', "_"))])
        .collect();
    let o = prslack(&["slack"], &inputs);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("TNS -0.250 WNS -0.250\n"), "{}", stdout(&o));
}
