use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fresco_core::infra::InfrastructureMap;

fn fresco(args: &[&str], seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fresco"));
    cmd.args(args).env_remove("FRESCO_SEED");
    if let Some(seed) = seed {
        cmd.env("FRESCO_SEED", seed);
    }
    cmd.output().expect("binary runs")
}

fn smoke_spec() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../experiments/smoke.toml")
        .display()
        .to_string()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

#[test]
fn infra_build_writes_a_loadable_map() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("map.json");
    let o = fresco(
        &[
            "infra",
            "build",
            "--cells",
            "synth:blobs=5,per_blob=8",
            "--traces",
            "synth:ratio=0.65",
            "--clusters",
            "5",
            "--seed",
            "4",
            "--out",
            out.to_str().unwrap(),
        ],
        None,
    );
    assert!(o.status.success(), "{}", text(&o.stderr));
    let map = InfrastructureMap::load(&out).unwrap();
    assert_eq!(map.cells.len(), 5);
    assert_eq!(map.edge_nodes().count(), 15);
}

#[test]
fn run_then_report_reproduces_the_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("smoke");
    let o = fresco(
        &[
            "run",
            "--spec",
            &smoke_spec(),
            "--jobs",
            "2",
            "--out",
            out.to_str().unwrap(),
        ],
        Some("5"),
    );
    assert!(o.status.success(), "{}", text(&o.stderr));
    assert!(text(&o.stdout).contains("| FRESCO | ALL |"));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();

    let r = fresco(&["report", "--raw", out.to_str().unwrap(), "--format", "csv"], None);
    assert!(r.status.success(), "{}", text(&r.stderr));
    assert_eq!(text(&r.stdout), summary);
}

#[test]
fn seed_variable_changes_the_runs() {
    let dir = tempfile::tempdir().unwrap();
    let metrics = |seed: &str| {
        let out = dir.path().join(seed);
        let o = fresco(
            &["run", "--spec", &smoke_spec(), "--out", out.to_str().unwrap()],
            Some(seed),
        );
        assert!(o.status.success(), "{}", text(&o.stderr));
        fs::read(out.join("metrics.csv")).unwrap()
    };
    assert_eq!(metrics("1"), metrics("1"));
    assert_ne!(metrics("1"), metrics("2"));
}

#[test]
fn sweep_without_grid_and_bad_inputs_fail() {
    let dir = tempfile::tempdir().unwrap();
    let o = fresco(
        &["sweep", "--spec", &smoke_spec(), "--out", dir.path().to_str().unwrap()],
        None,
    );
    assert!(!o.status.success());
    assert!(text(&o.stderr).contains("sweep"));

    let o = fresco(
        &["report", "--raw", dir.path().to_str().unwrap(), "--format", "pdf"],
        None,
    );
    assert!(!o.status.success());

    let o = fresco(&["run", "--spec", "no-such-spec.toml"], Some("x"));
    assert!(!o.status.success());
}
