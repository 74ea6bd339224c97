use std::io::BufReader;
use std::path::Path;
use std::process::{Command, Output};

use domlab::cli::{Report, RunConfig};
use domlab::diskgrowth::mesh_io::read_mesh;

fn domlab(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_domlab"));
    cmd.args(args).env_remove("DOMLAB_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, json: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, json).unwrap();
    path.to_string_lossy().into_owned()
}

const SMALL: &str = r#"{
    "system": { "id": "da2" },
    "seed": 5,
    "lyapunov": { "horizon": 100, "points": 20 },
    "inflatability": { "horizons": [5], "samples": 200, "grid_resolution": 8 },
    "hopf": { "points": 20, "horizon": 1000, "pairs": 3 },
    "disk": { "generations": 6, "span_samples": 20 },
    "product_structure": { "grid_resolution": 6, "trials": 50 },
    "sweep": { "epsilons": [0.0, 0.01], "horizon": 5 }
}"#;

fn without_wall_clock(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.contains("\"wall_clock_seconds\""))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn negative_sample_count_exits_2_with_field_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{ "inflatability": { "samples": -10 } }"#);
    let out = domlab(&["inflatability", "--config", &cfg, "--out", dir.path().to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("inflatability.samples"), "{err}");
}

#[test]
fn unknown_keys_and_commands_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{ "lyapunov": { "horizon": 10, "colour": 3 } }"#);
    let out = domlab(&["lyapunov", "--config", &cfg], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
    assert_eq!(domlab(&["balloon"], &[]).status.code(), Some(2));
    assert_eq!(domlab(&["lyapunov", "--system", "nope"], &[]).status.code(), Some(2));
    assert_eq!(domlab(&["lyapunov"], &[("DOMLAB_THREADS", "many")]).status.code(), Some(2));
}

#[test]
fn missing_splitting_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{ "system": { "id": "id2", "cu_dim": 1 }, "lyapunov": { "points": 10 } }"#);
    let out = domlab(&["lyapunov", "--config", &cfg, "--out", dir.path().to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn identical_invocations_give_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let args = ["analyze", "--config", &cfg, "--out", out.to_str().unwrap()];
    assert!(domlab(&args, &[("DOMLAB_THREADS", "1")]).status.success());
    let first = without_wall_clock(&out.join("analyze.json"));
    let csv = std::fs::read(out.join("lyapunov.csv")).unwrap();
    assert!(domlab(&args, &[("DOMLAB_THREADS", "3")]).status.success());
    assert_eq!(first, without_wall_clock(&out.join("analyze.json")));
    assert_eq!(csv, std::fs::read(out.join("lyapunov.csv")).unwrap());
}

#[test]
fn every_command_writes_its_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    for command in ["analyze", "lyapunov", "inflatability", "disk-grow", "hopf", "product-structure", "sweep", "report"] {
        let o = domlab(&[command, "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", "1"], &[]);
        assert!(o.status.success(), "{command}: {}", String::from_utf8_lossy(&o.stderr));
        let report = Report::read(&out.join(format!("{command}.json"))).unwrap();
        assert_eq!(report.schema_version, 1);
        assert_eq!(report.command, command);
        for f in &report.files {
            assert!(out.join(f).exists(), "{command}: missing {f}");
        }
    }
    let summary = Report::read(&out.join("report.json")).unwrap();
    assert_eq!(summary.results["reports"].as_object().unwrap().len(), 7);

    let header = std::fs::read_to_string(out.join("disk_series.csv")).unwrap();
    assert!(header.starts_with("n,"));
    let mesh = read_mesh(BufReader::new(std::fs::File::open(out.join("disk_final.mesh")).unwrap())).unwrap();
    assert_eq!(mesh.k, 1);
    assert_eq!(mesh.generation, 6);
}

#[test]
fn config_echo_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let o = domlab(&["inflatability", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "77"], &[]);
    assert!(o.status.success());
    let report = Report::read(&out.join("inflatability.json")).unwrap();
    assert_eq!(report.rng.seed, 77);
    let reparsed = RunConfig::from_json(&serde_json::to_string(&report.config).unwrap()).unwrap();
    assert_eq!(reparsed, report.config);
    assert_eq!(reparsed.seed, 77);
    assert_eq!(reparsed.output_dir, out);
}

#[test]
fn system_override_resets_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{ "system": { "id": "da2", "params": { "eps": 0.02 } }, "lyapunov": { "points": 10, "horizon": 50 } }"#);
    let out = dir.path().join("out");
    let o = domlab(&["lyapunov", "--config", &cfg, "--out", out.to_str().unwrap(), "--system", "cat3u2"], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = Report::read(&out.join("lyapunov.json")).unwrap();
    assert_eq!(report.config.system.id, "cat3u2");
    assert!(report.config.system.params.is_empty());
    assert_eq!(report.results["splitting"]["cu_dim"], 2);
}
