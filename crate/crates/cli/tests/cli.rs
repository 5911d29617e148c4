//! End-to-end tests of the `mixtop` binary: exit codes, report contents,
//! CSV schemas, and byte-level determinism.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_mixtop")
}

fn exec(dir: &Path, cfg: &Value, args: &[&str]) -> Output {
    let cfg_path = dir.join("config.json");
    std::fs::write(&cfg_path, cfg.to_string()).unwrap();
    Command::new(bin())
        .current_dir(dir)
        .arg("--config")
        .arg(&cfg_path)
        .args(args)
        .output()
        .unwrap()
}

fn exec_with_out(dir: &Path, cfg: &Value) -> (Output, PathBuf, PathBuf) {
    let report = dir.join("report.json");
    let output = exec(dir, cfg, &["--out", report.to_str().unwrap()]);
    let csv = report.with_extension("csv");
    (output, report, csv)
}

fn assert_code(output: &Output, want: i32) {
    assert_eq!(
        output.status.code(),
        Some(want),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn read_report(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect()
}

#[test]
fn chern_reports_the_expected_integer() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "command": "chern",
        "model": {"type": "qwz", "m": 1.0},
        "grid": 32
    });
    let (output, report_path, csv_path) = exec_with_out(dir.path(), &cfg);
    assert_code(&output, 0);
    let report = read_report(&report_path);
    assert_eq!(report["command"], "chern");
    assert_eq!(report["library_version"], mixtop::VERSION);
    assert_eq!(report["config"]["tol"], 1e-6);
    assert_eq!(report["config"]["model"]["type"], "qwz");
    assert_eq!(report["results"]["runs"][0]["value"], -1);
    assert!(report["metadata"]["timestamp_unix_s"].is_u64());

    let lines = csv_lines(&csv_path);
    assert_eq!(
        lines[0],
        "family_id,mesh,invariant_name,raw_value,rounded,residual"
    );
    assert!(lines[1].contains(",32x32,chern_fhs,"), "got: {}", lines[1]);
    assert!(lines[1].contains(",-1,"), "got: {}", lines[1]);
}

#[test]
fn degree_near_the_maximally_mixed_state_exits_3_naming_the_node() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "command": "degree",
        "model": {"type": "qwz", "m": 1.0},
        "temperature": 1e9,
        "grid": 8
    });
    let (output, _, _) = exec_with_out(dir.path(), &cfg);
    assert_code(&output, 3);
    let msg = stderr_of(&output);
    assert!(msg.contains("node [0, 0]"), "got: {msg}");
    assert!(msg.contains("maximally mixed"), "got: {msg}");
}

#[test]
fn thermal_sweep_differences_shrink_monotonically() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "command": "thermal-sweep",
        "polar_angle_rad": PI / 2.0,
        "temperatures": [1.0, 0.5, 0.2, 0.1, 0.05],
        "samples": 600
    });
    let (output, _, csv_path) = exec_with_out(dir.path(), &cfg);
    assert_code(&output, 0);
    let lines = csv_lines(&csv_path);
    assert_eq!(
        lines[0],
        "T,uhlmann_phase_rad,aa_phase_ground_rad,abs_difference_rad"
    );
    assert_eq!(lines.len(), 6);
    let diffs: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    for pair in diffs.windows(2) {
        assert!(
            pair[1] <= pair[0] + 1e-6,
            "differences must shrink with T: {diffs:?}"
        );
    }
    assert!(
        diffs[4] <= 0.05,
        "cold end must approach the pure phase: {diffs:?}"
    );
}

#[test]
fn reruns_are_byte_identical_modulo_the_metadata_field() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "command": "chern",
        "model": {"type": "qwz", "m": -1.0},
        "grid": 16,
        "seed": 3
    });
    let (first, report_path, csv_path) = exec_with_out(dir.path(), &cfg);
    assert_code(&first, 0);
    let csv_a = std::fs::read(&csv_path).unwrap();
    let mut report_a = read_report(&report_path);
    let (second, _, _) = exec_with_out(dir.path(), &cfg);
    assert_code(&second, 0);
    let csv_b = std::fs::read(&csv_path).unwrap();
    let mut report_b = read_report(&report_path);
    assert_eq!(csv_a, csv_b, "CSV bytes must be identical");
    report_a.as_object_mut().unwrap().remove("metadata");
    report_b.as_object_mut().unwrap().remove("metadata");
    assert_eq!(report_a, report_b, "reports must agree outside metadata");
}

#[test]
fn unknown_keys_are_rejected_with_exit_2() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "command": "chern",
        "model": {"type": "qwz", "m": 1.0},
        "grid": 8,
        "bogus": 1
    });
    let (output, _, _) = exec_with_out(dir.path(), &cfg);
    assert_code(&output, 2);
    assert!(stderr_of(&output).contains("bogus"));
}

#[test]
fn a_missing_output_path_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "command": "chern",
        "model": {"type": "qwz", "m": 1.0},
        "grid": 8
    });
    let output = exec(dir.path(), &cfg, &[]);
    assert_code(&output, 2);
    assert!(stderr_of(&output).contains("out"));
}

#[test]
fn aa_phase_gauge_shuffle_leaves_the_phase_invariant() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "command": "aa-phase",
        "loop": {"type": "great_circle", "samples": 2000},
        "gauge_shuffle": true,
        "seed": 7
    });
    let (output, report_path, _) = exec_with_out(dir.path(), &cfg);
    assert_code(&output, 0);
    let report = read_report(&report_path);
    let phase = report["results"]["phase_rad"].as_f64().unwrap();
    let shift = report["results"]["gauge_shift_rad"].as_f64().unwrap();
    assert!((phase.abs() - PI).abs() <= 1e-4, "equator phase: {phase}");
    assert!(shift <= 1e-12, "gauge shift: {shift:.3e}");
}

#[test]
fn evolve_traces_the_degree_and_detects_the_center_crossing() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "command": "evolve",
        "model": {"type": "qwz", "m": 1.0},
        "grid": 8,
        "T": 0.5,
        "gamma": 0.5,
        "dissipator": "depolarizing",
        "times": [0.0, 5.0, 40.0]
    });
    let (output, report_path, csv_path) = exec_with_out(dir.path(), &cfg);
    assert_code(&output, 0);
    let report = read_report(&report_path);
    let degrees = report["results"]["degrees"].as_array().unwrap();
    assert_eq!(degrees[0]["value"], -1);
    assert_eq!(degrees[1]["value"], -1);
    assert_eq!(degrees[2]["status"], "undefined");
    assert!(
        degrees[2]["reason"]
            .as_str()
            .unwrap()
            .contains("maximally mixed"),
        "got: {}",
        degrees[2]
    );
    let windows = report["results"]["transition_windows"].as_array().unwrap();
    assert!(
        windows
            .iter()
            .any(|w| w["margin"] == "center" && w["after_time"] == 5.0 && w["by_time"] == 40.0),
        "got: {windows:?}"
    );

    let lines = csv_lines(&csv_path);
    assert_eq!(
        lines[0],
        "time,node_i,node_j,min_eig,dist_center_hs,degree,degree_residual"
    );
    // 3 times × (64 node rows + 1 summary row) + header.
    assert_eq!(lines.len(), 1 + 3 * 65);
    assert!(
        lines.iter().any(|l| l.ends_with(",undefined,")),
        "undefined row missing"
    );
}

#[test]
fn bloch_check_reproduces_the_four_site_chain_bands() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "command": "bloch-check",
        "lattice": {
            "L": 4,
            "N": 1,
            "intra": {"dim": 1, "re": [[0.0]]},
            "inter": {"dim": 1, "re": [[1.0]]}
        }
    });
    let (output, report_path, csv_path) = exec_with_out(dir.path(), &cfg);
    assert_code(&output, 0);
    let report = read_report(&report_path);
    let err = report["results"]["spectrum_max_abs_error"]
        .as_f64()
        .unwrap();
    assert!(err <= 1e-9, "spectrum error: {err:.3e}");

    let lines = csv_lines(&csv_path);
    assert_eq!(
        lines[0],
        "fiber_index,quasi_momentum_rad_per_length,band_index,energy"
    );
    assert_eq!(lines.len(), 5);
    let mut energies: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    energies.sort_by(f64::total_cmp);
    for (got, want) in energies.iter().zip([-2.0, 0.0, 0.0, 2.0]) {
        assert!((got - want).abs() <= 1e-12, "bands: {energies:?}");
    }
}

#[test]
fn bloch_check_random_lattices_are_seed_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "command": "bloch-check",
        "random": {"L": 6, "N": 2},
        "seed": 11
    });
    let (output, report_path, csv_path) = exec_with_out(dir.path(), &cfg);
    assert_code(&output, 0);
    let first = csv_lines(&csv_path);
    assert_eq!(first.len(), 1 + 6 * 2);
    let report = read_report(&report_path);
    assert!(
        report["results"]["spectrum_max_abs_error"]
            .as_f64()
            .unwrap()
            <= 1e-9
    );

    let (again, _, _) = exec_with_out(dir.path(), &cfg);
    assert_code(&again, 0);
    assert_eq!(
        first,
        csv_lines(&csv_path),
        "same seed must reproduce the fixture"
    );
}

#[test]
fn uhlmann_literal_loops_match_the_generator_path() {
    let state_loop = mixtop::geometry::loops::thermal_circle_loop(1.2, 0.8, 24).unwrap();
    let direct = mixtop::geometry::uhlmann_transport_with(&state_loop, Some(1e-10))
        .unwrap()
        .phase;
    let mut loop_value =
        serde_json::to_value(mixtop::serial::DensityLoopJson::from_loop(&state_loop).unwrap())
            .unwrap();
    loop_value["type"] = json!("literal");

    let dir = TempDir::new().unwrap();
    let cfg = json!({"command": "uhlmann", "loop": loop_value});
    let (output, report_path, _) = exec_with_out(dir.path(), &cfg);
    assert_code(&output, 0);
    let report = read_report(&report_path);
    let phase = report["results"]["uhlmann_phase_rad"].as_f64().unwrap();
    assert!(
        (phase - direct).abs() <= 1e-12,
        "CLI phase {phase} vs library phase {direct}"
    );
}

#[test]
fn the_rank_gate_rejects_numerically_pure_loops_unless_disabled() {
    let dir = TempDir::new().unwrap();
    let gated = json!({
        "command": "uhlmann",
        "loop": {
            "type": "thermal_circle",
            "polar_angle_rad": PI / 2.0,
            "temperature": 0.05,
            "samples": 64
        }
    });
    let (output, _, _) = exec_with_out(dir.path(), &gated);
    assert_code(&output, 3);
    assert!(stderr_of(&output).contains("rank-deficient"));

    let mut ungated = gated.clone();
    ungated["rank_gate"] = json!(false);
    let (output, report_path, _) = exec_with_out(dir.path(), &ungated);
    assert_code(&output, 0);
    let phase = read_report(&report_path)["results"]["uhlmann_phase_rad"]
        .as_f64()
        .unwrap();
    assert!(
        (phase.abs() - PI).abs() <= 1e-2,
        "cold equator phase: {phase}"
    );
}

#[test]
fn the_threads_flag_is_accepted() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "command": "chern",
        "model": {"type": "qwz", "m": 3.0},
        "grid": 16
    });
    let report = dir.path().join("report.json");
    let output = exec(
        dir.path(),
        &cfg,
        &["--out", report.to_str().unwrap(), "--threads", "1"],
    );
    assert_code(&output, 0);
    assert_eq!(read_report(&report)["results"]["runs"][0]["value"], 0);
}

#[test]
fn every_documented_example_config_runs_cleanly() {
    let examples = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut names: Vec<PathBuf> = std::fs::read_dir(&examples)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    names.sort();
    assert_eq!(names.len(), 7, "one example per command: {names:?}");
    for path in names {
        let dir = TempDir::new().unwrap();
        let report = dir.path().join("report.json");
        let output = Command::new(bin())
            .current_dir(dir.path())
            .arg("--config")
            .arg(&path)
            .arg("--out")
            .arg(report.to_str().unwrap())
            .output()
            .unwrap();
        assert_eq!(
            output.status.code(),
            Some(0),
            "{} failed:\n{}",
            path.display(),
            String::from_utf8_lossy(&output.stderr)
        );
    }
}
