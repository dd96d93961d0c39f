//! End-to-end checks of the command-line runner: config validation, the
//! binary snapshot format, determinism, comparison reports, and failure
//! exit paths.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_torus-euler"))
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

const SMALL_RUN: &str = r#"
[grid]
n = 64

[run]
solver = "both"
t_final = 0.02
dt = 2e-3
snapshot_stride = 5
"#;

#[test]
fn minimal_config_applies_defaults_and_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    // empty file: every documented default kicks in (n = 128 etc.); keep the
    // run short by overriding only the horizon
    write(
        &cfg,
        "[run]\nt_final = 0.004\ndt = 2e-3\nsnapshot_stride = 1\n",
    );
    let out = dir.path().join("out");
    let status = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--quiet")
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("lagrangian_diagnostics.csv").exists());
    assert!(out.join("lagrangian_000000.bin").exists());
    assert!(out.join("lagrangian_000000.csv").exists());
    // n = 128 default is visible in the snapshot header
    let text = std::fs::read(out.join("lagrangian_000000.bin")).unwrap();
    assert_eq!(&text[0..4], b"TEFS");
    let n = u32::from_le_bytes(text[12..16].try_into().unwrap());
    assert_eq!(n, 128);
}

#[test]
fn validation_reports_every_violation_by_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    write(
        &cfg,
        r#"
[grid]
n = 7

[law]
name = "nope"

[run]
dt = -1.0
"#,
    );
    let output = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(!output.status.success());
    let err = String::from_utf8_lossy(&output.stderr);
    assert!(err.contains("grid"), "missing grid violation: {err}");
    assert!(
        err.contains("law.name") && err.contains("gamma"),
        "law violation must list available laws: {err}"
    );
    assert!(err.contains("run.dt"), "missing dt violation: {err}");
}

#[test]
fn negative_density_preset_is_rejected_naming_rho0() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("vacuum.toml");
    write(
        &cfg,
        r#"
[initial]
rho_mean = 1.0
rho_modes = [{ k = [1], sin = 1.5 }]
"#,
    );
    let output = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(!output.status.success());
    let err = String::from_utf8_lossy(&output.stderr);
    assert!(err.contains("rho0"), "must name rho0: {err}");
}

#[test]
fn both_mode_writes_comparison_below_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    write(&cfg, SMALL_RUN);
    let out = dir.path().join("out");
    let status = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--quiet")
        .status()
        .unwrap();
    assert!(status.success());
    let comparison = std::fs::read_to_string(out.join("comparison.csv")).unwrap();
    let last = comparison.lines().last().unwrap();
    let cols: Vec<f64> = last.split(',').map(|v| v.parse().unwrap()).collect();
    assert!(cols[1] < 1e-3, "rel_l2_rho = {}", cols[1]);
    assert!(cols[2] < 1e-3, "rel_l2_u = {}", cols[2]);
}

#[test]
fn snapshot_round_trip_is_bit_exact_and_runs_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    write(&cfg, SMALL_RUN);
    let out1 = dir.path().join("a");
    let out2 = dir.path().join("b");
    for out in [&out1, &out2] {
        let status = bin()
            .args(["run", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .arg("--quiet")
            .status()
            .unwrap();
        assert!(status.success());
    }
    let mut names: Vec<_> = std::fs::read_dir(&out1)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(!names.is_empty());
    for name in names {
        let a = std::fs::read(out1.join(&name)).unwrap();
        let b = std::fs::read(out2.join(&name)).unwrap();
        assert_eq!(a, b, "{name:?} differs between identical runs");
    }
}

#[test]
fn compare_subcommand_on_two_directories() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    write(&cfg, SMALL_RUN);
    let out = dir.path().join("out");
    bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--quiet")
        .status()
        .unwrap();
    // compare the run against itself: all differences must be zero
    let output = bin().arg("compare").arg(&out).arg(&out).output().unwrap();
    assert!(output.status.success());
    let text = String::from_utf8_lossy(&output.stdout);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("t,"));
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert!(cols[1..].iter().all(|&v| v == 0.0), "nonzero self-diff: {line}");
    }
}

#[test]
fn env_var_sets_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    write(
        &cfg,
        "[run]\nt_final = 0.002\ndt = 2e-3\n[grid]\nn = 32\n",
    );
    let out = dir.path().join("from_env");
    let status = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--quiet")
        .env("TORUS_EULER_OUT", &out)
        .current_dir(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("lagrangian_diagnostics.csv").exists());
}

#[test]
fn steep_data_exits_nonzero_with_failing_time() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("steep.toml");
    write(
        &cfg,
        r#"
[grid]
n = 64

[initial]
preset = "steep-1d"

[run]
solver = "reference"
t_final = 5.0
dt = 2e-3
"#,
    );
    let output = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert!(!output.status.success());
    let err = String::from_utf8_lossy(&output.stderr);
    assert!(
        err.contains("at t = "),
        "failure must carry the failing time: {err}"
    );
}

#[test]
fn frechet_report_zero_base_rows_and_slopes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("frechet.toml");
    write(&cfg, "[grid]\nn = 128\n");
    let out = dir.path().join("out");
    let status = bin()
        .args(["frechet", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--quiet")
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(out.join("frechet_report.csv")).unwrap();
    let mut checked_trivial = 0;
    let mut checked_slope = 0;
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let (case, _map, rel_l2, slope): (&str, &str, f64, f64) = (
            cols[0],
            cols[1],
            cols[4].parse().unwrap(),
            cols[6].parse().unwrap(),
        );
        // zero base velocity with a constant direction: the functional is
        // linear, central differences are exact
        if case.starts_with("u0=zero w=one") {
            assert!(rel_l2 <= 1e-12, "trivial row too large: {line}");
            checked_trivial += 1;
        }
        if case.starts_with("u0=sin") && cols[1] == "flow" {
            assert!((slope - 2.0).abs() <= 0.2, "bad slope: {line}");
            checked_slope += 1;
        }
    }
    assert!(checked_trivial >= 4 && checked_slope >= 4);
}

#[test]
fn two_dimensional_both_mode_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run2d.toml");
    write(
        &cfg,
        r#"
[grid]
d = 2
n = 16

[initial]
preset = "smooth-2d"

[run]
solver = "both"
t_final = 0.01
dt = 2e-3
snapshot_stride = 5
"#,
    );
    let out = dir.path().join("out");
    let status = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--quiet")
        .status()
        .unwrap();
    assert!(status.success());
    let comparison = std::fs::read_to_string(out.join("comparison.csv")).unwrap();
    let last = comparison.lines().last().unwrap();
    let cols: Vec<f64> = last.split(',').map(|v| v.parse().unwrap()).collect();
    assert!(cols[1] < 1e-3 && cols[2] < 1e-3, "2d comparison too large: {last}");
    // no CSV mirror in 2D
    assert!(!out.join("lagrangian_000000.csv").exists());
}

#[test]
fn constant_state_run_has_flat_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("const.toml");
    write(
        &cfg,
        r#"
[grid]
n = 32

[initial]
preset = "constant"

[run]
solver = "lagrangian"
t_final = 1.0
dt = 5e-3
snapshot_stride = 100
"#,
    );
    let out = dir.path().join("out");
    let status = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--quiet")
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(out.join("lagrangian_diagnostics.csv")).unwrap();
    let mut rows = text.lines().skip(1).map(|l| {
        l.split(',')
            .map(|v| v.parse::<f64>().unwrap())
            .collect::<Vec<f64>>()
    });
    let first = rows.next().unwrap();
    for row in rows {
        // mass, rho norm and u norm stay constant to 1e-12
        for col in [1, 2, 3] {
            assert!(
                (row[col] - first[col]).abs() <= 1e-12 * first[col].abs().max(1.0),
                "diagnostic column {col} drifted: {} vs {}",
                row[col],
                first[col]
            );
        }
    }
}

#[test]
fn tabulated_law_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tab.toml");
    // p = rho^1.4 sampled on a table
    let points: Vec<String> = (0..40)
        .map(|i| {
            let r = 0.2 + 0.1 * i as f64;
            format!("[{r}, {}]", r.powf(1.4))
        })
        .collect();
    write(
        &cfg,
        &format!(
            r#"
[grid]
n = 32

[law]
name = "tabulated"
points = [{}]

[run]
t_final = 0.01
dt = 2e-3
"#,
            points.join(", ")
        ),
    );
    let out = dir.path().join("out");
    let status = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--quiet")
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("lagrangian_diagnostics.csv").exists());
}

#[test]
fn frechet_empty_case_list_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("frechet.toml");
    write(&cfg, "[frechet]\ncases = []\n");
    let output = bin()
        .args(["frechet", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(!output.status.success());
    let err = String::from_utf8_lossy(&output.stderr);
    assert!(err.contains("no cases"), "{err}");
}
