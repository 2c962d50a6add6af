use std::path::Path;
use std::process::{Command, Output};

use nltva_cli::config::{Overrides, RunConfig};
use serde_json::Value;

fn nltva(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nltva"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn checksums(dir: &Path) -> Vec<(String, String)> {
    let m = read_json(&dir.join("manifest.json"));
    m["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| {
            (
                o["file"].as_str().unwrap().to_string(),
                o["sha256"].as_str().unwrap().to_string(),
            )
        })
        .collect()
}

#[test]
fn tune_without_epsilon_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = nltva(&["tune", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tune_reports_rounded_absorber() {
    let dir = tempfile::tempdir().unwrap();
    let out = nltva(&[
        "tune",
        "--set",
        "system.epsilon=0.05",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let t = read_json(&dir.path().join("tune.json"));
    assert_eq!(t["rounded"]["k2"].as_f64(), Some(0.0454));
    assert_eq!(t["rounded"]["c2"].as_f64(), Some(0.0128));
    assert_eq!(t["rounded"]["knl2"].as_f64(), Some(0.0042));
}

#[test]
fn tune_with_linear_primary_reports_zero_cubic_absorber() {
    let dir = tempfile::tempdir().unwrap();
    let out = nltva(&[
        "tune",
        "--set",
        "system.epsilon=0.05",
        "--set",
        "system.knl1=0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        read_json(&dir.path().join("tune.json"))["knl2"].as_f64(),
        Some(0.0)
    );
}

#[test]
fn manifest_checksums_and_config_echo() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "system.epsilon = 0.05\nsystem.c1 = 0.002\nrun.seed = 11\n",
    )
    .unwrap();
    let out = nltva(&[
        "tune",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let m = read_json(&out_dir.join("manifest.json"));
    for o in m["outputs"].as_array().unwrap() {
        let bytes = std::fs::read(out_dir.join(o["file"].as_str().unwrap())).unwrap();
        use sha2::Digest;
        assert_eq!(
            o["sha256"].as_str().unwrap(),
            hex::encode(sha2::Sha256::digest(&bytes))
        );
    }
    let echo = m["config"].as_str().unwrap();
    let original = RunConfig::load(
        Some(&cfg),
        "tune",
        &Overrides {
            out: Some(out_dir.clone()),
            ..Default::default()
        },
    )
    .unwrap();
    let reparsed = RunConfig::from_toml(echo, "tune", &Overrides::default()).unwrap();
    assert_eq!(original, reparsed);
    assert_eq!(reparsed.run.seed, 11);
}

#[test]
fn rerun_from_echo_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a");
    let out = nltva(&[
        "tune",
        "--set",
        "system.epsilon=0.03",
        "--out",
        first.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let echo = read_json(&first.join("manifest.json"))["config"]
        .as_str()
        .unwrap()
        .to_string();
    let cfg = dir.path().join("echo.toml");
    std::fs::write(&cfg, echo).unwrap();
    let second = dir.path().join("b");
    let out = nltva(&[
        "tune",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(checksums(&first), checksums(&second));
}

#[test]
fn analysis_mismatch_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "system.epsilon = 0.05\nanalysis.track.F_max = 0.2\n").unwrap();
    let out = nltva(&[
        "basins",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_subcommand_is_usage_error() {
    assert_eq!(nltva(&["plot"]).status.code(), Some(2));
}

#[test]
fn weak_forcing_response_has_no_bifurcations() {
    let dir = tempfile::tempdir().unwrap();
    let out = nltva(&[
        "freq-response",
        "--set",
        "system.epsilon=0.05",
        "--set",
        "analysis.freq_response.F=0.005",
        "--set",
        "analysis.freq_response.omega_max=1.6",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let bif = std::fs::read_to_string(dir.path().join("bifurcations.csv")).unwrap();
    assert_eq!(bif, "omega,F,kind,branch\n");
    let main = std::fs::read_to_string(dir.path().join("branch_main.csv")).unwrap();
    assert!(!main.contains('\r'));
    let row = main.lines().nth(1).unwrap();
    let first = row.split(',').next().unwrap();
    // 17 significant digits in scientific notation
    assert_eq!(
        first
            .split('e')
            .next()
            .unwrap()
            .replace(['.', '-'], "")
            .len(),
        17
    );
    assert!(!dir.path().join("branch_drc.csv").exists());
}

#[test]
fn linear_system_has_no_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = nltva(&[
        "track",
        "--set",
        "system.epsilon=0.05",
        "--set",
        "system.knl1=0",
        "--set",
        "analysis.track.seed_forcing=[0.1, 0.2]",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn basin_window_must_cover_attractors() {
    let dir = tempfile::tempdir().unwrap();
    let out = nltva(&[
        "basins",
        "--set",
        "system.epsilon=0.05",
        "--set",
        "analysis.basins.resolution=2",
        "--set",
        "analysis.basins.x_min=-0.01",
        "--set",
        "analysis.basins.x_max=0.01",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn basins_are_reproducible_for_a_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out_dir = dir.path().join(name);
        let out = nltva(&[
            "basins",
            "--set",
            "system.epsilon=0.05",
            "--set",
            "analysis.basins.resolution=3",
            "--set",
            "analysis.basins.samples=3",
            "--seed",
            "42",
            "--threads",
            "2",
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        checksums(&out_dir)
    };
    let a = run("a");
    assert_eq!(a.len(), 2);
    assert_eq!(a, run("b"));
    let raster = std::fs::read_to_string(dir.path().join("a/basins_raster.csv")).unwrap();
    assert_eq!(raster.lines().next(), Some("x1_0,v1_0,label,amplitude"));
    assert_eq!(raster.lines().count(), 10);
}
