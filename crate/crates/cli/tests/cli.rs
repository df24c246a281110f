use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use proptest::prelude::*;
use sns_cli::config::RunConfig;

const QUICK: &str = include_str!("../../../configs/quick.toml");

fn sns(dir: &Path, cfg: &str, args: &[&str]) -> Output {
    let path = dir.join("run.toml");
    fs::write(&path, cfg).unwrap();
    Command::new(env!("CARGO_BIN_EXE_sns"))
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap()
}

fn quiet(cfg: &str) -> String {
    cfg.replace("sigma = 0.5", "sigma = 0.0").replace("re = 1.0\nim = 0.5", "re = 0.0")
}

#[test]
fn verify_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = sns(dir.path(), QUICK, &["verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/verify.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert!(dir.path().join("out/config.toml").exists());
}

#[test]
fn degenerate_truncation_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = sns(dir.path(), &QUICK.replace("L = 8", "L = 0"), &["verify"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("L must be at least 1"));
}

#[test]
fn strict_rejects_warnings() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = QUICK.replace("s = 1.0", "s = 0.4\nallow_non_radonifying = true");
    assert_eq!(sns(dir.path(), &cfg, &["--strict", "verify"]).status.code(), Some(2));
}

#[test]
fn missing_section_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = QUICK.split("[pullback]").next().unwrap().to_string();
    assert_eq!(sns(dir.path(), &cfg, &["pullback"]).status.code(), Some(2));
}

#[test]
fn quiet_simulation_energy_strictly_decreases() {
    let dir = tempfile::tempdir().unwrap();
    let out = sns(dir.path(), &quiet(QUICK), &["simulate"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out/diagnostics.csv")).unwrap();
    let energy: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(energy.len() > 10);
    assert!(energy.windows(2).all(|w| w[1] < w[0]));

    let out = sns(dir.path(), &quiet(QUICK), &["spectrum"]);
    assert_eq!(out.status.code(), Some(0));
    let spec = fs::read_to_string(dir.path().join("out/spectrum.csv")).unwrap();
    let total: f64 = spec.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - energy.last().unwrap()).abs() <= 1e-12 * total.max(1e-300));
}

#[test]
fn quiet_measure_is_degenerate_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quiet(QUICK).replace("burn_in = 2.0", "burn_in = 60.0");
    let out = sns(dir.path(), &cfg, &["measure"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/measure.json")).unwrap()).unwrap();
    for o in m["estimate"]["observables"].as_array().unwrap() {
        assert!(o["mean"].as_f64().unwrap().abs() < 1e-12, "{}", o["name"]);
        let mass: f64 = o["histogram"]["mass"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).sum();
        assert!((mass - 1.0).abs() < 1e-12);
    }
}

#[test]
fn outputs_do_not_depend_on_threads() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for cmd in ["simulate", "pullback"] {
        assert_eq!(sns(a.path(), QUICK, &["--threads", "1", cmd]).status.code(), Some(0));
        assert_eq!(sns(b.path(), QUICK, &["--threads", "3", cmd]).status.code(), Some(0));
    }
    for f in ["diagnostics.csv", "checkpoint/state.bin", "pullback.csv", "radii.json", "config.toml"] {
        assert_eq!(fs::read(a.path().join("out").join(f)).unwrap(), fs::read(b.path().join("out").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn seed_flag_changes_the_path() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    sns(a.path(), QUICK, &["simulate"]);
    sns(b.path(), QUICK, &["--seed", "4", "simulate"]);
    let ca = fs::read_to_string(a.path().join("out/config.toml")).unwrap();
    let cb = fs::read_to_string(b.path().join("out/config.toml")).unwrap();
    assert!(cb.contains("seed = 4"));
    assert_ne!(ca, cb);
    assert_ne!(fs::read(a.path().join("out/diagnostics.csv")).unwrap(), fs::read(b.path().join("out/diagnostics.csv")).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trips(
        seed in any::<u64>(),
        nu in 1e-3f64..10.0,
        omega in -5.0f64..5.0,
        dt in 1e-4f64..0.1,
        sigma in 0.0f64..3.0,
        times in proptest::collection::vec(0.0f64..100.0, 0..6),
    ) {
        let mut cfg = RunConfig::from_toml(QUICK).unwrap().with_seed(seed);
        cfg.model.nu = nu;
        cfg.model.omega = omega;
        cfg.integrator.dt = dt;
        cfg.model.noise.sigma = sigma;
        cfg.pullback.as_mut().unwrap().class_r_times = times;
        let back = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
