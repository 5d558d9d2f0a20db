//! End-to-end tests of the `rfsurf` binary: output contract, configuration errors and the
//! validation failure modes.

use std::path::Path;
use std::process::{Command, Output};

use rfsurf::experiments::output::{sha256_hex, CSV_HEADER};

const GROUND: &str = r#"
name = "gs-small"
dimension = 2
scales = [2, 4, 8]
lambda = 1.0
master_seed = 40
seeds = 4

[potential]
family = "quadratic-plus-cosine"
kappa = 0.5
"#;

fn rfsurf(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rfsurf")).args(args).current_dir(dir).output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn validate_config() -> String {
    std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/validate.toml")).unwrap()
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn check<'a>(report: &'a serde_json::Value, name: &str) -> &'a serde_json::Value {
    report["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap()
}

#[test]
fn ground_state_output_contract() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "gs.toml", GROUND);
    let out = rfsurf(&["ground-state", "--config", &cfg, "--out", "run", "--seed-offset", "3"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = tmp.path().join("run");

    let csv = std::fs::read_to_string(run.join("results.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.iter().all(|r| r.len() == 8 && r[0] == "gs-small" && r[1] == "2" && r[7] == "0"));
    let per_seed = rows.iter().filter(|r| r[3] != "all" && r[4] == "sup_grad_diff").count();
    assert_eq!(per_seed, 3 * 4);
    for r in &rows {
        let v: f64 = r[5].parse().unwrap();
        let se: f64 = r[6].parse().unwrap();
        assert!(v.is_finite() && se >= 0.0);
    }

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "ground-state");
    assert_eq!(manifest["config_sha256"], sha256_hex(GROUND));
    assert_eq!(manifest["seeds"], serde_json::json!([43, 44, 45, 46]));
    assert_eq!(manifest["rows"], rows.len());

    let series: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("series.json")).unwrap()).unwrap();
    let s = &series["sup_grad_diff"];
    assert_eq!(s["points"].as_array().unwrap().len(), 3);
    for key in ["scale", "value", "stderr"] {
        assert!(s["points"][0][key].is_number());
    }
    assert!(s["fit"]["alpha"].is_number() && s["fit"]["r_squared"].is_number());
}

#[test]
fn thread_count_does_not_change_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "gs.toml", GROUND);
    let a = rfsurf(&["ground-state", "--config", &cfg, "--out", "a", "--threads", "1"], tmp.path());
    let b = Command::new(env!("CARGO_BIN_EXE_rfsurf"))
        .args(["ground-state", "--config", &cfg, "--out", "b"])
        .env("RFSURF_THREADS", "3")
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert!(a.status.success() && b.status.success());
    for file in ["results.csv", "manifest.json", "series.json"] {
        assert_eq!(
            std::fs::read(tmp.path().join("a").join(file)).unwrap(),
            std::fs::read(tmp.path().join("b").join(file)).unwrap(),
            "{file} differs"
        );
    }
}

#[test]
fn unknown_keys_and_bad_values_are_errors() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, text) in [
        ("typo.toml", GROUND.replace("seeds = 4", "seeds = 4\nsedes = 4")),
        ("nested.toml", GROUND.replace("[potential]", "[dynamics]\ndtt = 0.1\n[potential]")),
        ("order.toml", GROUND.replace("[2, 4, 8]", "[4, 2]")),
        ("family.toml", GROUND.replace("quadratic-plus-cosine", "quartic")),
    ] {
        let cfg = write_config(tmp.path(), name, &text);
        let out = rfsurf(&["ground-state", "--config", &cfg, "--out", "x"], tmp.path());
        assert_eq!(out.status.code(), Some(2), "{name}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"), "{name}");
    }
    assert!(!tmp.path().join("x").exists());
    let out = rfsurf(&["ground-state", "--config", "missing.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validation_passes_on_the_shipped_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "v.toml", &validate_config());
    let out = rfsurf(&["validate", "--config", &cfg, "--out", "v"], tmp.path());
    let r = report(&tmp.path().join("v"));
    assert!(out.status.success(), "{r:#}");
    assert_eq!(r["all_pass"], true);
    for name in [
        "ground_state_vs_oracle",
        "langevin_mean",
        "langevin_variance",
        "stationarity",
        "brascamp_lieb",
        "green_identity",
        "dlr_resampling",
        "shift_covariance",
    ] {
        assert_eq!(check(&r, name)["pass"], true, "{name}");
    }
}

#[test]
fn unstable_step_fails_the_dynamics_checks() {
    let tmp = tempfile::tempdir().unwrap();
    let text = validate_config().replace("total_time = 2000.0", "dt = 0.25\ntotal_time = 2000.0");
    let cfg = write_config(tmp.path(), "v.toml", &text);
    let out = rfsurf(&["validate", "--config", &cfg, "--out", "v"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let r = report(&tmp.path().join("v"));
    assert_eq!(r["all_pass"], false);
    for name in ["langevin_mean", "langevin_variance", "stationarity", "dlr_resampling", "shift_covariance"] {
        assert_eq!(check(&r, name)["pass"], false, "{name}");
    }
    assert_eq!(check(&r, "ground_state_vs_oracle")["pass"], true);
    assert_eq!(check(&r, "green_identity")["pass"], true);
}

#[test]
fn loose_kernel_tolerance_fails_the_identity_check() {
    let tmp = tempfile::tempdir().unwrap();
    let text = validate_config().replace("green = 1e-10", "green = 1e-2");
    let cfg = write_config(tmp.path(), "v.toml", &text);
    let out = rfsurf(&["validate", "--config", &cfg, "--out", "v"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let r = report(&tmp.path().join("v"));
    let g = check(&r, "green_identity");
    assert_eq!(g["pass"], false);
    assert!(g["observed"].as_f64().unwrap() > 1e-9);
    assert_eq!(check(&r, "langevin_variance")["pass"], true);
}
