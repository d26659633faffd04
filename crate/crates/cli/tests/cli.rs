use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn pec(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pec"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .env_remove("PEC_CONFIG")
        .env_remove("PEC_SEED")
        .env_remove("PEC_THREADS")
        .env_remove("PEC_BUDGET")
        .output()
        .unwrap()
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(|r| r.unwrap()).collect()
}

fn column(path: &Path, name: &str) -> Vec<String> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let idx = rdr.headers().unwrap().iter().position(|h| h == name).unwrap();
    rdr.records().map(|r| r.unwrap()[idx].to_string()).collect()
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "seed = 1\nbogus = 2\n").unwrap();
    let out = pec(&["region", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config"));
}

#[test]
fn missing_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = pec(&["region", "--config", "/nonexistent/x.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn identity_encoder_never_errs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("identity.toml");
    let out = pec(&["simulate", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let pe = column(&dir.path().join("simulate.csv"), "p_e");
    assert_eq!(pe.len(), 3);
    assert!(pe.iter().all(|v| v.parse::<f64>().unwrap() == 0.0), "{pe:?}");
}

#[test]
fn identity_channel_region_is_the_sum_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("identity.toml");
    let out = pec(&["region", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(out.status.success());
    let h: f64 = -(0.3f64 * 0.3f64.ln() + 0.7 * 0.7f64.ln());
    let rows = csv_rows(&dir.path().join("region.csv"));
    assert!(!rows.is_empty());
    for r in rows {
        let (ra, rr): (f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap());
        assert!((ra + rr - h).abs() <= 1e-3, "{ra} + {rr} vs {h}");
    }
    let props: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("region_properties.json")).unwrap()).unwrap();
    assert_eq!(props["midpoint_convex"], true);
}

#[test]
fn reruns_are_byte_identical_and_meta_is_written() {
    let cfg = configs().join("smoke.toml");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let out = pec(&["leakage", "--config", cfg.to_str().unwrap()], d.path());
        assert!(out.status.success());
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("leakage.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.path().join("leakage.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 3);
    assert_eq!(meta["prng"], pec_core::rng::PRNG_ID);
    assert!(meta["version"].as_str().unwrap().starts_with('v'));
}

#[test]
fn seed_changes_simulation_output() {
    let cfg = configs().join("smoke.toml");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    pec(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "1"], a.path());
    pec(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "2"], b.path());
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("simulate.csv")).unwrap();
    assert_ne!(read(&a), read(&b));
}

#[test]
fn flag_overrides_environment() {
    let cfg = configs().join("smoke.toml");
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_pec"))
        .args(["leakage", "--seed", "17"])
        .arg("--out-dir")
        .arg(dir.path())
        .env("PEC_CONFIG", &cfg)
        .env("PEC_SEED", "5")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("leakage.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 17);
}

#[test]
fn exhausted_budget_exits_3() {
    let cfg = configs().join("smoke.toml");
    let dir = tempfile::tempdir().unwrap();
    let out = pec(&["leakage", "--config", cfg.to_str().unwrap(), "--budget", "1"], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn exponent_rows_carry_bound_directions() {
    let cfg = configs().join("smoke.toml");
    let dir = tempfile::tempdir().unwrap();
    let out = pec(&["exponent", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(out.status.success());
    let dirs = column(&dir.path().join("exponent.csv"), "bound_direction");
    assert_eq!(dirs.len(), 4);
    assert!(dirs.iter().all(|d| d == "certified_lower/heuristic/best_found_upper"), "{dirs:?}");
}
