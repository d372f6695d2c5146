use std::path::Path;
use std::process::Command;

use critgpc_cli::{run, Experiment, RunConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_critgpc"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn inverted_velocity_interval_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "bad.toml",
        "experiment = \"sg-gpc-v\"\n[chaos]\nVa = 0.13\nVb = 0.12\n",
    );
    let out = bin()
        .args(["sg-gpc-v", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Va/Vb"));

    let equal = write(tmp.path(), "eq.toml", "[chaos]\nVa = 0.12\nVb = 0.12\n");
    let out = bin()
        .args(["sg-gpc-v", "--config"])
        .arg(&equal)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_keys_and_experiments_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", "[kg]\nm_valuez = [31]\n");
    let out = bin()
        .args(["kg-critical", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("m_valuez"));

    let cfg = write(tmp.path(), "d.toml", "");
    let out = bin()
        .args(["kg-nothing", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let cfg = write(tmp.path(), "e.toml", "experiment = \"kg-run\"\n");
    let out = bin()
        .args(["kg-critical", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = bin()
        .args(["kg-critical", "--config"])
        .arg(tmp.path().join("missing.toml"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn blow_up_exits_with_numerical_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.toml",
        "[kg]\nm = 31\neta = [1.5]\nt_final = 400.0\n",
    );
    let out = bin()
        .args(["kg-run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("blew up"));
}

#[test]
fn identical_configs_give_identical_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.toml",
        "[kg]\nm = 31\neta = [1.0, 1.01]\nt_final = 30.0\n",
    );
    for d in ["a", "b"] {
        let status = bin()
            .args(["kg-run", "--threads", "2", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(tmp.path().join(d))
            .output()
            .unwrap()
            .status;
        assert!(status.success());
    }
    for f in ["kg_run_0.csv", "kg_run_1.csv"] {
        let a = std::fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    let text = std::fs::read_to_string(tmp.path().join("a/kg_run_0.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,E,Edot,u_at_x1"));
    // seventeen significant digits
    let first = lines.next().unwrap().split(',').nth(1).unwrap();
    assert_eq!(
        first
            .split('e')
            .next()
            .unwrap()
            .replace(['-', '.'], "")
            .len(),
        17
    );
}

#[test]
fn manifest_echoes_config_and_version() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig::from_toml("[sweep]\nkind = \"delta-mass\"\nvalues = [31, 63]\n").unwrap();
    let report = run(Experiment::Convergence, &cfg, Some(tmp.path())).unwrap();
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(manifest["experiment"], "convergence");
    assert_eq!(manifest["config"]["sweep"]["kind"], "delta-mass");
    assert!(manifest["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert!((report.f64("rows/1/mass").unwrap() - 1.0).abs() < 1e-8);
    // the echo parses back to the same configuration
    assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
}

#[test]
fn sweep_rows_fail_independently() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg =
        RunConfig::from_toml("[sweep]\nkind = \"critical-eta\"\nvalues = [31, 32, 63]\n").unwrap();
    let report = run(Experiment::Convergence, &cfg, Some(tmp.path())).unwrap();
    assert!(report.f64("rows/0/eta_n").is_some());
    assert!(report.get("rows/1/error").is_some());
    assert!(report.f64("rows/2/eta_n").is_some());
    let csv = std::fs::read_to_string(tmp.path().join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn empty_sweep_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig::from_toml("[sweep]\nvalues = []\n").unwrap();
    let err = run(Experiment::Convergence, &cfg, Some(tmp.path())).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn mc_error_sweep_reports_slope() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig::from_toml(
        "[gpc_kg]\nn_order = 10\nm = 15\nt_mean = 5.0\n[sweep]\nkind = \"mc-error\"\nvalues = [8, 16, 32, 64]\n",
    )
    .unwrap();
    let report = run(Experiment::Convergence, &cfg, Some(tmp.path())).unwrap();
    assert!(report.f64("loglog_slope").unwrap() < 0.0);
}

#[test]
fn every_config_parses_and_names_its_experiment() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = RunConfig::load(&path).unwrap();
        assert!(cfg.experiment.is_some(), "{}", path.display());
        n += 1;
    }
    assert_eq!(n, 10);
}
