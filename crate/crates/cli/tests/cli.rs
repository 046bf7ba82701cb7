//! End-to-end runs of the binary on the shipped configurations.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR"))
        .join("cli")
        .join(name);
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn alexflow(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_alexflow"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn column(csv_path: &Path, name: &str) -> Vec<String> {
    let mut r = csv::Reader::from_path(csv_path).unwrap();
    let i = r.headers().unwrap().iter().position(|c| c == name).unwrap();
    r.records().map(|rec| rec.unwrap()[i].to_string()).collect()
}

#[test]
fn ppa_line_halves_each_step() {
    let out = scratch("ppa_line");
    let o = alexflow(&["run", config("ppa_line.toml").to_str().unwrap()], &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let f = column(&out.join("ppa_line.csv"), "f");
    assert_eq!(f.len(), 61);
    for (k, v) in f.iter().enumerate() {
        assert_eq!(v.parse::<f64>().unwrap(), 0.25f64.powi(k as i32), "row {k}");
    }
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("ppa_line.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["name"], "ppa_line");
}

#[test]
fn cyclic_cap_records_envelope() {
    let out = scratch("cyclic");
    let o = alexflow(
        &["run", config("cyclic_sphere_cap.toml").to_str().unwrap()],
        &out,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let env = column(&out.join("cyclic_sphere_cap.csv"), "res_envelope");
    let filled: Vec<f64> = env
        .iter()
        .filter(|v| !v.is_empty())
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(filled.len(), 10_001);
    assert!(filled.iter().all(|r| *r >= -1e-7));
}

#[test]
fn rejected_configurations_exit_one() {
    for name in ["cyclic_constant_schedule.toml", "verify_empty.toml"] {
        let out = scratch(name);
        let cmd = if name.starts_with("verify") {
            "verify"
        } else {
            "run"
        };
        let o = alexflow(&[cmd, config(name).to_str().unwrap()], &out);
        assert_eq!(code(&o), 1, "{name}");
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    }
    let out = scratch("missing");
    assert_eq!(code(&alexflow(&["run", "no/such/file.toml"], &out)), 1);
    let o = alexflow(
        &[
            "run",
            config("ppa_line.toml").to_str().unwrap(),
            "--jobs",
            "0",
        ],
        &out,
    );
    assert_eq!(code(&o), 1);
}

#[test]
fn wrong_modulus_exits_two_with_witness() {
    let out = scratch("wrong_modulus");
    let o = alexflow(
        &[
            "verify",
            config("verify_wrong_modulus.toml").to_str().unwrap(),
        ],
        &out,
    );
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("witness"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("verify_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["checks"][0]["met"], false);
    assert!(report["checks"][0]["report"]["witness"]["x"].is_array());
}

#[test]
fn expected_violations_exit_zero() {
    let out = scratch("convexity");
    let o = alexflow(
        &["verify", config("verify_convexity.toml").to_str().unwrap()],
        &out,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn seeded_runs_replay_and_seed_flag_matters() {
    let cfg = config("jensen_sphere_cap.toml");
    let (a, b, c) = (
        scratch("jensen_a"),
        scratch("jensen_b"),
        scratch("jensen_c"),
    );
    assert_eq!(code(&alexflow(&["run", cfg.to_str().unwrap()], &a)), 0);
    assert_eq!(
        code(&alexflow(
            &["run", cfg.to_str().unwrap(), "--jobs", "3"],
            &b
        )),
        0
    );
    assert_eq!(
        code(&alexflow(
            &["run", cfg.to_str().unwrap(), "--seed", "12"],
            &c
        )),
        0
    );
    let file = "jensen_trial007.csv";
    let first = std::fs::read(a.join(file)).unwrap();
    assert_eq!(first, std::fs::read(b.join(file)).unwrap());
    assert_ne!(first, std::fs::read(c.join(file)).unwrap());
}

#[test]
fn sweep_writes_one_row_per_schedule() {
    let out = scratch("sweep");
    let o = alexflow(
        &["sweep", config("stochastic_sweep.toml").to_str().unwrap()],
        &out,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let slopes = column(&out.join("sweep_summary.csv"), "slope");
    assert_eq!(slopes.len(), 3);
    assert!(slopes.iter().all(|s| s.parse::<f64>().unwrap() < 0.0));
    assert!(out.join("cell02").is_dir());
}
