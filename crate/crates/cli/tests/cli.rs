//! End-to-end runs of the `opo-squeeze` binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_opo-squeeze"))
}

fn config(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "configs", name]
        .iter()
        .collect();
    p.display().to_string()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout(o)).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

#[test]
fn predict_operating_point() {
    let o = run(&["predict", &config("paper_250mW.json"), "--format", "json"]);
    assert!(o.status.success());
    let v = json(&o);
    assert!((v["R_minus_dB"].as_f64().unwrap() + 8.2).abs() <= 0.1);
    assert!((v["R_plus_dB"].as_f64().unwrap() - 13.27).abs() <= 0.1);
    assert!(v.get("corrected").is_none());
}

#[test]
fn predict_corrected_exact_and_approx() {
    let o = run(&[
        "predict",
        &config("paper_250mW.json"),
        "--corrected",
        "--format",
        "json",
    ]);
    let v = json(&o);
    assert_eq!(v["corrected"]["form"], "exact");
    assert!((v["corrected"]["R_minus_dB"].as_f64().unwrap() + 5.68).abs() <= 0.1);
    assert!((v["corrected"]["R_plus_dB"].as_f64().unwrap() - 13.25).abs() <= 0.1);
    let a = json(&run(&[
        "predict",
        &config("paper_250mW.json"),
        "--corrected",
        "--approx",
        "--format",
        "json",
    ]));
    assert_eq!(a["corrected"]["form"], "approx");
    let diff = a["corrected"]["R_minus_dB"].as_f64().unwrap()
        - v["corrected"]["R_minus_dB"].as_f64().unwrap();
    assert!(diff > 0.0 && diff < 0.1, "{diff}");
}

#[test]
fn predict_unpumped_is_zero_db() {
    let o = run(&["predict", &config("unpumped.json"), "--format", "csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    let head: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name| row[head.iter().position(|h| *h == name).unwrap()];
    assert_eq!(col("R_plus_dB"), "0");
    assert_eq!(col("R_minus_dB"), "0");
}

#[test]
fn predict_text_and_power_mode() {
    let o = run(&["predict", &config("paper_power_sweep.json")]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("R_minus"));
}

#[test]
fn invalid_config_exits_2_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("paper_250mW.json")).unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, text.replace("\"eta\": 0.994", "\"eta\": 1.5")).unwrap();
    let o = run(&["predict", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("detection.eta"));

    std::fs::write(&bad, text.replace("\"value\": 8.83", "\"value\": 0.5")).unwrap();
    let o = run(&["predict", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("pump.value"));

    let o = run(&["predict", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

fn sweep_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

#[test]
fn sweep_schema_and_structure() {
    let o = run(&[
        "sweep",
        &config("paper_250mW.json"),
        "--pmin",
        "50",
        "--pmax",
        "450",
        "--steps",
        "41",
        "--anchor",
        "250:8.83",
        "--theta-deg",
        "4.3",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(!text.contains('\r'));
    assert_eq!(
        text.lines().next().unwrap(),
        "pump_mW,x,G,R_plus,R_minus,R_plus_dB,R_minus_dB,Rp_corr_dB,Rm_corr_dB"
    );
    let rows = sweep_rows(&text);
    assert_eq!(rows.len(), 41);
    assert!(rows.iter().all(|r| r.len() == 9));
    for w in rows.windows(2) {
        assert!(w[1][0] > w[0][0]);
        assert!(w[1][5].abs() > w[0][5].abs());
        assert!(w[1][6].abs() > w[0][6].abs());
        assert!(w[1][7].abs() > w[0][7].abs());
    }
    let at250 = rows.iter().find(|r| r[0] == 250.0).unwrap();
    assert!((at250[2] - 8.83).abs() < 1e-3);
    assert!((at250[8] + 5.68).abs() <= 0.1);
}

#[test]
fn sweep_to_file_uses_config_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = run(&[
        "sweep",
        &config("paper_power_sweep.json"),
        "--pmin",
        "250",
        "--pmax",
        "300",
        "--steps",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let rows = sweep_rows(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], 250.0);
    assert!((rows[0][2] - 8.83).abs() < 0.01);
}

#[test]
fn sweep_errors_exit_2() {
    let c = config("paper_250mW.json");
    let no_threshold = run(&["sweep", &c, "--pmin", "50", "--pmax", "450"]);
    assert_eq!(no_threshold.status.code(), Some(2));
    let above = run(&[
        "sweep", &c, "--pmin", "50", "--pmax", "600", "--anchor", "250:8.83",
    ]);
    assert_eq!(above.status.code(), Some(2));
    let bad_anchor = run(&[
        "sweep", &c, "--pmin", "50", "--pmax", "400", "--anchor", "250",
    ]);
    assert_eq!(bad_anchor.status.code(), Some(2));
}

#[test]
fn correct_examples() {
    let v: f64 = stdout(&run(&[
        "correct",
        "--level-db",
        "-5.6",
        "--clearance",
        "0.0168",
    ]))
    .trim()
    .parse()
    .unwrap();
    assert!((v + 5.80).abs() <= 0.02);
    let ideal = stdout(&run(&[
        "correct",
        "--level-db",
        "-5.6",
        "--clearance-db",
        "-inf",
    ]));
    assert_eq!(ideal.trim(), "-5.6");
    let shot = stdout(&run(&[
        "correct",
        "--level-db",
        "0",
        "--clearance-db",
        "-17.75",
    ]));
    assert_eq!(shot.trim(), "0");
}

#[test]
fn correct_below_floor_exits_3() {
    let o = run(&["correct", "--level-db", "-20", "--clearance-db", "-17.75"]);
    assert_eq!(o.status.code(), Some(3));
    let o = run(&["correct", "--level-db", "-5", "--clearance", "1.2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fit_theta_json() {
    let o = run(&["fit", &config("paper_250mW.json"), "--sq-db", "-5.80"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["status"], "converged");
    assert!(v["x"].is_null());
    assert!((v["theta_rms_deg"].as_f64().unwrap() - 4.22).abs() < 0.01);
    assert!(v["residual_db2"].as_f64().unwrap() >= 0.0);
}

#[test]
fn fit_joint_json() {
    let o = run(&[
        "fit",
        &config("paper_250mW.json"),
        "--sq-db",
        "-5.80",
        "--asq-db",
        "12.72",
        "--joint",
    ]);
    assert!(o.status.success());
    let v = json(&o);
    assert!((v["x"].as_f64().unwrap() - 0.646).abs() < 1e-3);
    assert!((v["gain"].as_f64().unwrap() - 8.0).abs() < 0.1);
    assert!((v["theta_rms_deg"].as_f64().unwrap() - 4.4).abs() < 0.05);
}

#[test]
fn fit_failures() {
    let c = config("paper_250mW.json");
    let infeasible = run(&["fit", &c, "--sq-db", "-9.5"]);
    assert_eq!(infeasible.status.code(), Some(3));
    assert_eq!(json(&infeasible)["status"], "infeasible");
    let no_asq = run(&["fit", &c, "--sq-db", "-5.8", "--joint"]);
    assert_eq!(no_asq.status.code(), Some(2));
    let positive = run(&["fit", &c, "--sq-db", "1.0"]);
    assert_eq!(positive.status.code(), Some(2));
}

#[test]
fn oracle_csv_and_assert() {
    let c = config("unpumped.json");
    let o = run(&[
        "oracle",
        &c,
        "--seed",
        "7",
        "--segments",
        "64",
        "--detuning",
        "0,0.3",
        "--assert",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "omega_rad_s,Omega,R_plus,R_minus,R_plus_dB,R_minus_dB,model_R_plus_dB,model_R_minus_dB,stderr_plus,stderr_minus,segments,seed"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    assert!(rows
        .iter()
        .all(|r| r.split(',').count() == 12 && r.ends_with(",64,7")));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bin spacing"));

    let again = run(&[
        "oracle",
        &c,
        "--seed",
        "7",
        "--segments",
        "64",
        "--detuning",
        "0,0.3",
    ]);
    assert_eq!(again.stdout, o.stdout);
}

#[test]
fn oracle_pumped_point_passes_assert() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("unpumped.json")).unwrap();
    let cfg = dir.path().join("pumped.json");
    std::fs::write(&cfg, text.replace("\"value\": 0.0", "\"value\": 0.5")).unwrap();
    let ok = run(&[
        "oracle",
        cfg.to_str().unwrap(),
        "--segments",
        "64",
        "--detuning",
        "0",
        "--assert",
    ]);
    assert!(
        ok.status.success(),
        "{}",
        String::from_utf8_lossy(&ok.stderr)
    );
    let rows: Vec<f64> = stdout(&ok)
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|c| c.parse().unwrap())
        .collect();
    assert!(rows[5] < -5.0);
}

#[test]
fn oracle_rejects_bad_settings() {
    let c = config("unpumped.json");
    let few = run(&["oracle", &c, "--segments", "4"]);
    assert_eq!(few.status.code(), Some(2));
    let short = run(&["oracle", &c, "--segments", "16", "--duration", "1e-9"]);
    assert_eq!(short.status.code(), Some(2));
}

#[test]
fn dataset_list_and_check() {
    let list = run(&["paper", "--list"]);
    assert!(list.status.success());
    assert!(stdout(&list).contains("crystals: 2"));
    let check = run(&["paper", "--check"]);
    assert!(check.status.success());
    let text = stdout(&check);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 6);
    assert!(!text.contains("FAIL"));
}

#[test]
fn dataset_check_corrupted_copy_fails() {
    let dir = tempfile::tempdir().unwrap();
    let src: PathBuf = [env!("CARGO_MANIFEST_DIR"), "data", "paper_dataset.json"]
        .iter()
        .collect();
    let text = std::fs::read_to_string(src).unwrap();
    let path = dir.path().join("corrupted.json");
    std::fs::write(
        &path,
        text.replace("\"values\": [4.3]", "\"values\": [9.3]"),
    )
    .unwrap();
    let o = run(&["paper", "--check", "--dataset", path.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stdout(&o).contains("FAIL"));

    std::fs::write(&path, "{ not json").unwrap();
    let o = run(&["paper", "--check", "--dataset", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn dataset_command_needs_a_mode() {
    let o = run(&["paper"]);
    assert!(!o.status.success());
}
