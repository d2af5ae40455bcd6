use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use supint_cli::RunConfig;

const WORKED: &str = r#"{
  "system": {"n": 2, "kappa": 1.0, "omega_sq": 1.0, "b": [1.0, 1.0]},
  "initial_state": {"q": [1.0, 1.0], "p": [1.0, -1.0]},
  "integrator": {"scheme": "implicit-midpoint", "step": 0.001, "t_final": 10.0}
}
"#;

fn supint(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_supint"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn simulate_worked_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "worked.json", WORKED);
    let out = dir.path().join("run");
    let o = supint(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));

    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(!csv.contains('\r'));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,q1,q2,p1,p2,H,C_(2),I_1");
    assert_eq!(lines.len(), 10001 + 1);
    let first: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(&first[..5], &[0.0, 1.0, 1.0, 1.0, -1.0]);
    assert_eq!(first[5], 0.5);
    let last_t: f64 = lines[10001].split(',').next().unwrap().parse().unwrap();
    assert!((last_t - 10.0).abs() < 1e-12);
    for field in lines[2].split(',') {
        let mantissa = field.trim_start_matches('-').split('e').next().unwrap();
        assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
    }

    let drift = read_json(&out.join("drift.json"));
    assert_eq!(drift["rows"], 10001);
    let report = &drift["drift"];
    let worst = report["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["max_relative_drift"].as_f64().unwrap())
        .fold(0.0, f64::max);
    assert_eq!(report["pass"], worst < report["bound"].as_f64().unwrap());
    assert!(worst < 1e-6, "{drift}");
}

#[test]
fn simulate_worked_config_fine_step_conserves() {
    let dir = tempfile::tempdir().unwrap();
    let text = WORKED.replace("\"step\": 0.001", "\"step\": 0.0001");
    let cfg = write_config(dir.path(), "fine.json", &text);
    let o = supint(&["simulate", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let drift = read_json(&dir.path().join("drift.json"));
    assert_eq!(drift["rows"], 100001);
    assert_eq!(drift["drift"]["pass"], true, "{drift}");
}

#[test]
fn invalid_kappa_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let text = WORKED.replace("\"kappa\": 1.0", "\"kappa\": 0.0");
    let cfg = write_config(dir.path(), "bad.json", &text);
    let o = supint(&["simulate", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("bad.json:2") && err.contains("system.kappa"), "{err}");
    assert!(err.contains("must be > 0"), "{err}");
}

#[test]
fn singular_initial_state_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let text = WORKED.replace("\"q\": [1.0, 1.0]", "\"q\": [1.0, 0.0]");
    let cfg = write_config(dir.path(), "bad.json", &text);
    let o = supint(&["simulate", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("initial_state.q"), "{}", stderr(&o));
}

#[test]
fn missing_config_file_is_an_io_error() {
    let o = supint(&["verify", "--config", "/nonexistent/config.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn wall_approach_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{
  "system": {"n": 2, "kappa": 1.0, "omega_sq": 1.0, "b": [1e-10, 1.0]},
  "initial_state": {"q": [0.01, 1.0], "p": [-5.0, 0.0]},
  "integrator": {"step": 0.001, "t_final": 1.0}
}"#;
    let cfg = write_config(dir.path(), "wall.json", text);
    let o = supint(&["simulate", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn verify_default_passes_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = supint(&["verify", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let ta = fs::read(a.join("verify.json")).unwrap();
    assert_eq!(ta, fs::read(b.join("verify.json")).unwrap());
    let report = read_json(&a.join("verify.json"));
    assert_eq!(report["pass"], true, "{report}");
    assert_eq!(report["seed"], 42);
    assert_eq!(report["n"], 3);
    let names: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(
        names,
        [
            "involution/left-casimirs",
            "involution/right-casimirs",
            "involution/extra-Ii",
            "independence-rank",
            "sum-identity",
            "lie-poisson"
        ]
    );
    // Keys are emitted in lexicographic order.
    let text = String::from_utf8(ta).unwrap();
    let top: Vec<usize> = ["\"checks\"", "\"n\"", "\"pass\"", "\"samples\"", "\"seed\""]
        .iter()
        .map(|k| text.rfind(k).unwrap())
        .collect();
    assert!(top.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = supint(&["verify", "--seed", "7", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(read_json(&dir.path().join("verify.json"))["seed"], 7);
}

#[test]
fn injected_fault_breaks_involution() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"verification": {"fault": {"integral": "I_1", "amount": 1.0}}}"#;
    let cfg = write_config(dir.path(), "fault.json", text);
    let o = supint(&["verify", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let report = read_json(&dir.path().join("verify.json"));
    assert_eq!(report["pass"], false);
    let extra = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "involution/extra-Ii")
        .unwrap();
    assert_eq!(extra["pass"], false);
    assert!(extra["max_residual"].as_f64().unwrap() > 1e-3);
}

#[test]
fn closed_form_worked_orbit() {
    let dir = tempfile::tempdir().unwrap();
    let text = WORKED.replace("\"step\": 0.001", "\"step\": 0.0001");
    let cfg = write_config(dir.path(), "worked.json", &text);
    let o = supint(&["closed-form", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let cmp = read_json(&dir.path().join("closed_form_comparison.json"));
    assert!(cmp["max_dq"].as_f64().unwrap() < 1e-6, "{cmp}");
    assert_eq!(cmp["pass"], true);
    assert_eq!(cmp["constants"]["gamma"], 3.0);
    let csv = fs::read_to_string(dir.path().join("closed_form.csv")).unwrap();
    assert_eq!(csv.lines().count(), 100001 + 1);
}

#[test]
fn closed_form_unsupported_regimes_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let negative = r#"{
  "system": {"n": 2, "kappa": 1.0, "omega_sq": 1.0, "b": [0.0, 0.0]},
  "initial_state": {"q": [0.5, 0.5], "p": [0.0, 0.0]}
}"#;
    let cfg = write_config(dir.path(), "neg.json", negative);
    let o = supint(&["closed-form", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("closed form requires E>0"), "{}", stderr(&o));

    let free = WORKED.replace("\"omega_sq\": 1.0", "\"omega_sq\": 0.0");
    let cfg = write_config(dir.path(), "free.json", &free);
    let o = supint(&["closed-form", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn geometry_table() {
    let dir = tempfile::tempdir().unwrap();
    let radii = [0.0, 0.01, 0.0316, 0.1, 1.0, 7.5, 1000.0];
    let text = format!(
        r#"{{"system": {{"n": 2, "kappa": 1.0, "b": [1.0, 1.0]}},
  "initial_state": {{"q": [1.0, 1.0], "p": [1.0, -1.0]}},
  "geometry": {{"radii": {radii:?}, "k": 1.0}}}}"#
    );
    let cfg = write_config(dir.path(), "geo.json", &text);
    let o = supint(&["geometry", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = read_json(&dir.path().join("geometry.json"));
    let rows = table["rows"].as_array().unwrap();
    assert_eq!(rows.len(), radii.len());
    assert_eq!(rows[0]["R"], -4.0);
    assert!(rows[0]["v"].is_null() && rows[0]["harmonicity"].is_null());
    for (row, r) in rows.iter().zip(radii) {
        assert_eq!(row["r"].as_f64().unwrap(), r);
        if r > 0.0 {
            assert!(row["harmonicity"].as_f64().unwrap().abs() < 1e-10);
        }
    }
    let one = &rows[4];
    assert!((one["V_Kepler"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-15);
    assert_eq!(one["V_Harm"], 0.5);
}

#[test]
fn dump_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "worked.json", WORKED);
    let o = supint(&["simulate", "--config", &cfg, "--seed", "9", "--dump-config"]);
    assert!(o.status.success());
    let dumped = String::from_utf8(o.stdout).unwrap();
    let parsed = RunConfig::from_json(&dumped, Path::new("dumped.json")).unwrap();
    let mut expected = RunConfig::load(Path::new(&cfg)).unwrap();
    expected.verification.seed = 9;
    assert_eq!(parsed, expected);

    let o = supint(&["--dump-config"]);
    let default = String::from_utf8(o.stdout).unwrap();
    assert_eq!(
        RunConfig::from_json(&default, Path::new("d")).unwrap(),
        RunConfig::default()
    );
}
