use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const PUMP_SWEEP: &str = r#"
[params]
kappa = 1e-3
g = 10.0
drive = { cos4phi = 0.5 }

[sweep]
points = 21
"#;

fn sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sim")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn sweep_is_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "pump.toml", PUMP_SWEEP);
    let mut outputs = Vec::new();
    for threads in ["1", "3", "8"] {
        let out = dir.path().join(format!("t{threads}.csv"));
        let r = sim(&["sweep", "--config", s(&cfg), "--out", s(&out), "--threads", threads]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn sweep_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "pump.toml", PUMP_SWEEP);
    let out = dir.path().join("nested/pump.csv");
    let r = sim(&["sweep", "--config", s(&cfg), "--out", s(&out), "--points", "11", "--emit-plot-script"]);
    assert!(r.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("cos4phi,gamma_plus,gamma_minus,gamma0,g1,mean_n,q_mandel,N_used,residual,gap_config_label"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 22);
    // Grid order, both configurations per point.
    assert_eq!(rows[0][9], "no_gap");
    assert_eq!(rows[1][9], "full_gap");
    assert_eq!(rows[0][0], rows[1][0]);
    // No photons without pump: Q is undefined and left empty.
    assert_eq!(rows[1][6], "");
    assert!(dir.path().join("nested/pump.meta.json").exists());
    assert!(dir.path().join("nested/pump_plot.py").exists());
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("nested/pump.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["points_failed"], 0);
}

#[test]
fn json_format_flag_wins_over_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &format!("{PUMP_SWEEP}\n[output]\nformat = \"csv\"\n"));
    let out = dir.path().join("o.json");
    let r = sim(&["sweep", "--config", s(&cfg), "--out", s(&out), "--format", "json", "--points", "5"]);
    assert!(r.status.success());
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["records"].as_array().unwrap().len(), 10);
    assert!(doc["metadata"]["assumptions"].is_object());
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(sim(&["sweep"]).status.code(), Some(1));
    assert_eq!(sim(&["bogus", "--config", "x"]).status.code(), Some(1));
    let missing = dir.path().join("missing.toml");
    assert_eq!(sim(&["sweep", "--config", s(&missing)]).status.code(), Some(1));
    let bad = write_config(dir.path(), "bad.toml", "[params]\nkappa = 1.0\ng = 1.0\ndrive = { cos4phi = 0.5 }\ncolour = 3\n");
    assert_eq!(sim(&["dist", "--config", s(&bad)]).status.code(), Some(1));
}

#[test]
fn solver_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    // A horizon far shorter than the cavity lifetime cannot decay.
    let cfg = write_config(
        dir.path(),
        "short.toml",
        "[params]\nkappa = 0.05\ng = 20.0\ndrive = { epsilon = 1.0, delta_a = 10.0 }\ngap = { u_minus = 0 }\n\
         [solver]\nn_override = 20\n[spectrum]\ngrid = \"narrow\"\nhorizon = 1.0\n",
    );
    let out = dir.path().join("s.csv");
    let r = sim(&["spectrum", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2), "{}", String::from_utf8_lossy(&r.stderr));
}

#[test]
fn validate_flags_a_truncation_that_is_too_small() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "v.toml",
        "[params]\nkappa = 1e-3\ng = 10.0\ndrive = { cos4phi = 0.5 }\n[solver]\nn_override = 40\n",
    );
    let out = dir.path().join("v.json");
    let r = sim(&["validate", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(3));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let checks = report["checks"].as_array().unwrap();
    let tail = checks.iter().find(|c| c["name"] == "truncation_tail").unwrap();
    assert_eq!(tail["passed"], false);
    let stdout = String::from_utf8_lossy(&r.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("FAIL truncation_tail")));
}

#[test]
fn validate_properties_pass_at_default_truncation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "v.toml", "[params]\nkappa = 1e-3\ng = 10.0\ndrive = { cos4phi = 0.5 }\n");
    let out = dir.path().join("v.json");
    sim(&["validate", "--config", s(&cfg), "--out", s(&out)]);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    for c in report["checks"].as_array().unwrap().iter().filter(|c| c["group"] == "properties") {
        assert_eq!(c["passed"], true, "{c}");
    }
}

#[test]
fn dist_writes_numeric_and_closed_form_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "d.toml",
        "[params]\nkappa = 1e-4\ng = 10.0\ndrive = { cos4phi = 0.5 }\ngap = { u_minus = 0 }\n",
    );
    let out = dir.path().join("d.csv");
    assert!(sim(&["dist", "--config", s(&cfg), "--out", s(&out)]).status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("n,p_numeric,p_analytic\n"));
    let (mut a, mut b) = (0.0, 0.0);
    for l in text.lines().skip(1) {
        let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        a += f[1];
        b += f[2];
    }
    assert!((a - 1.0).abs() < 1e-9 && (b - 1.0).abs() < 1e-6);
}
