use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn zoll(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zoll"))
        .arg("--out")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(dir: &Path, name: &str) -> Value {
    let text = std::fs::read_to_string(dir.join(name)).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn small_config(dir: &Path, t: f64, extra: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(
        &path,
        format!(
            r#"{{"schema": "zoll.config/1", "n": 2, "L": 4, "L_g": 6, "Q": 18, "t": {t},
               "tol": 1e-9, "max_iter": 6, "seed": "xyz"{extra}}}"#
        ),
    )
    .unwrap();
    path.display().to_string()
}

#[test]
fn spectrum_reports_the_round_eigenvalues() {
    let dir = TempDir::new().unwrap();
    let o = zoll(dir.path(), &["spectrum", "--n", "2", "--lmax", "6"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = json(dir.path(), "spectrum.json");
    assert_eq!(s["schema"], "zoll.spectrum/1");
    assert!((s["lambda0"].as_f64().unwrap() - 2.0 * PI).abs() < 1e-12);
    assert!(s["odd_max_abs"].as_f64().unwrap() < 1e-12);
    assert_eq!(s["eigenvalues"].as_array().unwrap().len(), 7);
    // degree 2 on S²: 2π·P₂(0) = −π
    assert!((s["eigenvalues"][2].as_f64().unwrap() + PI).abs() < 1e-12);
}

#[test]
fn killing_preset_has_minimal_equators() {
    let dir = TempDir::new().unwrap();
    let o = zoll(dir.path(), &["killing", "--preset", "eqdiagonal", "--metric-csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let k = json(dir.path(), "killing.json");
    assert_eq!(k["schema"], "zoll.killing/1");
    assert_eq!(k["coeffs"].as_array().unwrap().len(), 21);
    assert!(k["equator_residual"].as_f64().unwrap() < 1e-9);
    assert!(k["killing_defect"].as_f64().unwrap() < 1e-9);
    assert!(k["min_eigenvalue"].as_f64().unwrap() > 0.0);
    assert_eq!(k["rigidity"]["kernel_dim"], 0);
    let csv = std::fs::read_to_string(dir.path().join("metric.csv")).unwrap();
    assert!(csv.lines().count() > 1);
}

#[test]
fn killing_config_with_unordered_weights_is_rejected() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("k.json");
    std::fs::write(
        &path,
        r#"{"schema": "zoll.killing-config/1", "alpha": [1.0, 1.1, 1.2], "beta": [0.05, 0.03, 0.01]}"#,
    )
    .unwrap();
    let o = zoll(dir.path(), &["killing", "--config", path.to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
    assert!(!dir.path().join("killing.json").exists());
}

#[test]
fn deform_at_zero_is_round_and_verifies() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path(), 0.0, "");
    let o = zoll(dir.path(), &["deform", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let st = json(dir.path(), "state.json");
    assert_eq!(st["schema"], "zoll.state/1");
    assert!(st["rho"].as_array().unwrap().iter().all(|c| c.as_f64() == Some(0.0)));
    assert!(st["phi"].as_array().unwrap().iter().all(|c| c.as_f64() == Some(0.0)));
    let d = json(dir.path(), "deform.json");
    assert_eq!(d["ok"], true);
    assert!((d["normalized"]["area_mean"].as_f64().unwrap() - 2.0 * PI).abs() < 1e-12);

    let state = dir.path().join("state.json");
    let o = zoll(dir.path(), &["verify", state.to_str().unwrap(), "--chart-nodes", "36"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = json(dir.path(), "report.json");
    assert_eq!(r["schema"], "zoll.report/1");
    assert_eq!(r["Q"], 36);
    assert_eq!(r["passes"], true);
    assert!(r["report"]["el_residual"].as_f64().unwrap() < 1e-12);
    assert!(r["report"]["area_spread"].as_f64().unwrap() < 1e-12);
}

#[test]
fn deform_preset_writes_trace_and_passes() {
    let dir = TempDir::new().unwrap();
    let o = zoll(dir.path(), &["--threads", "2", "deform", "--preset", "guillemin-xyz"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let d = json(dir.path(), "deform.json");
    assert_eq!(d["schema"], "zoll.deform/1");
    assert!(d["iterations"].as_u64().unwrap() <= 6);
    let lam = d["diagnostics"]["lambda1_inf"].as_f64().unwrap() + d["diagnostics"]["lambda2_inf"].as_f64().unwrap();
    assert!(lam < 1e-8);
    assert_eq!(d["verify"]["Q"], 128);
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(
        lines.next().unwrap(),
        "stage,iter,t,lambda1_inf,lambda2_inf,area_mean,area_spread"
    );
    assert!(lines.count() >= 2);
}

#[test]
fn verify_a_deformed_state_with_a_loose_tolerance() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path(), 0.02, "");
    let o = zoll(dir.path(), &["deform", "--config", &cfg]);
    assert!(matches!(o.status.code(), Some(0) | Some(1)), "{}", stderr(&o));
    let state = dir.path().join("state.json");
    let o = zoll(dir.path(), &["verify", state.to_str().unwrap(), "--tol", "1e-2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(json(dir.path(), "report.json")["passes"], true);
}

#[test]
fn malformed_configs_exit_with_usage_status() {
    let dir = TempDir::new().unwrap();
    let cases: [(&str, &str); 4] = [
        (r#", "colour": 1"#, "colour"),
        (r#", "verify_q": 4"#, "verify_q"),
        (r#", "seed_file": "x.json""#, "seed"),
        (r#", "max_iter": 0"#, "max_iter"),
    ];
    for (extra, field) in cases {
        let cfg = if extra.contains("max_iter") {
            let path = dir.path().join("config.json");
            std::fs::write(
                &path,
                r#"{"schema": "zoll.config/1", "n": 2, "L": 4, "L_g": 6, "Q": 18, "t": 0.0,
                   "tol": 1e-9, "max_iter": 0, "seed": "xyz"}"#,
            )
            .unwrap();
            path.display().to_string()
        } else {
            small_config(dir.path(), 0.0, extra)
        };
        let o = zoll(dir.path(), &["deform", "--config", &cfg]);
        assert_eq!(o.status.code(), Some(2), "{field}: {}", stderr(&o));
        assert!(stderr(&o).contains(field), "{field}: {}", stderr(&o));
    }
    let path = dir.path().join("wrong.json");
    std::fs::write(&path, r#"{"schema": "zoll.field/1", "n": 2}"#).unwrap();
    let o = zoll(dir.path(), &["deform", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("schema"));
    let o = zoll(dir.path(), &["deform", "--config", "/nonexistent/config.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn small_chart_resolution_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("config.json");
    std::fs::write(
        &path,
        r#"{"schema": "zoll.config/1", "n": 2, "L": 8, "L_g": 12, "Q": 20, "t": 0.05,
           "tol": 1e-8, "max_iter": 6, "seed": "xyz"}"#,
    )
    .unwrap();
    let o = zoll(dir.path(), &["deform", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`Q`"), "{}", stderr(&o));
}

#[test]
fn unknown_presets_and_zero_threads_are_usage_errors() {
    let dir = TempDir::new().unwrap();
    assert_eq!(zoll(dir.path(), &["deform", "--preset", "nope"]).status.code(), Some(2));
    assert_eq!(zoll(dir.path(), &["killing", "--preset", "nope"]).status.code(), Some(2));
    assert_eq!(zoll(dir.path(), &["--threads", "0", "spectrum"]).status.code(), Some(2));
}

#[test]
fn funk_of_an_odd_field_vanishes() {
    let dir = TempDir::new().unwrap();
    // coefficients of Y₁₀ and Y₃₁ only
    let mut coeffs = vec![0.0; 16];
    coeffs[2] = 1.0;
    coeffs[13] = -0.5;
    let field = dir.path().join("f.json");
    std::fs::write(
        &field,
        serde_json::json!({"schema": "zoll.field/1", "n": 2, "lmax": 3, "coeffs": coeffs}).to_string(),
    )
    .unwrap();
    let o = zoll(dir.path(), &["funk", field.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut rdr = csv::Reader::from_path(dir.path().join("funk.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(headers.get(0), Some("rep"));
    assert_eq!(headers.get(headers.len() - 1), Some("value"));
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let v: f64 = rec.get(rec.len() - 1).unwrap().parse().unwrap();
        assert!(v.abs() < 1e-12);
        rows += 1;
    }
    assert!(rows > 10);
}

#[test]
fn funk_of_a_constant_is_the_equator_length() {
    let dir = TempDir::new().unwrap();
    let field = dir.path().join("one.json");
    let c = (4.0 * PI).sqrt();
    std::fs::write(
        &field,
        serde_json::json!({"schema": "zoll.field/1", "n": 2, "lmax": 0, "coeffs": [c]}).to_string(),
    )
    .unwrap();
    let o = zoll(dir.path(), &["funk", field.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut rdr = csv::Reader::from_path(dir.path().join("funk.csv")).unwrap();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let v: f64 = rec.get(rec.len() - 1).unwrap().parse().unwrap();
        assert!((v - 2.0 * PI).abs() < 1e-12, "{v}");
    }
}

#[test]
fn kernel_of_the_round_metric() {
    let dir = TempDir::new().unwrap();
    let o = zoll(dir.path(), &["kernel", "--band", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let k = json(dir.path(), "kernel.json");
    assert_eq!(k["schema"], "zoll.kernel/1");
    let cond = k["condition_number"].as_f64().unwrap();
    assert!(cond.is_finite() && cond >= 1.0);
    let reps = k["reps"].as_u64().unwrap() as usize;
    let rows = std::fs::read_to_string(dir.path().join("kernel.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + reps * reps);
}
