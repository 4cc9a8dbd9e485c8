use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twomode"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn twomode")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn f(s: &str) -> f64 {
    s.parse().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn factors_at_quarter_period() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario("constant_phase.toml");
    let t = std::f64::consts::FRAC_PI_4.to_string();
    let o = run(&["factors", "--scenario", sc.to_str().unwrap(), "--t-end", &t, "--grid", "3"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = read_csv(&dir.path().join("factors.csv"));
    assert_eq!(header[..3], ["t", "re_Lambda", "im_Lambda"]);
    let last = &rows[2];
    // |Λ| = tan X, Ω = -2 ln cos X, Γ = -Λ*
    let lambda = f(&last[1]).hypot(f(&last[2]));
    assert!((lambda - 1.0).abs() < 1e-8, "{lambda}");
    assert!((f(&last[3]) - std::f64::consts::LN_2).abs() < 1e-8);
    assert!((f(&last[5]) + f(&last[1])).abs() < 1e-8 && (f(&last[6]) - f(&last[2])).abs() < 1e-8);
    assert_eq!(last[7], "true");
}

#[test]
fn pole_truncates_output_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario("constant_phase.toml");
    for method in ["auto", "closed"] {
        let o = run(
            &["factors", "--scenario", sc.to_str().unwrap(), "--t-end", "2", "--grid", "11", "--method", method],
            dir.path(),
        );
        assert_eq!(o.status.code(), Some(2), "{method}: {}", stderr(&o));
        assert!(stderr(&o).contains("singularity"));
        let (_, rows) = read_csv(&dir.path().join("factors.csv"));
        assert_eq!(rows.len(), 8, "{method}");
        assert!(rows.iter().all(|r| f(&r[0]) < std::f64::consts::FRAC_PI_2));
    }
}

#[test]
fn smatrix_starts_at_identity_and_stays_unitary() {
    let dir = tempfile::tempdir().unwrap();
    for (name, method) in [("driven.toml", "numeric"), ("log_rho.toml", "closed"), ("linear_phase.toml", "auto")] {
        let sc = scenario(name);
        let o = run(&["smatrix", "--scenario", sc.to_str().unwrap(), "--t-end", "2", "--method", method], dir.path());
        assert!(o.status.success(), "{name}: {}", stderr(&o));
        let (header, rows) = read_csv(&dir.path().join("smatrix.csv"));
        assert_eq!(header.len(), 10);
        assert_eq!(rows.len(), 101);
        let first: Vec<f64> = rows[0].iter().map(|s| f(s)).collect();
        assert_eq!(first[..9], [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert!(rows.iter().all(|r| f(&r[9]) < 1e-9), "{name}");
    }
}

#[test]
fn isotropic_coherent_norm_is_conserved() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario("isotropic.toml");
    for method in ["closed", "numeric"] {
        let o = run(&["coherent", "--scenario", sc.to_str().unwrap(), "--t-end", "3", "--grid", "31", "--method", method], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
        let (_, rows) = read_csv(&dir.path().join("coherent.csv"));
        for r in &rows {
            assert!((f(&r[5]) - 1.0).abs() < 1e-9, "{method} {r:?}");
            assert!(f(&r[6]) < 1e-7);
        }
    }
}

#[test]
fn rho_constant_state_stays_an_eigenstate() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario("rho_constant.toml");
    let o = run(&["coherent", "--scenario", sc.to_str().unwrap(), "--t-end", "2", "--grid", "21", "--nmax", "12", "--format", "both"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, rows) = read_csv(&dir.path().join("coherent.csv"));
    assert!(rows.iter().all(|r| f(&r[6]) < 1e-7));
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("coherent.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 21);
}

#[test]
fn evolve_writes_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario("driven.toml");
    let o = run(&["evolve", "--scenario", sc.to_str().unwrap(), "--grid", "11", "--format", "both"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("evolve.json")).unwrap()).unwrap();
    let samples = json["samples"].as_array().unwrap();
    assert_eq!(samples.len(), 11);
    assert_eq!(samples[0]["c1"], serde_json::json!([0.0, 0.0]));
    let ph = &samples[10]["global_phase"];
    let modulus = ph[0].as_f64().unwrap().hypot(ph[1].as_f64().unwrap());
    assert!((modulus - 1.0).abs() < 1e-12);
    assert_eq!(read_csv(&dir.path().join("evolve.csv")).1.len(), 11);
}

fn verify(extra: &[&str], dir: &Path) -> Output {
    let sc = scenario("driven.toml");
    let mut args = vec!["verify", "--scenario", sc.to_str().unwrap(), "--grid", "11", "--nmax", "8"];
    args.extend_from_slice(extra);
    run(&args, dir)
}

#[test]
fn verify_passes_on_driven_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let o = verify(&["--steps", "1024"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(json["passed"], true);
    assert!(json["checks"].as_array().unwrap().len() >= 6);
}

#[test]
fn verify_catches_gamma_sign_fault() {
    let dir = tempfile::tempdir().unwrap();
    let o = verify(&["--steps", "1024", "--inject-fault", "gamma-sign"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("factor_reconstruction"), "{err}");
    assert!(!err.contains("self_convergence"));
}

#[test]
fn verify_rejects_unconverged_reference() {
    let dir = tempfile::tempdir().unwrap();
    let o = verify(&["--steps", "4"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("brute_force_self_convergence"));
}

#[test]
fn bad_tolerance_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario("isotropic.toml");
    let o = run(&["smatrix", "--scenario", sc.to_str().unwrap(), "--tol", "0.5"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--tol"));
}

#[test]
fn output_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let sc = scenario("driven.toml");
    for dir in [a.path(), b.path()] {
        let o = run(&["smatrix", "--scenario", sc.to_str().unwrap(), "--method", "numeric"], dir);
        assert!(o.status.success());
    }
    let read = |d: &Path| std::fs::read(d.join("smatrix.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}
