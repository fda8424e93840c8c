use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mlti_core::einstein::EvenPairedTensor;
use mlti_core::io::{load_system, save_system, Encoding};
use mlti_core::random::rng;
use mlti_core::system::{
    hinf_norm, lti_to_mlti, random_system, stability_eigen, stability_ttd, Construction, Lti, MltiSystem, SystemSpec, DEFAULT_GRID,
};
use nalgebra::DMatrix;
use serde_json::Value;

fn mlti(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlti"))
        .args(args)
        .current_dir(dir)
        .env_remove("MLTI_SEED")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> Output {
    let o = mlti(args, dir);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    o
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("JSON report")
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn worked(dir: &Path) -> PathBuf {
    ok(&["generate", "--preset", "worked", "--out", "w.toml"], dir);
    dir.join("w.toml")
}

fn find<'a>(list: &'a Value, key: &str, name: &str) -> &'a Value {
    list.as_array().unwrap().iter().find(|r| r[key] == name).unwrap_or_else(|| panic!("{name} missing"))
}

fn save(dir: &Path, name: &str, s: &MltiSystem) -> PathBuf {
    let p = dir.join(name);
    save_system(&p, s, None, Encoding::Text).unwrap();
    p
}

#[test]
fn analyze_worked_example() {
    let d = tempfile::tempdir().unwrap();
    worked(d.path());
    let r = json(&ok(&["analyze", "w.toml", "--methods", "rank_u,ttd,gramian"], d.path()));
    assert_eq!(find(&r["stability"], "criterion", "eigen")["verdict"], "asymptotically_stable");
    let tucker = find(&r["stability"], "criterion", "tucker");
    assert_eq!(tucker["verdict"], "asymptotically_stable");
    assert!((tucker["witness"].as_f64().unwrap() - 0.9207).abs() < 1e-3);
    for side in ["reachability", "observability"] {
        for m in ["rank_u", "ttd"] {
            let v = find(&r[side], "method", m);
            assert_eq!(v["answer"], "yes");
            assert_eq!(v["rank"], 6);
        }
        assert_eq!(find(&r[side], "method", "gramian")["answer"], "yes");
    }
}

#[test]
fn zero_input_is_not_reachable_and_strict_fails() {
    let d = tempfile::tempdir().unwrap();
    let p = worked(d.path());
    let s = load_system(&p).unwrap().to_full().unwrap();
    let z = MltiSystem::new(s.a().clone(), EvenPairedTensor::zeros(s.b().pshape().clone()), s.c().clone()).unwrap();
    save(d.path(), "z.toml", &z);
    let o = ok(&["analyze", "z.toml", "--criteria", "eigen"], d.path());
    let r = json(&o);
    assert_eq!(find(&r["reachability"], "method", "rank_u")["answer"], "no");
    assert_eq!(find(&r["observability"], "method", "rank_u")["answer"], "yes");
    let o = mlti(&["analyze", "z.toml", "--criteria", "eigen", "--strict"], d.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(json(&o)["reachability"][0]["answer"], "no");
}

#[test]
fn verdicts_match_library_calls() {
    let d = tempfile::tempdir().unwrap();
    for seed in 0..4u64 {
        let mut g = rng(900 + seed);
        let rho = [0.5, 0.95, 1.2, 2.0][seed as usize];
        let s = random_system(&mut g, &SystemSpec::new(&[2, 3], &[1, 2], &[2, 1], Construction::Dense).stable(rho)).unwrap();
        let p = save(d.path(), "r.toml", &s);
        let s = load_system(&p).unwrap().to_full().unwrap();
        let r = json(&ok(&["analyze", "r.toml", "--criteria", "eigen,ttd"], d.path()));
        let e = stability_eigen(s.a()).unwrap();
        let t = stability_ttd(s.a()).unwrap();
        let eigen = find(&r["stability"], "criterion", "eigen");
        let ttd = find(&r["stability"], "criterion", "ttd");
        assert_eq!(eigen["verdict"], e.verdict.as_str());
        assert_eq!(ttd["verdict"], t.verdict.as_str());
        assert!((eigen["witness"].as_f64().unwrap() - e.witness).abs() <= 1e-14 * e.witness);
        assert!((ttd["witness"].as_f64().unwrap() - t.witness).abs() <= 1e-14 * t.witness);
    }
    // a Kronecker-product A read back from disk is refactored to rank one
    let mut g = rng(910);
    let s = random_system(&mut g, &SystemSpec::new(&[2, 2], &[1, 1], &[1, 1], Construction::Tucker).stable(0.9)).unwrap();
    save(d.path(), "t.toml", &s);
    let r = json(&ok(&["analyze", "t.toml", "--criteria", "tucker", "--methods", "rank_u"], d.path()));
    let cli = find(&r["stability"], "criterion", "tucker");
    assert_eq!(cli["verdict"], "asymptotically_stable");
    assert!((cli["witness"].as_f64().unwrap() - 0.9).abs() < 1e-8);
}

#[test]
fn tol_rejudges_one_sided_criteria() {
    let d = tempfile::tempdir().unwrap();
    worked(d.path());
    let r = json(&ok(&["analyze", "w.toml", "--criteria", "hosvd", "--methods", "rank_u", "--tol=-3"], d.path()));
    // ‖A‖² = 3.6625 < 1 − (−3)
    assert_eq!(r["stability"][0]["verdict"], "asymptotically_stable");
}

#[test]
fn parse_errors_exit_1_with_location() {
    let d = tempfile::tempdir().unwrap();
    worked(d.path());
    fs::write(d.path().join("w.b.tensor"), "tensor v1\n3 1 2 1\n0 0 1\n0 zero 1\n").unwrap();
    let o = mlti(&["analyze", "w.toml"], d.path());
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 4") && err.contains("w.b.tensor"), "{err}");
    fs::write(d.path().join("m.toml"), "format = \"mlti-system v1\"\nstate = [3, 2\n").unwrap();
    let o = mlti(&["analyze", "m.toml"], d.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));
    let o = mlti(&["analyze", "missing.toml"], d.path());
    assert_eq!(o.status.code(), Some(1));
    let o = mlti(&["compress", "w.toml", "--format", "cpd"], d.path());
    assert_eq!(o.status.code(), Some(1));
    let o = mlti(&["bench", "--experiment", "9.9"], d.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(mlti(&["--help"], d.path()).status.success());
}

#[test]
fn compress_exact_and_rank_schedule() {
    let d = tempfile::tempdir().unwrap();
    let dir = d.path();
    ok(
        &[
            "generate", "--construction", "sparse", "--fill", "0.3", "--state", "3,3,3", "--rho", "0.9", "--seed", "73",
            "--out", "s.toml",
        ],
        dir,
    );
    let r = json(&ok(&["compress", "s.toml", "--format", "ttd", "--eps", "0", "--out", "f.toml"], dir));
    assert!(r["hinf_error"].as_f64().unwrap() <= 1e-10);
    assert_eq!(r["full_params"], 783);
    // the written factored system loads and analyzes
    let a = json(&ok(&["analyze", "f.toml", "--criteria", "eigen,ttd", "--methods", "rank_u"], dir));
    assert_eq!(a["params"]["factored"], r["params"]);
    for (r1, params) in [(49, 1359), (20, 576), (10, 306)] {
        let ranks = format!("{r1},2,2");
        let r = json(&ok(&["compress", "s.toml", "--format", "cpd", "--ranks", &ranks], dir));
        assert_eq!(r["params"], params);
        assert_eq!(r["ranks"][0][0], r1);
    }
    let r = json(&ok(&["compress", "s.toml", "--format", "cpd", "--search", "4"], dir));
    assert!(r["ranks"][0][0].as_u64().unwrap() >= 1);
}

#[test]
fn bode_identity_is_flat() {
    let d = tempfile::tempdir().unwrap();
    let l = Lti::new(DMatrix::zeros(4, 4), DMatrix::identity(4, 4), DMatrix::identity(4, 4)).unwrap();
    save(d.path(), "i.toml", &lti_to_mlti(&l, &[2, 2], &[2, 2], &[2, 2]).unwrap());
    ok(&["bode", "i.toml", "--points", "4", "--out", "b.csv"], d.path());
    let rows = csv_rows(&fs::read_to_string(d.path().join("b.csv")).unwrap());
    assert_eq!(rows[0], ["omega", "sigma_max"]);
    assert_eq!(rows.len(), 5);
    for r in &rows[1..] {
        assert!((r[1].parse::<f64>().unwrap() - 1.0).abs() < 1e-14);
        // 17 significant digits
        assert_eq!(r[0].split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
    }
    assert_eq!(rows[4][0].parse::<f64>().unwrap(), std::f64::consts::PI);
}

#[test]
fn bode_reduced_within_reported_error() {
    let d = tempfile::tempdir().unwrap();
    let dir = d.path();
    let mut g = rng(920);
    let s = random_system(&mut g, &SystemSpec::new(&[3, 3], &[2, 1], &[1, 2], Construction::Dense).stable(0.85)).unwrap();
    save(dir, "s.toml", &s);
    let r = json(&ok(&["compress", "s.toml", "--format", "ttd", "--ranks", "2", "--out", "red.toml"], dir));
    let err = r["hinf_error"].as_f64().unwrap();
    assert!(err > 1e-6, "truncation should lose something: {err}");
    let points = DEFAULT_GRID.to_string();
    let full = csv_rows(&String::from_utf8(ok(&["bode", "s.toml", "--points", &points], dir).stdout).unwrap());
    let red = csv_rows(&String::from_utf8(ok(&["bode", "red.toml", "--points", &points, "--force"], dir).stdout).unwrap());
    assert_eq!(full.len(), DEFAULT_GRID + 1);
    let norm = hinf_norm(&s, DEFAULT_GRID).unwrap().value;
    for (f, r) in full[1..].iter().zip(&red[1..]) {
        assert_eq!(f[0], r[0]);
        let gap = (f[1].parse::<f64>().unwrap() - r[1].parse::<f64>().unwrap()).abs();
        assert!(gap <= err * norm * (1.0 + 1e-9), "ω = {}: {gap} > {}", f[0], err * norm);
    }
}

#[test]
fn bode_refuses_unstable_without_force() {
    let d = tempfile::tempdir().unwrap();
    let l = Lti::new(DMatrix::identity(2, 2) * 1.5, DMatrix::identity(2, 1), DMatrix::identity(1, 2)).unwrap();
    save(d.path(), "u.toml", &lti_to_mlti(&l, &[2], &[1], &[1]).unwrap());
    assert_eq!(mlti(&["bode", "u.toml", "--points", "8"], d.path()).status.code(), Some(1));
    ok(&["bode", "u.toml", "--points", "8", "--force"], d.path());
}

#[test]
fn numerical_failure_exits_3() {
    let d = tempfile::tempdir().unwrap();
    // poles at z = 1 and z = i; a 2-point grid moves ω = 0 onto π/2
    let a = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0]);
    let l = Lti::new(a, DMatrix::identity(3, 1), DMatrix::identity(1, 3)).unwrap();
    save(d.path(), "p.toml", &lti_to_mlti(&l, &[3], &[1], &[1]).unwrap());
    let o = mlti(&["bode", "p.toml", "--points", "2", "--force"], d.path());
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn seed_env_and_binary_output() {
    let d = tempfile::tempdir().unwrap();
    let dir = d.path();
    let args = ["generate", "--state", "2,2", "--rho", "0.9", "--binary"];
    let with = |extra: &[&str], out: &str, env: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_mlti"));
        c.args(args).args(extra).args(["--out", out]).current_dir(dir).env_remove("MLTI_SEED");
        if let Some(v) = env {
            c.env("MLTI_SEED", v);
        }
        assert!(c.status().unwrap().success());
        load_system(&dir.join(out)).unwrap().to_full().unwrap()
    };
    let flag = with(&["--seed", "5"], "a.toml", None);
    let env = with(&[], "b.toml", Some("5"));
    let default = with(&[], "c.toml", None);
    assert_eq!(flag, env);
    assert_ne!(flag, default);
    assert!(fs::read(dir.join("a.a.mltit")).unwrap().starts_with(b"MLTIT1"));
    ok(&["analyze", "a.toml", "--criteria", "eigen"], dir);
}

fn strip_timing(csv: &str, timing_cols: &[usize]) -> Vec<Vec<String>> {
    csv_rows(csv)
        .into_iter()
        .map(|r| r.into_iter().enumerate().filter(|(i, _)| !timing_cols.contains(i)).map(|(_, v)| v).collect())
        .collect()
}

#[test]
fn bench_worked_and_sigma() {
    let d = tempfile::tempdir().unwrap();
    let dir = d.path();
    let o = ok(&["bench", "--experiment", "7.1", "--strict"], dir);
    let r = json(&o);
    assert_eq!(r["pass"], true);
    assert_eq!(r["result"]["reach_rank"], 6);
    assert!(String::from_utf8_lossy(&o.stderr).contains("PASS"));
    let r = json(&ok(&["bench", "--experiment", "7.2", "--sizes", "4,6", "--csv", "s.csv"], dir));
    assert_eq!(r["pass"], true);
    for row in r["result"].as_array().unwrap() {
        assert!(row["rel_error"].as_f64().unwrap() <= 1e-10);
        assert_eq!(row["verdict"], "asymptotically_stable");
    }
    let csv = fs::read_to_string(dir.join("s.csv")).unwrap();
    assert!(csv.starts_with("n,sigma_ttd,sigma_svd,rel_error,verdict,ttd_seconds,svd_seconds\n"));
    ok(&["bench", "--experiment", "7.2", "--sizes", "4,6", "--csv", "t.csv"], dir);
    let again = fs::read_to_string(dir.join("t.csv")).unwrap();
    assert_eq!(strip_timing(&csv, &[5, 6]), strip_timing(&again, &[5, 6]));
}

#[test]
fn bench_truncation_sweep() {
    let d = tempfile::tempdir().unwrap();
    let dir = d.path();
    let r = json(&ok(&["bench", "--experiment", "7.3", "--csv", "a.csv"], dir));
    let checks = r["checks"].as_array().unwrap();
    let get = |n: &str| checks.iter().find(|c| c["name"] == n).unwrap()["pass"].as_bool().unwrap();
    assert!(get("exact_ttd"));
    assert!(get("cpd_param_formula"));
    assert_eq!(r["result"]["full_params"], 783);
    ok(&["bench", "--experiment", "7.3", "--csv", "b.csv"], dir);
    let a = fs::read_to_string(dir.join("a.csv")).unwrap();
    let b = fs::read_to_string(dir.join("b.csv")).unwrap();
    assert!(a.starts_with("method,ranks,params,hinf_error,seconds\n"));
    assert_eq!(strip_timing(&a, &[4]), strip_timing(&b, &[4]));
    assert_eq!(mlti(&["bench", "--experiment", "7.3", "--sizes", "3"], dir).status.code(), Some(1));
}

#[test]
fn bench_memory_comparison() {
    let d = tempfile::tempdir().unwrap();
    let r = json(&ok(&["bench", "--experiment", "7.4", "--sizes", "12", "--strict"], d.path()));
    assert_eq!(r["pass"], true);
    let ttd = &r["result"]["rows"][0];
    assert_eq!(ttd["params"], 5184);
    assert!(ttd["hinf_error"].as_f64().unwrap() <= 1e-10);
    let bt = &r["result"]["rows"][1];
    assert_eq!(bt["method"], "balanced");
    assert!(bt["params"].as_u64().unwrap() >= 5184);
    assert!(bt["hinf_error"].as_f64().unwrap() > ttd["hinf_error"].as_f64().unwrap());
}
