use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn vdcs(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vdcs")).current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) {
    let out = vdcs(dir, args);
    assert!(out.status.success(), "vdcs {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn haar_alpha(dir: &Path) {
    ok(dir, &["coherence", "--transform", "dft1d", "--n", "64", "--prior", "haar", "--out", "alpha.csv"]);
}

#[test]
fn coherence_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    haar_alpha(dir.path());
    let text = fs::read_to_string(dir.path().join("alpha.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("index,alpha"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 64);
    for (j, row) in rows.iter().enumerate() {
        let (idx, val) = row.split_once(',').unwrap();
        assert_eq!(idx.parse::<usize>().unwrap(), j);
        let v: f64 = val.parse().unwrap();
        assert!(v > 0.0 && v <= 1.0);
        assert_eq!(format!("{v:.16e}"), val, "17 significant digits");
    }
}

#[test]
fn coherence_from_atoms_and_samples() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("atoms.csv"), "1,0,0,0\n0,0.6,0.8,0\n").unwrap();
    ok(dir.path(), &["coherence", "--transform", "identity", "--prior", "atoms:atoms.csv", "--out", "a.csv"]);
    let text = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let alpha: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(alpha, vec![1.0, 0.6, 0.8, 0.0]);
    ok(dir.path(), &["coherence", "--transform", "dft1d", "--prior", "samples:atoms.csv", "--out", "s.csv"]);
}

#[test]
fn weights_footer_and_sum() {
    let dir = tempfile::tempdir().unwrap();
    haar_alpha(dir.path());
    ok(dir.path(), &["weights", "--alpha", "alpha.csv", "--m", "20", "--scheme", "bernoulli", "--out", "w.csv"]);
    let text = fs::read_to_string(dir.path().join("w.csv")).unwrap();
    assert!(text.starts_with("index,alpha,weight\n"));
    let footer: Vec<&str> = text.lines().filter(|l| l.starts_with('#')).collect();
    assert_eq!(footer.len(), 2);
    assert!(footer[0].starts_with("# L2="));
    assert!(footer[1].starts_with("# J="));
    let sum: f64 = text
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((sum - 20.0).abs() < 1e-9);
}

#[test]
fn complexity_bound_keys() {
    let dir = tempfile::tempdir().unwrap();
    haar_alpha(dir.path());
    ok(dir.path(), &["complexity-bound", "--alpha", "alpha.csv", "--lambda", "5", "--out", "b.json"]);
    let v = json(&dir.path().join("b.json"));
    let m_star = v["m_star"].as_u64().unwrap();
    assert!(m_star <= v["wr_bound"].as_u64().unwrap());
    assert!(m_star as f64 / v["L2_at_m_star"].as_f64().unwrap() >= 5.0);
}

#[test]
fn sample_plan_fields() {
    let dir = tempfile::tempdir().unwrap();
    haar_alpha(dir.path());
    ok(dir.path(), &["weights", "--alpha", "alpha.csv", "--m", "20", "--scheme", "bernoulli", "--out", "w.csv"]);
    for scheme in ["bernoulli-cond", "wr", "wor-reject", "wor-seq"] {
        ok(dir.path(), &["sample", "--weights", "w.csv", "--scheme", scheme, "--seed", "4", "--out", "plan.json"]);
        let v = json(&dir.path().join("plan.json"));
        assert_eq!(v["scheme"], scheme);
        assert_eq!(v["seed"], 4);
        let mult: u64 = v["multiplicities"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).sum();
        assert_eq!(mult, 20);
        assert_eq!(v["indices"].as_array().unwrap().len(), v["precond"].as_array().unwrap().len());
    }
}

#[test]
fn measure_and_recover_noiseless() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    haar_alpha(d);
    ok(d, &["weights", "--alpha", "alpha.csv", "--m", "40", "--scheme", "bernoulli", "--out", "w.csv"]);
    ok(d, &["sample", "--weights", "w.csv", "--scheme", "bernoulli-cond", "--seed", "1", "--out", "plan.json"]);
    ok(d, &["signal", "--n", "64", "--k", "3", "--seed", "2", "--out", "x.csv"]);
    ok(d, &["measure", "--plan", "plan.json", "--signal", "x.csv", "--seed", "3", "--out", "b.csv"]);
    ok(d, &[
        "recover", "--plan", "plan.json", "--measurements", "b.csv", "--prior", "haar", "--k", "3", "--truth", "x.csv",
        "--out", "report.json",
    ]);
    let v = json(&d.join("report.json"));
    assert!(v["rel_error"].as_f64().unwrap() < 1e-6, "{v}");
    assert_eq!(v["support_recovered"], true);
    assert_eq!(v["m_realized"], 40);
    for key in ["abs_error", "sigma", "eps_proxy", "mismatch", "noise_factor", "scheme", "converged", "rank_deficient"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    // Without ground truth the error fields are null.
    ok(d, &["recover", "--plan", "plan.json", "--measurements", "b.csv", "--k", "3", "--out", "blind.json"]);
    assert!(json(&d.join("blind.json"))["rel_error"].is_null());
}

#[test]
fn toy_reports_wilson_intervals() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["toy", "--n", "100", "--k", "4", "--m", "8", "--trials", "200", "--seed", "1", "--out", "t.json"]);
    let v = json(&dir.path().join("t.json"));
    let r = &v["wor_miss"];
    assert!(r["ci_low"].as_f64().unwrap() <= r["rate"].as_f64().unwrap());
    assert!(r["rate"].as_f64().unwrap() <= r["ci_high"].as_f64().unwrap());
    assert_eq!(v["bernoulli_miss"]["count"], 0);
}

#[test]
fn rip_estimate_from_config() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.json"),
        r#"{"n": 12, "m": 6, "prior": {"kind": "toy", "k": 3}, "transform": "identity",
            "scheme": "bernoulli", "trials": 100, "seed": 2}"#,
    )
    .unwrap();
    ok(dir.path(), &["rip-estimate", "--config", "c.json", "--out", "r.json"]);
    let v = json(&dir.path().join("r.json"));
    assert_eq!(v["trials"], 100);
    assert_eq!(v["deviation_quantiles"].as_array().unwrap().len(), 5);
    let rate = v["success"]["rate"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&rate));
}

#[test]
fn experiment_writes_three_files() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("e.json"),
        r#"{"scenario": "complexity-curves", "n": 128, "m_grid": [1, 8, 32], "trials": 1, "seed": 0,
            "prior": {"kind": "power-law", "exponent": 1.0}, "lambda_grid": [2, 5]}"#,
    )
    .unwrap();
    ok(dir.path(), &["experiment", "--config", "e.json", "--out", "out"]);
    for f in ["results.csv", "summary.csv", "manifest.json"] {
        assert!(dir.path().join("out").join(f).exists(), "{f}");
    }
    let manifest = json(&dir.path().join("out/manifest.json"));
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn bad_inputs_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("e.json"), r#"{"scenario": "toy", "n": 10, "m_grid": [20], "trials": 1, "seed": 0}"#)
        .unwrap();
    assert!(!vdcs(dir.path(), &["experiment", "--config", "e.json", "--out", "out"]).status.success());
    assert!(!vdcs(dir.path(), &["weights", "--alpha", "missing.csv", "--m", "2", "--scheme", "bernoulli", "--out", "w.csv"])
        .status
        .success());
    assert!(!vdcs(dir.path(), &["coherence", "--prior", "pixels:x", "--out", "a.csv"]).status.success());
}
