//! Config-driven experiment runner. Every trial draws from a stream keyed by
//! `(scheme, m, trial)`, so tables are identical for any thread count.

use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{complexity_curves, toy_failure_probabilities, toy_iff_exhaustive, Rate, ToyExampleSpec};
use crate::coherence::{coherence_haar_dictionary, CoherenceSource, CoherenceVector};
use crate::error::{invalid, Error, Result};
use crate::io::{fmt17, to_json, Table};
use crate::operators::{add_noise, noise_factor, plan_noise_factor, MeasurementOperator};
use crate::recovery::{assess, geometric_mean, recover_sparse, CoefficientOperator, RecoveryReport, SparsePriorConfig};
use crate::rng::{stream_id, RngStream};
use crate::sampling::{sample_bernoulli, Scheme, SchemeWeights};
use crate::transform::{norm2, Field, UnitaryOperator, C64};
use crate::weights::optimized_bernoulli_weights;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    SchemeComparison,
    ComplexityCurves,
    Toy,
    NoiseTail,
    RipToy,
}

/// Source of the coherence vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PriorSpec {
    /// 1-D DFT against an orthonormal Haar basis; signals are sparse in it.
    Haar { levels: usize },
    /// 2-D DFT against a separable 2-D Haar basis on a `rows x cols` image.
    Haar2d { rows: usize, cols: usize, levels: usize },
    /// `alpha_i` proportional to `i^(-exponent)`, normalized to unit norm.
    PowerLaw { exponent: f64 },
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec::Haar { levels: 3 }
    }
}

impl PriorSpec {
    /// `(F, Haar analysis operator)` for Haar priors.
    pub fn operators(&self, n: usize) -> Result<Option<(UnitaryOperator, UnitaryOperator)>> {
        Ok(match *self {
            PriorSpec::Haar { levels } => Some((UnitaryOperator::dft1d(n)?, UnitaryOperator::haar1d(n, levels)?)),
            PriorSpec::Haar2d { rows, cols, levels } => {
                if rows * cols != n {
                    return invalid(format!("{rows} x {cols} image does not have n = {n} pixels"));
                }
                Some((UnitaryOperator::dft2d(rows, cols, 1)?, UnitaryOperator::haar2d(rows, cols, 1, levels)?))
            }
            PriorSpec::PowerLaw { .. } => None,
        })
    }

    pub fn coherence(&self, n: usize) -> Result<CoherenceVector> {
        match (self, self.operators(n)?) {
            (_, Some((f, haar))) => coherence_haar_dictionary(&f, &haar),
            (PriorSpec::PowerLaw { exponent }, None) => power_law_alpha(n, *exponent),
            _ => unreachable!("every non-Haar prior is a power law"),
        }
    }
}

/// `alpha_i = i^(-p) / ||(j^(-p))_j||_2`, `i = 1..n`.
pub fn power_law_alpha(n: usize, exponent: f64) -> Result<CoherenceVector> {
    let raw: Vec<f64> = (1..=n).map(|i| (i as f64).powf(-exponent)).collect();
    let norm = raw.iter().map(|a| a * a).sum::<f64>().sqrt();
    CoherenceVector::new(raw.into_iter().map(|a| a / norm).collect(), CoherenceSource::External)
}

fn default_schemes() -> Vec<Scheme> {
    vec![Scheme::BernoulliCond, Scheme::Wr]
}

fn default_solver() -> SparsePriorConfig {
    SparsePriorConfig::default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub n: usize,
    pub m_grid: Vec<usize>,
    #[serde(default)]
    pub k: usize,
    #[serde(default)]
    pub sigma: f64,
    pub trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub prior: PriorSpec,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<Scheme>,
    /// Thresholds `Lambda` for complexity curves.
    #[serde(default)]
    pub lambda_grid: Vec<f64>,
    /// Failure probabilities `t` for the noise tail.
    #[serde(default)]
    pub t_grid: Vec<f64>,
    /// LASSO settings; `k` and `sigma` are taken from the top level.
    #[serde(default = "default_solver")]
    pub solver: SparsePriorConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return invalid("trials must be at least 1");
        }
        if self.m_grid.is_empty() {
            return invalid("m_grid is empty");
        }
        if let Some(m) = self.m_grid.iter().find(|&&m| m == 0 || m > self.n) {
            return invalid(format!("m = {m} outside [1, {}]", self.n));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return invalid("sigma must be nonnegative");
        }
        match self.scenario {
            Scenario::SchemeComparison => {
                if self.k == 0 || self.k > self.n {
                    return invalid("k must lie in [1, n]");
                }
                if self.schemes.is_empty() || self.schemes.contains(&Scheme::Explicit) {
                    return invalid("schemes must be a nonempty list of sampling schemes");
                }
                if matches!(self.prior, PriorSpec::PowerLaw { .. }) {
                    return invalid("scheme comparison needs a Haar prior");
                }
            }
            Scenario::ComplexityCurves if self.lambda_grid.is_empty() => return invalid("lambda_grid is empty"),
            Scenario::NoiseTail if self.t_grid.iter().any(|t| !(*t > 0.0)) || self.t_grid.is_empty() => {
                return invalid("t_grid must hold positive values")
            }
            Scenario::Toy => {
                ToyExampleSpec::new(self.n, self.k, self.m_grid[0])?;
            }
            Scenario::RipToy if self.n > 16 || self.k < 2 => return invalid("rip-toy needs n <= 16 and k >= 2"),
            _ => {}
        }
        Ok(())
    }

    /// SHA-256 of the compact JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub config_sha256: String,
    pub seed: u64,
    pub software: String,
    pub version: String,
    pub files: Vec<String>,
    pub trials_total: u64,
    pub trials_failed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub results_csv: String,
    pub summary_csv: String,
    pub manifest: Manifest,
}

impl ExperimentOutput {
    pub fn write(&self, dir: &Path) -> Result<()> {
        let io = |e: std::io::Error| Error::InvalidInput(format!("{}: {e}", dir.display()));
        std::fs::create_dir_all(dir).map_err(io)?;
        std::fs::write(dir.join("results.csv"), &self.results_csv).map_err(io)?;
        std::fs::write(dir.join("summary.csv"), &self.summary_csv).map_err(io)?;
        std::fs::write(dir.join("manifest.json"), to_json(&self.manifest)?).map_err(io)?;
        Ok(())
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let (results_csv, summary_csv, total, failed) = match cfg.scenario {
        Scenario::SchemeComparison => scheme_comparison(cfg)?,
        Scenario::ComplexityCurves => curves(cfg)?,
        Scenario::Toy => toy(cfg)?,
        Scenario::NoiseTail => noise_tail(cfg)?,
        Scenario::RipToy => rip_toy(cfg)?,
    };
    Ok(ExperimentOutput {
        results_csv,
        summary_csv,
        manifest: Manifest {
            config: cfg.clone(),
            config_sha256: cfg.hash(),
            seed: cfg.seed,
            software: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            files: vec!["results.csv".into(), "summary.csv".into(), "manifest.json".into()],
            trials_total: total,
            trials_failed: failed,
        },
    })
}

pub const RESULTS_HEADER: [&str; 8] =
    ["scheme", "m", "trial", "status", "rel_error", "m_realized", "noise_factor", "seed_stream"];

/// One row of the trial table.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub scheme: Scheme,
    pub m: usize,
    pub trial: u64,
    pub status: String,
    pub report: Option<RecoveryReport>,
    pub m_realized: usize,
    pub noise_factor: f64,
    pub seed_stream: u64,
}

fn status_of(e: &Error) -> &'static str {
    match e {
        Error::ResourceExhausted { .. } => "attempt_cap",
        Error::Infeasible(_) => "infeasible",
        _ => "error",
    }
}

/// Unit-norm real signal with `k` nonzero Haar coefficients on a uniformly
/// random support, magnitudes `1 + |g|` with random signs.
pub fn sparse_haar_signal<R: Rng>(haar: &UnitaryOperator, k: usize, rng: &mut R) -> Result<Vec<C64>> {
    let n = haar.n();
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    let mut c = vec![C64::new(0.0, 0.0); n];
    for &j in &idx[..k] {
        let g: f64 = rng.sample(StandardNormal);
        c[j] = C64::new(g.signum() * (1.0 + g.abs()), 0.0);
    }
    let mut x = haar.adjoint(&c)?;
    let s = norm2(&x);
    x.iter_mut().for_each(|v| *v /= s);
    Ok(x)
}

struct Problem {
    f: UnitaryOperator,
    haar: UnitaryOperator,
    alpha: CoherenceVector,
}

fn one_trial(p: &Problem, sw: &SchemeWeights, cfg: &ExperimentConfig, scheme: Scheme, trial: u64) -> TrialRecord {
    let m = sw.m;
    let plan_stream = stream_id(scheme.tag(), &[m as u64, trial]);
    let mut rec = TrialRecord {
        scheme,
        m,
        trial,
        status: String::new(),
        report: None,
        m_realized: 0,
        noise_factor: f64::NAN,
        seed_stream: plan_stream,
    };
    let run = |rec: &mut TrialRecord| -> Result<()> {
        let plan = sw.draw(scheme, RngStream::new(cfg.seed, plan_stream))?;
        rec.m_realized = plan.rows();
        rec.noise_factor = plan_noise_factor(&plan, &p.alpha)?.value;
        // The signal depends on (m, trial) only, so schemes see the same x0.
        let mut signal_rng = RngStream::new(cfg.seed, stream_id("signal", &[m as u64, trial])).rng();
        let x0 = sparse_haar_signal(&p.haar, cfg.k, &mut signal_rng)?;
        let op = MeasurementOperator::new(&p.f, &plan, true)?;
        let clean = op.unpreconditioned().forward(&x0)?;
        let mut noise_rng = RngStream::new(cfg.seed, plan_stream).child(1).rng();
        let b = op.precondition(&add_noise(&clean, cfg.sigma, m, Field::Complex, &mut noise_rng)?)?;
        let a = CoefficientOperator::new(op, &p.haar)?;
        let solver = SparsePriorConfig { k: cfg.k, sigma: cfg.sigma, ..cfg.solver.clone() };
        let recovery = recover_sparse(&a, &b, &solver)?;
        rec.report = Some(assess(&a, &b, &recovery, &x0, cfg.k, cfg.sigma, rec.noise_factor)?);
        Ok(())
    };
    rec.status = match run(&mut rec) {
        Ok(()) => "ok".into(),
        Err(e) => status_of(&e).into(),
    };
    rec
}

/// All `(scheme, m, trial)` recoveries of a scheme-comparison config, in
/// config order.
pub fn scheme_comparison_trials(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let Some((f, haar)) = cfg.prior.operators(cfg.n)? else {
        return invalid("scheme comparison needs a Haar prior");
    };
    let alpha = coherence_haar_dictionary(&f, &haar)?;
    let problem = Problem { f, haar, alpha };
    let weights: Vec<SchemeWeights> =
        cfg.m_grid.iter().map(|&m| SchemeWeights::new(&problem.alpha, m)).collect::<Result<_>>()?;
    let jobs: Vec<(Scheme, usize, u64)> = cfg
        .schemes
        .iter()
        .flat_map(|&s| (0..cfg.m_grid.len()).flat_map(move |mi| (0..cfg.trials).map(move |t| (s, mi, t))))
        .collect();
    Ok(jobs.into_par_iter().map(|(s, mi, t)| one_trial(&problem, &weights[mi], cfg, s, t)).collect())
}

/// Geometric mean error per `(scheme, m)` over successful trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub scheme: Scheme,
    pub m: usize,
    pub trials: u64,
    pub ok: u64,
    pub geo_mean: f64,
    pub geo_stderr: f64,
    pub support_rate: f64,
}

pub fn summarize(records: &[TrialRecord], cfg: &ExperimentConfig) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for &scheme in &cfg.schemes {
        for &m in &cfg.m_grid {
            let group: Vec<&TrialRecord> = records.iter().filter(|r| r.scheme == scheme && r.m == m).collect();
            let reports: Vec<&RecoveryReport> = group.iter().filter_map(|r| r.report.as_ref()).collect();
            let errors: Vec<f64> = reports.iter().map(|r| r.rel_error).collect();
            let gm = geometric_mean(&errors).ok();
            rows.push(SummaryRow {
                scheme,
                m,
                trials: group.len() as u64,
                ok: reports.len() as u64,
                geo_mean: gm.map_or(f64::NAN, |g| g.geo_mean),
                geo_stderr: gm.map_or(f64::NAN, |g| g.geo_stderr),
                support_rate: if reports.is_empty() {
                    f64::NAN
                } else {
                    reports.iter().filter(|r| r.support_recovered).count() as f64 / reports.len() as f64
                },
            });
        }
    }
    rows
}

type Tables = (String, String, u64, u64);

fn scheme_comparison(cfg: &ExperimentConfig) -> Result<Tables> {
    let records = scheme_comparison_trials(cfg)?;
    let mut results = Table::new(&RESULTS_HEADER);
    for r in &records {
        results.row([
            r.scheme.tag().to_string(),
            r.m.to_string(),
            r.trial.to_string(),
            r.status.clone(),
            fmt17(r.report.as_ref().map_or(f64::NAN, |x| x.rel_error)),
            r.m_realized.to_string(),
            fmt17(r.noise_factor),
            r.seed_stream.to_string(),
        ]);
    }
    let mut summary = Table::new(&["scheme", "m", "trials", "ok", "geo_mean", "geo_stderr", "support_rate"]);
    for s in summarize(&records, cfg) {
        summary.row([
            s.scheme.tag().to_string(),
            s.m.to_string(),
            s.trials.to_string(),
            s.ok.to_string(),
            fmt17(s.geo_mean),
            fmt17(s.geo_stderr),
            fmt17(s.support_rate),
        ]);
    }
    let failed = records.iter().filter(|r| r.status != "ok").count() as u64;
    Ok((results.finish(), summary.finish(), records.len() as u64, failed))
}

fn curves(cfg: &ExperimentConfig) -> Result<Tables> {
    let alpha = cfg.prior.coherence(cfg.n)?;
    let c = complexity_curves(&alpha, &cfg.m_grid, &cfg.lambda_grid)?;
    let mut results = Table::new(&["m", "l_sq", "norm_sq"]);
    for r in &c.by_m {
        results.row([r.m.to_string(), fmt17(r.l_sq), fmt17(r.norm_sq)]);
    }
    let mut summary = Table::new(&["lambda", "m_star_bernoulli", "m_star_wr"]);
    for r in &c.by_lambda {
        summary.row([fmt17(r.lambda), r.m_star_bernoulli.map_or(String::new(), |m| m.to_string()), r.m_star_wr.to_string()]);
    }
    Ok((results.finish(), summary.finish(), 0, 0))
}

const RATE_HEADER: [&str; 6] = ["metric", "count", "trials", "rate", "ci_low", "ci_high"];

fn rate_row(t: &mut Table, name: &str, r: &Rate) {
    t.row([name.to_string(), r.count.to_string(), r.trials.to_string(), fmt17(r.rate), fmt17(r.ci_low), fmt17(r.ci_high)]);
}

fn toy(cfg: &ExperimentConfig) -> Result<Tables> {
    let spec = ToyExampleSpec::new(cfg.n, cfg.k, cfg.m_grid[0])?;
    let r = toy_failure_probabilities(spec, cfg.trials, cfg.seed)?;
    let mut results = Table::new(&RATE_HEADER);
    for (name, rate) in [
        ("wor_miss", &r.wor_miss),
        ("bernoulli_miss", &r.bernoulli_miss),
        ("bernoulli_undercount", &r.bernoulli_undercount),
        ("wor_rip", &r.wor_rip),
        ("bernoulli_rip", &r.bernoulli_rip),
        ("wor_deviation_ok", &r.wor_deviation_ok),
        ("bernoulli_deviation_ok", &r.bernoulli_deviation_ok),
    ] {
        rate_row(&mut results, name, rate);
    }
    let mut summary = Table::new(&["quantity", "value"]);
    summary.row(["analytic_wor".to_string(), fmt17(r.analytic_wor)]);
    summary.row(["rip_gap".to_string(), fmt17(r.bernoulli_rip.rate - r.wor_rip.rate)]);
    summary.row(["structural_mismatches".to_string(), r.structural_mismatches.to_string()]);
    Ok((results.finish(), summary.finish(), 2 * cfg.trials, 0))
}

/// `L sqrt(min(1/t + m/(n L^2), 1/(n min(alpha)^2)))`.
pub fn noise_tail_bound(l: f64, n: usize, m: usize, min_alpha: f64, t: f64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    l * (1.0 / t + m / (n * l * l)).min(1.0 / (n * min_alpha * min_alpha)).sqrt()
}

/// Noise factors of `trials` plain Bernoulli plans under `w°`.
pub fn noise_factor_samples(alpha: &CoherenceVector, m: usize, trials: u64, seed: u64) -> Result<Vec<f64>> {
    let w = optimized_bernoulli_weights(alpha, m)?;
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let plan = sample_bernoulli(&w, RngStream::new(seed, stream_id("noise-tail", &[m as u64, t])))?;
            Ok(noise_factor(&plan, alpha, &w)?.value)
        })
        .collect()
}

fn noise_tail(cfg: &ExperimentConfig) -> Result<Tables> {
    let alpha = cfg.prior.coherence(cfg.n)?;
    let m = cfg.m_grid[0];
    let w = optimized_bernoulli_weights(&alpha, m)?;
    let min_alpha = alpha.values().iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min_alpha > 0.0) {
        return invalid("noise tail needs strictly positive coherences");
    }
    let factors = noise_factor_samples(&alpha, m, cfg.trials, cfg.seed)?;
    let mut results = Table::new(&["trial", "noise_factor"]);
    for (t, v) in factors.iter().enumerate() {
        results.row([t.to_string(), fmt17(*v)]);
    }
    let mut summary = Table::new(&["t", "bound", "exceed", "trials", "fraction", "stderr", "holds"]);
    for &t in &cfg.t_grid {
        let bound = noise_tail_bound(w.l(), cfg.n, m, min_alpha, t);
        let r = Rate::new(factors.iter().filter(|&&v| v > bound).count() as u64, cfg.trials);
        summary.row([
            fmt17(t),
            fmt17(bound),
            r.count.to_string(),
            r.trials.to_string(),
            fmt17(r.rate),
            fmt17(r.stderr()),
            (r.rate <= t + 3.0 * r.stderr()).to_string(),
        ]);
    }
    Ok((results.finish(), summary.finish(), cfg.trials, 0))
}

fn rip_toy(cfg: &ExperimentConfig) -> Result<Tables> {
    let mut results = Table::new(&["n", "k", "patterns", "mismatches", "deviation_mismatches"]);
    let (mut patterns, mut mismatches) = (0, 0);
    for n in 3..=cfg.n {
        for k in 2..=cfg.k.min(n - 1) {
            let c = toy_iff_exhaustive(n, k)?;
            patterns += c.patterns;
            mismatches += c.mismatches;
            results.row([n.to_string(), k.to_string(), c.patterns.to_string(), c.mismatches.to_string(), c.deviation_mismatches.to_string()]);
        }
    }
    let mut summary = Table::new(&["patterns", "mismatches"]);
    summary.row([patterns.to_string(), mismatches.to_string()]);
    Ok((results.finish(), summary.finish(), patterns, 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(scenario: Scenario) -> ExperimentConfig {
        ExperimentConfig {
            scenario,
            n: 64,
            m_grid: vec![24],
            k: 3,
            sigma: 0.01,
            trials: 4,
            seed: 7,
            prior: PriorSpec::default(),
            schemes: vec![Scheme::BernoulliCond, Scheme::Wr, Scheme::WorSeq, Scheme::WorReject, Scheme::Bernoulli],
            lambda_grid: vec![2.0, 5.0],
            t_grid: vec![0.25],
            solver: SparsePriorConfig::default(),
        }
    }

    #[test]
    fn scheme_comparison_covers_every_scheme() {
        let cfg = small(Scenario::SchemeComparison);
        let out = run_experiment(&cfg).unwrap();
        let lines: Vec<&str> = out.results_csv.lines().collect();
        assert_eq!(lines[0], RESULTS_HEADER.join(","));
        assert_eq!(lines.len(), 1 + 5 * 4);
        for s in &cfg.schemes {
            assert!(lines.iter().any(|l| l.starts_with(&format!("{},", s.tag()))));
        }
        assert_eq!(out.summary_csv.lines().count(), 6);
        assert_eq!(run_experiment(&cfg).unwrap(), out);
    }

    #[test]
    fn other_scenarios_run() {
        for s in [Scenario::ComplexityCurves, Scenario::NoiseTail] {
            let out = run_experiment(&small(s)).unwrap();
            assert!(out.results_csv.lines().count() > 1);
        }
        let mut toy = small(Scenario::Toy);
        toy.k = 3;
        toy.m_grid = vec![6];
        toy.trials = 50;
        let out = run_experiment(&toy).unwrap();
        assert!(out.results_csv.contains("bernoulli_miss,0,50"));
        let mut rip = small(Scenario::RipToy);
        rip.n = 6;
        rip.m_grid = vec![3];
        let out = run_experiment(&rip).unwrap();
        assert!(out.summary_csv.ends_with(",0\n"));
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = small(Scenario::SchemeComparison);
        cfg.trials = 0;
        assert!(run_experiment(&cfg).is_err());
        let mut cfg = small(Scenario::SchemeComparison);
        cfg.m_grid = vec![65];
        assert!(run_experiment(&cfg).is_err());
        let json = r#"{"scenario":"toy","n":10,"m_grid":[4],"trials":1,"seed":1,"bogus":1}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(json).is_err());
    }

    #[test]
    fn partial_solver_settings() {
        let json = r#"{"scenario":"toy","n":10,"m_grid":[4],"trials":1,"seed":1,"solver":{"max_iters":50}}"#;
        let cfg: ExperimentConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.solver.max_iters, 50);
        assert_eq!(cfg.solver.continuation, SparsePriorConfig::default().continuation);
    }

    #[test]
    fn hash_tracks_config() {
        let a = small(Scenario::Toy);
        let mut b = a.clone();
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn power_law_is_unit_norm() {
        let a = power_law_alpha(100, 1.0).unwrap();
        assert!((a.norm_sq() - 1.0).abs() < 1e-12);
    }
}
