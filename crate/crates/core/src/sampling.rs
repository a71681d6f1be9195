//! Sampling plans: Bernoulli selectors, with-replacement draws and the two
//! equivalent without-replacement procedures, plus their diagonal
//! preconditioners.
//!
//! Row `i` of a realized CS matrix is `sqrt(n/m) * precond_i * f_i*`, where
//! `precond_i` is the diagonal of `D~ = sqrt(m/n) Diag(S d)` and `S` carries
//! the `sqrt(n/m)` row scaling. For Bernoulli plans `precond_i = d_i =
//! sqrt(m / (n w_i))`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::RngStream;
use crate::coherence::CoherenceVector;
use crate::weights::{
    check_simplex, heuristic_marginal_weights, optimized_bernoulli_weights, with_replacement_weights, HeuristicWeights,
    WeightVector,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Bernoulli,
    BernoulliCond,
    Wr,
    WorReject,
    WorSeq,
    /// A fixed, caller-supplied set of rows.
    Explicit,
}

impl Scheme {
    pub fn tag(&self) -> &'static str {
        match self {
            Scheme::Bernoulli => "bernoulli",
            Scheme::BernoulliCond => "bernoulli-cond",
            Scheme::Wr => "wr",
            Scheme::WorReject => "wor-reject",
            Scheme::WorSeq => "wor-seq",
            Scheme::Explicit => "explicit",
        }
    }

    pub fn parse(tag: &str) -> Result<Self> {
        Ok(match tag {
            "bernoulli" => Scheme::Bernoulli,
            "bernoulli-cond" => Scheme::BernoulliCond,
            "wr" => Scheme::Wr,
            "wor-reject" => Scheme::WorReject,
            "wor-seq" => Scheme::WorSeq,
            "explicit" => Scheme::Explicit,
            other => return invalid(format!("unknown sampling scheme '{other}'")),
        })
    }
}

/// One realized sampling matrix together with its preconditioner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub scheme: Scheme,
    /// Ambient dimension.
    pub n: usize,
    /// Nominal sample count entering the `sqrt(n/m)` row scaling.
    pub m: usize,
    /// Distinct selected rows: ascending for Bernoulli plans, first-draw
    /// order otherwise.
    pub indices: Vec<usize>,
    pub multiplicities: Vec<u32>,
    /// `D~` diagonal, one entry per distinct selected row. Empty until a
    /// preconditioner is attached.
    pub precond: Vec<f64>,
    #[serde(flatten)]
    pub stream: RngStream,
    /// Bernoulli draws consumed by the conditioned sampler.
    #[serde(default)]
    pub attempts: u64,
}

impl SamplingPlan {
    /// Plan selecting each of `indices` once with unit preconditioner.
    pub fn explicit(n: usize, m: usize, indices: Vec<usize>) -> Result<Self> {
        if m == 0 {
            return invalid("m must be positive");
        }
        let mut seen = vec![false; n];
        for &i in &indices {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return invalid(format!("index {i} out of range or repeated"));
            }
        }
        let k = indices.len();
        Ok(Self {
            scheme: Scheme::Explicit,
            n,
            m,
            indices,
            multiplicities: vec![1; k],
            precond: vec![1.0; k],
            stream: RngStream::new(0, 0),
            attempts: 0,
        })
    }

    /// Number of CS-matrix rows, counting multiplicities.
    pub fn rows(&self) -> usize {
        self.multiplicities.iter().map(|&c| c as usize).sum()
    }

    pub fn distinct(&self) -> usize {
        self.indices.len()
    }

    /// `sqrt(n/m)`.
    pub fn row_scale(&self) -> f64 {
        (self.n as f64 / self.m as f64).sqrt()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.contains(&i)
    }

    pub fn with_precond(mut self, precond: Vec<f64>) -> Result<Self> {
        if precond.len() != self.indices.len() {
            return Err(Error::DimensionMismatch { expected: self.indices.len(), got: precond.len() });
        }
        if let Some(x) = precond.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return invalid(format!("preconditioner entry {x} is not positive and finite"));
        }
        self.precond = precond;
        Ok(self)
    }

    /// `(row index, precond)` pairs with duplicates expanded.
    pub fn expanded_rows(&self) -> Vec<(usize, f64)> {
        let mut out = Vec::with_capacity(self.rows());
        for (k, (&i, &c)) in self.indices.iter().zip(&self.multiplicities).enumerate() {
            let d = self.precond.get(k).copied().unwrap_or(f64::NAN);
            out.extend(std::iter::repeat_n((i, d), c as usize));
        }
        out
    }
}

/// Parameters selecting how the `D~` diagonal is formed.
#[derive(Debug, Clone, Copy)]
pub enum PrecondParams<'a> {
    /// `d_i = sqrt(m / (n w_i))` with Bernoulli (or heuristic marginal) weights.
    Bernoulli(&'a [f64]),
    /// `d_i = 1 / sqrt(n p_i)`.
    WithReplacement(&'a [f64]),
    /// Merged duplicate rows of a rejection run: `N` total draws, `c_i` draws
    /// of index `i`. Preserves the Gram matrix of the `N`-draw
    /// with-replacement matrix.
    Empirical { p: &'a [f64], total_draws: u64, draw_counts: &'a [u64] },
}

pub fn build_preconditioner(plan: &SamplingPlan, params: PrecondParams<'_>) -> Result<Vec<f64>> {
    let n = plan.n as f64;
    let m = plan.m as f64;
    let check = |v: &[f64]| -> Result<()> {
        if v.len() != plan.n {
            return Err(Error::DimensionMismatch { expected: plan.n, got: v.len() });
        }
        Ok(())
    };
    let out: Vec<f64> = match params {
        PrecondParams::Bernoulli(w) => {
            check(w)?;
            plan.indices.iter().map(|&i| (m / (n * w[i])).sqrt()).collect()
        }
        PrecondParams::WithReplacement(p) => {
            check(p)?;
            plan.indices.iter().map(|&i| 1.0 / (n * p[i]).sqrt()).collect()
        }
        PrecondParams::Empirical { p, total_draws, draw_counts } => {
            check(p)?;
            if draw_counts.len() != plan.n || total_draws == 0 {
                return invalid("empirical preconditioner needs per-index draw counts and a draw total");
            }
            let big_n = total_draws as f64;
            plan.indices
                .iter()
                .map(|&i| {
                    if draw_counts[i] == 0 {
                        f64::NAN
                    } else {
                        (m * draw_counts[i] as f64 / (big_n * n * p[i])).sqrt()
                    }
                })
                .collect()
        }
    };
    if let Some(x) = out.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return invalid(format!("preconditioner entry {x} is not positive and finite"));
    }
    Ok(out)
}

/// `d_i = sqrt(m / (n (w_i + 1e-7 m)))` for every row. Not used by default.
pub fn regularized_bernoulli_preconditioner(w: &WeightVector) -> Vec<f64> {
    let n = w.len() as f64;
    let m = w.m() as f64;
    w.values().iter().map(|&wi| (m / (n * (wi + 1e-7 * m))).sqrt()).collect()
}

fn bernoulli_draw<R: Rng>(w: &[f64], rng: &mut R) -> Vec<usize> {
    w.iter()
        .enumerate()
        .filter_map(|(i, &wi)| (rng.random::<f64>() < wi).then_some(i))
        .collect()
}

fn bernoulli_plan(w: &WeightVector, indices: Vec<usize>, scheme: Scheme, stream: RngStream, attempts: u64) -> Result<SamplingPlan> {
    let plan = SamplingPlan {
        scheme,
        n: w.len(),
        m: w.m(),
        multiplicities: vec![1; indices.len()],
        indices,
        precond: Vec::new(),
        stream,
        attempts,
    };
    let d = build_preconditioner(&plan, PrecondParams::Bernoulli(w.values()))?;
    plan.with_precond(d)
}

/// Independent `Ber(w_i)` selectors.
pub fn sample_bernoulli(w: &WeightVector, stream: RngStream) -> Result<SamplingPlan> {
    let mut rng = stream.rng();
    let indices = bernoulli_draw(w.values(), &mut rng);
    bernoulli_plan(w, indices, Scheme::Bernoulli, stream, 1)
}

/// Bernoulli selectors redrawn until exactly `m` rows are selected.
pub fn sample_bernoulli_conditioned(w: &WeightVector, stream: RngStream, max_attempts: u64) -> Result<SamplingPlan> {
    let mut rng = stream.rng();
    for attempt in 1..=max_attempts {
        let indices = bernoulli_draw(w.values(), &mut rng);
        if indices.len() == w.m() {
            return bernoulli_plan(w, indices, Scheme::BernoulliCond, stream, attempt);
        }
    }
    Err(Error::ResourceExhausted { attempts: max_attempts })
}

fn positive_count_at_least(p: &[f64], m: usize) -> Result<()> {
    check_simplex(p)?;
    let pos = p.iter().filter(|&&x| x > 0.0).count();
    if m == 0 {
        return invalid("m must be positive");
    }
    if pos < m {
        return invalid(format!("only {pos} indices have positive probability, need {m}"));
    }
    Ok(())
}

/// `m` i.i.d. draws from `p`; duplicates merged into multiplicities, distinct
/// indices listed in order of first draw.
pub fn sample_with_replacement(p: &[f64], m: usize, stream: RngStream) -> Result<SamplingPlan> {
    check_simplex(p)?;
    if m == 0 {
        return invalid("m must be positive");
    }
    let dist = WeightedIndex::new(p).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut rng = stream.rng();
    let mut slot = vec![usize::MAX; p.len()];
    let mut indices = Vec::new();
    let mut multiplicities: Vec<u32> = Vec::new();
    for _ in 0..m {
        let i = dist.sample(&mut rng);
        if slot[i] == usize::MAX {
            slot[i] = indices.len();
            indices.push(i);
            multiplicities.push(1);
        } else {
            multiplicities[slot[i]] += 1;
        }
    }
    let plan = SamplingPlan {
        scheme: Scheme::Wr,
        n: p.len(),
        m,
        indices,
        multiplicities,
        precond: Vec::new(),
        stream,
        attempts: m as u64,
    };
    let d = build_preconditioner(&plan, PrecondParams::WithReplacement(p))?;
    plan.with_precond(d)
}

/// Result of duplicate-rejection sampling.
#[derive(Debug, Clone)]
pub struct RejectionRun {
    pub plan: SamplingPlan,
    pub total_draws: u64,
    /// Per-index count of all draws (accepted and rejected).
    pub draw_counts: Vec<u64>,
}

impl RejectionRun {
    /// Rejected draws of index `i`.
    pub fn reject_count(&self, i: usize) -> u64 {
        self.draw_counts[i].saturating_sub(1)
    }
}

/// Default cap on the estimated number of draws of a rejection run.
pub const DEFAULT_ATTEMPT_CAP: f64 = 1e7;

/// Draws i.i.d. from `p` and rejects repeats until `m` distinct indices are
/// accepted. Aborts once the running estimate of required draws, the sum of
/// `1 / (1 - q)` over steps with `q` the accepted mass, exceeds `cap`.
pub fn sample_wor_rejection(p: &[f64], m: usize, stream: RngStream, cap: f64) -> Result<RejectionRun> {
    positive_count_at_least(p, m)?;
    let dist = WeightedIndex::new(p).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut rng = stream.rng();
    let mut draw_counts = vec![0u64; p.len()];
    let mut indices = Vec::with_capacity(m);
    let mut accepted_mass = 0.0;
    let mut estimate = 0.0;
    let mut total = 0u64;
    while indices.len() < m {
        let remaining = 1.0 - accepted_mass;
        estimate += if remaining > 0.0 { 1.0 / remaining } else { f64::INFINITY };
        if estimate > cap {
            return Err(Error::ResourceExhausted { attempts: total });
        }
        loop {
            let i = dist.sample(&mut rng);
            total += 1;
            draw_counts[i] += 1;
            if draw_counts[i] == 1 {
                indices.push(i);
                accepted_mass += p[i];
                break;
            }
            if total as f64 > cap {
                return Err(Error::ResourceExhausted { attempts: total });
            }
        }
    }
    let plan = SamplingPlan {
        scheme: Scheme::WorReject,
        n: p.len(),
        m,
        multiplicities: vec![1; m],
        indices,
        precond: Vec::new(),
        stream,
        attempts: total,
    };
    Ok(RejectionRun { plan, total_draws: total, draw_counts })
}

/// Sequential sampling without replacement, renormalizing `p` over the
/// unselected indices at each step.
pub fn sample_wor_sequential(p: &[f64], m: usize, stream: RngStream) -> Result<SamplingPlan> {
    positive_count_at_least(p, m)?;
    let mut rng = stream.rng();
    let mut taken = vec![false; p.len()];
    let mut indices = Vec::with_capacity(m);
    for _ in 0..m {
        let remaining: f64 = p.iter().zip(&taken).filter(|(_, &t)| !t).map(|(x, _)| x).sum();
        let target = rng.random::<f64>() * remaining;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, (&pi, &t)) in p.iter().zip(&taken).enumerate() {
            if t || pi <= 0.0 {
                continue;
            }
            acc += pi;
            pick = Some(i);
            if target < acc {
                break;
            }
        }
        let i = pick.expect("positive mass remains");
        taken[i] = true;
        indices.push(i);
    }
    Ok(SamplingPlan {
        scheme: Scheme::WorSeq,
        n: p.len(),
        m,
        multiplicities: vec![1; m],
        indices,
        precond: Vec::new(),
        stream,
        attempts: m as u64,
    })
}

/// Everything needed to draw plans of any scheme for one `(alpha, m)`.
#[derive(Debug, Clone)]
pub struct SchemeWeights {
    pub m: usize,
    pub bernoulli: WeightVector,
    /// Optimized with-replacement probabilities.
    pub p: Vec<f64>,
    /// Marginal-inclusion weights used to precondition sequential
    /// without-replacement plans; `None` when `m >= n_pos`.
    pub heuristic: Option<HeuristicWeights>,
    pub max_attempts: u64,
    pub attempt_cap: f64,
}

/// Default cap on redraws of the conditioned Bernoulli sampler.
pub const DEFAULT_MAX_ATTEMPTS: u64 = 1_000_000;

impl SchemeWeights {
    pub fn new(alpha: &CoherenceVector, m: usize) -> Result<Self> {
        let bernoulli = optimized_bernoulli_weights(alpha, m)?;
        let p = with_replacement_weights(alpha);
        let heuristic = heuristic_marginal_weights(&p, m).ok();
        Ok(Self { m, bernoulli, p, heuristic, max_attempts: DEFAULT_MAX_ATTEMPTS, attempt_cap: DEFAULT_ATTEMPT_CAP })
    }

    /// Draws one plan with its default preconditioner: `w°` for Bernoulli
    /// plans, `1/sqrt(n p)` with replacement, the marginal heuristic for
    /// sequential and the empirical draw counts for rejection sampling.
    pub fn draw(&self, scheme: Scheme, stream: RngStream) -> Result<SamplingPlan> {
        match scheme {
            Scheme::Bernoulli => sample_bernoulli(&self.bernoulli, stream),
            Scheme::BernoulliCond => sample_bernoulli_conditioned(&self.bernoulli, stream, self.max_attempts),
            Scheme::Wr => sample_with_replacement(&self.p, self.m, stream),
            Scheme::WorSeq => {
                let h = self
                    .heuristic
                    .as_ref()
                    .ok_or_else(|| Error::Infeasible("no marginal heuristic for m >= n_pos".into()))?;
                let plan = sample_wor_sequential(&self.p, self.m, stream)?;
                let d = build_preconditioner(&plan, PrecondParams::Bernoulli(&h.w))?;
                plan.with_precond(d)
            }
            Scheme::WorReject => {
                let run = sample_wor_rejection(&self.p, self.m, stream, self.attempt_cap)?;
                let d = build_preconditioner(
                    &run.plan,
                    PrecondParams::Empirical { p: &self.p, total_draws: run.total_draws, draw_counts: &run.draw_counts },
                )?;
                run.plan.with_precond(d)
            }
            Scheme::Explicit => invalid("explicit plans are not drawn"),
        }
    }
}
