//! Monte-Carlo checks of the restricted isometry property, the toy example
//! separating Bernoulli from without-replacement sampling, and sample
//! complexity curves.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::coherence::{coherence_exact, CoherenceVector};
use crate::error::{invalid, Error, Result};
use crate::operators::MeasurementOperator;
use crate::rng::{stream_id, RngStream};
use crate::sampling::{SamplingPlan, Scheme, SchemeWeights};
use crate::subspace::{toy_prior, UnionOfSubspaces};
use crate::transform::{Field, UnitaryOperator, C64};
use crate::weights::{l_sq_profile, query_from_profile};

/// RIP threshold on the deviation.
pub const RIP_THRESHOLD: f64 = 1.0 / 3.0;

/// Relative singular-value floor below which a realized matrix counts as
/// singular.
pub const INJECTIVITY_TOL: f64 = 1e-10;

/// Extreme singular values of `A B_U` over all subspaces `U`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RipDeviation {
    pub deviation: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl RipDeviation {
    /// Injective on every subspace of the prior.
    pub fn injective(&self) -> bool {
        self.sigma_min > INJECTIVITY_TOL * self.sigma_max.max(1.0)
    }
}

/// Matrix of `A B` for one orthonormal basis `B`.
pub fn projected_matrix(op: &MeasurementOperator<'_>, basis: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let rows = op.rows();
    let mut out = DMatrix::<C64>::zeros(rows, basis.ncols());
    for (c, col) in basis.column_iter().enumerate() {
        let y = op.forward(col.as_slice())?;
        out.column_mut(c).copy_from_slice(&y);
    }
    Ok(out)
}

/// Singular values of `A B`, over the reals (stacked real and imaginary
/// parts) for real priors.
fn singular_values(a: DMatrix<C64>, field: Field) -> Vec<f64> {
    match field {
        Field::Complex => a.singular_values().iter().copied().collect(),
        Field::Real => {
            let r = a.nrows();
            let stacked = DMatrix::<f64>::from_fn(2 * r, a.ncols(), |i, j| if i < r { a[(i, j)].re } else { a[(i - r, j)].im });
            stacked.singular_values().iter().copied().collect()
        }
    }
}

/// Exact deviation `max_U max(|sigma_max - 1|, |1 - sigma_min|)` of the
/// (preconditioned, when the plan carries one) CS matrix on a union of
/// subspaces.
pub fn rip_deviation(plan: &SamplingPlan, f: &UnitaryOperator, prior: &UnionOfSubspaces) -> Result<RipDeviation> {
    if prior.n() != plan.n {
        return Err(Error::DimensionMismatch { expected: plan.n, got: prior.n() });
    }
    let op = MeasurementOperator::new(f, plan, plan.precond.len() == plan.indices.len())?;
    let mut sigma_min = f64::INFINITY;
    let mut sigma_max = 0.0f64;
    let mut deviation = 0.0f64;
    for basis in prior.bases() {
        let a = projected_matrix(&op, basis)?;
        let rows = match prior.field() {
            Field::Real => 2 * a.nrows(),
            Field::Complex => a.nrows(),
        };
        let cols = a.ncols();
        let sv = singular_values(a, prior.field());
        let hi = sv.iter().cloned().fold(0.0, f64::max);
        let lo = if rows < cols { 0.0 } else { sv.iter().cloned().fold(f64::INFINITY, f64::min) };
        sigma_min = sigma_min.min(lo);
        sigma_max = sigma_max.max(hi);
        deviation = deviation.max((hi - 1.0).abs()).max((1.0 - lo).abs());
    }
    Ok(RipDeviation { deviation, sigma_min, sigma_max })
}

/// Empirical rate with a Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rate {
    pub count: u64,
    pub trials: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Rate {
    pub fn new(count: u64, trials: u64) -> Self {
        let (ci_low, ci_high) = wilson_interval(count, trials, 0.95);
        let rate = if trials == 0 { 0.0 } else { count as f64 / trials as f64 };
        Self { count, trials, rate, ci_low, ci_high }
    }

    /// Binomial standard error `sqrt(r (1 - r) / trials)`.
    pub fn stderr(&self) -> f64 {
        (self.rate * (1.0 - self.rate) / self.trials.max(1) as f64).sqrt()
    }
}

pub fn wilson_interval(count: u64, trials: u64, level: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = Normal::standard().inverse_cdf(0.5 + level / 2.0);
    let n = trials as f64;
    let p = count as f64 / n;
    let denom = 1.0 + z * z / n;
    let center = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RipEstimate {
    pub scheme: Scheme,
    pub trials: u64,
    pub threshold: f64,
    /// `(q, deviation)` pairs, nearest-rank quantiles over successful draws.
    pub deviation_quantiles: Vec<(f64, f64)>,
    /// Fraction of trials with deviation at most `threshold`.
    pub success: Rate,
    /// Fraction of trials whose matrix is injective on every subspace.
    pub injective: Rate,
    /// Trials whose sampler failed; counted as RIP failures.
    pub sampler_failures: u64,
}

pub const QUANTILES: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

fn quantiles(mut values: Vec<f64>) -> Vec<(f64, f64)> {
    if values.is_empty() {
        return Vec::new();
    }
    values.sort_by(f64::total_cmp);
    QUANTILES
        .iter()
        .map(|&q| {
            let rank = ((q * values.len() as f64).ceil() as usize).clamp(1, values.len());
            (q, values[rank - 1])
        })
        .collect()
}

/// Success probability of the RIP for plans drawn by `scheme`; trial `t`
/// uses stream `stream.child(t)`.
pub fn rip_success_probability(
    f: &UnitaryOperator,
    prior: &UnionOfSubspaces,
    weights: &SchemeWeights,
    scheme: Scheme,
    trials: u64,
    stream: RngStream,
    threshold: f64,
) -> Result<RipEstimate> {
    if trials == 0 {
        return invalid("trials must be at least 1");
    }
    let results: Vec<Option<RipDeviation>> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<Option<RipDeviation>> {
            match weights.draw(scheme, stream.child(t)) {
                Ok(plan) => rip_deviation(&plan, f, prior).map(Some),
                Err(Error::ResourceExhausted { .. } | Error::Infeasible(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let devs: Vec<RipDeviation> = results.iter().flatten().copied().collect();
    let success = devs.iter().filter(|d| d.deviation <= threshold).count() as u64;
    let injective = devs.iter().filter(|d| d.injective()).count() as u64;
    Ok(RipEstimate {
        scheme,
        trials,
        threshold,
        deviation_quantiles: quantiles(devs.iter().map(|d| d.deviation).collect()),
        success: Rate::new(success, trials),
        injective: Rate::new(injective, trials),
        sampler_failures: trials - devs.len() as u64,
    })
}

/// The toy problem: `F = I`, prior `span{e_1}` union a maximally incoherent
/// `(k-1)`-dimensional subspace on coordinates `2..n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ToyExampleSpec {
    pub n: usize,
    pub k: usize,
    pub m: usize,
}

impl ToyExampleSpec {
    pub fn new(n: usize, k: usize, m: usize) -> Result<Self> {
        if k < 2 || k > m || m >= n {
            return invalid(format!("toy example needs 2 <= k <= m < n, got n={n} k={k} m={m}"));
        }
        Ok(Self { n, k, m })
    }

    pub fn prior(&self) -> Result<UnionOfSubspaces> {
        toy_prior(self.n, self.k)
    }

    /// `alpha = (1, sqrt((k-1)/(n-1)), ...)`.
    pub fn analytic_alpha(&self) -> Vec<f64> {
        let mut a = vec![((self.k - 1) as f64 / (self.n - 1) as f64).sqrt(); self.n];
        a[0] = 1.0;
        a
    }

    /// Limit `(1 - 1/k)^m` of the without-replacement miss probability.
    pub fn analytic_wor_miss(&self) -> f64 {
        (1.0 - 1.0 / self.k as f64).powi(self.m as i32)
    }

    /// Combinatorial RIP condition: row 1 sampled and at least `k - 1`
    /// distinct rows among `2..n`.
    pub fn structural_condition(&self, plan: &SamplingPlan) -> bool {
        plan.contains(0) && plan.indices.iter().filter(|&&i| i != 0).count() + 1 >= self.k
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToyReport {
    pub spec: ToyExampleSpec,
    pub trials: u64,
    pub analytic_wor: f64,
    pub wor_miss: Rate,
    pub bernoulli_miss: Rate,
    /// Bernoulli draws with fewer than `k` rows.
    pub bernoulli_undercount: Rate,
    /// Realized preconditioned matrix injective on both branches.
    pub wor_rip: Rate,
    pub bernoulli_rip: Rate,
    /// Literal criterion `deviation <= 1/3` on the preconditioned matrix.
    pub wor_deviation_ok: Rate,
    pub bernoulli_deviation_ok: Rate,
    /// Trials whose realized injectivity disagreed with the structural
    /// condition (expected 0).
    pub structural_mismatches: u64,
}

/// Optimized without-replacement (sequential, `p*`) versus optimized
/// Bernoulli (`w°`) on the toy problem.
pub fn toy_failure_probabilities(spec: ToyExampleSpec, trials: u64, seed: u64) -> Result<ToyReport> {
    if trials == 0 {
        return invalid("trials must be at least 1");
    }
    let f = UnitaryOperator::identity(spec.n)?;
    let prior = spec.prior()?;
    let alpha = coherence_exact(&f, &prior)?;
    let sw = SchemeWeights::new(&alpha, spec.m)?;

    struct Trial {
        miss: bool,
        under: bool,
        rip: bool,
        dev_ok: bool,
        mismatch: bool,
    }
    let run = |scheme: Scheme| -> Result<Vec<Trial>> {
        let stream = RngStream::new(seed, stream_id(scheme.tag(), &[spec.n as u64, spec.k as u64, spec.m as u64]));
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let plan = sw.draw(scheme, stream.child(t))?;
                let dev = rip_deviation(&plan, &f, &prior)?;
                Ok(Trial {
                    miss: !plan.contains(0),
                    under: plan.distinct() < spec.k,
                    rip: dev.injective(),
                    dev_ok: dev.deviation <= RIP_THRESHOLD,
                    mismatch: dev.injective() != spec.structural_condition(&plan),
                })
            })
            .collect()
    };
    let wor = run(Scheme::WorSeq)?;
    let ber = run(Scheme::Bernoulli)?;
    let rate = |v: &[Trial], pick: fn(&Trial) -> bool| Rate::new(v.iter().filter(|t| pick(t)).count() as u64, trials);
    Ok(ToyReport {
        spec,
        trials,
        analytic_wor: spec.analytic_wor_miss(),
        wor_miss: rate(&wor, |t| t.miss),
        bernoulli_miss: rate(&ber, |t| t.miss),
        bernoulli_undercount: rate(&ber, |t| t.under),
        wor_rip: rate(&wor, |t| t.rip),
        bernoulli_rip: rate(&ber, |t| t.rip),
        wor_deviation_ok: rate(&wor, |t| t.dev_ok),
        bernoulli_deviation_ok: rate(&ber, |t| t.dev_ok),
        structural_mismatches: wor.iter().chain(&ber).filter(|t| t.mismatch).count() as u64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IffCheck {
    pub patterns: u64,
    /// Patterns where injectivity disagrees with the structural condition.
    pub mismatches: u64,
    /// Patterns where `deviation <= 1/3` (unit preconditioner) disagrees.
    pub deviation_mismatches: u64,
}

/// Checks the toy RIP characterization over every subset of rows of an
/// `n <= 20` toy problem.
pub fn toy_iff_exhaustive(n: usize, k: usize) -> Result<IffCheck> {
    if n > 20 || k < 2 || k >= n {
        return invalid("exhaustive check needs 2 <= k < n <= 20");
    }
    let f = UnitaryOperator::identity(n)?;
    let prior = toy_prior(n, k)?;
    let spec = ToyExampleSpec { n, k, m: k };
    let counts = (1u32..(1 << n))
        .into_par_iter()
        .map(|mask| -> Result<(u64, u64)> {
            let indices: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let plan = SamplingPlan::explicit(n, n, indices)?;
            let dev = rip_deviation(&plan, &f, &prior)?;
            let want = spec.structural_condition(&plan);
            Ok((u64::from(dev.injective() != want), u64::from((dev.deviation <= RIP_THRESHOLD) != want)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IffCheck {
        patterns: counts.len() as u64,
        mismatches: counts.iter().map(|c| c.0).sum(),
        deviation_mismatches: counts.iter().map(|c| c.1).sum(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexityRow {
    pub m: usize,
    pub l_sq: f64,
    pub norm_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdRow {
    pub lambda: f64,
    pub m_star_bernoulli: Option<usize>,
    pub m_star_wr: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexityCurves {
    pub by_m: Vec<ComplexityRow>,
    pub by_lambda: Vec<ThresholdRow>,
}

/// `L^2(alpha, m)` over `m_grid` against `||alpha||^2`, and the sample counts
/// implied by `m >= L^2(alpha, m) Lambda` versus `m >= ||alpha||^2 Lambda`.
pub fn complexity_curves(alpha: &CoherenceVector, m_grid: &[usize], lambda_grid: &[f64]) -> Result<ComplexityCurves> {
    if m_grid.is_empty() || lambda_grid.is_empty() {
        return invalid("grids must be nonempty");
    }
    let profile = l_sq_profile(alpha);
    let norm_sq = alpha.norm_sq();
    let by_m = m_grid
        .iter()
        .map(|&m| {
            if m == 0 || m > profile.len() {
                return invalid(format!("m = {m} outside 1..={}", profile.len()));
            }
            Ok(ComplexityRow { m, l_sq: profile[m - 1], norm_sq })
        })
        .collect::<Result<_>>()?;
    let by_lambda = lambda_grid
        .iter()
        .map(|&lambda| {
            if !(lambda > 0.0 && lambda.is_finite()) {
                return invalid(format!("lambda must be positive, got {lambda}"));
            }
            let q = query_from_profile(&profile, norm_sq, lambda);
            Ok(ThresholdRow { lambda, m_star_bernoulli: q.m_star, m_star_wr: q.wr_bound })
        })
        .collect::<Result<_>>()?;
    Ok(ComplexityCurves { by_m, by_lambda })
}

/// Pearson chi-square goodness of fit: `(statistic, degrees of freedom,
/// p-value)`. Cells with zero expected probability must be empty.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> Result<(f64, usize, f64)> {
    if observed.len() != probs.len() {
        return Err(Error::DimensionMismatch { expected: probs.len(), got: observed.len() });
    }
    let total: u64 = observed.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0;
    for (&o, &p) in observed.iter().zip(probs) {
        if p <= 0.0 {
            if o > 0 {
                return Ok((f64::INFINITY, 0, 0.0));
            }
            continue;
        }
        let e = p * total as f64;
        stat += (o as f64 - e).powi(2) / e;
        cells += 1;
    }
    if cells < 2 {
        return invalid("need at least two cells with positive probability");
    }
    let df = cells - 1;
    let dist = ChiSquared::new(df as f64).map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok((stat, df, 1.0 - dist.cdf(stat)))
}

/// Total variation distance between two histograms.
pub fn total_variation(a: &[u64], b: &[u64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    let (sa, sb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    Ok(0.5 * a.iter().zip(b).map(|(&x, &y)| (x as f64 / sa - y as f64 / sb).abs()).sum::<f64>())
}
