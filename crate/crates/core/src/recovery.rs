//! Sparse recovery from preconditioned measurements: LASSO by monotone FISTA,
//! top-k support selection and least-squares debiasing.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::operators::MeasurementOperator;
use crate::sampling::Scheme;
use crate::transform::{norm2, Field, UnitaryOperator, C64};

/// `c -> D~ S F Psi* c` for synthesis coefficients `c` of an orthonormal
/// transform `Psi` (given as its analysis operator).
#[derive(Debug, Clone, Copy)]
pub struct CoefficientOperator<'a> {
    pub op: MeasurementOperator<'a>,
    pub transform: &'a UnitaryOperator,
}

impl<'a> CoefficientOperator<'a> {
    pub fn new(op: MeasurementOperator<'a>, transform: &'a UnitaryOperator) -> Result<Self> {
        if transform.n() != op.n() {
            return Err(Error::DimensionMismatch { expected: op.n(), got: transform.n() });
        }
        Ok(Self { op, transform })
    }

    pub fn field(&self) -> Field {
        self.transform.field()
    }

    pub fn forward(&self, c: &[C64]) -> Result<Vec<C64>> {
        self.op.forward(&self.transform.adjoint(c)?)
    }

    /// Adjoint over the coefficient field (real part for real transforms).
    pub fn adjoint(&self, r: &[C64]) -> Result<Vec<C64>> {
        let mut g = self.transform.apply(&self.op.adjoint(r)?)?;
        project_field(&mut g, self.field());
        Ok(g)
    }

    /// Largest column norm, using one atom per translation class when the
    /// transform is a Haar basis matched to a DFT.
    pub fn max_column_norm(&self) -> Result<f64> {
        let n = self.op.n();
        let cols: Vec<usize> = match self.transform.haar_block_representatives() {
            Some(reps) if self.op.f.translation_invariant_for(self.transform) => reps,
            _ => (0..n).collect(),
        };
        let mut best = 0.0f64;
        for j in cols {
            let mut e = vec![C64::new(0.0, 0.0); n];
            e[j] = C64::new(1.0, 0.0);
            best = best.max(norm2(&self.forward(&e)?));
        }
        Ok(best)
    }

    /// Upper estimate of `||A||^2` by power iteration.
    fn lipschitz(&self) -> Result<f64> {
        let n = self.op.n();
        let mut v: Vec<C64> = (0..n).map(|i| C64::new(1.0 + (i % 7) as f64 * 0.1, 0.0)).collect();
        let mut est = 0.0;
        for _ in 0..30 {
            let nv = norm2(&v);
            if nv == 0.0 {
                break;
            }
            v.iter_mut().for_each(|x| *x /= nv);
            v = self.adjoint(&self.forward(&v)?)?;
            est = norm2(&v);
        }
        Ok(est.max(f64::MIN_POSITIVE) * 1.01)
    }
}

fn project_field(v: &mut [C64], field: Field) {
    if field == Field::Real {
        v.iter_mut().for_each(|x| x.im = 0.0);
    }
}

fn soft_threshold(v: &mut [C64], t: f64) {
    for x in v.iter_mut() {
        let r = x.norm();
        *x = if r <= t { C64::new(0.0, 0.0) } else { *x * ((r - t) / r) };
    }
}

fn l1(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm()).sum()
}

fn sub(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SparsePriorConfig {
    pub k: usize,
    /// Noise level used by the default penalty.
    pub sigma: f64,
    /// Overrides the default penalty when set.
    pub lasso_penalty: Option<f64>,
    pub max_iters: usize,
    pub tol: f64,
    /// Number of geometrically spaced penalties, ending at the target, used
    /// to warm-start the solver.
    pub continuation: usize,
}

impl Default for SparsePriorConfig {
    fn default() -> Self {
        Self { k: 20, sigma: 0.0, lasso_penalty: None, max_iters: 400, tol: 1e-7, continuation: 6 }
    }
}

impl SparsePriorConfig {
    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return invalid("k must be at least 1");
        }
        if !(self.tol > 0.0) {
            return invalid("tol must be positive");
        }
        if !(self.sigma >= 0.0) {
            return invalid("sigma must be nonnegative");
        }
        if let Some(p) = self.lasso_penalty {
            if !(p > 0.0 && p.is_finite()) {
                return invalid("lasso penalty must be positive");
            }
        }
        Ok(())
    }
}

/// Relative floor keeping the default penalty positive when `sigma = 0`.
pub const PENALTY_FLOOR: f64 = 1e-3;

/// `sigma sqrt(2 log n / m)` times the largest column norm, but at least
/// `PENALTY_FLOOR * ||A* b||_inf`.
pub fn default_penalty(a: &CoefficientOperator<'_>, b: &[C64], sigma: f64) -> Result<f64> {
    let n = a.op.n() as f64;
    let m = a.op.plan.m as f64;
    let universal = sigma * (2.0 * n.ln() / m).sqrt() * a.max_column_norm()?;
    let corr = a.adjoint(b)?.iter().map(|x| x.norm()).fold(0.0, f64::max);
    Ok(universal.max(PENALTY_FLOOR * corr))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoResult {
    pub coeffs: Vec<C64>,
    pub iters: usize,
    pub converged: bool,
    /// Objective after each iteration.
    pub objective: Vec<f64>,
}

fn objective(a: &CoefficientOperator<'_>, b: &[C64], c: &[C64], lambda: f64) -> Result<f64> {
    Ok(0.5 * norm2(&sub(&a.forward(c)?, b)).powi(2) + lambda * l1(c))
}

/// Monotone FISTA with backtracking for `0.5 ||A c - b||^2 + lambda ||c||_1`.
pub fn lasso(
    a: &CoefficientOperator<'_>,
    b: &[C64],
    lambda: f64,
    start: Option<&[C64]>,
    max_iters: usize,
    tol: f64,
) -> Result<LassoResult> {
    let n = a.op.n();
    let mut x: Vec<C64> = match start {
        Some(s) if s.len() == n => s.to_vec(),
        Some(s) => return Err(Error::DimensionMismatch { expected: n, got: s.len() }),
        None => vec![C64::new(0.0, 0.0); n],
    };
    let mut lip = a.lipschitz()?;
    let mut fx = objective(a, b, &x, lambda)?;
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iters = 0;
    while iters < max_iters {
        iters += 1;
        let ry = sub(&a.forward(&y)?, b);
        let smooth_y = 0.5 * norm2(&ry).powi(2);
        let g = a.adjoint(&ry)?;
        let (z, fz) = loop {
            let mut z: Vec<C64> = y.iter().zip(&g).map(|(yi, gi)| yi - gi / lip).collect();
            soft_threshold(&mut z, lambda / lip);
            let rz = sub(&a.forward(&z)?, b);
            let smooth_z = 0.5 * norm2(&rz).powi(2);
            let d = sub(&z, &y);
            let lin: f64 = g.iter().zip(&d).map(|(gi, di)| (gi.conj() * di).re).sum();
            let quad = 0.5 * lip * norm2(&d).powi(2);
            if smooth_z <= smooth_y + lin + quad + 1e-12 * smooth_y.max(1e-300) || lip > 1e300 {
                let fz = smooth_z + lambda * l1(&z);
                break (z, fz);
            }
            lip *= 2.0;
        };
        let step = norm2(&sub(&z, &y));
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let x_next = if fz <= fx { z.clone() } else { x.clone() };
        let f_next = fz.min(fx);
        y = (0..n)
            .map(|i| x_next[i] + (z[i] - x_next[i]) * (t / t_next) + (x_next[i] - x[i]) * ((t - 1.0) / t_next))
            .collect();
        x = x_next;
        fx = f_next;
        t = t_next;
        trace.push(fx);
        if step <= tol * norm2(&x).max(1.0) {
            converged = true;
            break;
        }
    }
    Ok(LassoResult { coeffs: x, iters, converged, objective: trace })
}

/// Indices of the `k` largest magnitudes, ties broken by lower index,
/// returned in ascending index order.
pub fn top_k_support(c: &[C64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..c.len()).collect();
    order.sort_by(|&i, &j| c[j].norm().total_cmp(&c[i].norm()).then(i.cmp(&j)));
    let mut s: Vec<usize> = order.into_iter().take(k).collect();
    s.sort_unstable();
    s
}

/// Minimum-norm least squares over `field`; flags rank deficiency.
pub fn least_squares(a: &DMatrix<C64>, b: &[C64], field: Field) -> Result<(Vec<C64>, bool)> {
    if a.nrows() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: b.len() });
    }
    let cols = a.ncols();
    if cols == 0 {
        return Ok((Vec::new(), false));
    }
    match field {
        Field::Real => {
            let r = a.nrows();
            let stacked = DMatrix::<f64>::from_fn(2 * r, cols, |i, j| if i < r { a[(i, j)].re } else { a[(i - r, j)].im });
            let rhs = DVector::<f64>::from_fn(2 * r, |i, _| if i < r { b[i].re } else { b[i - r].im });
            let svd = stacked.svd(true, true);
            let smax = svd.singular_values.max();
            let eps = (2 * r).max(cols) as f64 * f64::EPSILON * smax;
            let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
            let x = svd.solve(&rhs, eps).map_err(|e| Error::InvalidInput(e.to_string()))?;
            Ok((x.iter().map(|&v| C64::new(v, 0.0)).collect(), rank < cols))
        }
        Field::Complex => {
            let rhs = DVector::from_column_slice(b);
            let svd = a.clone().svd(true, true);
            let smax = svd.singular_values.max();
            let eps = a.nrows().max(cols) as f64 * f64::EPSILON * smax;
            let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
            let x = svd.solve(&rhs, eps).map_err(|e| Error::InvalidInput(e.to_string()))?;
            Ok((x.iter().copied().collect(), rank < cols))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceFit {
    pub xhat: Vec<C64>,
    pub coeffs: Vec<C64>,
    pub rank_deficient: bool,
}

/// Least-squares fit of `D~ b` over `D~ S F B` for an orthonormal basis `B`.
/// `b` is the preconditioned right-hand side.
pub fn project_subspace_ls(op: &MeasurementOperator<'_>, b: &[C64], basis: &DMatrix<C64>, field: Field) -> Result<SubspaceFit> {
    if basis.nrows() != op.n() {
        return Err(Error::DimensionMismatch { expected: op.n(), got: basis.nrows() });
    }
    let mut a = DMatrix::<C64>::zeros(op.rows(), basis.ncols());
    for (j, col) in basis.column_iter().enumerate() {
        a.column_mut(j).copy_from_slice(&op.forward(col.as_slice())?);
    }
    let (coeffs, rank_deficient) = least_squares(&a, b, field)?;
    let xhat = (basis * DVector::from_column_slice(&coeffs)).iter().copied().collect();
    Ok(SubspaceFit { xhat, coeffs, rank_deficient })
}

/// Least squares restricted to coefficient support `support`; returns full
/// coefficient vector.
pub fn debias(a: &CoefficientOperator<'_>, b: &[C64], support: &[usize]) -> Result<(Vec<C64>, bool)> {
    let n = a.op.n();
    let mut mat = DMatrix::<C64>::zeros(a.op.rows(), support.len());
    for (col, &j) in support.iter().enumerate() {
        if j >= n {
            return invalid(format!("support index {j} out of range"));
        }
        let mut e = vec![C64::new(0.0, 0.0); n];
        e[j] = C64::new(1.0, 0.0);
        mat.column_mut(col).copy_from_slice(&a.forward(&e)?);
    }
    let (vals, deficient) = least_squares(&mat, b, a.field())?;
    let mut c = vec![C64::new(0.0, 0.0); n];
    for (&j, v) in support.iter().zip(vals) {
        c[j] = v;
    }
    Ok((c, deficient))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recovery {
    pub xhat: Vec<C64>,
    pub coeffs: Vec<C64>,
    pub support: Vec<usize>,
    pub penalty: f64,
    pub lasso_iters: usize,
    pub converged: bool,
    pub rank_deficient: bool,
    /// `||A c_hat - b||_2`.
    pub residual: f64,
}

/// LASSO (with continuation) in the synthesis coefficients, top-k support,
/// then least squares on the support. `b` is the preconditioned right-hand
/// side `D~ b`.
pub fn recover_sparse(a: &CoefficientOperator<'_>, b: &[C64], cfg: &SparsePriorConfig) -> Result<Recovery> {
    cfg.validate()?;
    if b.len() != a.op.rows() {
        return Err(Error::DimensionMismatch { expected: a.op.rows(), got: b.len() });
    }
    let target = match cfg.lasso_penalty {
        Some(p) => p,
        None => default_penalty(a, b, cfg.sigma)?,
    };
    let lambda_max = a.adjoint(b)?.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let stages = if lambda_max > target { cfg.continuation.max(1) } else { 1 };
    let mut coeffs: Option<Vec<C64>> = None;
    let mut iters = 0;
    let mut converged = false;
    for s in 0..stages {
        let last = s + 1 == stages;
        let lambda = if last {
            target
        } else {
            target * (lambda_max / target).powf((stages - 1 - s) as f64 / (stages - 1) as f64)
        };
        let budget = if last { cfg.max_iters } else { (cfg.max_iters / 4).max(1) };
        let tol = if last { cfg.tol } else { cfg.tol * 100.0 };
        let res = lasso(a, b, lambda, coeffs.as_deref(), budget, tol)?;
        iters += res.iters;
        converged = res.converged;
        coeffs = Some(res.coeffs);
    }
    let lasso_coeffs = coeffs.expect("at least one stage");
    let support = top_k_support(&lasso_coeffs, cfg.k.min(a.op.n()));
    let (coeffs, rank_deficient) = debias(a, b, &support)?;
    let xhat = a.transform.adjoint(&coeffs)?;
    let residual = norm2(&sub(&a.forward(&coeffs)?, b));
    Ok(Recovery { xhat, coeffs, support, penalty: target, lasso_iters: iters, converged, rank_deficient, residual })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub rel_error: f64,
    pub abs_error: f64,
    pub sigma: f64,
    /// Residual of `x_hat` minus the best residual known (`x_hat`, the best
    /// k-term approximation of `x0`, or least squares on its support).
    pub eps_proxy: f64,
    /// `||x_perp||_2`: energy of `x0` outside its best k-term approximation.
    pub mismatch: f64,
    pub noise_factor: f64,
    pub m_realized: usize,
    pub scheme: Scheme,
    pub support_recovered: bool,
    pub converged: bool,
    pub rank_deficient: bool,
}

/// Scores a recovery against the ground truth `x0`.
pub fn assess(
    a: &CoefficientOperator<'_>,
    b: &[C64],
    rec: &Recovery,
    x0: &[C64],
    k: usize,
    sigma: f64,
    noise_factor: f64,
) -> Result<RecoveryReport> {
    if x0.len() != a.op.n() {
        return Err(Error::DimensionMismatch { expected: a.op.n(), got: x0.len() });
    }
    let c0 = a.transform.apply(x0)?;
    let true_support = top_k_support(&c0, k);
    let mut c_q = vec![C64::new(0.0, 0.0); c0.len()];
    for &j in &true_support {
        c_q[j] = c0[j];
    }
    let mismatch = norm2(&sub(&c0, &c_q));
    let (c_ls, _) = debias(a, b, &true_support)?;
    let best = [
        rec.residual,
        norm2(&sub(&a.forward(&c_q)?, b)),
        norm2(&sub(&a.forward(&c_ls)?, b)),
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min);
    let abs_error = norm2(&sub(&rec.xhat, x0));
    let x0_norm = norm2(x0);
    let nonzero: Vec<usize> = true_support.iter().copied().filter(|&j| c0[j].norm() > 0.0).collect();
    Ok(RecoveryReport {
        rel_error: if x0_norm > 0.0 { abs_error / x0_norm } else { abs_error },
        abs_error,
        sigma,
        eps_proxy: rec.residual - best,
        mismatch,
        noise_factor,
        m_realized: a.op.rows(),
        scheme: a.op.plan.scheme,
        support_recovered: nonzero.iter().all(|j| rec.support.contains(j)),
        converged: rec.converged,
        rank_deficient: rec.rank_deficient,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeoMean {
    pub geo_mean: f64,
    /// Multiplicative band `exp(stderr(log e))`.
    pub geo_stderr: f64,
    /// Some errors were zero and clamped to `1e-15`.
    pub clamped: bool,
}

pub fn geometric_mean(errors: &[f64]) -> Result<GeoMean> {
    if errors.is_empty() {
        return invalid("no errors to average");
    }
    if let Some(e) = errors.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
        return invalid(format!("error {e} is negative or not finite"));
    }
    let clamped = errors.iter().any(|&e| e < 1e-15);
    let logs: Vec<f64> = errors.iter().map(|&e| e.max(1e-15).ln()).collect();
    let n = logs.len() as f64;
    let mean = logs.iter().sum::<f64>() / n;
    let stderr = if logs.len() > 1 {
        (logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt()
    } else {
        0.0
    };
    Ok(GeoMean { geo_mean: mean.exp(), geo_stderr: stderr.exp(), clamped })
}

pub fn geometric_mean_error(reports: &[RecoveryReport]) -> Result<GeoMean> {
    geometric_mean(&reports.iter().map(|r| r.rel_error).collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherence::coherence_haar_dictionary;
    use crate::operators::add_noise;
    use crate::rng::RngStream;
    use crate::sampling::{SamplingPlan, SchemeWeights};
    use crate::subspace::coordinate_subspace;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn sparse_signal(haar: &UnitaryOperator, k: usize, rng: &mut ChaCha8Rng) -> (Vec<C64>, Vec<usize>) {
        let n = haar.n();
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = rng.random_range(i..n);
            idx.swap(i, j);
        }
        let mut support = idx[..k].to_vec();
        support.sort_unstable();
        let mut c = vec![C64::new(0.0, 0.0); n];
        for &j in &support {
            let v: f64 = rng.sample(StandardNormal);
            c[j] = C64::new(v.signum() * (1.0 + v.abs()), 0.0);
        }
        let mut x = haar.adjoint(&c).unwrap();
        let s = norm2(&x);
        x.iter_mut().for_each(|v| *v /= s);
        (x, support)
    }

    #[test]
    fn full_plan_exact() {
        let n = 64;
        let f = UnitaryOperator::dft1d(n).unwrap();
        let haar = UnitaryOperator::haar1d(n, 3).unwrap();
        let plan = SamplingPlan::explicit(n, n, (0..n).collect()).unwrap();
        let op = MeasurementOperator::new(&f, &plan, true).unwrap();
        let a = CoefficientOperator::new(op, &haar).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (x0, _) = sparse_signal(&haar, 5, &mut rng);
        let b = op.precondition(&op.unpreconditioned().forward(&x0).unwrap()).unwrap();
        let cfg = SparsePriorConfig { k: 5, ..Default::default() };
        let rec = recover_sparse(&a, &b, &cfg).unwrap();
        let rep = assess(&a, &b, &rec, &x0, 5, 0.0, 0.0).unwrap();
        assert!(rep.rel_error < 1e-8, "{}", rep.rel_error);
        assert!(rep.support_recovered && rep.eps_proxy >= 0.0);
    }

    #[test]
    fn objective_is_monotone() {
        let n = 128;
        let f = UnitaryOperator::dft1d(n).unwrap();
        let haar = UnitaryOperator::haar1d(n, 3).unwrap();
        let alpha = coherence_haar_dictionary(&f, &haar).unwrap();
        let sw = SchemeWeights::new(&alpha, 40).unwrap();
        let plan = sw.draw(Scheme::BernoulliCond, RngStream::new(3, 3)).unwrap();
        let op = MeasurementOperator::new(&f, &plan, true).unwrap();
        let a = CoefficientOperator::new(op, &haar).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (x0, _) = sparse_signal(&haar, 6, &mut rng);
        let b = op.precondition(&op.unpreconditioned().forward(&x0).unwrap()).unwrap();
        let res = lasso(&a, &b, 1e-3, None, 300, 1e-12).unwrap();
        assert!(res.objective.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn true_support_matches_subspace_projection() {
        let n = 128;
        let f = UnitaryOperator::dft1d(n).unwrap();
        let haar = UnitaryOperator::haar1d(n, 3).unwrap();
        let alpha = coherence_haar_dictionary(&f, &haar).unwrap();
        let sw = SchemeWeights::new(&alpha, 40).unwrap();
        let plan = sw.draw(Scheme::Wr, RngStream::new(3, 4)).unwrap();
        let op = MeasurementOperator::new(&f, &plan, true).unwrap();
        let a = CoefficientOperator::new(op, &haar).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (x0, support) = sparse_signal(&haar, 6, &mut rng);
        let noisy = add_noise(&op.unpreconditioned().forward(&x0).unwrap(), 0.1, 40, Field::Complex, &mut rng).unwrap();
        let b = op.precondition(&noisy).unwrap();
        let (c, _) = debias(&a, &b, &support).unwrap();
        let x_debias = haar.adjoint(&c).unwrap();
        let mut basis = DMatrix::<C64>::zeros(n, support.len());
        for (col, &j) in support.iter().enumerate() {
            let mut e = vec![C64::new(0.0, 0.0); n];
            e[j] = C64::new(1.0, 0.0);
            basis.column_mut(col).copy_from_slice(&haar.adjoint(&e).unwrap());
        }
        let fit = project_subspace_ls(&op, &b, &basis, Field::Real).unwrap();
        assert!(norm2(&sub(&fit.xhat, &x_debias)) < 1e-10);
    }

    #[test]
    fn unrecoverable_first_coordinate() {
        let n = 8;
        let f = UnitaryOperator::identity(n).unwrap();
        let plan = SamplingPlan::explicit(n, 4, vec![1, 2, 3, 4]).unwrap();
        let op = MeasurementOperator::new(&f, &plan, true).unwrap();
        let mut x0 = vec![C64::new(0.0, 0.0); n];
        x0[0] = C64::new(2.0, 0.0);
        let b = op.forward(&x0).unwrap();
        let fit = project_subspace_ls(&op, &b, &coordinate_subspace(n, &[0]).unwrap(), Field::Real).unwrap();
        assert!(fit.rank_deficient);
        assert!((norm2(&sub(&fit.xhat, &x0)) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn projection_error_linear_in_sigma() {
        let n = 64;
        let f = UnitaryOperator::dft1d(n).unwrap();
        let plan = SamplingPlan::explicit(n, 20, (0..40).step_by(2).collect()).unwrap();
        let op = MeasurementOperator::new(&f, &plan, true).unwrap();
        let basis = coordinate_subspace(n, &[3, 9, 17]).unwrap();
        let mut x0 = vec![C64::new(0.0, 0.0); n];
        x0[9] = C64::new(1.0, 0.0);
        let clean = op.forward(&x0).unwrap();
        let mut errs = Vec::new();
        for sigma in [0.1, 0.2, 0.4] {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let b = add_noise(&clean, sigma, 20, Field::Complex, &mut rng).unwrap();
            let fit = project_subspace_ls(&op, &b, &basis, Field::Real).unwrap();
            errs.push(norm2(&sub(&fit.xhat, &x0)));
        }
        assert!((errs[1] / errs[0] - 2.0).abs() < 0.5 && (errs[2] / errs[1] - 2.0).abs() < 0.5);
    }

    #[test]
    fn geometric_means() {
        let g = geometric_mean(&[0.3; 5]).unwrap();
        assert!((g.geo_mean - 0.3).abs() < 1e-15 && (g.geo_stderr - 1.0).abs() < 1e-15);
        assert!((geometric_mean(&[0.1, 0.4]).unwrap().geo_mean - 0.2).abs() < 1e-15);
        assert!(geometric_mean(&[0.0, 1.0]).unwrap().clamped);
        assert!(geometric_mean(&[]).is_err());
    }

    #[test]
    fn top_k_ties_prefer_lower_index() {
        let c: Vec<C64> = [1.0, 3.0, 1.0, 3.0, 2.0].iter().map(|&v| C64::new(v, 0.0)).collect();
        assert_eq!(top_k_support(&c, 3), vec![1, 3, 4]);
        assert_eq!(top_k_support(&c, 4), vec![0, 1, 3, 4]);
    }
}
