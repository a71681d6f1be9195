//! Optimized Bernoulli inclusion probabilities and the complexity functionals
//! they minimize.
//!
//! With the positive coherences sorted increasingly as `a_1 <= ... <= a_P`,
//!
//! ```text
//! R^2(j) = m * (a_1^2 + ... + a_j^2) / (j - (P - m))      for j > P - m
//! J      = max { j : m a_j^2 < R^2(j) }
//! L^2    = R^2(J),    w_j = min(m a_j^2 / L^2, 1)
//! ```
//!
//! Rows with zero coherence are never sampled. Entries above `J` in sorted
//! order are saturated (`w = 1`).

use serde::Serialize;

use crate::coherence::CoherenceVector;
use crate::error::{invalid, Error, Result};

/// Bernoulli inclusion probabilities with `sum(w) = m`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    w: Vec<f64>,
    m: usize,
    unsaturated: usize,
    l_sq: f64,
    perm: Vec<usize>,
}

impl WeightVector {
    /// Wraps externally supplied weights after a feasibility check.
    pub fn from_weights(w: Vec<f64>, m: usize) -> Result<Self> {
        check_feasible(&w, m as f64)?;
        let mut perm: Vec<usize> = (0..w.len()).collect();
        perm.sort_by(|&a, &b| w[a].total_cmp(&w[b]));
        let unsaturated = w.iter().filter(|&&x| x > 0.0 && x < 1.0).count();
        Ok(Self { w, m, unsaturated, l_sq: f64::NAN, perm })
    }

    pub fn values(&self) -> &[f64] {
        &self.w
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// Number of unsaturated positive-coherence rows (`0` in the degenerate
    /// `m = n_pos` case).
    pub fn unsaturated(&self) -> usize {
        self.unsaturated
    }

    pub fn l_sq(&self) -> f64 {
        self.l_sq
    }

    pub fn l(&self) -> f64 {
        self.l_sq.sqrt()
    }

    /// `perm[r]` is the original index of the `r`-th smallest coherence.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }
}

fn check_feasible(w: &[f64], m: f64) -> Result<()> {
    if let Some(x) = w.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return invalid(format!("weight {x} outside [0, 1]"));
    }
    let s: f64 = w.iter().sum();
    if (s - m).abs() > 1e-8 * m.max(1.0) {
        return invalid(format!("weights sum to {s}, expected {m}"));
    }
    Ok(())
}

/// Indices sorted by increasing coherence, ties broken by index.
fn sorted_order(alpha: &[f64]) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..alpha.len()).collect();
    perm.sort_by(|&a, &b| alpha[a].total_cmp(&alpha[b]).then(a.cmp(&b)));
    perm
}

/// Sorted positive coherences and the `(J, L^2)` pair for one `m`.
struct Sorted {
    values: Vec<f64>,
    prefix_sq: Vec<f64>,
}

impl Sorted {
    fn new(alpha: &[f64], perm: &[usize]) -> Self {
        let values: Vec<f64> = perm.iter().map(|&i| alpha[i]).filter(|&a| a > 0.0).collect();
        let mut prefix_sq = Vec::with_capacity(values.len() + 1);
        prefix_sq.push(0.0);
        let mut acc = 0.0;
        for a in &values {
            acc += a * a;
            prefix_sq.push(acc);
        }
        Self { values, prefix_sq }
    }

    fn n_pos(&self) -> usize {
        self.values.len()
    }

    /// `R^2(j)` for 1-based `j` with `j > n_pos - m`.
    fn r_sq(&self, j: usize, m: usize) -> f64 {
        let denom = (j + m - self.n_pos()) as f64;
        m as f64 * self.prefix_sq[j] / denom
    }

    /// `(J, L^2)` for `1 <= m < n_pos`.
    fn j_and_l_sq(&self, m: usize) -> (usize, f64) {
        let p = self.n_pos();
        debug_assert!(m >= 1 && m < p);
        let mf = m as f64;
        for j in (p - m + 1..=p).rev() {
            let a = self.values[j - 1];
            let r = self.r_sq(j, m);
            if mf * a * a < r {
                return (j, r);
            }
        }
        // j = p - m + 1 gives R^2 = m * ||a_{<=j}||^2 > m a_j^2 in exact
        // arithmetic; equality only arises when the smaller squares vanish
        // in rounding.
        let j = p - m + 1;
        (j, self.r_sq(j, m))
    }

    fn degenerate_l_sq(&self) -> f64 {
        let a = self.values[0];
        self.n_pos() as f64 * a * a
    }
}

fn validate_m(alpha: &CoherenceVector, m: usize) -> Result<usize> {
    if m == 0 {
        return invalid("m must be positive");
    }
    let n_pos = alpha.positive_count();
    if m > n_pos {
        return Err(Error::InsufficientMeasurements { m, available: n_pos });
    }
    Ok(n_pos)
}

/// Optimized Bernoulli weights `w°` for an expected sample count `m`.
pub fn optimized_bernoulli_weights(alpha: &CoherenceVector, m: usize) -> Result<WeightVector> {
    let n_pos = validate_m(alpha, m)?;
    let a = alpha.values();
    let perm = sorted_order(a);
    let sorted = Sorted::new(a, &perm);
    let mut w = vec![0.0; a.len()];

    if m == n_pos {
        for (wi, &ai) in w.iter_mut().zip(a) {
            if ai > 0.0 {
                *wi = 1.0;
            }
        }
        return Ok(WeightVector { w, m, unsaturated: 0, l_sq: sorted.degenerate_l_sq(), perm });
    }

    let (j_star, l_sq) = sorted.j_and_l_sq(m);
    let mf = m as f64;
    let zeros = a.len() - n_pos;
    for (rank, &i) in perm.iter().enumerate().skip(zeros) {
        let r = rank - zeros + 1;
        w[i] = if r > j_star { 1.0 } else { (mf * a[i] * a[i] / l_sq).min(1.0) };
    }
    Ok(WeightVector { w, m, unsaturated: j_star, l_sq, perm })
}

/// `(L(alpha, m), J)`.
pub fn l_value(alpha: &CoherenceVector, m: usize) -> Result<(f64, usize)> {
    let w = optimized_bernoulli_weights(alpha, m)?;
    Ok((w.l(), w.unsaturated()))
}

/// `L^2(alpha, m)` for every `m` in `1..=n_pos` (index `m - 1`).
pub fn l_sq_profile(alpha: &CoherenceVector) -> Vec<f64> {
    let perm = sorted_order(alpha.values());
    let sorted = Sorted::new(alpha.values(), &perm);
    let p = sorted.n_pos();
    (1..=p)
        .map(|m| if m == p { sorted.degenerate_l_sq() } else { sorted.j_and_l_sq(m).1 })
        .collect()
}

/// Optimized with-replacement probabilities `p_i = alpha_i^2 / ||alpha||^2`.
pub fn with_replacement_weights(alpha: &CoherenceVector) -> Vec<f64> {
    let total = alpha.norm_sq();
    alpha.values().iter().map(|a| a * a / total).collect()
}

pub(crate) fn check_simplex(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return invalid("probability vector is empty");
    }
    if let Some(x) = p.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return invalid(format!("probability {x} is negative or not finite"));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return invalid(format!("probabilities sum to {s}"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeuristicWeights {
    pub w: Vec<f64>,
    pub lambda: f64,
}

/// Marginal inclusion heuristic for without-replacement sampling:
/// `w_i = 1 - exp(-lambda p_i)` with `lambda` chosen so that `sum(w) = m`.
pub fn heuristic_marginal_weights(p: &[f64], m: usize) -> Result<HeuristicWeights> {
    check_simplex(p)?;
    let n_pos = p.iter().filter(|&&x| x > 0.0).count();
    if m == 0 {
        return invalid("m must be positive");
    }
    if m >= n_pos {
        return Err(Error::Infeasible(format!(
            "no finite lambda gives sum(w) = {m} with {n_pos} positive probabilities"
        )));
    }
    let target = m as f64;
    let total = |lambda: f64| -> f64 { p.iter().map(|&pi| -(-lambda * pi).exp_m1()).sum() };

    let mut hi = 1.0;
    while total(hi) < target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Pick the bracket end with the smaller residual.
    let lambda = if (total(lo) - target).abs() <= (total(hi) - target).abs() { lo } else { hi };
    let w = p.iter().map(|&pi| -(-lambda * pi).exp_m1()).collect();
    Ok(HeuristicWeights { w, lambda })
}

fn check_complexity_args(alpha: &CoherenceVector, w: &[f64], m: usize) -> Result<()> {
    if alpha.len() != w.len() {
        return Err(Error::DimensionMismatch { expected: alpha.len(), got: w.len() });
    }
    check_feasible(w, m as f64)?;
    for (j, (&a, &wj)) in alpha.values().iter().zip(w).enumerate() {
        if a > 0.0 && wj == 0.0 {
            return invalid(format!("row {j} has positive coherence but zero weight"));
        }
    }
    Ok(())
}

/// `gamma(alpha, w) = max_j alpha_j sqrt(m) max(sqrt((1 - w_j)/w_j), 1) [w_j < 1]`.
pub fn gamma_complexity(alpha: &CoherenceVector, w: &[f64], m: usize) -> Result<f64> {
    check_complexity_args(alpha, w, m)?;
    let sm = (m as f64).sqrt();
    Ok(alpha
        .values()
        .iter()
        .zip(w)
        .filter(|&(&a, &wj)| a > 0.0 && wj < 1.0)
        .map(|(&a, &wj)| a * sm * ((1.0 - wj) / wj).sqrt().max(1.0))
        .fold(0.0, f64::max))
}

/// `eta(alpha, w) = max_j alpha_j sqrt(m / w_j) [w_j < 1]`.
pub fn eta_complexity(alpha: &CoherenceVector, w: &[f64], m: usize) -> Result<f64> {
    check_complexity_args(alpha, w, m)?;
    let mf = m as f64;
    Ok(alpha
        .values()
        .iter()
        .zip(w)
        .filter(|&(&a, &wj)| a > 0.0 && wj < 1.0)
        .map(|(&a, &wj)| a * (mf / wj).sqrt())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleComplexityQuery {
    pub lambda: f64,
    /// Smallest `m` with `m / L^2(alpha, m) >= lambda`, if any.
    pub m_star: Option<usize>,
    pub l_sq_at_m_star: Option<f64>,
    /// With-replacement analogue `ceil(lambda ||alpha||^2)`.
    pub wr_bound: u64,
    /// Whether `m / L^2(alpha, m)` was nondecreasing over the scanned range.
    pub phi_monotone: bool,
}

/// Inverts `Phi(m) = m / L^2(alpha, m)` by a linear scan over `m`.
pub fn sample_complexity_bound(alpha: &CoherenceVector, lambda: f64) -> Result<SampleComplexityQuery> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return invalid(format!("lambda must be positive, got {lambda}"));
    }
    Ok(query_from_profile(&l_sq_profile(alpha), alpha.norm_sq(), lambda))
}

pub(crate) fn query_from_profile(profile: &[f64], norm_sq: f64, lambda: f64) -> SampleComplexityQuery {
    let mut m_star = None;
    let mut phi_monotone = true;
    let mut prev = f64::NEG_INFINITY;
    for (i, &l_sq) in profile.iter().enumerate() {
        let phi = (i + 1) as f64 / l_sq;
        if phi < prev {
            phi_monotone = false;
        }
        prev = phi;
        if m_star.is_none() && phi >= lambda {
            m_star = Some(i + 1);
        }
    }
    SampleComplexityQuery {
        lambda,
        m_star,
        l_sq_at_m_star: m_star.map(|m| profile[m - 1]),
        wr_bound: (lambda * norm_sq).ceil() as u64,
        phi_monotone,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherence::CoherenceSource;

    fn cv(a: &[f64]) -> CoherenceVector {
        CoherenceVector::new(a.to_vec(), CoherenceSource::External).unwrap()
    }

    #[test]
    fn uniform_alpha_gives_uniform_weights() {
        let (n, c, m) = (10, 0.3, 4);
        let w = optimized_bernoulli_weights(&cv(&vec![c; n]), m).unwrap();
        assert!(w.values().iter().all(|x| (x - 0.4).abs() < 1e-15));
        assert_eq!(w.unsaturated(), n);
        assert!((w.l_sq() - n as f64 * c * c).abs() < 1e-14);
    }

    #[test]
    fn pair_example() {
        let w = optimized_bernoulli_weights(&cv(&[1.0, 1.0]), 1).unwrap();
        assert_eq!(w.values(), &[0.5, 0.5]);
        assert_eq!(w.unsaturated(), 2);
        assert_eq!(w.l_sq(), 2.0);
    }

    #[test]
    fn toy_weights() {
        let (n, k, m) = (200usize, 10usize, 25usize);
        let c = ((k - 1) as f64 / (n - 1) as f64).sqrt();
        let mut a = vec![c; n];
        a[0] = 1.0;
        let w = optimized_bernoulli_weights(&cv(&a), m).unwrap();
        assert_eq!(w.values()[0], 1.0);
        let want = (m - 1) as f64 / (n - 1) as f64;
        assert!(w.values()[1..].iter().all(|x| (x - want).abs() < 1e-14));
        assert_eq!(w.unsaturated(), n - 1);
    }

    #[test]
    fn zero_coherence_rows_excluded() {
        let w = optimized_bernoulli_weights(&cv(&[0.0, 1.0, 0.5, 0.0]), 1).unwrap();
        assert_eq!(w.values()[0], 0.0);
        assert_eq!(w.values()[3], 0.0);
        assert!((w.values().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(matches!(
            optimized_bernoulli_weights(&cv(&[0.0, 1.0, 0.5, 0.0]), 3),
            Err(Error::InsufficientMeasurements { m: 3, available: 2 })
        ));
        assert!(optimized_bernoulli_weights(&cv(&[1.0]), 0).is_err());
    }

    #[test]
    fn degenerate_full_sampling() {
        let w = optimized_bernoulli_weights(&cv(&[0.2, 0.0, 0.4]), 2).unwrap();
        assert_eq!(w.values(), &[1.0, 0.0, 1.0]);
        assert_eq!(w.unsaturated(), 0);
        assert!((w.l_sq() - 2.0 * 0.04).abs() < 1e-15);
    }

    #[test]
    fn negligible_entries_do_not_break_j() {
        // 1e-20^2 vanishes next to 1, so R^2 at the smallest j ties with m a_j^2.
        let w = optimized_bernoulli_weights(&cv(&[1e-20, 1e-20, 1.0, 1.0]), 2).unwrap();
        assert_eq!(w.unsaturated(), 3);
        assert!((w.values().iter().sum::<f64>() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn with_replacement_examples() {
        let p = with_replacement_weights(&cv(&[2.0, 1.0, 1.0]));
        assert_eq!(p, vec![4.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0]);
        let (n, k) = (101usize, 5usize);
        let c = ((k - 1) as f64 / (n - 1) as f64).sqrt();
        let mut a = vec![c; n];
        a[0] = 1.0;
        let p = with_replacement_weights(&cv(&a));
        assert!((p[0] - 1.0 / k as f64).abs() < 1e-15);
        let rest = (k - 1) as f64 / (k as f64 * (n - 1) as f64);
        assert!(p[1..].iter().all(|x| (x - rest).abs() < 1e-15));
    }

    #[test]
    fn heuristic_examples() {
        let h = heuristic_marginal_weights(&[0.5, 0.5], 1).unwrap();
        assert!((h.lambda - 2.0 * 2f64.ln()).abs() < 1e-10);
        assert!(h.w.iter().all(|x| (x - 0.5).abs() < 1e-10));

        let n = 50;
        let h = heuristic_marginal_weights(&vec![1.0 / n as f64; n], 10).unwrap();
        let want = -(n as f64) * (1.0 - 10.0 / n as f64).ln();
        assert!((h.lambda - want).abs() < 1e-9);
        assert!((h.w.iter().sum::<f64>() - 10.0).abs() < 1e-9);

        assert!(matches!(heuristic_marginal_weights(&[0.5, 0.5], 2), Err(Error::Infeasible(_))));
        assert!(heuristic_marginal_weights(&[0.5, 0.6], 1).is_err());
    }

    #[test]
    fn complexity_examples() {
        let a = cv(&[1.0, 1.0]);
        assert_eq!(gamma_complexity(&a, &[0.5, 0.5], 1).unwrap(), 1.0);
        assert!((eta_complexity(&a, &[0.5, 0.5], 1).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(gamma_complexity(&cv(&[0.3, 0.7]), &[1.0, 1.0], 2).unwrap(), 0.0);
        let a3 = cv(&[0.2, 0.5, 0.9]);
        let e = eta_complexity(&a3, &[1.0, 0.6, 1.0], 2).unwrap_err();
        assert!(matches!(e, Error::InvalidInput(_)));
        let eta = eta_complexity(&a3, &[1.0, 0.4, 0.6], 2).unwrap();
        assert!((eta - (0.5f64 * (2.0f64 / 0.4).sqrt()).max(0.9 * (2.0f64 / 0.6).sqrt())).abs() < 1e-15);
        assert!(eta_complexity(&cv(&[0.5, 0.5]), &[0.0, 1.0], 1).is_err());
    }

    #[test]
    fn complexity_bound_uniform() {
        let (n, c) = (100, 0.25);
        let a = cv(&vec![c; n]);
        let q = sample_complexity_bound(&a, 4.3).unwrap();
        assert_eq!(q.m_star, Some((4.3 * n as f64 * c * c).ceil() as usize));
        assert_eq!(q.wr_bound, q.m_star.unwrap() as u64);
        assert!(q.phi_monotone);
        let q = sample_complexity_bound(&a, 1e6).unwrap();
        assert_eq!(q.m_star, None);
        assert!(sample_complexity_bound(&a, 0.0).is_err());
    }

    #[test]
    fn profile_matches_pointwise() {
        let a = cv(&[0.1, 0.9, 0.3, 0.3, 0.05, 0.6]);
        let prof = l_sq_profile(&a);
        for m in 1..=6 {
            let w = optimized_bernoulli_weights(&a, m).unwrap();
            assert_eq!(prof[m - 1], w.l_sq());
        }
    }
}
