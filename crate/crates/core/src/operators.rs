//! Measurement operators `S D F`, additive noise and the unit truncation
//! operator.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::coherence::CoherenceVector;
use crate::error::{invalid, Error, Result};
use crate::sampling::SamplingPlan;
use crate::transform::{Field, UnitaryOperator, C64};
use crate::weights::WeightVector;

/// Realizes `S F` (or the preconditioned `S D F`) for one sampling plan.
/// Duplicated rows of with-replacement plans appear once per multiplicity.
#[derive(Debug, Clone, Copy)]
pub struct MeasurementOperator<'a> {
    pub f: &'a UnitaryOperator,
    pub plan: &'a SamplingPlan,
    pub apply_precond: bool,
}

impl<'a> MeasurementOperator<'a> {
    pub fn new(f: &'a UnitaryOperator, plan: &'a SamplingPlan, apply_precond: bool) -> Result<Self> {
        if f.n() != plan.n {
            return Err(Error::DimensionMismatch { expected: plan.n, got: f.n() });
        }
        if apply_precond && plan.precond.len() != plan.indices.len() {
            return invalid("plan carries no preconditioner");
        }
        Ok(Self { f, plan, apply_precond })
    }

    pub fn n(&self) -> usize {
        self.plan.n
    }

    pub fn rows(&self) -> usize {
        self.plan.rows()
    }

    /// Per-row `(index, scale)` with duplicates expanded.
    pub fn row_weights(&self) -> Vec<(usize, f64)> {
        let s = self.plan.row_scale();
        self.plan
            .expanded_rows()
            .into_iter()
            .map(|(i, d)| (i, if self.apply_precond { s * d } else { s }))
            .collect()
    }

    pub fn forward(&self, x: &[C64]) -> Result<Vec<C64>> {
        let y = self.f.apply(x)?;
        Ok(self.row_weights().into_iter().map(|(i, s)| y[i] * s).collect())
    }

    pub fn adjoint(&self, y: &[C64]) -> Result<Vec<C64>> {
        let rows = self.row_weights();
        if y.len() != rows.len() {
            return Err(Error::DimensionMismatch { expected: rows.len(), got: y.len() });
        }
        let mut z = vec![C64::new(0.0, 0.0); self.n()];
        for ((i, s), v) in rows.into_iter().zip(y) {
            z[i] += v * s;
        }
        self.f.apply_in_place(&mut z, true);
        Ok(z)
    }

    /// `D~ b` for measurements `b = S F x + eta`; identity without
    /// preconditioning.
    pub fn precondition(&self, b: &[C64]) -> Result<Vec<C64>> {
        let rows = self.plan.expanded_rows();
        if b.len() != rows.len() {
            return Err(Error::DimensionMismatch { expected: rows.len(), got: b.len() });
        }
        if !self.apply_precond {
            return Ok(b.to_vec());
        }
        Ok(rows.iter().zip(b).map(|((_, d), v)| v * *d).collect())
    }

    /// The same plan without preconditioning.
    pub fn unpreconditioned(&self) -> Self {
        Self { apply_precond: false, ..*self }
    }
}

/// Adds `eta = sigma g / sqrt(m)` with `g` standard normal (real and imaginary
/// parts independent in the complex case).
pub fn add_noise<R: Rng>(meas: &[C64], sigma: f64, m: usize, field: Field, rng: &mut R) -> Result<Vec<C64>> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return invalid(format!("sigma must be a nonnegative number, got {sigma}"));
    }
    if sigma == 0.0 {
        return Ok(meas.to_vec());
    }
    if m == 0 {
        return invalid("m must be positive");
    }
    let scale = sigma / (m as f64).sqrt();
    Ok(meas
        .iter()
        .map(|v| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = match field {
                Field::Real => 0.0,
                Field::Complex => rng.sample(StandardNormal),
            };
            v + C64::new(re, im) * scale
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    pub values: Vec<f64>,
    /// 1-based index of the boundary entry; `None` when `||v|| < 1`.
    pub boundary: Option<usize>,
}

impl Truncation {
    pub fn degenerate(&self) -> bool {
        self.boundary.is_none()
    }
}

/// Unit truncation: keep the shortest prefix whose norm reaches 1, shrink its
/// last entry so the result has unit norm, and zero the rest. Vectors of norm
/// below 1 pass through unchanged and are flagged.
///
/// A prefix counts as reaching 1 within `4 eps`, so exact unit prefixes such as
/// `(0.6, 0.8)` are not spoiled by rounding.
pub fn unit_truncate(v: &[f64]) -> Result<Truncation> {
    if let Some(x) = v.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
        return invalid(format!("truncation input must be nonnegative and finite, got {x}"));
    }
    let reach = 1.0 - 4.0 * f64::EPSILON;
    let mut prefix = 0.0;
    for (k, &x) in v.iter().enumerate() {
        let next = prefix + x * x;
        if next >= reach {
            let mut out = vec![0.0; v.len()];
            out[..k].copy_from_slice(&v[..k]);
            out[k] = (1.0 - prefix).max(0.0).sqrt().min(x);
            return Ok(Truncation { values: out, boundary: Some(k + 1) });
        }
        prefix = next;
    }
    Ok(Truncation { values: v.to_vec(), boundary: None })
}

/// `||D~ T(S D alpha)||_2` and the quantities bounding it.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseFactor {
    pub value: f64,
    /// `max(S d)`.
    pub max_sd: f64,
    /// `||S D^2 alpha||_2`.
    pub sd2_alpha: f64,
    /// `||(S D^2 alpha)|_[I]||_2` over the truncation prefix.
    pub sd2_alpha_prefix: f64,
    pub degenerate: bool,
}

fn noise_factor_rows(rows: &mut [(usize, f64)], alpha: &[f64], scale: f64) -> Result<NoiseFactor> {
    if rows.is_empty() {
        return Ok(NoiseFactor { value: 0.0, max_sd: 0.0, sd2_alpha: 0.0, sd2_alpha_prefix: 0.0, degenerate: true });
    }
    if let Some((i, _)) = rows.iter().find(|(i, _)| !(alpha[*i] > 0.0)) {
        return invalid(format!("coherence of selected row {i} is not positive"));
    }
    rows.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let sd_alpha: Vec<f64> = rows.iter().map(|&(i, d)| scale * d * alpha[i]).collect();
    let t = unit_truncate(&sd_alpha)?;
    let value = rows.iter().zip(&t.values).map(|(&(_, d), ti)| (d * ti).powi(2)).sum::<f64>().sqrt();
    let sd2: Vec<f64> = rows.iter().map(|&(i, d)| scale * d * d * alpha[i]).collect();
    let cut = t.boundary.unwrap_or(sd2.len());
    Ok(NoiseFactor {
        value,
        max_sd: scale * rows[0].1,
        sd2_alpha: sd2.iter().map(|x| x * x).sum::<f64>().sqrt(),
        sd2_alpha_prefix: sd2[..cut].iter().map(|x| x * x).sum::<f64>().sqrt(),
        degenerate: t.degenerate(),
    })
}

/// Noise factor of a Bernoulli plan with `d_i = sqrt(m / (n w_i))`, selected
/// rows sorted so that `S d` is decreasing (ties by index).
pub fn noise_factor(plan: &SamplingPlan, alpha: &CoherenceVector, w: &WeightVector) -> Result<NoiseFactor> {
    if alpha.len() != plan.n {
        return Err(Error::DimensionMismatch { expected: plan.n, got: alpha.len() });
    }
    if w.len() != plan.n {
        return Err(Error::DimensionMismatch { expected: plan.n, got: w.len() });
    }
    let (n, m) = (plan.n as f64, plan.m as f64);
    let mut rows: Vec<(usize, f64)> = plan
        .expanded_rows()
        .into_iter()
        .map(|(i, _)| (i, (m / (n * w.values()[i])).sqrt()))
        .collect();
    noise_factor_rows(&mut rows, alpha.values(), plan.row_scale())
}

/// Same quantity using the preconditioner stored on the plan, for schemes
/// without Bernoulli weights.
pub fn plan_noise_factor(plan: &SamplingPlan, alpha: &CoherenceVector) -> Result<NoiseFactor> {
    if alpha.len() != plan.n {
        return Err(Error::DimensionMismatch { expected: plan.n, got: alpha.len() });
    }
    if plan.precond.len() != plan.indices.len() {
        return invalid("plan carries no preconditioner");
    }
    let mut rows = plan.expanded_rows();
    noise_factor_rows(&mut rows, alpha.values(), plan.row_scale())
}
