//! Local coherence vectors of a unitary matrix with respect to a prior.
//!
//! For a subspace with orthonormal basis `B` the supremum of `|f_j* x|` over
//! unit vectors of the subspace is `||B* f_j||_2`, so the exact computation is
//! a row-norm of `F B` (a 2x2 eigenvalue per row for real priors). The dictionary and sample variants are maxima of
//! `|(F phi)_j|` over a finite set of unit directions.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Result};
use crate::rng::{stream_id, RngStream};
use crate::subspace::UnionOfSubspaces;
use crate::transform::{norm2, Field, UnitaryOperator, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoherenceSource {
    ExactSubspaces,
    DictionaryHeuristic,
    SampleBased,
    External,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceVector {
    alpha: Vec<f64>,
    source: CoherenceSource,
}

impl CoherenceVector {
    pub fn new(alpha: Vec<f64>, source: CoherenceSource) -> Result<Self> {
        if alpha.is_empty() {
            return invalid("coherence vector is empty");
        }
        if let Some(a) = alpha.iter().find(|a| !a.is_finite() || **a < 0.0) {
            return invalid(format!("coherence entries must be finite and nonnegative, found {a}"));
        }
        if !alpha.iter().any(|&a| a > 0.0) {
            return invalid("coherence vector has no positive entry");
        }
        Ok(Self { alpha, source })
    }

    pub fn values(&self) -> &[f64] {
        &self.alpha
    }

    pub fn source(&self) -> CoherenceSource {
        self.source
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn norm_sq(&self) -> f64 {
        self.alpha.iter().map(|a| a * a).sum()
    }

    pub fn positive_count(&self) -> usize {
        self.alpha.iter().filter(|&&a| a > 0.0).count()
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self { alpha: perm.iter().map(|&i| self.alpha[i]).collect(), source: self.source }
    }
}

fn max_modulus_rows(f: &UnitaryOperator, dirs: &[Vec<C64>]) -> Vec<f64> {
    let n = f.n();
    dirs.par_iter()
        .map(|d| {
            let mut v = d.clone();
            f.apply_in_place(&mut v, false);
            v.iter().map(|z| z.norm()).collect::<Vec<f64>>()
        })
        .reduce(
            || vec![0.0; n],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x = x.max(y));
                a
            },
        )
}

/// `alpha_j = max_U max_{x in U, ||x|| = 1} |<f_j, x>|`: the norm of row `j`
/// of `F B_U` for complex priors. For real priors `x = B_U c` with real `c`,
/// giving the top eigenvalue of the 2x2 Gram matrix of the row's real and
/// imaginary parts.
pub fn coherence_exact(f: &UnitaryOperator, prior: &UnionOfSubspaces) -> Result<CoherenceVector> {
    check_len(f.n(), prior.n())?;
    let n = f.n();
    let real = prior.field() == Field::Real;
    let per_basis: Vec<Vec<f64>> = prior
        .bases()
        .par_iter()
        .map(|b| {
            // Per row: ||Re v||^2, ||Im v||^2, <Re v, Im v>.
            let mut acc = vec![[0.0f64; 3]; n];
            for col in b.column_iter() {
                let mut v: Vec<C64> = col.iter().copied().collect();
                f.apply_in_place(&mut v, false);
                for (a, z) in acc.iter_mut().zip(&v) {
                    a[0] += z.re * z.re;
                    a[1] += z.im * z.im;
                    a[2] += z.re * z.im;
                }
            }
            acc.into_iter()
                .map(|[rr, ii, ri]| {
                    if real {
                        let half = 0.5 * (rr - ii);
                        0.5 * (rr + ii) + (half * half + ri * ri).sqrt()
                    } else {
                        rr + ii
                    }
                })
                .collect()
        })
        .collect();
    let alpha = (0..n)
        .map(|j| per_basis.iter().map(|sq| sq[j]).fold(0.0, f64::max).sqrt())
        .collect();
    CoherenceVector::new(alpha, CoherenceSource::ExactSubspaces)
}

/// `alpha_j = max_phi |<f_j, phi>|` over unit-norm atoms.
pub fn coherence_dictionary(f: &UnitaryOperator, atoms: &[Vec<C64>]) -> Result<CoherenceVector> {
    if atoms.is_empty() {
        return invalid("atom list is empty");
    }
    for (i, a) in atoms.iter().enumerate() {
        check_len(f.n(), a.len())?;
        let nrm = norm2(a);
        if (nrm - 1.0).abs() > 1e-8 {
            return invalid(format!("atom {i} has norm {nrm}, expected 1"));
        }
    }
    CoherenceVector::new(max_modulus_rows(f, atoms), CoherenceSource::DictionaryHeuristic)
}

/// Dictionary coherence against all atoms of a Haar basis, evaluated on one
/// atom per translation class. Valid only when `F` has translation-invariant
/// row moduli on the Haar layout (a DFT of matching shape).
pub fn coherence_haar_dictionary(f: &UnitaryOperator, haar: &UnitaryOperator) -> Result<CoherenceVector> {
    let Some(reps) = haar.haar_block_representatives() else {
        return invalid("second operator is not a Haar transform");
    };
    if !f.translation_invariant_for(haar) {
        return invalid(format!(
            "representative atoms require a DFT matching the Haar layout, got {}",
            f.name()
        ));
    }
    let atoms: Vec<Vec<C64>> = reps.into_iter().map(|j| haar.row(j)).collect::<Result<_>>()?;
    coherence_dictionary(f, &atoms)
}

/// Above this many samples, pairwise differences are replaced by differences
/// to the mean plus `10 x count` random pairs.
pub const ALL_PAIRS_LIMIT: usize = 64;

/// Coherence against normalized differences of sample vectors.
pub fn coherence_samples(f: &UnitaryOperator, samples: &[Vec<C64>]) -> Result<CoherenceVector> {
    if samples.len() < 2 {
        return invalid("sample-based coherence needs at least two samples");
    }
    for s in samples {
        check_len(f.n(), s.len())?;
    }
    let count = samples.len();
    let scale = samples.iter().map(|s| norm2(s)).fold(0.0, f64::max);
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);

    let mut dirs = Vec::new();
    let mut push_diff = |a: &[C64], b: &[C64]| {
        let d: Vec<C64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        let nrm = norm2(&d);
        if nrm > tol {
            dirs.push(d.into_iter().map(|z| z / nrm).collect::<Vec<_>>());
        }
    };

    if count <= ALL_PAIRS_LIMIT {
        for i in 0..count {
            for j in i + 1..count {
                push_diff(&samples[i], &samples[j]);
            }
        }
    } else {
        let n = f.n();
        let mut mean = vec![C64::new(0.0, 0.0); n];
        for s in samples {
            mean.iter_mut().zip(s).for_each(|(m, x)| *m += x);
        }
        mean.iter_mut().for_each(|m| *m /= count as f64);
        for s in samples {
            push_diff(s, &mean);
        }
        let mut rng = RngStream::new(0, stream_id("coherence-samples", &[count as u64])).rng();
        for _ in 0..10 * count {
            let i = rng.random_range(0..count);
            let j = rng.random_range(0..count);
            if i != j {
                push_diff(&samples[i], &samples[j]);
            }
        }
    }

    if dirs.is_empty() {
        return invalid("all samples are identical; no nonzero difference");
    }
    CoherenceVector::new(max_modulus_rows(f, &dirs), CoherenceSource::SampleBased)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subspace::{coordinate_subspace, random_subspace, toy_prior};
    use crate::transform::{real_vec, Field};
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn e(n: usize, i: usize) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); n];
        v[i] = C64::new(1.0, 0.0);
        v
    }

    #[test]
    fn exact_coordinate_axis() {
        let f = UnitaryOperator::identity(3).unwrap();
        let t = UnionOfSubspaces::new(vec![coordinate_subspace(3, &[0]).unwrap()]).unwrap();
        assert_eq!(coherence_exact(&f, &t).unwrap().values(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn exact_toy_prior() {
        let (n, k) = (50, 6);
        let f = UnitaryOperator::identity(n).unwrap();
        let a = coherence_exact(&f, &toy_prior(n, k).unwrap()).unwrap();
        let c = ((k - 1) as f64 / (n - 1) as f64).sqrt();
        assert!((a.values()[0] - 1.0).abs() < 1e-12);
        assert!(a.values()[1..].iter().all(|x| (x - c).abs() < 1e-12));
    }

    #[test]
    fn exact_matches_monte_carlo_sup() {
        for field in [Field::Complex, Field::Real] {
            mc_check(field);
        }
    }

    fn mc_check(field: Field) {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 6;
        let b = random_subspace(n, 2, field, &mut rng).unwrap();
        let fm = random_subspace(n, n, Field::Complex, &mut rng).unwrap();
        let f = UnitaryOperator::dense(fm.clone()).unwrap();
        let t = UnionOfSubspaces::new(vec![b.clone()]).unwrap();
        let alpha = coherence_exact(&f, &t).unwrap();
        let mut best = vec![0.0f64; n];
        for _ in 0..100_000 {
            let c = nalgebra::DVector::<C64>::from_fn(2, |_, _| match field {
                Field::Complex => C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)),
                Field::Real => C64::new(rng.sample(StandardNormal), 0.0),
            });
            let x = &b * c.normalize();
            let y = &fm * x;
            for (b, v) in best.iter_mut().zip(y.iter()) {
                *b = b.max(v.norm());
            }
        }
        for (j, (&got, &want)) in best.iter().zip(alpha.values()).enumerate() {
            assert!(got <= want + 1e-12);
            assert!(want - got < 1e-3, "{field:?} row {j}: {want} vs {got}");
        }
    }

    #[test]
    fn exact_is_basis_invariant_and_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 16;
        let f = UnitaryOperator::dft1d(n).unwrap();
        for field in [Field::Real, Field::Complex] {
            let b = random_subspace(n, 3, field, &mut rng).unwrap();
            let rot = random_subspace(3, 3, field, &mut rng).unwrap();
            let a1 = coherence_exact(&f, &UnionOfSubspaces::new(vec![b.clone()]).unwrap()).unwrap();
            let a2 = coherence_exact(&f, &UnionOfSubspaces::new(vec![&b * rot]).unwrap()).unwrap();
            for (x, y) in a1.values().iter().zip(a2.values()) {
                assert!((x - y).abs() < 1e-10);
            }
        }
        let b = random_subspace(n, 3, Field::Real, &mut rng).unwrap();
        let t1 = UnionOfSubspaces::new(vec![b.clone()]).unwrap();
        let a1 = coherence_exact(&f, &t1).unwrap();
        let mut t3 = t1.clone();
        t3.push(random_subspace(n, 2, Field::Real, &mut rng).unwrap()).unwrap();
        let a3 = coherence_exact(&f, &t3).unwrap();
        for (x, y) in a1.values().iter().zip(a3.values()) {
            assert!(y >= x);
            assert!(*y <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn exact_dimension_mismatch() {
        let f = UnitaryOperator::identity(4).unwrap();
        let t = UnionOfSubspaces::new(vec![coordinate_subspace(3, &[0]).unwrap()]).unwrap();
        assert!(coherence_exact(&f, &t).is_err());
    }

    #[test]
    fn dictionary_examples() {
        let f = UnitaryOperator::identity(4).unwrap();
        let atoms: Vec<_> = (0..4).map(|i| e(4, i)).collect();
        assert_eq!(coherence_dictionary(&f, &atoms).unwrap().values(), &[1.0; 4]);

        let f = UnitaryOperator::dft1d(4).unwrap();
        let a = coherence_dictionary(&f, &[e(4, 0)]).unwrap();
        assert!(a.values().iter().all(|x| (x - 0.5).abs() < 1e-14));

        assert!(coherence_dictionary(&f, &[]).is_err());
        assert!(coherence_dictionary(&f, &[real_vec(&[1.0, 1.0, 0.0, 0.0])]).is_err());
    }

    #[test]
    fn haar_representatives_match_all_atoms() {
        let f = UnitaryOperator::dft1d(1024).unwrap();
        let haar = UnitaryOperator::haar1d(1024, 3).unwrap();
        let atoms = crate::subspace::transform_atoms(&haar);
        let full = coherence_dictionary(&f, &atoms).unwrap();
        let fast = coherence_haar_dictionary(&f, &haar).unwrap();
        for (x, y) in full.values().iter().zip(fast.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn haar2d_representatives_match_all_atoms() {
        let f = UnitaryOperator::dft2d(16, 8, 2).unwrap();
        let haar = UnitaryOperator::haar2d(16, 8, 2, 3).unwrap();
        let atoms = crate::subspace::transform_atoms(&haar);
        let full = coherence_dictionary(&f, &atoms).unwrap();
        let fast = coherence_haar_dictionary(&f, &haar).unwrap();
        for (x, y) in full.values().iter().zip(fast.values()) {
            assert!((x - y).abs() < 1e-12);
        }
        let id = UnitaryOperator::identity(256).unwrap();
        assert!(coherence_haar_dictionary(&id, &haar).is_err());
    }

    #[test]
    fn sample_examples() {
        let f = UnitaryOperator::identity(5).unwrap();
        let a = coherence_samples(&f, &[vec![C64::new(0.0, 0.0); 5], e(5, 0)]).unwrap();
        assert_eq!(a.values(), &[1.0, 0.0, 0.0, 0.0, 0.0]);

        let a = coherence_samples(&f, &[e(5, 0), e(5, 1), e(5, 2)]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (x, y) in a.values().iter().zip([h, h, h, 0.0, 0.0]) {
            assert!((x - y).abs() < 1e-15);
        }

        assert!(coherence_samples(&f, &[e(5, 0), e(5, 0)]).is_err());
        assert!(coherence_samples(&f, &[e(5, 0)]).is_err());
    }

    #[test]
    fn samples_dominated_by_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 32;
        let f = UnitaryOperator::dft1d(n).unwrap();
        let b = random_subspace(n, 3, Field::Real, &mut rng).unwrap();
        let exact = coherence_exact(&f, &UnionOfSubspaces::new(vec![b.clone()]).unwrap()).unwrap();
        for count in [50, 80] {
            let samples: Vec<Vec<C64>> = (0..count)
                .map(|_| {
                    let c = DMatrix::<C64>::from_fn(3, 1, |_, _| C64::new(rng.sample(StandardNormal), 0.0));
                    (&b * c).column(0).iter().copied().collect()
                })
                .collect();
            let s = coherence_samples(&f, &samples).unwrap();
            for (x, y) in s.values().iter().zip(exact.values()) {
                assert!(*x <= y + 1e-10);
            }
        }
    }
}
