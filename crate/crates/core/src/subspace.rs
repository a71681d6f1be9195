//! Union-of-subspaces priors.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::transform::{Field, UnitaryOperator, C64};

/// Prior cone given as `M` orthonormal bases of dimension at most `ell`.
/// The cone is real when every basis is real; its elements are then the
/// real combinations of the basis columns.
#[derive(Debug, Clone)]
pub struct UnionOfSubspaces {
    bases: Vec<DMatrix<C64>>,
    n: usize,
    ell: usize,
    field: Field,
}

const GRAM_TOL: f64 = 1e-10;

impl UnionOfSubspaces {
    /// Validates that each basis is `n x l` with `B* B = I`.
    pub fn new(bases: Vec<DMatrix<C64>>) -> Result<Self> {
        let Some(first) = bases.first() else {
            return invalid("a union of subspaces needs at least one basis");
        };
        let n = first.nrows();
        let mut ell = 0;
        for (u, b) in bases.iter().enumerate() {
            if b.nrows() != n {
                return invalid(format!("basis {u} has {} rows, expected {n}", b.nrows()));
            }
            if b.ncols() == 0 || b.ncols() > n {
                return invalid(format!("basis {u} has dimension {} outside [1, {n}]", b.ncols()));
            }
            let dev = gram_deviation(b);
            if dev >= GRAM_TOL {
                return invalid(format!("basis {u} is not orthonormal (Gram deviation {dev:.3e})"));
            }
            ell = ell.max(b.ncols());
        }
        let field = if bases.iter().all(|b| b.iter().all(|z| z.im == 0.0)) { Field::Real } else { Field::Complex };
        Ok(Self { bases, n, ell, field })
    }

    /// Orthonormalizes each list of spanning columns before validation.
    pub fn from_spanning(spans: Vec<DMatrix<C64>>) -> Result<Self> {
        let bases = spans.into_iter().map(orthonormalize).collect::<Result<Vec<_>>>()?;
        Self::new(bases)
    }

    pub fn bases(&self) -> &[DMatrix<C64>] {
        &self.bases
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn count(&self) -> usize {
        self.bases.len()
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn push(&mut self, basis: DMatrix<C64>) -> Result<()> {
        let mut all = std::mem::take(&mut self.bases);
        all.push(basis);
        *self = Self::new(all)?;
        Ok(())
    }
}

pub fn gram_deviation(b: &DMatrix<C64>) -> f64 {
    let g = b.adjoint() * b;
    (g - DMatrix::<C64>::identity(b.ncols(), b.ncols()))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Thin QR orthonormalization; fails on rank-deficient spans.
pub fn orthonormalize(span: DMatrix<C64>) -> Result<DMatrix<C64>> {
    let cols = span.ncols();
    if cols == 0 || cols > span.nrows() {
        return invalid("span must have between 1 and n columns");
    }
    let qr = span.qr();
    let r = qr.r();
    let scale = r.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for i in 0..cols {
        if r[(i, i)].norm() <= 1e-12 * scale.max(1.0) {
            return invalid("spanning set is rank deficient");
        }
    }
    Ok(qr.q())
}

/// Orthonormal basis of a uniformly random `dim`-dimensional subspace.
pub fn random_subspace<R: Rng>(n: usize, dim: usize, field: Field, rng: &mut R) -> Result<DMatrix<C64>> {
    let span = DMatrix::<C64>::from_fn(n, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = match field {
            Field::Real => 0.0,
            Field::Complex => rng.sample(StandardNormal),
        };
        C64::new(re, im)
    });
    orthonormalize(span)
}

/// Coordinate subspace spanned by `e_i`, `i` in `coords`.
pub fn coordinate_subspace(n: usize, coords: &[usize]) -> Result<DMatrix<C64>> {
    let mut b = DMatrix::<C64>::zeros(n, coords.len());
    for (c, &i) in coords.iter().enumerate() {
        if i >= n {
            return invalid(format!("coordinate {i} out of range"));
        }
        b[(i, c)] = C64::new(1.0, 0.0);
    }
    orthonormalize(b)
}

/// The toy prior: `span{e_1}` together with the span of the first `k - 1`
/// columns of an `(n-1)`-point unitary DFT, padded with a zero first row.
///
/// Every row of the padded block has norm `sqrt((k-1)/(n-1))`, and any
/// `k - 1` of its rows form a nonsingular Vandermonde matrix.
pub fn toy_prior(n: usize, k: usize) -> Result<UnionOfSubspaces> {
    if k < 2 || k > n {
        return invalid(format!("toy prior needs 2 <= k <= n (k = {k}, n = {n})"));
    }
    let e1 = coordinate_subspace(n, &[0])?;
    let dim = n - 1;
    let s = 1.0 / (dim as f64).sqrt();
    let u = DMatrix::<C64>::from_fn(n, k - 1, |i, j| {
        if i == 0 {
            C64::new(0.0, 0.0)
        } else {
            let phase = -2.0 * std::f64::consts::PI * ((i - 1) * j % dim) as f64 / dim as f64;
            C64::from_polar(s, phase)
        }
    });
    UnionOfSubspaces::new(vec![e1, u])
}

/// All synthesis atoms `Psi e_j` of an orthonormal transform `Psi*`.
pub fn transform_atoms(analysis: &UnitaryOperator) -> Vec<Vec<C64>> {
    (0..analysis.n()).map(|j| analysis.row(j).expect("index in range")).collect()
}
