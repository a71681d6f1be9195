//! Unitary transforms: identity, unitary DFT (1-D and channel-wise 2-D),
//! orthonormal multilevel Haar (1-D and channel-wise 2-D) and dense matrices.
//!
//! All vectors are stored as `Complex64`; real transforms act on the real and
//! imaginary parts independently.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Result};

pub type C64 = Complex64;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

#[derive(Clone)]
struct FftPair {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl FftPair {
    fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            fwd: planner.plan_fft_forward(len),
            inv: planner.plan_fft_inverse(len),
        }
    }
}

#[derive(Clone)]
enum Kind {
    Identity,
    Dft1d(FftPair),
    Dft2d {
        rows: usize,
        cols: usize,
        channels: usize,
        row_fft: FftPair,
        col_fft: FftPair,
    },
    Haar1d {
        levels: usize,
    },
    Haar2d {
        rows: usize,
        cols: usize,
        channels: usize,
        levels: usize,
    },
    Dense(DMatrix<C64>),
}

/// A unitary `n x n` matrix applied matrix-free where possible.
#[derive(Clone)]
pub struct UnitaryOperator {
    kind: Kind,
    n: usize,
    field: Field,
}

impl fmt::Debug for UnitaryOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UnitaryOperator")
            .field("kind", &self.name())
            .field("n", &self.n)
            .field("field", &self.field)
            .finish()
    }
}

impl UnitaryOperator {
    pub fn identity(n: usize) -> Result<Self> {
        if n == 0 {
            return invalid("dimension must be positive");
        }
        Ok(Self { kind: Kind::Identity, n, field: Field::Real })
    }

    /// Unitary DFT with entries `exp(-2 pi i jk/n) / sqrt(n)`.
    pub fn dft1d(n: usize) -> Result<Self> {
        if n == 0 {
            return invalid("dimension must be positive");
        }
        Ok(Self { kind: Kind::Dft1d(FftPair::new(n)), n, field: Field::Complex })
    }

    /// 2-D unitary DFT applied independently on each channel of a
    /// channel-major `channels x rows x cols` array.
    pub fn dft2d(rows: usize, cols: usize, channels: usize) -> Result<Self> {
        if rows == 0 || cols == 0 || channels == 0 {
            return invalid("dimensions must be positive");
        }
        Ok(Self {
            kind: Kind::Dft2d {
                rows,
                cols,
                channels,
                row_fft: FftPair::new(cols),
                col_fft: FftPair::new(rows),
            },
            n: rows * cols * channels,
            field: Field::Complex,
        })
    }

    /// Orthonormal Haar analysis with `levels` dyadic levels. Coefficients are
    /// laid out `[approx | detail_L | ... | detail_1]`.
    pub fn haar1d(n: usize, levels: usize) -> Result<Self> {
        if n == 0 || levels == 0 {
            return invalid("dimension and levels must be positive");
        }
        if !n.is_multiple_of(1 << levels) {
            return invalid(format!("n = {n} is not divisible by 2^{levels}"));
        }
        Ok(Self { kind: Kind::Haar1d { levels }, n, field: Field::Real })
    }

    /// Separable orthonormal Haar analysis on each channel of a channel-major
    /// image, recursing on the low-low block.
    pub fn haar2d(rows: usize, cols: usize, channels: usize, levels: usize) -> Result<Self> {
        if rows == 0 || cols == 0 || channels == 0 || levels == 0 {
            return invalid("dimensions and levels must be positive");
        }
        let block = 1 << levels;
        if !rows.is_multiple_of(block) || !cols.is_multiple_of(block) {
            return invalid(format!("{rows}x{cols} image is not divisible by 2^{levels}"));
        }
        Ok(Self {
            kind: Kind::Haar2d { rows, cols, channels, levels },
            n: rows * cols * channels,
            field: Field::Real,
        })
    }

    /// Wraps an explicit matrix after checking `U* U = I` to 1e-10.
    pub fn dense(matrix: DMatrix<C64>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || matrix.ncols() != n {
            return invalid("dense operator must be square and nonempty");
        }
        let gram = matrix.adjoint() * &matrix;
        let dev = (gram - DMatrix::<C64>::identity(n, n))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if dev > 1e-10 {
            return invalid(format!("matrix is not unitary (Gram deviation {dev:.3e})"));
        }
        let field = if matrix.iter().all(|z| z.im == 0.0) { Field::Real } else { Field::Complex };
        Ok(Self { kind: Kind::Dense(matrix), n, field })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            Kind::Identity => "identity",
            Kind::Dft1d(_) => "dft1d",
            Kind::Dft2d { .. } => "dft2d",
            Kind::Haar1d { .. } => "haar1d",
            Kind::Haar2d { .. } => "haar2d",
            Kind::Dense(_) => "dense",
        }
    }

    /// `F x`.
    pub fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        check_len(self.n, x.len())?;
        let mut v = x.to_vec();
        self.apply_in_place(&mut v, false);
        Ok(v)
    }

    /// `F* y`.
    pub fn adjoint(&self, y: &[C64]) -> Result<Vec<C64>> {
        check_len(self.n, y.len())?;
        let mut v = y.to_vec();
        self.apply_in_place(&mut v, true);
        Ok(v)
    }

    /// Applies `F` (or `F*`) to a buffer of length `n`.
    pub fn apply_in_place(&self, v: &mut [C64], adjoint: bool) {
        debug_assert_eq!(v.len(), self.n);
        match &self.kind {
            Kind::Identity => {}
            Kind::Dft1d(pair) => {
                let plan = if adjoint { &pair.inv } else { &pair.fwd };
                plan.process(v);
                let s = 1.0 / (self.n as f64).sqrt();
                v.iter_mut().for_each(|z| *z *= s);
            }
            Kind::Dft2d { rows, cols, channels, row_fft, col_fft } => {
                dft2d_in_place(v, *rows, *cols, *channels, row_fft, col_fft, adjoint)
            }
            Kind::Haar1d { levels } => {
                if adjoint {
                    haar1d_inverse(v, *levels)
                } else {
                    haar1d_forward(v, *levels)
                }
            }
            Kind::Haar2d { rows, cols, channels, levels } => {
                for ch in v.chunks_mut(rows * cols).take(*channels) {
                    if adjoint {
                        haar2d_inverse(ch, *rows, *cols, *levels)
                    } else {
                        haar2d_forward(ch, *rows, *cols, *levels)
                    }
                }
            }
            Kind::Dense(m) => {
                let x = nalgebra::DVector::from_column_slice(v);
                let y = if adjoint { m.adjoint() * x } else { m * x };
                v.copy_from_slice(y.as_slice());
            }
        }
    }

    /// The measurement vector `f_j`: the conjugate transpose of row `j`,
    /// computed as `F* e_j`.
    pub fn row(&self, j: usize) -> Result<Vec<C64>> {
        if j >= self.n {
            return invalid(format!("row {j} out of range for n = {}", self.n));
        }
        let mut e = vec![C64::new(0.0, 0.0); self.n];
        e[j] = C64::new(1.0, 0.0);
        self.apply_in_place(&mut e, true);
        Ok(e)
    }

    /// Coefficient indices of one atom per translation class of a Haar
    /// analysis operator: the approximation block and every detail block,
    /// per channel. `None` for non-Haar operators.
    pub fn haar_block_representatives(&self) -> Option<Vec<usize>> {
        match self.kind {
            Kind::Haar1d { levels } => {
                let mut idx = vec![0];
                let mut start = self.n >> levels;
                for _ in 0..levels {
                    idx.push(start);
                    start *= 2;
                }
                Some(idx)
            }
            Kind::Haar2d { rows, cols, channels, levels } => {
                let mut idx = Vec::new();
                for ch in 0..channels {
                    let off = ch * rows * cols;
                    idx.push(off);
                    for l in 1..=levels {
                        let (h, w) = (rows >> l, cols >> l);
                        idx.push(off + w);
                        idx.push(off + h * cols);
                        idx.push(off + h * cols + w);
                    }
                }
                Some(idx)
            }
            _ => None,
        }
    }

    /// True when `|(F x)_j|` is invariant under circular translations of `x`
    /// within each channel, and the channel/shape layout matches `other`.
    pub fn translation_invariant_for(&self, other: &UnitaryOperator) -> bool {
        match (&self.kind, &other.kind) {
            (Kind::Dft1d(_), Kind::Haar1d { .. }) => self.n == other.n,
            (
                Kind::Dft2d { rows, cols, channels, .. },
                Kind::Haar2d { rows: r, cols: c, channels: ch, .. },
            ) => rows == r && cols == c && channels == ch,
            _ => false,
        }
    }

    /// Explicit matrix; only sensible for small `n`.
    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::<C64>::zeros(self.n, self.n);
        let mut e = vec![C64::new(0.0, 0.0); self.n];
        for j in 0..self.n {
            e.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            e[j] = C64::new(1.0, 0.0);
            self.apply_in_place(&mut e, false);
            m.column_mut(j).copy_from_slice(&e);
        }
        m
    }
}

fn dft2d_in_place(
    v: &mut [C64],
    rows: usize,
    cols: usize,
    channels: usize,
    row_fft: &FftPair,
    col_fft: &FftPair,
    adjoint: bool,
) {
    let (rp, cp) = if adjoint { (&row_fft.inv, &col_fft.inv) } else { (&row_fft.fwd, &col_fft.fwd) };
    let s = 1.0 / ((rows * cols) as f64).sqrt();
    let mut column = vec![C64::new(0.0, 0.0); rows];
    for ch in v.chunks_mut(rows * cols).take(channels) {
        rp.process(ch);
        for c in 0..cols {
            for r in 0..rows {
                column[r] = ch[r * cols + c];
            }
            cp.process(&mut column);
            for r in 0..rows {
                ch[r * cols + c] = column[r] * s;
            }
        }
    }
}

fn haar_step(v: &mut [C64], len: usize, stride: usize, tmp: &mut Vec<C64>) {
    let half = len / 2;
    tmp.clear();
    tmp.resize(len, C64::new(0.0, 0.0));
    for i in 0..half {
        let a = v[2 * i * stride];
        let b = v[(2 * i + 1) * stride];
        tmp[i] = (a + b) * FRAC_1_SQRT_2;
        tmp[half + i] = (a - b) * FRAC_1_SQRT_2;
    }
    for i in 0..len {
        v[i * stride] = tmp[i];
    }
}

fn haar_step_inv(v: &mut [C64], len: usize, stride: usize, tmp: &mut Vec<C64>) {
    let half = len / 2;
    tmp.clear();
    tmp.resize(len, C64::new(0.0, 0.0));
    for i in 0..half {
        let a = v[i * stride];
        let d = v[(half + i) * stride];
        tmp[2 * i] = (a + d) * FRAC_1_SQRT_2;
        tmp[2 * i + 1] = (a - d) * FRAC_1_SQRT_2;
    }
    for i in 0..len {
        v[i * stride] = tmp[i];
    }
}

fn haar1d_forward(v: &mut [C64], levels: usize) {
    let mut tmp = Vec::with_capacity(v.len());
    let mut len = v.len();
    for _ in 0..levels {
        haar_step(v, len, 1, &mut tmp);
        len /= 2;
    }
}

fn haar1d_inverse(v: &mut [C64], levels: usize) {
    let mut tmp = Vec::with_capacity(v.len());
    let mut len = v.len() >> (levels - 1);
    for _ in 0..levels {
        haar_step_inv(v, len, 1, &mut tmp);
        len *= 2;
    }
}

fn haar2d_forward(v: &mut [C64], rows: usize, cols: usize, levels: usize) {
    let mut tmp = Vec::with_capacity(rows.max(cols));
    let (mut h, mut w) = (rows, cols);
    for _ in 0..levels {
        for r in 0..h {
            haar_step(&mut v[r * cols..], w, 1, &mut tmp);
        }
        for c in 0..w {
            haar_step(&mut v[c..], h, cols, &mut tmp);
        }
        h /= 2;
        w /= 2;
    }
}

fn haar2d_inverse(v: &mut [C64], rows: usize, cols: usize, levels: usize) {
    let mut tmp = Vec::with_capacity(rows.max(cols));
    let (mut h, mut w) = (rows >> (levels - 1), cols >> (levels - 1));
    for _ in 0..levels {
        for c in 0..w {
            haar_step_inv(&mut v[c..], h, cols, &mut tmp);
        }
        for r in 0..h {
            haar_step_inv(&mut v[r * cols..], w, 1, &mut tmp);
        }
        h *= 2;
        w *= 2;
    }
}

pub fn real_vec(x: &[f64]) -> Vec<C64> {
    x.iter().map(|&r| C64::new(r, 0.0)).collect()
}

pub fn norm2(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `<u, v> = u* v`.
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}
