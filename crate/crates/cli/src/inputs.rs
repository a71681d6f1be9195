//! Parsing of command-line values and input files.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::ValueEnum;
use nalgebra::DMatrix;
use serde::Deserialize;

use vdcs::analysis::RIP_THRESHOLD;
use vdcs::io::read_column;
use vdcs::rng::stream_id;
use vdcs::sampling::Scheme;
use vdcs::subspace::{random_subspace, toy_prior};
use vdcs::{Field, RngStream, UnionOfSubspaces, UnitaryOperator, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformKind {
    Dft1d,
    Dft2d,
    Haar,
    Identity,
}

impl TransformKind {
    /// 1-D operator of length `n`.
    pub fn operator(self, n: usize, levels: usize) -> Result<UnitaryOperator> {
        Ok(match self {
            TransformKind::Dft1d => UnitaryOperator::dft1d(n)?,
            TransformKind::Identity => UnitaryOperator::identity(n)?,
            TransformKind::Haar => UnitaryOperator::haar1d(n, levels)?,
            TransformKind::Dft2d => bail!("dft2d is not available here; use dft1d, haar or identity"),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub rows: usize,
    pub cols: usize,
    pub channels: usize,
}

impl Shape {
    pub fn len(&self) -> usize {
        self.rows * self.cols * self.channels
    }
}

impl FromStr for Shape {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let dims: Vec<usize> = s
            .split('x')
            .map(|d| d.trim().parse().map_err(|_| format!("bad dimension {d:?} in shape {s:?}")))
            .collect::<std::result::Result<_, _>>()?;
        match dims[..] {
            [rows, cols] => Ok(Shape { rows, cols, channels: 1 }),
            [rows, cols, channels] => Ok(Shape { rows, cols, channels }),
            _ => Err(format!("shape must be ROWSxCOLS or ROWSxCOLSxCHANNELS, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PriorArg {
    Subspaces(PathBuf),
    Atoms(PathBuf),
    Samples(PathBuf),
    Haar,
}

impl FromStr for PriorArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "haar" {
            return Ok(PriorArg::Haar);
        }
        match s.split_once(':') {
            Some(("subspaces", p)) => Ok(PriorArg::Subspaces(p.into())),
            Some(("atoms", p)) => Ok(PriorArg::Atoms(p.into())),
            Some(("samples", p)) => Ok(PriorArg::Samples(p.into())),
            _ => Err(format!("expected subspaces:FILE, atoms:FILE, samples:FILE or haar, got {s:?}")),
        }
    }
}

/// Column `name` of a headed CSV, or the only column of a headerless one.
pub fn read_named_or_single(path: &Path, name: &str) -> Result<Vec<f64>> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_column(file, name).with_context(|| format!("reading {}", path.display()))
}

/// Column `name` only if the header names it.
pub fn read_named(path: &Path, name: &str) -> Result<Option<Vec<f64>>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap_or("");
    if !header.split(',').any(|h| h.trim() == name) {
        return Ok(None);
    }
    Ok(Some(read_column(text.as_bytes(), name)?))
}

/// One vector per CSV row: `n` reals, or `2n` numbers `re_1..re_n, im_1..im_n`.
pub fn read_rows(path: &Path, field: Field) -> Result<Vec<Vec<C64>>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (r, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| anyhow!("{}:{}: {e}", path.display(), r + 1))?;
        let v = match field {
            Field::Real => vals.iter().map(|&x| C64::new(x, 0.0)).collect(),
            Field::Complex => {
                if !vals.len().is_multiple_of(2) {
                    bail!("{}:{}: complex rows need an even number of entries", path.display(), r + 1);
                }
                let h = vals.len() / 2;
                (0..h).map(|i| C64::new(vals[i], vals[h + i])).collect()
            }
        };
        out.push(v);
    }
    if out.is_empty() {
        bail!("{} holds no vectors", path.display());
    }
    Ok(out)
}

/// Basis matrix given as a list of columns, with optional imaginary parts.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BasisFile {
    re: Vec<Vec<f64>>,
    #[serde(default)]
    im: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubspacesFile {
    bases: Vec<BasisFile>,
}

fn basis_matrix(b: &BasisFile) -> Result<DMatrix<C64>> {
    let cols = b.re.len();
    let n = b.re.first().map_or(0, Vec::len);
    if cols == 0 || n == 0 {
        bail!("empty basis");
    }
    if let Some(im) = &b.im {
        if im.len() != cols || im.iter().any(|c| c.len() != n) {
            bail!("imaginary part does not match the real part's shape");
        }
    }
    if b.re.iter().any(|c| c.len() != n) {
        bail!("basis columns have different lengths");
    }
    Ok(DMatrix::from_fn(n, cols, |i, j| {
        C64::new(b.re[j][i], b.im.as_ref().map_or(0.0, |im| im[j][i]))
    }))
}

/// `{"bases": [{"re": [[column], ...], "im": [[column], ...]}, ...]}`; the
/// columns of each basis are orthonormalized.
pub fn read_subspaces(path: &Path) -> Result<UnionOfSubspaces> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: SubspacesFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let spans = file.bases.iter().map(basis_matrix).collect::<Result<Vec<_>>>()?;
    Ok(UnionOfSubspaces::from_spanning(spans)?)
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RipPrior {
    /// `count` random `dim`-dimensional subspaces.
    Random { count: usize, dim: usize, field: Field },
    /// The two-subspace toy prior.
    Toy { k: usize },
    File { path: PathBuf },
}

impl RipPrior {
    pub fn build(&self, n: usize, seed: u64) -> Result<UnionOfSubspaces> {
        Ok(match self {
            RipPrior::Random { count, dim, field } => {
                let mut rng = RngStream::new(seed, stream_id("rip-prior", &[])).rng();
                let bases = (0..*count)
                    .map(|_| random_subspace(n, *dim, *field, &mut rng))
                    .collect::<vdcs::Result<Vec<_>>>()?;
                UnionOfSubspaces::new(bases)?
            }
            RipPrior::Toy { k } => toy_prior(n, *k)?,
            RipPrior::File { path } => {
                let u = read_subspaces(path)?;
                if u.n() != n {
                    bail!("subspaces in {} have dimension {}, config says n = {n}", path.display(), u.n());
                }
                u
            }
        })
    }
}

fn default_threshold() -> f64 {
    RIP_THRESHOLD
}

fn default_levels() -> usize {
    3
}

fn default_transform() -> TransformKind {
    TransformKind::Dft1d
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RipConfig {
    pub n: usize,
    pub m: usize,
    #[serde(default = "default_transform")]
    pub transform: TransformKind,
    #[serde(default = "default_levels")]
    pub levels: usize,
    pub prior: RipPrior,
    pub scheme: Scheme,
    pub trials: u64,
    pub seed: u64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}
