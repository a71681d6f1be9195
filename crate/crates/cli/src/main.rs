mod inputs;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use vdcs::analysis::{rip_success_probability, toy_failure_probabilities, RipEstimate, ToyExampleSpec};
use vdcs::coherence::{coherence_dictionary, coherence_exact, coherence_haar_dictionary, coherence_samples};
use vdcs::experiments::{run_experiment, sparse_haar_signal, ExperimentConfig};
use vdcs::io::{fmt17, read_vector, to_json, write_vector, Table};
use vdcs::operators::{add_noise, plan_noise_factor, MeasurementOperator};
use vdcs::recovery::{assess, recover_sparse, CoefficientOperator, RecoveryReport, SparsePriorConfig};
use vdcs::rng::stream_id;
use vdcs::sampling::{
    sample_bernoulli, sample_bernoulli_conditioned, SamplingPlan, Scheme, SchemeWeights, DEFAULT_MAX_ATTEMPTS,
};
use vdcs::weights::{
    heuristic_marginal_weights, optimized_bernoulli_weights, sample_complexity_bound, with_replacement_weights,
};
use vdcs::{CoherenceSource, CoherenceVector, Field, RngStream, UnitaryOperator, WeightVector};

use inputs::{PriorArg, RipConfig, Shape, TransformKind};

#[derive(Parser)]
#[command(name = "vdcs", version, about = "Optimized variable-density sampling for compressed sensing")]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FieldArg {
    Real,
    Complex,
}

impl From<FieldArg> for Field {
    fn from(f: FieldArg) -> Self {
        match f {
            FieldArg::Real => Field::Real,
            FieldArg::Complex => Field::Complex,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightScheme {
    Bernoulli,
    WithReplacement,
    Heuristic,
}

#[derive(clap::Args)]
struct TransformArgs {
    #[arg(long, value_enum, default_value = "dft1d")]
    transform: TransformKind,
    /// Signal length for 1-D transforms.
    #[arg(long)]
    n: Option<usize>,
    /// Image shape `ROWSxCOLS[xCHANNELS]` for 2-D transforms.
    #[arg(long)]
    shape: Option<Shape>,
    /// Haar decomposition levels.
    #[arg(long, default_value_t = 3)]
    levels: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Local coherences of the rows of a unitary transform with a prior.
    Coherence {
        #[command(flatten)]
        t: TransformArgs,
        /// `subspaces:FILE.json`, `atoms:FILE.csv`, `samples:FILE.csv` or `haar`.
        #[arg(long)]
        prior: PriorArg,
        /// How atom and sample rows are parsed.
        #[arg(long, value_enum, default_value = "real")]
        field: FieldArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sampling weights for a coherence vector.
    Weights {
        #[arg(long)]
        alpha: PathBuf,
        #[arg(long)]
        m: usize,
        #[arg(long, value_enum)]
        scheme: WeightScheme,
        #[arg(long)]
        out: PathBuf,
    },
    /// Smallest m with m / L^2(alpha, m) >= lambda.
    ComplexityBound {
        #[arg(long)]
        alpha: PathBuf,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draws one sampling plan.
    Sample {
        /// CSV with `index,alpha,weight` columns as written by `weights`.
        #[arg(long)]
        weights: PathBuf,
        #[arg(long, value_parser = parse_scheme)]
        scheme: Scheme,
        #[arg(long)]
        seed: u64,
        /// Sample count; defaults to the rounded sum of the weight column.
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 0)]
        stream: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte-Carlo RIP success probability.
    RipEstimate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Failure rates of the two-subspace toy problem.
    Toy {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Random k-sparse signal in the Haar basis, unit norm.
    Signal {
        #[command(flatten)]
        t: TransformArgs,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Noisy measurements `S F x + eta` of a signal under a plan.
    Measure {
        #[command(flatten)]
        t: TransformArgs,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        signal: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sparse recovery from measurements.
    Recover {
        #[command(flatten)]
        t: TransformArgs,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        measurements: PathBuf,
        /// Only `haar` is supported.
        #[arg(long, default_value = "haar")]
        prior: String,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        /// Ground truth for the error fields of the report.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Where to write the recovered signal.
        #[arg(long)]
        xhat: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Runs an experiment config and writes results.csv, summary.csv and
    /// manifest.json.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_scheme(s: &str) -> std::result::Result<Scheme, String> {
    Scheme::parse(s).map_err(|e| e.to_string())
}

fn main() {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
    if let Err(e) = run(cli.cmd) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Coherence { t, prior, field, out } => coherence(&t, &prior, field.into(), &out),
        Command::Weights { alpha, m, scheme, out } => weights(&alpha, m, scheme, &out),
        Command::ComplexityBound { alpha, lambda, out } => complexity_bound(&alpha, lambda, out.as_deref()),
        Command::Sample { weights, scheme, seed, m, stream, out } => sample(&weights, scheme, seed, m, stream, &out),
        Command::RipEstimate { config, out } => rip_estimate(&config, &out),
        Command::Toy { n, k, m, trials, seed, out } => {
            let report = toy_failure_probabilities(ToyExampleSpec::new(n, k, m)?, trials, seed)?;
            write(&out, to_json(&report)?)
        }
        Command::Signal { t, k, seed, out } => {
            let haar = t.haar()?;
            let mut rng = RngStream::new(seed, stream_id("signal", &[])).rng();
            let x = sparse_haar_signal(&haar, k, &mut rng)?;
            write_csv(&out, &x, Field::Real)
        }
        Command::Measure { t, plan, signal, sigma, seed, out } => measure(&t, &plan, &signal, sigma, seed, &out),
        Command::Recover { t, plan, measurements, prior, k, sigma, truth, xhat, out } => {
            if prior != "haar" {
                bail!("unsupported prior {prior:?}; only `haar` is available");
            }
            recover(&t, &plan, &measurements, k, sigma, truth.as_deref(), xhat.as_deref(), &out)
        }
        Command::Experiment { config, out } => experiment(&config, &out),
    }
}

impl TransformArgs {
    fn n(&self, fallback: Option<usize>) -> Result<usize> {
        match (self.shape, self.n.or(fallback)) {
            (Some(s), _) => Ok(s.len()),
            (None, Some(n)) => Ok(n),
            (None, None) => bail!("pass --n or --shape"),
        }
    }

    fn operator(&self, fallback: Option<usize>) -> Result<UnitaryOperator> {
        let n = self.n(fallback)?;
        Ok(match (self.transform, self.shape) {
            (TransformKind::Identity, _) => UnitaryOperator::identity(n)?,
            (TransformKind::Dft1d, _) => UnitaryOperator::dft1d(n)?,
            (TransformKind::Dft2d, Some(s)) => UnitaryOperator::dft2d(s.rows, s.cols, s.channels)?,
            (TransformKind::Dft2d, None) => bail!("dft2d needs --shape"),
            (TransformKind::Haar, _) => self.haar_at(n)?,
        })
    }

    fn haar(&self) -> Result<UnitaryOperator> {
        self.haar_at(self.n(None)?)
    }

    fn haar_at(&self, n: usize) -> Result<UnitaryOperator> {
        Ok(match self.shape {
            Some(s) => UnitaryOperator::haar2d(s.rows, s.cols, s.channels, self.levels)?,
            None => UnitaryOperator::haar1d(n, self.levels)?,
        })
    }
}

fn write(path: &Path, body: String) -> Result<()> {
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

fn write_csv(path: &Path, v: &[vdcs::C64], field: Field) -> Result<()> {
    let mut buf = Vec::new();
    write_vector(&mut buf, v, field)?;
    fs::write(path, buf).with_context(|| format!("writing {}", path.display()))
}

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).with_context(|| format!("opening {}", path.display()))
}

fn read_alpha(path: &Path) -> Result<CoherenceVector> {
    let alpha = inputs::read_named_or_single(path, "alpha")?;
    Ok(CoherenceVector::new(alpha, CoherenceSource::External)?)
}

fn coherence(t: &TransformArgs, prior: &PriorArg, field: Field, out: &Path) -> Result<()> {
    let alpha = match prior {
        PriorArg::Haar => {
            let f = t.operator(None)?;
            coherence_haar_dictionary(&f, &t.haar_at(f.n())?)?
        }
        PriorArg::Subspaces(path) => {
            let u = inputs::read_subspaces(path)?;
            coherence_exact(&t.operator(Some(u.n()))?, &u)?
        }
        PriorArg::Atoms(path) => {
            let atoms = inputs::read_rows(path, field)?;
            coherence_dictionary(&t.operator(atoms.first().map(Vec::len))?, &atoms)?
        }
        PriorArg::Samples(path) => {
            let samples = inputs::read_rows(path, field)?;
            coherence_samples(&t.operator(samples.first().map(Vec::len))?, &samples)?
        }
    };
    let mut table = Table::new(&["index", "alpha"]);
    for (j, a) in alpha.values().iter().enumerate() {
        table.row([j.to_string(), fmt17(*a)]);
    }
    write(out, table.finish())
}

fn weights(alpha_path: &Path, m: usize, scheme: WeightScheme, out: &Path) -> Result<()> {
    let alpha = read_alpha(alpha_path)?;
    let (w, footer) = match scheme {
        WeightScheme::Bernoulli => {
            let w = optimized_bernoulli_weights(&alpha, m)?;
            let footer = format!("# L2={}\n# J={}\n", fmt17(w.l_sq()), w.unsaturated());
            (w.values().to_vec(), footer)
        }
        WeightScheme::WithReplacement => {
            (with_replacement_weights(&alpha), format!("# norm_sq={}\n", fmt17(alpha.norm_sq())))
        }
        WeightScheme::Heuristic => {
            let h = heuristic_marginal_weights(&with_replacement_weights(&alpha), m)?;
            (h.w, format!("# lambda={}\n", fmt17(h.lambda)))
        }
    };
    let mut table = Table::new(&["index", "alpha", "weight"]);
    for (j, (a, wj)) in alpha.values().iter().zip(&w).enumerate() {
        table.row([j.to_string(), fmt17(*a), fmt17(*wj)]);
    }
    write(out, table.finish() + &footer)
}

#[derive(Serialize)]
struct BoundOutput {
    m_star: Option<usize>,
    #[serde(rename = "L2_at_m_star")]
    l2_at_m_star: Option<f64>,
    wr_bound: u64,
}

fn complexity_bound(alpha_path: &Path, lambda: f64, out: Option<&Path>) -> Result<()> {
    let q = sample_complexity_bound(&read_alpha(alpha_path)?, lambda)?;
    let body = to_json(&BoundOutput { m_star: q.m_star, l2_at_m_star: q.l_sq_at_m_star, wr_bound: q.wr_bound })?;
    match out {
        Some(path) => write(path, body),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn sample(path: &Path, scheme: Scheme, seed: u64, m: Option<usize>, stream: u64, out: &Path) -> Result<()> {
    let alpha = read_alpha(path)?;
    let w_col = inputs::read_named(path, "weight")?;
    let m = match (m, &w_col) {
        (Some(m), _) => m,
        (None, Some(w)) => w.iter().sum::<f64>().round() as usize,
        (None, None) => bail!("pass --m or a weights file with a `weight` column"),
    };
    let stream = RngStream::new(seed, stream);
    // Bernoulli plans use the file's weights as given when they sum to m.
    let given = w_col.and_then(|w| WeightVector::from_weights(w, m).ok());
    let plan = match (scheme, given) {
        (Scheme::Bernoulli, Some(w)) => sample_bernoulli(&w, stream)?,
        (Scheme::BernoulliCond, Some(w)) => sample_bernoulli_conditioned(&w, stream, DEFAULT_MAX_ATTEMPTS)?,
        _ => SchemeWeights::new(&alpha, m)?.draw(scheme, stream)?,
    };
    write(out, to_json(&plan)?)
}

fn rip_estimate(path: &Path, out: &Path) -> Result<()> {
    let cfg: RipConfig = serde_json::from_reader(open(path)?).with_context(|| format!("parsing {}", path.display()))?;
    let prior = cfg.prior.build(cfg.n, cfg.seed)?;
    let f = cfg.transform.operator(cfg.n, cfg.levels)?;
    let alpha = coherence_exact(&f, &prior)?;
    let weights = SchemeWeights::new(&alpha, cfg.m)?;
    let stream = RngStream::new(cfg.seed, stream_id("rip-estimate", &[cfg.m as u64]));
    let estimate = rip_success_probability(&f, &prior, &weights, cfg.scheme, cfg.trials, stream, cfg.threshold)?;

    #[derive(Serialize)]
    struct Output<'a> {
        n: usize,
        m: usize,
        #[serde(rename = "L2")]
        l_sq: f64,
        #[serde(flatten)]
        estimate: &'a RipEstimate,
    }
    write(out, to_json(&Output { n: cfg.n, m: cfg.m, l_sq: weights.bernoulli.l_sq(), estimate: &estimate })?)
}

fn read_plan(path: &Path) -> Result<SamplingPlan> {
    serde_json::from_reader(open(path)?).with_context(|| format!("parsing plan {}", path.display()))
}

fn measure(t: &TransformArgs, plan: &Path, signal: &Path, sigma: f64, seed: u64, out: &Path) -> Result<()> {
    let plan = read_plan(plan)?;
    let f = t.operator(Some(plan.n))?;
    let x = read_vector(open(signal)?, Field::Real)?;
    let op = MeasurementOperator::new(&f, &plan, false)?;
    let mut rng = RngStream::new(seed, stream_id("measure", &[])).rng();
    let b = add_noise(&op.forward(&x)?, sigma, plan.m, Field::Complex, &mut rng)?;
    write_csv(out, &b, Field::Complex)
}

#[allow(clippy::too_many_arguments)]
fn recover(
    t: &TransformArgs,
    plan: &Path,
    measurements: &Path,
    k: usize,
    sigma: f64,
    truth: Option<&Path>,
    xhat_out: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let plan = read_plan(plan)?;
    let f = t.operator(Some(plan.n))?;
    let haar = t.haar_at(plan.n)?;
    let raw = read_vector(open(measurements)?, Field::Complex)?;
    let op = MeasurementOperator::new(&f, &plan, !plan.precond.is_empty())?;
    let b = op.precondition(&raw)?;
    let a = CoefficientOperator::new(op, &haar)?;
    let cfg = SparsePriorConfig { k, sigma, ..Default::default() };
    let rec = recover_sparse(&a, &b, &cfg)?;
    let nf = if plan.precond.is_empty() {
        f64::NAN
    } else {
        plan_noise_factor(&plan, &coherence_haar_dictionary(&f, &haar)?)?.value
    };
    let report = match truth {
        Some(path) => assess(&a, &b, &rec, &read_vector(open(path)?, Field::Real)?, k, sigma, nf)?,
        None => RecoveryReport {
            rel_error: f64::NAN,
            abs_error: f64::NAN,
            sigma,
            eps_proxy: f64::NAN,
            mismatch: f64::NAN,
            noise_factor: nf,
            m_realized: plan.rows(),
            scheme: plan.scheme,
            support_recovered: false,
            converged: rec.converged,
            rank_deficient: rec.rank_deficient,
        },
    };
    if let Some(path) = xhat_out {
        write_csv(path, &rec.xhat, Field::Real)?;
    }
    write(out, to_json(&report)?)
}

fn experiment(path: &Path, out: &Path) -> Result<()> {
    let cfg: ExperimentConfig =
        serde_json::from_reader(open(path)?).with_context(|| format!("parsing {}", path.display()))?;
    let output = run_experiment(&cfg)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    output.write(out)?;
    if output.manifest.trials_failed > 0 {
        eprintln!("{} of {} trials failed; see the status column", output.manifest.trials_failed, output.manifest.trials_total);
    }
    Ok(())
}
