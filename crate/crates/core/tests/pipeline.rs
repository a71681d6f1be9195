//! End-to-end runs through sampling, measurement and recovery.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use vdcs::coherence::coherence_haar_dictionary;
use vdcs::experiments::{run_experiment, sparse_haar_signal, ExperimentConfig, PriorSpec, Scenario};
use vdcs::operators::{add_noise, MeasurementOperator};
use vdcs::recovery::{assess, recover_sparse, CoefficientOperator, SparsePriorConfig};
use vdcs::sampling::{Scheme, SchemeWeights};
use vdcs::transform::inner;
use vdcs::{Field, RngStream, UnitaryOperator, C64};

#[test]
fn adjoint_matches_forward_for_every_scheme() {
    let f = UnitaryOperator::dft1d(128).unwrap();
    let haar = UnitaryOperator::haar1d(128, 3).unwrap();
    let alpha = coherence_haar_dictionary(&f, &haar).unwrap();
    let sw = SchemeWeights::new(&alpha, 40).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for scheme in [Scheme::Bernoulli, Scheme::BernoulliCond, Scheme::Wr, Scheme::WorReject, Scheme::WorSeq] {
        let plan = sw.draw(scheme, RngStream::new(3, 0)).unwrap();
        let op = MeasurementOperator::new(&f, &plan, true).unwrap();
        let x = add_noise(&vec![C64::new(0.0, 0.0); 128], 1.0, 1, Field::Complex, &mut rng).unwrap();
        let y = add_noise(&vec![C64::new(0.0, 0.0); op.rows()], 1.0, 1, Field::Complex, &mut rng).unwrap();
        let lhs = inner(&op.forward(&x).unwrap(), &y);
        let rhs = inner(&x, &op.adjoint(&y).unwrap());
        assert!((lhs - rhs).norm() < 1e-10 * lhs.norm().max(1.0), "{scheme:?}");
    }
}

#[test]
fn noiseless_recovery_from_each_scheme() {
    let f = UnitaryOperator::dft1d(256).unwrap();
    let haar = UnitaryOperator::haar1d(256, 3).unwrap();
    let alpha = coherence_haar_dictionary(&f, &haar).unwrap();
    let sw = SchemeWeights::new(&alpha, 80).unwrap();
    let x0 = sparse_haar_signal(&haar, 5, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    for scheme in [Scheme::BernoulliCond, Scheme::Wr, Scheme::WorSeq] {
        let plan = sw.draw(scheme, RngStream::new(5, 1)).unwrap();
        let op = MeasurementOperator::new(&f, &plan, true).unwrap();
        let b = op.precondition(&op.unpreconditioned().forward(&x0).unwrap()).unwrap();
        let a = CoefficientOperator::new(op, &haar).unwrap();
        let rec = recover_sparse(&a, &b, &SparsePriorConfig { k: 5, ..Default::default() }).unwrap();
        let report = assess(&a, &b, &rec, &x0, 5, 0.0, f64::NAN).unwrap();
        assert!(report.support_recovered, "{scheme:?}");
        assert!(report.rel_error < 1e-8, "{scheme:?}: {}", report.rel_error);
    }
}

#[test]
fn experiment_output_is_independent_of_thread_count() {
    let cfg = ExperimentConfig {
        scenario: Scenario::SchemeComparison,
        n: 128,
        m_grid: vec![40, 64],
        k: 4,
        sigma: 0.05,
        trials: 4,
        seed: 12,
        prior: PriorSpec::Haar { levels: 3 },
        schemes: vec![Scheme::BernoulliCond, Scheme::Wr, Scheme::WorReject],
        lambda_grid: vec![],
        t_grid: vec![],
        solver: Default::default(),
    };
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_experiment(&cfg).unwrap())
    };
    let (one, many) = (run(1), run(6));
    assert_eq!(one.results_csv, many.results_csv);
    assert_eq!(one.summary_csv, many.summary_csv);
    assert_eq!(one.manifest, many.manifest);
}
