use privseq_core::pool::expected_ones;
use privseq_core::rng::substream;
use privseq_core::{
    aggregate, build_population, decode_constant, sample_known, sample_unknown, sequence_pool,
    simulate, simulate_with, DepthPolicy, FreqSpec, GenotypeMatrix, PoolOptions, SchemeParams,
};
use proptest::prelude::*;

fn constant(m: usize, alpha0: u64, eta: f64) -> SchemeParams {
    SchemeParams::new(m, alpha0, eta, DepthPolicy::Constant).unwrap()
}

/// Replicates one column `reps` times so every column is an independent trial.
fn replicate(col: &[u8], reps: usize) -> GenotypeMatrix {
    let m = col.len();
    let bits = col.iter().flat_map(|&b| std::iter::repeat_n(b, reps)).collect();
    GenotypeMatrix::from_rows(m, reps, bits).unwrap()
}

fn mean_and_se(values: &[u64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().map(|&v| v as f64).sum::<f64>() / n;
    let var = values.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn ones_count_mean_matches_the_linear_model() {
    let p = constant(3, 20, 0.1);
    let x = replicate(&[1, 0, 1], 100_000);
    let y = replicate(&[0, 1, 1], 100_000);
    let counts = sequence_pool(&x, &y, &p, PoolOptions::default(), 31).unwrap();
    let (mean, se) = mean_and_se(counts.ones_count());
    let expected = expected_ones(&x, &y, &p, 0);
    assert!((mean - expected).abs() <= 3.0 * se, "{mean} vs {expected} (se {se})");
}

#[test]
fn level_assignment_matters_only_through_level_bit_pairs() {
    let p = constant(3, 10, 0.1);
    let reps = 100_000;
    let y = replicate(&[0, 0, 0], reps);
    let run = |col: &[u8], seed| {
        let x = replicate(col, reps);
        let counts = sequence_pool(&x, &y, &p, PoolOptions::default(), seed).unwrap();
        mean_and_se(counts.ones_count())
    };
    // permuting rows with levels held fixed moves the mean
    let (a, sa) = run(&[1, 0, 0], 1);
    let (b, sb) = run(&[0, 1, 0], 2);
    let gap = 10.0 * (1.0 - 2.0 * 0.1);
    assert!(((b - a) - gap).abs() <= 3.0 * (sa * sa + sb * sb).sqrt());
    // the same (level, bit) pairs give the same distribution
    let (c, sc) = run(&[1, 0, 0], 3);
    assert!((a - c).abs() <= 3.0 * (sa * sa + sc * sc).sqrt());
}

#[test]
fn per_read_simulation_agrees_with_binomial_counts() {
    let p = constant(2, 15, 0.2);
    let x = replicate(&[1, 0], 20_000);
    let y = replicate(&[1, 1], 20_000);
    let fast = sequence_pool(&x, &y, &p, PoolOptions::default(), 5).unwrap();
    let slow_opts = PoolOptions {
        per_read: true,
        ..PoolOptions::default()
    };
    let slow = sequence_pool(&x, &y, &p, slow_opts, 6).unwrap();
    let (ma, sa) = mean_and_se(fast.ones_count());
    let (mb, sb) = mean_and_se(slow.ones_count());
    assert!((ma - mb).abs() <= 3.0 * (sa * sa + sb * sb).sqrt(), "{ma} vs {mb}");
    assert_eq!(fast.total_reads(), slow.total_reads());
}

#[test]
fn known_contribution_is_fully_removed() {
    let p = constant(5, 3, 1e-12);
    let pop = build_population(500, &FreqSpec::Uniform(0.5)).unwrap();
    let x = sample_unknown(&pop, 5, &mut substream(1, 1, 0)).unwrap();
    let y1 = sample_known(500, 5, &mut substream(1, 2, 0)).unwrap();
    let y2 = sample_known(500, 5, &mut substream(2, 2, 0)).unwrap();
    let a = simulate_with(x.clone(), y1, &p, PoolOptions::default(), 9).unwrap();
    let b = simulate_with(x.clone(), y2, &p, PoolOptions::default(), 9).unwrap();
    assert_eq!(a.decoded.x_hat, b.decoded.x_hat);
    assert_eq!(a.decoded.x_hat, x);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let pop = build_population(3000, &FreqSpec::Uniform(0.4)).unwrap();
    let p = SchemeParams::new(4, 25, 0.1, DepthPolicy::Random { sigma_alpha: 3.0 }).unwrap();
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let sim = simulate(&pop, &p, PoolOptions::default(), 2024).unwrap();
            let mut buf = Vec::new();
            sim.write_csv(&mut buf).unwrap();
            buf
        })
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(8));
}

#[test]
fn zero_sigma_random_policy_equals_constant_policy() {
    let pop = build_population(2000, &FreqSpec::Uniform(0.5)).unwrap();
    let c = constant(3, 37, 0.1);
    let r = SchemeParams::new(3, 37, 0.1, DepthPolicy::Random { sigma_alpha: 0.0 }).unwrap();
    let a = simulate(&pop, &c, PoolOptions::default(), 4).unwrap();
    let b = simulate(&pop, &r, PoolOptions::default(), 4).unwrap();
    assert_eq!(a.counts.ones_count(), b.counts.ones_count());
    assert_eq!(a.decoded.x_hat, b.decoded.x_hat);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn noiseless_round_trip(m in 1usize..=10, alpha0 in 1u64..4, seed in any::<u64>()) {
        let p = constant(m, alpha0, 1e-12);
        let pop = build_population(1000, &FreqSpec::Uniform(0.5)).unwrap();
        let x = sample_unknown(&pop, m, &mut substream(seed, 1, 0)).unwrap();
        let y = sample_known(1000, m, &mut substream(seed, 2, 0)).unwrap();
        let counts = sequence_pool(&x, &y, &p, PoolOptions::default(), seed).unwrap();
        let obs = aggregate(&counts, &y, &p).unwrap();
        prop_assert_eq!(decode_constant(&obs).x_hat, x);
    }
}
