//! Randomized property checks for cross-cutting invariants: transform
//! linearity, Walsh-Hadamard structure, order-statistic bounds, coreset
//! shape, stream reproducibility, and matrix file round-trips.

use l1sketch::fwht::{fwht_normalized, next_pow2};
use l1sketch::io::{read_matrix, write_matrix};
use l1sketch::matrix::{norm_l2, DenseMatrix};
use l1sketch::regression::coreset_from_scores;
use l1sketch::rng::RngStream;
use l1sketch::sketch::{SketchKind, SketchOperator, SketchSpec};
use l1sketch::stats::{median, quantile};
use proptest::prelude::*;

fn finite_vec(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e6f64..1e6, len)
}

proptest! {
    #[test]
    fn hadamard_is_an_isometric_involution(v in finite_vec(1..=256)) {
        let n = next_pow2(v.len());
        let mut padded = v.clone();
        padded.resize(n, 0.0);
        let before = norm_l2(&padded);
        let mut twice = padded.clone();
        fwht_normalized(&mut twice).unwrap();
        let after = norm_l2(&twice);
        prop_assert!((after - before).abs() <= 1e-9 * before.max(1.0));
        fwht_normalized(&mut twice).unwrap();
        for (a, b) in twice.iter().zip(padded.iter()) {
            prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
    }

    #[test]
    fn quantiles_stay_inside_the_data_range(v in finite_vec(1..=64), q in 0.0f64..=1.0) {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let est = quantile(&v, q).unwrap();
        prop_assert!(est >= lo - 1e-12 && est <= hi + 1e-12);
        let med = median(&v).unwrap();
        let half = quantile(&v, 0.5).unwrap();
        prop_assert!((med - half).abs() <= 1e-12 * med.abs().max(1.0));
    }

    #[test]
    fn coresets_are_sorted_deduplicated_and_reproducible(
        lambda in prop::collection::vec(0.0f64..1e3, 1..=80),
        s in 1usize..=30,
        seed in any::<u64>(),
    ) {
        prop_assume!(lambda.iter().any(|&v| v > 0.0));
        let cs = coreset_from_scores(&lambda, s, seed);
        prop_assume!(cs.is_ok());
        let cs = cs.unwrap();
        prop_assert_eq!(cs.s_target, s);
        prop_assert_eq!(cs.indices.len(), cs.weights.len());
        for w in &cs.weights {
            prop_assert!(*w >= 1.0, "inclusion probabilities never exceed one");
        }
        for pair in cs.indices.windows(2) {
            prop_assert!(pair[0] < pair[1]);
        }
        prop_assert!(*cs.indices.last().unwrap() < lambda.len());
        let again = coreset_from_scores(&lambda, s, seed).unwrap();
        prop_assert_eq!(again.indices, cs.indices);
        prop_assert_eq!(again.weights, cs.weights);
    }

    #[test]
    fn streams_are_reproducible_and_uniforms_stay_open(
        seed in any::<u64>(),
        stream in any::<u64>(),
    ) {
        let mut a = RngStream::new(seed, stream);
        let mut b = RngStream::new(seed, stream);
        for _ in 0..64 {
            prop_assert_eq!(a.next_u64(), b.next_u64());
        }
        for _ in 0..100 {
            let u = a.uniform_open();
            prop_assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn matrix_files_round_trip_exactly(
        rows in 1usize..=6,
        cols in 1usize..=6,
        seed in any::<u64>(),
        binary in any::<bool>(),
    ) {
        let mut rng = RngStream::new(seed, 0);
        let m = DenseMatrix::from_fn(rows, cols, |_, _| rng.gaussian() * 1e3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(if binary { "m.mat" } else { "m.csv" });
        write_matrix(&m, &path).unwrap();
        let back = read_matrix(&path).unwrap();
        prop_assert_eq!(back.rows(), rows);
        prop_assert_eq!(back.cols(), cols);
        for (x, y) in back.data().iter().zip(m.data().iter()) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sketches_apply_linearly(
        kind_idx in 0usize..5,
        n in 8usize..=96,
        seed in any::<u64>(),
        alpha in -8.0f64..8.0,
        beta in -8.0f64..8.0,
        payload in any::<u64>(),
    ) {
        let kind = SketchKind::ALL[kind_idx];
        let d = 3;
        let spec = SketchSpec::with_defaults(kind, n, d, seed);
        let op = SketchOperator::from_spec(&spec).unwrap();
        let mut rng = RngStream::new(payload, 0);
        let x = DenseMatrix::from_fn(n, 1, |_, _| rng.gaussian());
        let y = DenseMatrix::from_fn(n, 1, |_, _| rng.gaussian());
        let combo = DenseMatrix::from_fn(n, 1, |i, _| alpha * x.get(i, 0) + beta * y.get(i, 0));
        let px = op.apply_left(&x).unwrap();
        let py = op.apply_left(&y).unwrap();
        let pc = op.apply_left(&combo).unwrap();
        for i in 0..op.output_rows() {
            let want = alpha * px.get(i, 0) + beta * py.get(i, 0);
            let got = pc.get(i, 0);
            let tol = 1e-8 * (px.get(i, 0).abs() * alpha.abs()
                + py.get(i, 0).abs() * beta.abs()
                + 1.0);
            prop_assert!((got - want).abs() <= tol, "{kind} row {i}: {got} vs {want}");
        }
    }
}
