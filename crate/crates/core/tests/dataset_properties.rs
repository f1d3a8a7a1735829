mod common;

use common::*;
use proptest::prelude::*;
use specmix::dataset::{generate_synthetic, standardize_numeric, CorruptionMode, SyntheticParams};

fn params(n: usize, k: usize, q: usize, sigma: f64, p: f64, seed: u64) -> SyntheticParams {
    SyntheticParams {
        n,
        k,
        q,
        sigma,
        p,
        seed,
        corruption: CorruptionMode::OtherCategories,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn one_hot_entries_total_nq(seed in any::<u64>(), n in 1usize..60, q in 1usize..5) {
        let mut rng = rng(seed);
        let ds = random_mixed(&mut rng, n, 1, q, 6);
        let total: usize = ds
            .encoders()
            .iter()
            .map(|h| h.to_dense().iter().filter(|v| **v == 1.0).count())
            .sum();
        prop_assert_eq!(total, n * q);
        for h in ds.encoders() {
            prop_assert_eq!(h.column_sums().iter().sum::<usize>(), n);
        }
    }

    #[test]
    fn standardized_columns_have_zero_mean_unit_std(seed in any::<u64>(), n in 2usize..80, r in 1usize..5) {
        let mut rng = rng(seed);
        let ds = random_mixed(&mut rng, n, r, 1, 3);
        let s = standardize_numeric(&ds);
        for col in s.numeric().columns() {
            let mean = col.sum() / n as f64;
            let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
            prop_assert!(mean.abs() <= 1e-10);
            prop_assert!((var.sqrt() - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn synthetic_labels_cover_every_cluster(seed in any::<u64>(), k in 2usize..6, extra in 0usize..50, q in 1usize..4, p in 0.0f64..=1.0) {
        let n = k + extra;
        let (ds, labels) = generate_synthetic(&params(n, k, q, 1.0, p, seed)).unwrap();
        prop_assert_eq!(ds.len(), n);
        prop_assert_eq!(ds.num_numeric(), k);
        prop_assert_eq!(ds.num_categorical(), q);
        prop_assert!(ds.cardinalities().iter().all(|&c| c == k));
        for c in 0..k {
            prop_assert_eq!(labels.iter().filter(|&&l| l == c).count(), n / k + usize::from(c < n % k));
        }
    }

    #[test]
    fn synthetic_is_reproducible(seed in any::<u64>()) {
        let a = generate_synthetic(&params(30, 3, 2, 0.5, 0.3, seed)).unwrap();
        let b = generate_synthetic(&params(30, 3, 2, 0.5, 0.3, seed)).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn no_corruption_means_categories_equal_labels() {
    let (ds, labels) = generate_synthetic(&params(200, 4, 3, 1.0, 0.0, 5)).unwrap();
    for var in 0..3 {
        assert_eq!(ds.categorical_column(var).to_vec(), labels);
    }
}

#[test]
fn full_corruption_never_keeps_the_attached_category() {
    let (ds, labels) = generate_synthetic(&params(300, 3, 2, 1.0, 1.0, 9)).unwrap();
    for var in 0..2 {
        for (c, l) in ds.categorical_column(var).iter().zip(&labels) {
            assert_ne!(c, l);
        }
    }
}
