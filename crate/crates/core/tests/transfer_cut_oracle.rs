mod common;

use common::*;
use ndarray::{array, s, Array2};
use proptest::prelude::*;
use rand::Rng;
use specmix::dataset::MixedDataset;
use specmix::eigen::EigenOptions;
use specmix::graph::WeightedGraph;
use specmix::pipelines::{
    build_bipartite_reduction, lift_eigenvalue, transfer_cut, StackedEncoder,
};

fn encoder(ds: &MixedDataset, lambdas: Vec<f64>) -> StackedEncoder {
    StackedEncoder::from_dataset(ds, lambdas).unwrap()
}

#[test]
fn lifted_pairs_match_the_explicit_bipartite_graph() {
    let mut rng = rng(21);
    let mut checked = 0;
    for _ in 0..60 {
        let n = rng.random_range(6..=40);
        let q = rng.random_range(1..=3);
        let ds = random_mixed(&mut rng, n, 0, q, 5);
        let lambdas: Vec<f64> = (0..q).map(|_| rng.random_range(0.1..5.0)).collect();
        let h = encoder(&ds, lambdas);
        let t = h.cols();
        let k_max = (t + 1).saturating_sub(q).min(4);
        if k_max < 1 {
            continue;
        }
        let k = rng.random_range(1..=k_max);
        let tc = match transfer_cut(&h, k, &EigenOptions::default()) {
            Ok(tc) => tc,
            Err(specmix::Error::InsufficientSpectralGap(_)) => continue,
            Err(e) => panic!("{e}"),
        };
        let graph = h.bipartite();
        let w = graph.dense_weights();
        let (all, vecs) = generalized_oracle(&w);
        let d = graph.degrees().to_vec();
        for (got, want) in tc.lifted.values.iter().zip(&all) {
            assert!((got - want).abs() <= 1e-8, "{got} vs {want}");
        }
        for (gamma, mu) in tc.reduced.values.iter().zip(&tc.lifted.values) {
            assert!((mu * (2.0 - mu) - gamma).abs() <= 1e-10);
        }
        let dmax = d.iter().fold(0.0f64, |m, x| m.max(*x));
        assert!(tc.lifted.max_residual() <= 1e-8 * dmax);
        let scaled = scale_by_sqrt(&tc.lifted.vectors, &d);
        let gram = scaled.t().dot(&scaled);
        assert!(max_abs(&(gram - Array2::<f64>::eye(k))) <= 1e-8);
        if all[k] - all[k - 1] > 1e-6 {
            let want = scale_by_sqrt(&vecs.slice(s![.., ..k]).to_owned(), &d);
            assert!(sin_theta(&want, &scaled) <= 1e-6);
        }
        assert_eq!(tc.embedding, tc.lifted.vectors.slice(s![..n, ..]));
        checked += 1;
    }
    assert!(checked >= 30, "only {checked} cases exercised");
}

#[test]
fn bipartite_spectrum_is_symmetric_about_one() {
    let mut rng = rng(22);
    let ds = random_mixed(&mut rng, 12, 0, 2, 3);
    let h = encoder(&ds, vec![1.0, 2.0]);
    let (all, _) = generalized_oracle(&h.bipartite().dense_weights());
    let m = all.len();
    for i in 0..m {
        assert!((all[i] + all[m - 1 - i] - 2.0).abs() < 1e-9);
    }
}

#[test]
fn single_variable_splits_into_components() {
    let ds = MixedDataset::categorical_only(array![[0], [1], [2], [0], [1], [2]], vec![3]).unwrap();
    let tc = transfer_cut(&encoder(&ds, vec![1.0]), 3, &EigenOptions::default()).unwrap();
    assert!(tc.lifted.values.iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn null_space_of_h_hits_the_spectral_gap_guard() {
    // two binary variables with all four combinations: rank H = 3, so one
    // reduced eigenvalue equals 1
    let ds =
        MixedDataset::categorical_only(array![[0, 0], [0, 1], [1, 0], [1, 1]], vec![2, 2]).unwrap();
    let h = encoder(&ds, vec![1.0, 1.0]);
    assert!(transfer_cut(&h, 3, &EigenOptions::default()).is_ok());
    assert!(matches!(
        transfer_cut(&h, 4, &EigenOptions::default()),
        Err(specmix::Error::InsufficientSpectralGap(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reduction_sums_and_symmetry(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let n = rng.random_range(2..30);
        let q = rng.random_range(1..4);
        let ds = random_mixed(&mut rng, n, 0, q, 4);
        let lambdas: Vec<f64> = (0..q).map(|_| rng.random_range(0.1..5.0)).collect();
        let lam: f64 = lambdas.iter().sum();
        let h = encoder(&ds, lambdas);
        let red = build_bipartite_reduction(&h).unwrap();
        let dense = h.to_dense();
        let oracle = dense.t().dot(&dense) / lam;
        prop_assert!(max_abs(&(&red.w_q - &oracle)) <= 1e-12);
        for (dq, col) in red.d_q.iter().zip(dense.columns()) {
            prop_assert!((dq - col.sum()).abs() <= 1e-10);
        }
        prop_assert!(red.d_h.iter().all(|d| (d - lam).abs() <= 1e-12));
    }

    #[test]
    fn lift_inverts_gamma(gamma in 0.0f64..1.0) {
        let mu = lift_eigenvalue(gamma);
        prop_assert!((0.0..=1.0).contains(&mu));
        prop_assert!((mu * (2.0 - mu) - gamma).abs() <= 1e-12);
    }
}
