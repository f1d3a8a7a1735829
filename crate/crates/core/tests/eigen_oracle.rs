mod common;

use common::*;
use ndarray::{s, Array2};
use proptest::prelude::*;
use rand::Rng;
use specmix::eigen::{
    generalized_smallest_eigs, operator_smallest_eigs, symmetric_smallest_eigs, EigenOptions,
    SolverKind,
};
use specmix::graph::{DenseGraph, WeightedGraph};

fn lanczos() -> EigenOptions {
    EigenOptions {
        solver: SolverKind::Lanczos,
        ..EigenOptions::default()
    }
}

#[test]
fn random_symmetric_matches_full_decomposition() {
    let mut rng = rng(1);
    for trial in 0..30 {
        let n = rng.random_range(2..=50);
        let k = rng.random_range(1..=n.min(8));
        let a = random_symmetric(&mut rng, n);
        let (all, vecs) = dense_eigs(&a);
        let norm = all.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for opts in [EigenOptions::default(), lanczos()] {
            let pairs = symmetric_smallest_eigs(a.view(), k, &opts).unwrap();
            for (got, want) in pairs.values.iter().zip(&all) {
                assert!(
                    (got - want).abs() <= 1e-8 * norm,
                    "trial {trial}: {got} vs {want}"
                );
            }
            for (col, &theta) in pairs.vectors.columns().into_iter().zip(&pairs.values) {
                let r = a.dot(&col) - &col * theta;
                assert!(r.dot(&r).sqrt() <= 1e-8 * norm);
            }
            let gram = pairs.vectors.t().dot(&pairs.vectors);
            assert!(max_abs(&(gram - Array2::<f64>::eye(k))) <= 1e-8);
            if k < n && all[k] - all[k - 1] > 1e-6 {
                let want = vecs.slice(s![.., ..k]).to_owned();
                assert!(sin_theta(&want, &pairs.vectors) <= 1e-6);
            }
        }
    }
}

#[test]
fn dense_and_lanczos_agree_on_fifty_by_fifty() {
    let mut rng = rng(2);
    for _ in 0..20 {
        let a = random_symmetric(&mut rng, 50);
        let d = symmetric_smallest_eigs(a.view(), 6, &EigenOptions::default()).unwrap();
        let l = symmetric_smallest_eigs(a.view(), 6, &lanczos()).unwrap();
        assert_eq!(d.solver, SolverKind::Dense);
        assert_eq!(l.solver, SolverKind::Lanczos);
        for (x, y) in d.values.iter().zip(&l.values) {
            assert!((x - y).abs() <= 1e-8, "{x} vs {y}");
        }
    }
}

#[test]
fn lanczos_on_a_large_operator() {
    let mut rng = rng(3);
    let n = 400;
    let w = random_graph(&mut rng, n, 0.02);
    let g = DenseGraph::new(w.clone()).unwrap();
    let dense = generalized_smallest_eigs(&g, 5, &EigenOptions::default()).unwrap();
    let iter = generalized_smallest_eigs(&g, 5, &lanczos()).unwrap();
    for (x, y) in dense.values.iter().zip(&iter.values) {
        assert!((x - y).abs() <= 1e-8, "{x} vs {y}");
    }
    assert!(iter.max_residual() <= 1e-8 * g.degrees().iter().fold(0.0f64, |m, d| m.max(*d)));

    let plain = symmetric_smallest_eigs(w.view(), 4, &EigenOptions::default()).unwrap();
    let op = operator_smallest_eigs(&w, 4, &EigenOptions::default()).unwrap();
    for (x, y) in plain.values.iter().zip(&op.values) {
        assert!((x - y).abs() <= 1e-8);
    }
}

#[test]
fn auto_switches_to_lanczos_above_the_dense_limit() {
    let mut rng = rng(4);
    let g = DenseGraph::new(random_graph(&mut rng, 80, 0.1)).unwrap();
    let opts = EigenOptions {
        dense_limit: 50,
        ..EigenOptions::default()
    };
    let auto = generalized_smallest_eigs(&g, 3, &opts).unwrap();
    assert_eq!(auto.solver, SolverKind::Lanczos);
    let dense = generalized_smallest_eigs(&g, 3, &EigenOptions::default()).unwrap();
    assert_eq!(dense.solver, SolverKind::Dense);
    for (x, y) in auto.values.iter().zip(&dense.values) {
        assert!((x - y).abs() <= 1e-8);
    }
}

#[test]
fn generalized_matches_oracle_and_is_d_orthonormal() {
    let mut rng = rng(5);
    for _ in 0..25 {
        let n = rng.random_range(3..=50);
        let k = rng.random_range(1..=n.min(6));
        let w = random_graph(&mut rng, n, 0.3);
        let g = DenseGraph::new(w.clone()).unwrap();
        let d = g.degrees().to_vec();
        let (all, vecs) = generalized_oracle(&w);
        for opts in [EigenOptions::default(), lanczos()] {
            let pairs = generalized_smallest_eigs(&g, k, &opts).unwrap();
            for (got, want) in pairs.values.iter().zip(&all) {
                assert!((got - want).abs() <= 1e-8);
                assert!(*got >= -1e-10 && *got <= 2.0 + 1e-10);
            }
            let dmax = d.iter().fold(0.0f64, |m, x| m.max(*x));
            assert!(pairs.max_residual() <= 1e-8 * dmax);
            let scaled = scale_by_sqrt(&pairs.vectors, &d);
            let gram = scaled.t().dot(&scaled);
            assert!(max_abs(&(gram - Array2::<f64>::eye(k))) <= 1e-8);
            if k < n && all[k] - all[k - 1] > 1e-6 {
                let want = scale_by_sqrt(&vecs.slice(s![.., ..k]).to_owned(), &d);
                assert!(sin_theta(&want, &scaled) <= 1e-6);
            }
        }
    }
}

#[test]
fn connected_graph_has_constant_null_vector() {
    let mut rng = rng(6);
    let g = DenseGraph::new(random_graph(&mut rng, 30, 0.2)).unwrap();
    let pairs = generalized_smallest_eigs(&g, 2, &EigenOptions::default()).unwrap();
    assert!(pairs.values[0].abs() < 1e-12);
    assert!(pairs.values[1] > 1e-6);
    let v = pairs.vectors.column(0);
    assert!(v.iter().all(|x| (x - v[0]).abs() < 1e-10));
}

#[test]
fn components_each_get_a_null_vector() {
    let mut w = Array2::zeros((6, 6));
    for &(i, j) in &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5)] {
        w[[i, j]] = 1.0;
        w[[j, i]] = 1.0;
    }
    let g = DenseGraph::new(w).unwrap();
    let pairs = generalized_smallest_eigs(&g, 3, &EigenOptions::default()).unwrap();
    assert!(pairs.values[0].abs() < 1e-12 && pairs.values[1].abs() < 1e-12);
    assert!(pairs.values[2] > 0.1);
    // each null vector is constant on each component
    for col in pairs.vectors.slice(s![.., ..2]).columns() {
        assert!((col[0] - col[1]).abs() < 1e-10 && (col[1] - col[2]).abs() < 1e-10);
        assert!((col[3] - col[4]).abs() < 1e-10 && (col[4] - col[5]).abs() < 1e-10);
    }
}

#[test]
fn output_is_deterministic_with_sign_convention() {
    let mut rng = rng(7);
    let g = DenseGraph::new(random_graph(&mut rng, 60, 0.2)).unwrap();
    for opts in [EigenOptions::default(), lanczos()] {
        let a = generalized_smallest_eigs(&g, 4, &opts).unwrap();
        let b = generalized_smallest_eigs(&g, 4, &opts).unwrap();
        assert_eq!(a, b);
        for col in a.vectors.columns() {
            let big = col
                .iter()
                .copied()
                .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            assert!(big > 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generalized_spectrum_lies_in_zero_two(seed in any::<u64>(), n in 2usize..25, density in 0.0f64..1.0) {
        let mut rng = rng(seed);
        let g = DenseGraph::new(random_graph(&mut rng, n, density)).unwrap();
        let pairs = generalized_smallest_eigs(&g, n, &EigenOptions::default()).unwrap();
        for v in &pairs.values {
            prop_assert!(*v >= -1e-10 && *v <= 2.0 + 1e-10);
        }
        for w in pairs.values.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
    }
}
