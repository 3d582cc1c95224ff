mod common;

use approx::assert_relative_eq;
use ndarray::Array2;
use rand::Rng;

use approxsym::afp::delta_epsilon;
use approxsym::assignment::{lap_min, project_to_permutation};
use approxsym::doubly_stochastic::DoublyStochastic;
use approxsym::metrics::{asp_objective, asp_objective_perm, epsilon, mismatch_count, symmetry_coefficient};
use approxsym::qsa::{default_penalty, fw_linesearch, qsa_gradient};
use approxsym::stats::{ln_gamma, regularized_incomplete_beta, student_t_cdf, student_t_two_sided_p};
use approxsym::{PenaltyVector, Permutation};
use common::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

#[test]
fn epsilon_equals_quarter_frobenius_residual() {
    let mut r = rng(1);
    for _ in 0..300 {
        let n = r.random_range(1..=8);
        let g = random_graph(n, r.random(), &mut r);
        let p = random_perm(n, &mut r);
        let fro = frobenius_residual_sq(&g, p.images());
        assert_eq!(fro % 4, 0);
        assert_eq!(epsilon(&g, &p).unwrap() as i64, fro / 4);
        assert_eq!(mismatch_count(&g, &p).unwrap(), unordered_mismatches(&g, p.images()));
    }
}

#[test]
fn coefficient_of_k3_transposition() {
    let g = approxsym::Graph::complete(3);
    let p = Permutation::from_images(vec![1, 0, 2]).unwrap();
    assert_eq!(symmetry_coefficient(&g, &p).unwrap(), 0.0);
    let path = approxsym::Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
    // Edge {1,2} becomes {0,2}: epsilon 1 over ½·C(3,2).
    assert_relative_eq!(symmetry_coefficient(&path, &p).unwrap(), 2.0 / 3.0);
}

#[test]
fn lap_matches_enumeration() {
    let mut r = rng(2);
    for _ in 0..200 {
        let n = r.random_range(1..=7);
        let cost: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| r.random_range(-20..=20) as f64).collect())
            .collect();
        let arr = Array2::from_shape_fn((n, n), |(i, j)| cost[i][j]);
        let (p, c) = lap_min(arr.view()).unwrap();
        let achieved: f64 = (0..n).map(|i| cost[i][p.apply(i)]).sum();
        assert_eq!(c, achieved);
        assert_eq!(c, brute_force_lap(&cost));
    }
}

#[test]
fn projection_recovers_permutation_from_noisy_blend() {
    let mut r = rng(3);
    for _ in 0..50 {
        let n = r.random_range(2..=30);
        let p = random_perm(n, &mut r);
        let d = DoublyStochastic::blend(&p, 0.4).unwrap();
        assert_eq!(project_to_permutation(&d).unwrap(), p);
    }
}

#[test]
fn gradient_matches_central_differences() {
    let mut r = rng(4);
    for _ in 0..5 {
        let n = r.random_range(3..=12);
        let g = random_graph(n, 0.4, &mut r);
        let c = PenaltyVector::new((0..n).map(|_| r.random_range(0.0..3.0)).collect()).unwrap();
        let x = DoublyStochastic::blend(&random_perm(n, &mut r), 0.3).unwrap();
        let grad = qsa_gradient(&g, &x, &c).unwrap();
        let h = 1e-5;
        for _ in 0..20 {
            let (i, j) = (r.random_range(0..n), r.random_range(0..n));
            let eval = |delta: f64| {
                let mut m = x.matrix().clone();
                m[[i, j]] += delta;
                objective_raw(&g, &m, &c)
            };
            let fd = (eval(h) - eval(-h)) / (2.0 * h);
            assert!((fd - grad[[i, j]]).abs() < 1e-5, "({i},{j}): {fd} vs {}", grad[[i, j]]);
        }
    }
}

/// `−tr(A X A Xᵀ) + Σ c_i X_ii` for any square `X`, by explicit sums.
fn objective_raw(g: &approxsym::Graph, x: &Array2<f64>, c: &PenaltyVector) -> f64 {
    let n = g.n();
    let a = dense(g);
    let mut tr = 0.0;
    for i in 0..n {
        for j in 0..n {
            if a[i][j] == 0 {
                continue;
            }
            for k in 0..n {
                for l in 0..n {
                    // tr(A X A Xᵀ) = Σ A_ij X_jk A_kl X_il
                    if a[k][l] != 0 {
                        tr += x[[j, k]] * x[[i, l]];
                    }
                }
            }
        }
    }
    let lin: f64 = (0..n).map(|i| c.as_slice()[i] * x[[i, i]]).sum();
    lin - tr
}

#[test]
fn relaxed_objective_agrees_with_permutation_objective() {
    let mut r = rng(5);
    for _ in 0..100 {
        let n = r.random_range(2..=9);
        let g = random_graph(n, r.random(), &mut r);
        let p = random_perm(n, &mut r);
        let c = default_penalty(&g);
        let relaxed = asp_objective(&g, &DoublyStochastic::from_permutation(&p), &c).unwrap();
        assert_eq!(relaxed, asp_objective_perm(&g, &p, &c).unwrap());
        let x = DoublyStochastic::blend(&p, 0.6).unwrap();
        assert_relative_eq!(
            asp_objective(&g, &x, &c).unwrap(),
            objective_raw(&g, x.matrix(), &c),
            epsilon = 1e-9
        );
    }
}

#[test]
fn linesearch_is_grid_minimum() {
    let mut r = rng(6);
    for _ in 0..40 {
        let n = r.random_range(3..=10);
        let g = random_graph(n, 0.5, &mut r);
        let c = PenaltyVector::uniform(n, r.random_range(0.0..4.0)).unwrap();
        let x = DoublyStochastic::blend(&random_perm(n, &mut r), r.random()).unwrap();
        let q = random_perm(n, &mut r);
        let alpha = fw_linesearch(&g, &x, &q, &c).unwrap();
        assert!((0.0..=1.0).contains(&alpha));
        let qm = q.to_matrix();
        let at = |a: f64| objective_raw(&g, &(x.matrix() * (1.0 - a) + &qm * a), &c);
        let best = at(alpha);
        for k in 0..=100 {
            assert!(best <= at(k as f64 / 100.0) + 1e-9);
        }
    }
}

#[test]
fn swap_delta_matches_recomputation() {
    let mut r = rng(7);
    for _ in 0..300 {
        let n = r.random_range(2..=15);
        let g = random_graph(n, r.random(), &mut r);
        let mut p = random_perm(n, &mut r);
        let i = r.random_range(0..n);
        let j = (i + r.random_range(1..n)) % n;
        let before = unordered_mismatches(&g, p.images()) as i64;
        let d = delta_epsilon(&g, &p, i, j).unwrap();
        p.swap_images(i, j);
        assert_eq!(before + d, unordered_mismatches(&g, p.images()) as i64);
    }
}

#[test]
fn student_t_against_statrs() {
    for df in [1.0, 2.0, 3.0, 5.0, 9.0, 29.0, 99.0, 500.0] {
        let dist = StudentsT::new(0.0, 1.0, df).unwrap();
        for t in [-8.0, -3.2, -1.0, -0.1, 0.0, 0.4, 1.7, 2.5, 6.0] {
            let ours = student_t_cdf(t, df);
            assert!((ours - dist.cdf(t)).abs() < 1e-10, "df={df} t={t}");
            let two = 2.0 * dist.cdf(-f64::abs(t));
            assert!((student_t_two_sided_p(t, df) - two).abs() < 1e-10);
        }
    }
}

#[test]
fn special_functions_against_statrs() {
    for x in [0.1, 0.5, 1.0, 2.5, 7.0, 33.3, 150.0] {
        assert_relative_eq!(ln_gamma(x), statrs::function::gamma::ln_gamma(x), epsilon = 1e-10);
    }
    for (a, b) in [(0.5, 0.5), (1.0, 3.0), (14.5, 0.5), (2.0, 7.5), (50.0, 0.5)] {
        for x in [0.01, 0.2, 0.5, 0.77, 0.99] {
            let want = statrs::function::beta::beta_reg(a, b, x);
            assert!((regularized_incomplete_beta(x, a, b) - want).abs() < 1e-10, "I_{x}({a},{b})");
        }
    }
}
