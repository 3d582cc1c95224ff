mod common;

use proptest::prelude::*;

use approxsym::afp::{afp_solve, AfpOptions};
use approxsym::brain::{binarize_density, target_edge_count, WeightedMatrix};
use approxsym::doubly_stochastic::DoublyStochastic;
use approxsym::generators::{gen_lrm, random_perm_max_fp, reshuffle_perm, rewire_k};
use approxsym::harness::{fmt_sig10, read_csv, records_to_csv, ExperimentRecord, Method};
use approxsym::metrics::{epsilon, mismatch_count, permute_graph, symmetry_coefficient};
use approxsym::qsa::{qsa_solve_observed, InitSpec, QsaOptions};
use approxsym::{Graph, Permutation, SolverReport};

fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
            let mut g = Graph::empty(n);
            let mut k = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if bits[k] {
                        g.add_edge(i, j);
                    }
                    k += 1;
                }
            }
            g
        })
    })
}

fn perm_strategy(n: usize) -> impl Strategy<Value = Permutation> {
    Just((0..n).collect::<Vec<usize>>())
        .prop_shuffle()
        .prop_map(|img| Permutation::from_images(img).unwrap())
}

fn graph_and_perm(max_n: usize) -> impl Strategy<Value = (Graph, Permutation)> {
    graph_strategy(max_n).prop_flat_map(|g| {
        let n = g.n();
        (Just(g), perm_strategy(n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn graph_text_round_trip(g in graph_strategy(12)) {
        let text = g.to_text();
        let back = Graph::parse_text(&text).unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(back.to_text(), text);
    }

    #[test]
    fn perm_text_round_trip(p in (1usize..40).prop_flat_map(perm_strategy)) {
        let text = p.to_text();
        prop_assert_eq!(Permutation::parse_text(&text).unwrap(), p);
    }

    #[test]
    fn inverse_composes_to_identity(p in (1usize..40).prop_flat_map(perm_strategy)) {
        prop_assert!(p.compose(&p.inverse()).unwrap().is_identity());
        prop_assert!(p.inverse().compose(&p).unwrap().is_identity());
    }

    #[test]
    fn mismatches_are_even_and_bounded((g, p) in graph_and_perm(10)) {
        let m = mismatch_count(&g, &p).unwrap();
        prop_assert_eq!(m % 2, 0);
        prop_assert!(epsilon(&g, &p).unwrap() <= g.m() as u64);
        if g.n() >= 2 {
            let s = symmetry_coefficient(&g, &p).unwrap();
            prop_assert!((0.0..=1.0).contains(&s));
        }
    }

    #[test]
    fn epsilon_counts_lost_edges((g, p) in graph_and_perm(10)) {
        let h = permute_graph(&g, &p).unwrap();
        prop_assert_eq!(h.m(), g.m());
        let lost = g.edges().iter().filter(|&&(i, j)| !h.has_edge(i, j)).count() as u64;
        prop_assert_eq!(epsilon(&g, &p).unwrap(), lost);
        prop_assert_eq!(epsilon(&g, &p).unwrap(), epsilon(&g, &p.inverse()).unwrap());
    }

    #[test]
    fn epsilon_invariant_under_relabelling((g, p) in graph_and_perm(9), seed in any::<u64>()) {
        let n = g.n();
        let mut r = common::rng(seed);
        let sigma = common::random_perm(n, &mut r);
        let h = permute_graph(&g, &sigma).unwrap();
        // p on g corresponds to σ p σ⁻¹ on the relabelled graph.
        let conj = sigma.compose(&p).unwrap().compose(&sigma.inverse()).unwrap();
        prop_assert_eq!(epsilon(&g, &p).unwrap(), epsilon(&h, &conj).unwrap());
    }

    #[test]
    fn capped_random_perms(n in 2usize..60, k_frac in 0.0f64..1.0, seed in any::<u64>()) {
        let k = (k_frac * n as f64) as usize;
        let p = random_perm_max_fp(n, k, seed).unwrap();
        prop_assert!(p.fixed_points() <= k);
        prop_assert_eq!(p.clone(), random_perm_max_fp(n, k, seed).unwrap());
    }

    #[test]
    fn reshuffle_moves_at_most_two_per_swap(
        p in (2usize..50).prop_flat_map(perm_strategy),
        l in 0usize..20,
        seed in any::<u64>(),
    ) {
        let q = reshuffle_perm(&p, l, seed).unwrap();
        prop_assert!(q.hamming(&p).unwrap() <= 2 * l);
    }

    #[test]
    fn blends_are_feasible(p in (1usize..30).prop_flat_map(perm_strategy), lambda in 0.0f64..=1.0) {
        let d = DoublyStochastic::blend(&p, lambda).unwrap();
        let (dev, min) = d.feasibility();
        prop_assert!(dev < 1e-12);
        prop_assert!(min >= 0.0);
    }

    #[test]
    fn sig10_round_trips(x in -1e12f64..1e12) {
        let back: f64 = fmt_sig10(x).parse().unwrap();
        prop_assert!((back - x).abs() <= 1e-9 * x.abs().max(1e-300));
    }

    #[test]
    fn binarisation_hits_target(n in 2usize..25, rho in 0.01f64..=1.0, seed in any::<u64>()) {
        use rand::Rng;
        let mut r = common::rng(seed);
        let mut rows = vec![vec![0.0; n]; n];
        for (i, j) in (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))) {
            let w = r.random_range(0.01..1.0);
            rows[i][j] = w;
            rows[j][i] = w;
        }
        let g = binarize_density(&WeightedMatrix::from_rows(rows).unwrap(), rho).unwrap();
        prop_assert_eq!(g.m(), target_edge_count(n, rho));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rewiring_keeps_edges_and_bounds_error(
        half in 3usize..20,
        k in 0usize..30,
        seed in any::<u64>(),
    ) {
        let inst = gen_lrm(2 * half, 0.3, 0.4, seed).unwrap();
        prop_assume!(inst.graph.m() > 0 && inst.graph.m() < half * (2 * half - 1));
        let g = rewire_k(&inst.graph, k, seed ^ 1).unwrap();
        prop_assert_eq!(g.m(), inst.graph.m());
        prop_assert!(epsilon(&g, &inst.lr).unwrap() <= 2 * k as u64);
    }

    #[test]
    fn qsa_report_is_consistent((g, _) in graph_and_perm(14), seed in any::<u64>()) {
        prop_assume!(g.n() >= 2);
        let mut worst_dev = 0.0f64;
        let mut min_entry = 0.0f64;
        let rep = qsa_solve_observed(&g, &QsaOptions::default(), seed, |_, x| {
            let (dev, min) = x.feasibility();
            worst_dev = worst_dev.max(dev);
            min_entry = min_entry.min(min);
        }).unwrap();
        prop_assert!(worst_dev < 1e-9);
        prop_assert!(min_entry > -1e-12);
        prop_assert_eq!(rep.epsilon, epsilon(&g, &rep.final_perm).unwrap());
        prop_assert_eq!(rep.fixed_point_count, rep.final_perm.fixed_points());
        prop_assert_eq!(rep.objective_trace.len(), rep.iters + 1);
        for w in rep.objective_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9);
        }
        prop_assert_eq!(SolverReport::from_json(&rep.to_json()).unwrap(), rep);
    }

    #[test]
    fn afp_respects_cap((g, _) in graph_and_perm(14), cap in 0usize..8, seed in any::<u64>()) {
        prop_assume!(g.n() >= 3);
        let k = cap.min(g.n());
        let opts = AfpOptions {
            max_fp: Some(k),
            budget: Some(3000),
            seed,
            init: InitSpec::Random,
            ..AfpOptions::default()
        };
        let rep = afp_solve(&g, &opts).unwrap();
        prop_assert!(rep.fixed_point_count <= k);
        prop_assert!(!rep.is_identity);
        prop_assert_eq!(rep.epsilon, epsilon(&g, &rep.final_perm).unwrap());
        prop_assert_eq!(SolverReport::from_json(&rep.to_json()).unwrap(), rep);
    }

    #[test]
    fn csv_round_trip_is_byte_exact(rows in proptest::collection::vec(
        (any::<u64>(), 0usize..100, 0.0f64..1.0, 0i64..5000, any::<bool>(), any::<bool>()), 1..20)
    ) {
        let records: Vec<ExperimentRecord> = rows
            .iter()
            .enumerate()
            .map(|(k, &(seed, run, s, eps, ident, afp))| ExperimentRecord {
                model: "lrm-rewired".into(),
                params: format!("k={k};n=200;p=0.15;q=0.25"),
                method: if afp { Method::Afp } else { Method::Qsa },
                seed,
                run_index: run,
                s,
                epsilon: eps,
                fixed_points: (eps % 7) - 1,
                hd_to_reference: eps % 200,
                is_identity: ident,
                iterations: run as u64 * 3,
                wall_ms: 0,
            })
            .collect();
        let text = records_to_csv(&records);
        let back = read_csv(text.as_bytes()).unwrap();
        prop_assert_eq!(records_to_csv(&back), text);
        for (a, b) in records.iter().zip(&back) {
            prop_assert!((a.s - b.s).abs() <= 1e-9);
            prop_assert_eq!(a.seed, b.seed);
            prop_assert_eq!(&a.params, &b.params);
        }
    }
}
