use num_traits::Zero;
use privcon::augment::{build_alg2, solve_p1d, AugmentedSystem, SplitChoice};
use privcon::catalog::{canonical_form, find_isomorphism, relabelings, shape_form};
use privcon::exactla::{dot, format_rational, int, parse_rational, rank, ratio, to_f64, Matrix, Rational, RowBasis};
use privcon::netgraph::{detailed_balance, is_row_stochastic, random_reversible, reversibility_vector, WeightedDigraph};
use privcon::simulate::{iterate_exact, max_abs_diff, run_agents, run_distributed_s, run_matrix};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Case {
    a: privcon::exactla::RationalMatrix,
    x0: Vec<Rational>,
    split: SplitChoice,
}

fn case(n: usize, seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_reversible(n, rng.gen_range(0..=n), &mut rng);
    let x0 = (0..n).map(|_| ratio(rng.gen_range(-50..=50), rng.gen_range(1..=20))).collect();
    let parts = (0..n).map(|_| (0..4).map(|_| ratio(rng.gen_range(1..=30), rng.gen_range(1..=7))).collect()).collect();
    Case { a, x0, split: SplitChoice::new(parts) }
}

fn mean(x: &[Rational]) -> Rational {
    x.iter().fold(Rational::zero(), |s, v| s + v) / int(x.len() as i64)
}

fn config() -> ProptestConfig {
    ProptestConfig { cases: 128, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn five_n_is_row_stochastic_and_balanced(n in 3usize..=8, seed in any::<u64>()) {
        let c = case(n, seed);
        let sys = solve_p1d(&c.a, &c.x0, Some(&c.split)).unwrap();
        prop_assert!(is_row_stochastic(&sys.ap));
        let v = sys.v_left.as_ref().unwrap();
        prop_assert!(detailed_balance(&sys.ap, v));
        prop_assert_eq!(&sys.ap.vec_mul(v).unwrap(), v);
    }

    #[test]
    fn five_n_encodes_the_average(n in 3usize..=8, seed in any::<u64>()) {
        let c = case(n, seed);
        let sys = solve_p1d(&c.a, &c.x0, Some(&c.split)).unwrap();
        let v = sys.v_left.as_ref().unwrap();
        prop_assert_eq!(dot(v, sys.x_tilde0.as_ref().unwrap()), mean(&c.x0));
    }

    #[test]
    fn distributed_s_equals_centralized(n in 3usize..=8, seed in any::<u64>()) {
        let c = case(n, seed);
        let sys = solve_p1d(&c.a, &c.x0, None).unwrap();
        let s = run_distributed_s(&sys.ap, n).unwrap();
        prop_assert_eq!(&s, &reversibility_vector(&sys.ap).unwrap());
        prop_assert_eq!(run_distributed_s(&sys.ap, n).unwrap(), s);
    }

    #[test]
    fn agents_track_matrix(n in 3usize..=8, seed in any::<u64>()) {
        let c = case(n, seed);
        let sys = solve_p1d(&c.a, &c.x0, Some(&c.split)).unwrap();
        let x0 = sys.x_tilde0_f64().unwrap();
        let m = run_matrix(&sys.ap, &x0, 1e-300, 100).unwrap();
        let g = run_agents(&sys, 1e-300, 100).unwrap();
        prop_assert_eq!(m.states.len(), g.states.len());
        for (x, y) in m.states.iter().zip(&g.states) {
            prop_assert!(max_abs_diff(x, y) <= 1e-12);
        }
    }

    #[test]
    fn weighted_sum_is_conserved(n in 3usize..=8, seed in any::<u64>()) {
        let c = case(n, seed);
        let sys = solve_p1d(&c.a, &c.x0, Some(&c.split)).unwrap();
        let v: Vec<f64> = sys.v_left.as_ref().unwrap().iter().map(to_f64).collect();
        let t = run_matrix(&sys.ap, &sys.x_tilde0_f64().unwrap(), 1e-300, 500).unwrap();
        let q0 = dot(&v, &t.states[0]);
        for x in &t.states {
            prop_assert!((dot(&v, x) - q0).abs() <= 1e-10);
        }
    }

    #[test]
    fn weighted_sum_is_conserved_exactly(n in 3usize..=5, seed in any::<u64>()) {
        let c = case(n, seed);
        let sys = solve_p1d(&c.a, &c.x0, Some(&c.split)).unwrap();
        let v = sys.v_left.as_ref().unwrap();
        let q0 = mean(&c.x0);
        for x in iterate_exact(&sys.ap, sys.x_tilde0.as_ref().unwrap(), 4).unwrap() {
            prop_assert_eq!(dot(v, &x), q0.clone());
        }
    }

    #[test]
    fn four_n_encodes_the_average(n in 3usize..=8, seed in any::<u64>()) {
        let c = case(n, seed);
        let g = WeightedDigraph::from_matrix(&c.a).unwrap();
        let split = SplitChoice::new(c.split.parts.iter().map(|p| p[..3].to_vec()).collect());
        let sys = build_alg2(&g, &c.x0, Some(&split)).unwrap();
        prop_assert!(is_row_stochastic(&sys.ap));
        prop_assert_eq!(dot(sys.v_left.as_ref().unwrap(), sys.x_tilde0.as_ref().unwrap()), mean(&c.x0));
    }

    #[test]
    fn system_json_round_trips(n in 3usize..=6, seed in any::<u64>()) {
        let c = case(n, seed);
        let sys = solve_p1d(&c.a, &c.x0, Some(&c.split)).unwrap();
        prop_assert_eq!(AugmentedSystem::from_json(&sys.to_json()).unwrap(), sys);
    }

    #[test]
    fn rational_text_round_trips(p in -10_000i64..10_000, q in 1i64..10_000) {
        let r = ratio(p, q);
        prop_assert_eq!(parse_rational(&format_rational(&r)).unwrap(), r);
    }

    #[test]
    fn basis_rank_matches_elimination(rows in 1usize..6, cols in 1usize..6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<Vec<Rational>> = (0..rows)
            .map(|_| (0..cols).map(|_| ratio(rng.gen_range(-2..=2), rng.gen_range(1..=3))).collect())
            .collect();
        let m = Matrix::from_rows(data.clone()).unwrap();
        let b = RowBasis::from_matrix(&m);
        prop_assert_eq!(b.rank(), rank(&m));
        for row in &data {
            prop_assert!(b.contains(row));
        }
    }

    #[test]
    fn canonical_forms_decide_isomorphism(mask_a in 0u64..4096, mask_b in 0u64..4096, pick in 0usize..6) {
        let pairs: Vec<(usize, usize)> = (0..4).flat_map(|u| (0..4).filter(move |&v| v != u).map(move |v| (u, v))).collect();
        let edges = |mask: u64| -> Vec<(usize, usize)> { (0..12).filter(|k| mask >> k & 1 == 1).map(|k| pairs[k]).collect() };
        let (a, b) = (edges(mask_a), edges(mask_b));
        let same = canonical_form(4, &a) == canonical_form(4, &b);
        let witness = find_isomorphism(4, &a, &b, true);
        prop_assert_eq!(same, witness.is_some());
        if let Some(p) = witness {
            prop_assert_eq!(p[0], 0);
        }
        // any relabeling fixing node 0 keeps the form
        let p = &relabelings(4, true)[pick];
        let moved: Vec<(usize, usize)> = a.iter().map(|&(u, v)| (p[u], p[v])).collect();
        prop_assert_eq!(canonical_form(4, &moved), canonical_form(4, &a));
        prop_assert_eq!(shape_form(4, &moved), shape_form(4, &a));
    }
}
