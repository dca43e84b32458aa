use privcon::augment::{build_alg1_unchecked, build_alg2, build_alg3, plain, recover_split, solve_p1d, SplitChoice};
use privcon::exactla::{dot, eigen_magnitudes, rationalize, ratio, to_f64, unit_vector, Matrix, Rational};
use privcon::fixtures;
use privcon::netgraph::{reversibility_vector, to_matrix, Digraph};
use privcon::privacy::{audit, can_recover, can_recover_at, is_observable, ObserverMode, ObserverSpec, Verdict};
use privcon::simulate::{convergence_stats, run_agents, run_distributed_s, run_matrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rationalized(x: &[f64]) -> Vec<Rational> {
    x.iter().map(|&v| rationalize(v, 1_000_000).unwrap()).collect()
}

fn split_from_raw(raw: &[f64], n: usize, d: usize) -> SplitChoice {
    let q = rationalized(raw);
    SplitChoice::new((0..n).map(|i| q[n + d * i..n + d * (i + 1)].to_vec()).collect())
}

#[test]
fn four_n_matrix_and_left_vector() {
    let sys = build_alg2(&fixtures::triangle(), &fixtures::triangle_x0(), None).unwrap();
    assert_eq!(sys.ap, fixtures::triangle_4n());
    assert_eq!(sys.v_left.as_ref().unwrap(), &fixtures::triangle_4n_left());
}

#[test]
fn four_n_encoding_matches_published_state() {
    let raw = fixtures::triangle_4n_raw_state();
    let split = split_from_raw(&raw, 3, 3);
    let sys = build_alg2(&fixtures::triangle(), &fixtures::triangle_x0(), Some(&split)).unwrap();
    let x = sys.x_tilde0_f64().unwrap();
    for (got, want) in x.iter().zip(fixtures::triangle_4n_state()) {
        assert!((got - want).abs() < 1e-5, "{got} vs {want}");
    }
    assert_eq!(dot(sys.v_left.as_ref().unwrap(), sys.x_tilde0.as_ref().unwrap()), ratio(31, 90));
}

#[test]
fn four_n_recoverability_facts() {
    let sys = build_alg2(&fixtures::triangle(), &fixtures::triangle_x0(), None).unwrap();
    let c = Matrix::selector(&[0, 1, 2, 3, 4, 5], 12);
    let zero = Rational::from_integer(0.into());
    for k in [9, 11] {
        let e: Vec<Rational> = unit_vector(12, k);
        assert!(!can_recover_at(&sys.ap, &c, &e, &zero).unwrap());
        assert!(!can_recover(&sys.ap, &c, &e).unwrap());
    }
    let mut w: Vec<Rational> = vec![zero.clone(); 12];
    w[6] = ratio(1, 1);
    w[7] = ratio(1, 1);
    w[8] = ratio(1, 2);
    assert!(can_recover_at(&sys.ap, &c, &w, &zero).unwrap());
    assert!(can_recover(&sys.ap, &c, &unit_vector(12, 7)).unwrap());
}

#[test]
fn five_n_matrix_and_stationary_vector() {
    let a = to_matrix(&fixtures::triangle());
    assert_eq!(build_alg3(&a).unwrap(), fixtures::triangle_5n());
    let sys = solve_p1d(&a, &fixtures::triangle_x0(), None).unwrap();
    assert_eq!(sys.v_left.as_ref().unwrap(), &fixtures::triangle_5n_s());
    assert_eq!(reversibility_vector(&sys.ap).unwrap(), fixtures::triangle_5n_s());
    assert_eq!(run_distributed_s(&sys.ap, 3).unwrap(), fixtures::triangle_5n_s());
}

#[test]
fn five_n_published_state_is_a_valid_encoding() {
    let a = to_matrix(&fixtures::triangle());
    let printed = fixtures::triangle_5n_state();
    let probe = solve_p1d(&a, &fixtures::triangle_x0(), None).unwrap();
    let split = recover_split(&probe, &printed).unwrap();
    let sys = solve_p1d(&a, &fixtures::triangle_x0(), Some(&split)).unwrap();
    // four printed decimals; rescaling the split to x_i / N spreads their rounding
    for (got, want) in sys.x_tilde0_f64().unwrap().iter().zip(&printed) {
        assert!((got - want).abs() < 2e-4, "{got} vs {want}");
    }
}

#[test]
fn five_n_converges_from_published_state() {
    let sys = solve_p1d(&to_matrix(&fixtures::triangle()), &fixtures::triangle_x0(), None).unwrap();
    let x0: Vec<f64> = rationalized(&fixtures::triangle_5n_state()).iter().map(to_f64).collect();
    let t = run_matrix(&sys.ap, &x0, 1e-15, 200).unwrap();
    let err = t.states[200].iter().map(|v| (v - 31.0 / 90.0).abs()).fold(0.0, f64::max);
    assert!(err < 1e-4, "error {err}");
}

#[test]
fn five_n_agents_settle_by_round_200() {
    let sys = solve_p1d(&to_matrix(&fixtures::triangle()), &fixtures::triangle_x0(), None).unwrap();
    let t = run_agents(&sys, 1e-6, 200).unwrap();
    assert!(t.converged);
    assert!((t.consensus_value.unwrap() - 31.0 / 90.0).abs() < 1e-6);
}

#[test]
fn augmentation_slows_settling() {
    let x0: Vec<f64> = fixtures::triangle_x0().iter().map(to_f64).collect();
    let raw = run_matrix(&to_matrix(&fixtures::triangle()), &x0, 1e-12, 2000).unwrap();
    let sys = solve_p1d(&to_matrix(&fixtures::triangle()), &fixtures::triangle_x0(), None).unwrap();
    let aug = run_matrix(&sys.ap, &sys.x_tilde0_f64().unwrap(), 1e-12, 2000).unwrap();
    let target = 31.0 / 90.0;
    let fast = convergence_stats(&raw, target).rounds_to[0].1.unwrap();
    let slow = convergence_stats(&aug, target).rounds_to[0].1.unwrap();
    assert!(slow > fast, "{slow} <= {fast}");
}

#[test]
fn eleven_agent_network() {
    let a = fixtures::ring11_matrix();
    let x0 = fixtures::ring11_x0();
    let sys = solve_p1d(&a, &x0, None).unwrap();
    assert_eq!(sys.dim(), 55);
    assert_eq!(sys.v_left.as_ref().unwrap(), &fixtures::ring11_5n_s());
    assert_eq!(run_distributed_s(&sys.ap, 11).unwrap(), fixtures::ring11_5n_s());
    // degree-proportional, not uniform: the walk visits degree-3 agents more often
    let s_orig = reversibility_vector(&a).unwrap();
    assert_eq!(s_orig[0], ratio(1, 10));
    assert_eq!(s_orig[6], ratio(1, 15));

    let target = 4.44 / 11.0;
    let t = run_matrix(&sys.ap, &sys.x_tilde0_f64().unwrap(), 1e-12, 500).unwrap();
    let err = t.last().iter().map(|v| (v - target).abs()).fold(0.0, f64::max);
    assert!(err < 1e-4, "error {err}");
}

#[test]
fn eleven_agent_published_state() {
    let sys = solve_p1d(&fixtures::ring11_matrix(), &fixtures::ring11_x0(), None).unwrap();
    let printed = fixtures::ring11_5n_state();
    let x0: Vec<f64> = rationalized(&printed).iter().map(to_f64).collect();
    let t = run_matrix(&sys.ap, &x0, 1e-12, 500).unwrap();
    let err = t.states[500].iter().map(|v| (v - 4.44 / 11.0).abs()).fold(0.0, f64::max);
    assert!(err < 1e-4, "error {err}");
    // each agent's gadget carries exactly its share x_i / N
    let v = sys.v_left.as_ref().unwrap();
    for (i, states) in sys.index_map.iter().enumerate() {
        let share: f64 = states.iter().map(|&k| to_f64(&v[k]) * printed[k]).sum();
        assert!((share - to_f64(&fixtures::ring11_x0()[i]) / 11.0).abs() < 1e-6);
    }
}

#[test]
fn raw_triangle_is_observable_from_every_agent() {
    let sys = plain(&fixtures::triangle(), None).unwrap();
    for i in 0..3 {
        let c = ObserverSpec::new(&sys, i, &[], ObserverMode::Minimal).unwrap().output_matrix(3);
        assert!(is_observable(&sys.ap, &c).unwrap());
        // its own state alone is not enough: the other two are symmetric
        assert!(!is_observable(&sys.ap, &Matrix::selector(&[i], 3)).unwrap());
    }
    assert_eq!(audit(&sys, 0, &[], ObserverMode::Minimal).unwrap().verdict, Verdict::NotPrivate);
}

#[test]
fn five_n_triangle_is_private_for_every_observer() {
    let sys = solve_p1d(&to_matrix(&fixtures::triangle()), &fixtures::triangle_x0(), None).unwrap();
    for mode in [ObserverMode::Minimal, ObserverMode::ProofStrength] {
        for o in 0..3 {
            let r = audit(&sys, o, &[], mode).unwrap();
            assert_eq!(r.verdict, Verdict::Private, "{}", r.summary());
            for t in &r.targets {
                assert_eq!(t.gadget_basis, vec![true, false, false, false]);
                assert!(!t.plain_sum);
                assert_eq!(t.inverse_weighted, Some(false));
                assert_eq!(t.value_functional, Some(true));
            }
        }
    }
}

#[test]
fn two_agent_random_gadget_is_periodic() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let sys = build_alg1_unchecked(&fixtures::two_agents(), None, &mut rng, true).unwrap();
    assert_eq!(sys.dim(), 6);
    assert_eq!(Digraph::of_matrix(&sys.ap).period(), Ok(2));
    let unit = eigen_magnitudes(&sys.ap).iter().filter(|m| (*m - 1.0).abs() < 1e-9).count();
    assert_eq!(unit, 2);
    let t = run_matrix(&sys.ap, &[0.9, 0.1, 0.4, 0.6, 0.2, 0.7], 1e-9, 10_000).unwrap();
    assert!(!t.converged);
    assert!(t.period_two_suspected(1e-9));
}

#[test]
fn coalition_of_all_others_sees_more() {
    let sys = solve_p1d(&fixtures::ring11_matrix(), &fixtures::ring11_x0(), None).unwrap();
    let alone = audit(&sys, 0, &[], ObserverMode::Minimal).unwrap();
    let pooled = audit(&sys, 0, &(1..10).collect::<Vec<_>>(), ObserverMode::Minimal).unwrap();
    assert!(pooled.observable_rank >= alone.observable_rank);
    assert_eq!(pooled.targets.len(), 1);
}
