use abqaoa::diagnostics;
use abqaoa::ofab::{bias_state, TiePolicy};
use abqaoa::quantum::{self, BiasFields, Schedule, StateVector};
use abqaoa::rng;
use abqaoa::sat::{self, Assignment, Formula};
use abqaoa::variational::update_bias;
use num_complex::Complex64 as C;
use proptest::prelude::*;
use std::f64::consts::PI;

fn formula(n: usize, alpha: f64, seed: u64) -> Formula {
    let max = sat::binomial3(n) as f64 / n as f64;
    sat::generate_instance(n, alpha.min(max), &mut rng::stream(seed, &[])).unwrap()
}

fn state(n: usize) -> impl Strategy<Value = StateVector> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n).prop_filter_map("non-zero", move |v| {
        let norm = v.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
        (norm > 1e-3).then(|| {
            StateVector::from_amplitudes(n, v.iter().map(|(a, b)| C::new(a / norm, b / norm)).collect()).unwrap()
        })
    })
}

fn angles(p: usize) -> impl Strategy<Value = Schedule> {
    (prop::collection::vec(-7.0f64..7.0, p), prop::collection::vec(-4.0f64..4.0, p))
        .prop_map(|(g, b)| Schedule::new(g, b).unwrap())
}

fn fields(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_instances_are_canonical(n in 3usize..12, alpha in 0.1f64..4.0, seed in any::<u64>()) {
        let f = formula(n, alpha, seed);
        let mut seen = std::collections::HashSet::new();
        for cl in f.clauses() {
            prop_assert!(cl[0] < cl[1] && cl[1] < cl[2] && cl[2] < n);
            prop_assert!(seen.insert(*cl));
        }
        let max = sat::binomial3(n) as f64 / n as f64;
        prop_assert_eq!(f.m(), sat::clause_count(n, alpha.min(max)));
    }

    #[test]
    fn penalty_bounds(n in 3usize..9, alpha in 0.2f64..3.0, seed in any::<u64>(), z in any::<u64>()) {
        let f = formula(n, alpha, seed);
        let a = Assignment::from_index(z % (1 << n), n);
        let e = sat::penalty_energy(&f, &a);
        let v = sat::violated_count(&f, &a);
        prop_assert!(v <= e && e <= 4 * v);
        prop_assert!(e <= 4 * f.m() as u32);
    }

    #[test]
    fn ground_is_minimal(n in 3usize..8, alpha in 0.2f64..3.0, seed in any::<u64>()) {
        let f = formula(n, alpha, seed);
        let g = sat::brute_force_ground(&f).unwrap();
        let c = quantum::build_cost_diagonal(&f).unwrap();
        prop_assert_eq!(g.energy, c.min());
        for &z in &g.ground_indices {
            prop_assert_eq!(c.energies()[z as usize], g.energy);
        }
        prop_assert_eq!(g.ground_indices.len(), c.energies().iter().filter(|&&e| e == g.energy).count());
        prop_assert!(sat::approximation_error(&f).unwrap() <= g.energy);
    }

    #[test]
    fn evolution_is_unitary(seed in any::<u64>(), s in angles(3), h in fields(5)) {
        let f = formula(5, 1.2, seed);
        let c = quantum::build_cost_diagonal(&f).unwrap();
        let h = BiasFields::new(h).unwrap();
        let psi = quantum::output_state(&s, &h, &c).unwrap();
        prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        let e = psi.expectation_energy(&c);
        prop_assert!(e >= c.min() as f64 - 1e-9 && e <= c.max() as f64 + 1e-9);
        for z in psi.expectation_z_all() {
            prop_assert!(z.abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn angle_periods(seed in any::<u64>(), s in angles(2), h in fields(4)) {
        let f = formula(4, 1.0, seed);
        let c = quantum::build_cost_diagonal(&f).unwrap();
        let h = BiasFields::new(h).unwrap();
        let e = quantum::output_state(&s, &h, &c).unwrap().expectation_energy(&c);
        let mut shifted = s.clone();
        shifted.gamma[0] += 2.0 * PI;
        shifted.beta[1] -= PI;
        let e2 = quantum::output_state(&shifted, &h, &c).unwrap().expectation_energy(&c);
        let mut canon = s.clone();
        canon.canonicalize();
        let e3 = quantum::output_state(&canon, &h, &c).unwrap().expectation_energy(&c);
        prop_assert!((e - e2).abs() < 1e-9);
        prop_assert!((e - e3).abs() < 1e-9);
    }

    #[test]
    fn state_metric_ranges(psi in state(5), seed in any::<u64>()) {
        let f = formula(5, 1.0, seed);
        let g = sat::brute_force_ground(&f).unwrap();
        let inf = diagnostics::infidelity(&psi, &g.ground_indices);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&inf));
        prop_assert!((inf + diagnostics::ground_weight(&psi, &g.ground_indices) - 1.0).abs() < 1e-12);
        let pr = diagnostics::participation_ratio(&psi);
        prop_assert!(pr >= 1.0 - 1e-9 && pr <= 32.0 + 1e-9);
        let se = diagnostics::entanglement_entropy_avg(&psi).unwrap();
        prop_assert!(se.mean >= 0.0 && se.mean <= diagnostics::max_average_entropy(5) + 1e-9);
    }

    #[test]
    fn entanglement_is_permutation_invariant(psi in state(5), perm in Just((0..5usize).collect::<Vec<_>>()).prop_shuffle()) {
        let amps = psi.amplitudes();
        let mut out = vec![C::new(0.0, 0.0); 32];
        for (z, &a) in amps.iter().enumerate() {
            let w = (0..5).fold(0usize, |acc, j| acc | ((z >> j & 1) << perm[j]));
            out[w] = a;
        }
        let permuted = StateVector::from_amplitudes(5, out).unwrap();
        let a = diagnostics::entanglement_entropy_avg(&psi).unwrap().mean;
        let b = diagnostics::entanglement_entropy_avg(&permuted).unwrap().mean;
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn bias_update_stays_bounded(h in prop::collection::vec(-1.0f64..=1.0, 6), z in prop::collection::vec(-1.0f64..=1.0, 6), l in 0.0f64..=1.0) {
        let next = update_bias(&BiasFields::new(h).unwrap(), &z, l);
        prop_assert!(next.as_slice().iter().all(|x| x.abs() <= 1.0 + 1e-15));
    }

    #[test]
    fn flipped_fields_complement_bias_state(h in prop::collection::vec(prop_oneof![-3.0f64..-1e-6, 1e-6f64..3.0], 1..12)) {
        let a = bias_state(&BiasFields::new(h.clone()).unwrap(), TiePolicy::Zero);
        let b = bias_state(&BiasFields::new(h.iter().map(|x| -x).collect()).unwrap(), TiePolicy::Zero);
        prop_assert_eq!(a.complement(), b);
    }
}
