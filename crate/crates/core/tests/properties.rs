mod common;

use identset_core::capacity::{capacity_from_combos, check_capacity, choquet_integral};
use identset_core::games::{pure_nash, Covariates, CustomTable};
use identset_core::identify::multinomial;
use identset_core::mixed::Scenarios;
use identset_core::{Builtin, GridSpec, Integration, LatentDistribution, MixedCapacitySpec, SubsetIndex};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn family_scenarios(theta: f64) -> Scenarios {
    let nu = LatentDistribution::uniform_box(vec![[-1.0, 1.0]; 2]).unwrap();
    let spec = MixedCapacitySpec::builtin(Builtin::FamilyBargaining, vec![theta], nu, Integration::ClosedForm).unwrap();
    Scenarios::build(&spec).unwrap()
}

fn vec4() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, 4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn likelihoods_are_submodular_capacities(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let combos = common::random_combos(&mut rng, n);
        let cap = capacity_from_combos(&combos);
        let report = check_capacity(&cap);
        prop_assert!(report.all(), "{report:?}");
        prop_assert!((cap.value(SubsetIndex::full(n)) - 1.0).abs() < 1e-12);
        prop_assert_eq!(cap.value(SubsetIndex::EMPTY), 0.0);
    }

    #[test]
    fn choquet_integral_of_indicator_is_capacity(seed in any::<u64>(), n in 1usize..7, bits in any::<u32>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cap = capacity_from_combos(&common::random_combos(&mut rng, n));
        let a = SubsetIndex(bits & ((1 << n) - 1));
        let f: Vec<f64> = (0..n).map(|k| if a.contains(k) { 1.0 } else { 0.0 }).collect();
        prop_assert!((choquet_integral(&f, &cap).unwrap() - cap.value(a)).abs() < 1e-12);
    }

    #[test]
    fn pure_methods_agree(seed in any::<u64>(), n in 2usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let combos = common::random_combos(&mut rng, n);
        let p = common::random_p(&mut rng, &combos);
        let v = common::verdicts(&combos, &p, false);
        prop_assert!(v.iter().all(|&x| x == v[0]), "{v:?}");
    }

    #[test]
    fn support_functional_is_sublinear(f in vec4(), g in vec4(), k in 0.01..10.0f64, c in -2.0..2.0f64, theta in 0.1..2.0f64) {
        let s = family_scenarios(theta);
        let (lf, lg) = (s.value(&f), s.value(&g));
        let sum: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a + b).collect();
        prop_assert!(s.value(&sum) <= lf + lg + 1e-9);
        let scaled: Vec<f64> = f.iter().map(|a| k * a).collect();
        prop_assert!((s.value(&scaled) - k * lf).abs() <= 1e-9 * (1.0 + k * lf.abs()));
        let shifted: Vec<f64> = f.iter().map(|a| a + c).collect();
        prop_assert!((s.value(&shifted) - lf - c).abs() <= 1e-9 * (1.0 + lf.abs()));
        prop_assert!(lf >= f.iter().cloned().fold(f64::INFINITY, f64::min) - 1e-12);
        prop_assert!(lf <= f.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1e-12);
    }

    #[test]
    fn mixed_equilibria_are_distributions(e1 in -3.0..3.0f64, e2 in -3.0..3.0f64, theta in 0.05..2.0f64) {
        let nu = LatentDistribution::uniform_box(vec![[-1.0, 1.0]; 2]).unwrap();
        let spec = MixedCapacitySpec::builtin(Builtin::FamilyBargaining, vec![theta], nu, Integration::ClosedForm).unwrap();
        let sigmas = spec.equilibria(&[e1, e2]).unwrap();
        prop_assert!(!sigmas.is_empty());
        for s in &sigmas {
            prop_assert!(s.iter().all(|&x| x >= -1e-15));
            prop_assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pure_equilibria_ignore_affine_payoff_changes(
        payoffs in prop::collection::vec(prop::collection::vec(-2.0..2.0f64, 2), 4),
        eps in prop::collection::vec(-1.0..1.0f64, 2),
        scale in 0.1..5.0f64,
        shift in prop::collection::vec(-3.0..3.0f64, 2),
    ) {
        let table = CustomTable { name: None, actions: vec![2, 2], payoffs: payoffs.clone(), outcomes: None };
        let moved = CustomTable {
            payoffs: payoffs.iter().map(|row| row.iter().zip(&shift).map(|(u, s)| scale * u + s).collect()).collect(),
            ..table.clone()
        };
        let scaled_eps: Vec<f64> = eps.iter().map(|e| scale * e).collect();
        let x = Covariates::new();
        let a = pure_nash(&table.game().unwrap(), &[], &x, &eps);
        let b = pure_nash(&moved.game().unwrap(), &[], &x, &scaled_eps);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn multinomial_counts_sum_to_size(seed in any::<u64>(), size in 0u64..5000, w in prop::collection::vec(0.0..1.0f64, 1..9)) {
        let total: f64 = w.iter().sum();
        prop_assume!(total > 0.0);
        let probs: Vec<f64> = w.iter().map(|x| x / total).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let counts = multinomial(&mut rng, size, &probs);
        prop_assert_eq!(counts.iter().sum::<u64>(), size);
        for (c, p) in counts.iter().zip(&probs) {
            if *p == 0.0 {
                prop_assert_eq!(*c, 0);
            }
        }
    }

    #[test]
    fn grid_plans_enumerate_the_product(s1 in 0usize..6, s2 in 0usize..6, k in 0usize..64) {
        let json = format!(r#"{{"a": {{"min": -1, "max": 0, "steps": {s1}}}, "b": {{"values": [1, 2, {s2}]}}}}"#);
        let plan = GridSpec::from_json(&json).unwrap().plan(&["a".into(), "b".into()], 1000).unwrap();
        prop_assert_eq!(plan.len(), (s1 + 1) * 3);
        let k = k % plan.len();
        let theta = plan.theta(k);
        prop_assert_eq!(theta[1], [1.0, 2.0, s2 as f64][k % 3]);
        let expected_a = if s1 == 0 { -1.0 } else { -1.0 + (k / 3) as f64 / s1 as f64 };
        prop_assert!((theta[0] - expected_a).abs() < 1e-12);
    }
}
