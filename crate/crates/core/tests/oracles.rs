mod common;

use identset_core::capacity::{capacity_from_combos, check_capacity};
use identset_core::flow::feasible_with_flow;
use identset_core::games::{combos_analytic, combos_monte_carlo, Covariates};
use identset_core::{selection_from_flow, Builtin, GameDescriptor, Method, Model, ProbabilityVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{monotone_combos, random_combos, random_p, uniform_p, verdicts};

#[test]
fn pure_methods_agree_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 3..=10 {
        let mut inside = 0;
        for _ in 0..200 {
            let combos = random_combos(&mut rng, n);
            let p = random_p(&mut rng, &combos);
            let v = verdicts(&combos, &p, false);
            assert!(
                v.iter().all(|&x| x == v[0]),
                "n={n} verdicts {v:?} combos {combos:?} p {p:?}"
            );
            inside += v[0] as usize;
        }
        assert!(inside > 20 && inside < 180, "n={n}: {inside} of 200 inside");
    }
}

#[test]
fn interval_class_agrees_on_monotone_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in 3..=10 {
        for _ in 0..200 {
            let combos = monotone_combos(&mut rng, n);
            let p = random_p(&mut rng, &combos);
            let v = verdicts(&combos, &p, true);
            assert!(
                v.iter().all(|&x| x == v[0]),
                "n={n} verdicts {v:?} combos {combos:?} p {p:?}"
            );
        }
    }
}

#[test]
fn selection_mechanism_reproduces_marginals() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut checked = 0;
    for _ in 0..500 {
        let n = rng.random_range(2..=10);
        let combos = random_combos(&mut rng, n);
        let p = random_p(&mut rng, &combos);
        let (check, net, flow) = feasible_with_flow(&combos, &p).unwrap();
        if check.inside {
            let sel = selection_from_flow(&net, &flow).unwrap();
            assert!(sel.marginal_error(&combos, &p) <= 1e-10);
            assert!(sel.alpha.iter().all(|e| e.mass >= 0.0 && e.combo.contains(e.outcome)));
            checked += 1;
        } else {
            assert!(selection_from_flow(&net, &flow).is_err());
        }
    }
    assert!(checked > 100);
}

fn builtin_instances() -> Vec<(Builtin, Vec<f64>)> {
    vec![
        (Builtin::Jovanovic, vec![0.3]),
        (Builtin::Jovanovic, vec![0.8]),
        (Builtin::FamilyBargaining, vec![0.25]),
        (Builtin::FamilyBargaining, vec![1.0]),
        (Builtin::Oligopoly2Type, vec![-0.25, -0.5, -0.4]),
        (Builtin::Oligopoly2Type, vec![-0.1, -0.6, -0.2]),
    ]
}

#[test]
fn methods_agree_on_builtin_games() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for (b, theta) in builtin_instances() {
        let resolved = GameDescriptor::builtin(b).resolve().unwrap();
        let combos = combos_analytic(&resolved.game, &theta, &Covariates::new(), &b.default_nu())
            .unwrap()
            .combos()
            .unwrap();
        let n = combos.n();
        let mut agree = 0;
        for k in 0..1000 {
            let p = if k % 2 == 0 {
                common::selected_p(&mut rng, &combos)
            } else {
                uniform_p(&mut rng, n)
            };
            let mut v = Vec::new();
            for m in [Method::Brute, Method::Submodular, Method::Maxflow, Method::Cd] {
                let model = Model::new(resolved.clone(), p.clone()).unwrap();
                let opts = identset_core::IdentifyOptions {
                    method: m,
                    ..Default::default()
                };
                v.push(model.check(&theta, &opts).unwrap().0);
            }
            assert!(v.iter().all(|x| *x == v[0]), "{} {theta:?}: {v:?} at {p:?}", b.name());
            agree += 1;
        }
        assert_eq!(agree, 1000);
    }
}

#[test]
fn builtin_likelihoods_are_capacities() {
    for (b, theta) in builtin_instances() {
        let game = b.game();
        let combos = combos_analytic(&game, &theta, &Covariates::new(), &b.default_nu())
            .unwrap()
            .combos()
            .unwrap();
        assert!(check_capacity(&capacity_from_combos(&combos)).all(), "{}", b.name());
    }
}

#[test]
fn simulated_combinations_match_closed_forms() {
    for (b, theta) in builtin_instances() {
        let game = b.game();
        let nu = b.default_nu();
        let exact = combos_analytic(&game, &theta, &Covariates::new(), &nu).unwrap();
        let sim = combos_monte_carlo(&game, &theta, &Covariates::new(), &nu, 200_000, 5).unwrap();
        for &(u, q) in exact.combos().unwrap().iter() {
            let se = sim.std_error_of(u).unwrap_or(0.0).max(1e-4);
            assert!(
                (sim.mass_of(u) - q).abs() <= 4.0 * se,
                "{} {u}: {} vs {q}",
                b.name(),
                sim.mass_of(u)
            );
        }
    }
}

#[test]
fn dirac_laws_on_equilibrium_outcomes() {
    // A point mass on an outcome is inside iff that outcome is an
    // equilibrium with probability one.
    let combos = identset_core::capacity::EquilibriumCombos::new(
        3,
        vec![
            (identset_core::SubsetIndex(0b011), 0.5),
            (identset_core::SubsetIndex(0b001), 0.5),
        ],
    )
    .unwrap();
    assert!(verdicts(&combos, &ProbabilityVector::dirac(3, 0), true)
        .iter()
        .all(|&v| v));
    assert!(verdicts(&combos, &ProbabilityVector::dirac(3, 1), true)
        .iter()
        .all(|&v| !v));
    assert!(verdicts(&combos, &ProbabilityVector::dirac(3, 2), true)
        .iter()
        .all(|&v| !v));
}
