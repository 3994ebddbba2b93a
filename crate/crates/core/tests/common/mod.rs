//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use identset_core::capacity::{capacity_from_combos, core_contains_bruteforce, EquilibriumCombos};
use identset_core::{cd_membership, core_membership_submodular, feasible, ProbabilityVector, SubsetIndex};
use rand::Rng;
use rand_distr::{Distribution, Exp1};

fn weights<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    (0..k).map(|_| Exp1.sample(rng)).collect::<Vec<f64>>()
}

fn normalized(raw: BTreeMap<u32, f64>, n: usize) -> EquilibriumCombos {
    let total: f64 = raw.values().sum();
    EquilibriumCombos::new(n, raw.into_iter().map(|(u, q)| (SubsetIndex(u), q / total)).collect())
        .expect("generated combinations are valid")
}

/// Up to `2n` distinct random nonempty combinations with exponential masses.
pub fn random_combos<R: Rng>(rng: &mut R, n: usize) -> EquilibriumCombos {
    let k = rng.random_range(1..=2 * n);
    let full = (1u32 << n) - 1;
    let mut raw = BTreeMap::new();
    for _ in 0..k {
        // Bias towards small sets, the typical shape of equilibrium sets.
        let mut u = 1u32 << rng.random_range(0..n);
        while rng.random_bool(0.45) {
            u |= 1 << rng.random_range(0..n);
        }
        raw.insert(u & full, Exp1.sample(rng));
    }
    normalized(raw, n)
}

/// A chain of intervals whose endpoints both move up: monotone and
/// connected in the natural outcome order.
pub fn monotone_combos<R: Rng>(rng: &mut R, n: usize) -> EquilibriumCombos {
    let (mut lo, mut hi) = (0usize, 0usize);
    let mut raw = BTreeMap::new();
    while lo < n {
        if rng.random_bool(0.8) {
            let u: u32 = (lo..=hi).map(|k| 1u32 << k).sum();
            raw.insert(u, Exp1.sample(rng));
        }
        if hi + 1 < n && rng.random_bool(0.5) {
            hi += 1;
        } else {
            lo += 1;
            hi = hi.max(lo);
        }
    }
    if raw.is_empty() {
        raw.insert(1, 1.0);
    }
    normalized(raw, n)
}

/// The outcome law of a random selection mechanism: inside the core.
pub fn selected_p<R: Rng>(rng: &mut R, combos: &EquilibriumCombos) -> ProbabilityVector {
    let mut p = vec![0.0; combos.n()];
    for &(u, q) in combos.iter() {
        let members: Vec<usize> = (0..combos.n()).filter(|&k| u.contains(k)).collect();
        let w = weights(rng, members.len());
        let total: f64 = w.iter().sum();
        for (k, wk) in members.iter().zip(&w) {
            p[*k] += q * wk / total;
        }
    }
    ProbabilityVector::from_weights(&p).unwrap()
}

/// A flat random distribution over all outcomes.
pub fn uniform_p<R: Rng>(rng: &mut R, n: usize) -> ProbabilityVector {
    ProbabilityVector::from_weights(&weights(rng, n)).unwrap()
}

/// One third each: selected, flat random, and a selected law nudged by a
/// flat one (mostly just outside or just inside).
pub fn random_p<R: Rng>(rng: &mut R, combos: &EquilibriumCombos) -> ProbabilityVector {
    match rng.random_range(0..3) {
        0 => selected_p(rng, combos),
        1 => uniform_p(rng, combos.n()),
        _ => {
            let a = selected_p(rng, combos);
            let b = uniform_p(rng, combos.n());
            let t = rng.random_range(1e-3..0.3);
            let mix: Vec<f64> = a
                .masses()
                .iter()
                .zip(b.masses())
                .map(|(x, y)| (1.0 - t) * x + t * y)
                .collect();
            ProbabilityVector::from_weights(&mix).unwrap()
        }
    }
}

/// Verdicts of brute force, min-norm-point, max-flow and (when `with_cd`)
/// the interval-class test.
pub fn verdicts(combos: &EquilibriumCombos, p: &ProbabilityVector, with_cd: bool) -> Vec<bool> {
    let cap = capacity_from_combos(combos);
    let mut v = vec![
        core_contains_bruteforce(p, &cap).unwrap().inside,
        core_membership_submodular(p, &cap).unwrap().inside,
        feasible(combos, p).unwrap().inside,
    ];
    if with_cd {
        let order: Option<Vec<usize>> = (combos.n() > identset_core::cd::ORDER_SEARCH_LIMIT).then(|| {
            let red = identset_core::reduce_isolated(combos, p).unwrap();
            (0..red.n()).collect()
        });
        v.push(cd_membership(combos, p, order.as_deref()).unwrap().inside);
    }
    v
}
