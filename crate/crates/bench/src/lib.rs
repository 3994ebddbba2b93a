//! Fixtures shared by the membership benchmarks.

use identset_core::capacity::{capacity_from_combos, Capacity, EquilibriumCombos};
use identset_core::games::{combos_analytic, Covariates};
use identset_core::{Builtin, ProbabilityVector, Result, SubsetIndex};

/// Parameter value of the two-type oligopoly used throughout the benches.
pub const OLIGOPOLY_THETA: [f64; 3] = [-0.25, -0.5, -0.4];

/// A membership instance: combination masses, their capacity and a
/// distribution to test.
pub struct Instance {
    pub combos: EquilibriumCombos,
    pub capacity: Capacity,
    pub p: ProbabilityVector,
}

/// The oligopoly at [`OLIGOPOLY_THETA`] under its default latent law, tested
/// against the uniform distribution over its nine outcomes.
pub fn oligopoly() -> Result<Instance> {
    let b = Builtin::Oligopoly2Type;
    let combos = combos_analytic(&b.game(), &OLIGOPOLY_THETA, &Covariates::new(), &b.default_nu())?.combos()?;
    let n = combos.n();
    let p = ProbabilityVector::new(vec![1.0 / n as f64; n])?;
    Ok(Instance {
        capacity: capacity_from_combos(&combos),
        combos,
        p,
    })
}

/// A synthetic instance on `n` outcomes: every singleton plus each window
/// of three consecutive outcomes (cyclically) carries mass. The tested
/// distribution is the uniform one, which lies in the core.
pub fn windows(n: usize) -> Result<Instance> {
    let mut raw: Vec<(SubsetIndex, f64)> = (0..n).map(|k| (SubsetIndex::singleton(k), 1.0)).collect();
    raw.extend((0..n).map(|k| (SubsetIndex::from_indices([k, (k + 1) % n, (k + 2) % n]), 2.0)));
    let total: f64 = raw.iter().map(|(_, w)| w).sum();
    let combos = EquilibriumCombos::new(n, raw.into_iter().map(|(u, w)| (u, w / total)).collect())?;
    let p = ProbabilityVector::new(vec![1.0 / n as f64; n])?;
    Ok(Instance {
        capacity: capacity_from_combos(&combos),
        combos,
        p,
    })
}
