//! The three built-in games: the Jovanovic entry game, the two-child family
//! bargaining game and the two-type oligopoly entry game.

use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::latent::LatentDistribution;
use super::{Covariates, GameSpec, OutcomeMapFn, PayoffFn};
use crate::error::{Error, Result};
use crate::space::{OutcomeSpace, SubsetIndex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Builtin {
    Jovanovic,
    FamilyBargaining,
    #[serde(rename = "oligopoly-2type")]
    Oligopoly2Type,
}

impl Builtin {
    pub const ALL: [Builtin; 3] = [Builtin::Jovanovic, Builtin::FamilyBargaining, Builtin::Oligopoly2Type];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Jovanovic => "jovanovic",
            Builtin::FamilyBargaining => "family-bargaining",
            Builtin::Oligopoly2Type => "oligopoly-2type",
        }
    }

    pub fn game(self) -> GameSpec {
        match self {
            Builtin::Jovanovic => jovanovic(),
            Builtin::FamilyBargaining => family_bargaining(),
            Builtin::Oligopoly2Type => oligopoly(),
        }
    }

    /// Latent law used when a descriptor does not give one.
    pub fn default_nu(self) -> LatentDistribution {
        let bounds = match self {
            Builtin::Jovanovic | Builtin::Oligopoly2Type => vec![[0.0, 1.0]; 2],
            Builtin::FamilyBargaining => vec![[-1.0, 1.0]; 2],
        };
        LatentDistribution::UniformBox { bounds }
    }
}

impl FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jovanovic" => Ok(Builtin::Jovanovic),
            "family-bargaining" | "family" => Ok(Builtin::FamilyBargaining),
            "oligopoly-2type" | "oligopoly" => Ok(Builtin::Oligopoly2Type),
            other => Err(Error::InvalidGame(format!(
                "unknown built-in game `{other}` (expected jovanovic, family-bargaining or oligopoly-2type)"
            ))),
        }
    }
}

/// Two firms with profits `(θ Y₂ − ε₂) Y₁` and `(θ Y₁ − ε₁) Y₂`.
///
/// Only `(0,0)` and `(1,1)` are observable outcomes; for nonnegative costs the
/// asymmetric profiles are never equilibria.
pub fn jovanovic() -> GameSpec {
    let payoff: PayoffFn = Arc::new(|p: &[usize], th: &[f64], _: &Covariates, e: &[f64]| {
        let (y1, y2) = (p[0] as f64, p[1] as f64);
        vec![(th[0] * y2 - e[1]) * y1, (th[0] * y1 - e[0]) * y2]
    });
    let map: OutcomeMapFn = Arc::new(|p: &[usize]| match (p[0], p[1]) {
        (0, 0) => Some(0),
        (1, 1) => Some(1),
        _ => None,
    });
    GameSpec::new("jovanovic", vec![2, 2], 2, payoff)
        .expect("static game")
        .with_outcomes(OutcomeSpace::new(["00", "11"]).expect("static labels"), map)
        .with_params(["theta"])
        .with_cutoffs(Arc::new(|th: &[f64]| vec![vec![0.0, th[0]]; 2]))
        .with_canonical_combos(vec![SubsetIndex(0b01), SubsetIndex(0b11)])
}

/// Participation game between two children; action 1 is "participate".
pub fn family_bargaining() -> GameSpec {
    let payoff: PayoffFn = Arc::new(|p: &[usize], th: &[f64], _: &Covariates, e: &[f64]| {
        let t = th[0];
        match (p[0], p[1]) {
            (0, 0) => vec![0.0, 0.0],
            (0, _) => vec![4.0 * t, 2.0 * t + e[1]],
            (_, 0) => vec![2.0 * t + e[0], 4.0 * t],
            _ => vec![3.0 * t + e[0], 3.0 * t + e[1]],
        }
    });
    GameSpec::new("family-bargaining", vec![2, 2], 2, payoff)
        .expect("static game")
        .with_params(["theta"])
        .with_cutoffs(Arc::new(|th: &[f64]| vec![vec![-2.0 * th[0], th[0]]; 2]))
        .with_canonical_combos(vec![
            SubsetIndex(0b0001),
            SubsetIndex(0b0010),
            SubsetIndex(0b0110),
            SubsetIndex(0b0100),
            SubsetIndex(0b1000),
        ])
}

/// Outcome labels `ij` (type-1 entrants, type-2 entrants) in presentation order.
pub const OLIGOPOLY_OUTCOMES: [&str; 9] = ["00", "01", "10", "02", "11", "20", "12", "21", "22"];
/// Fixed intercepts of the two profit functions.
pub const OLIGOPOLY_ALPHA0: f64 = 1.0;
pub const OLIGOPOLY_BETA0: f64 = 1.0;

fn oligopoly_outcome(i: usize, j: usize) -> usize {
    const INDEX: [[usize; 3]; 3] = [[0, 1, 3], [2, 4, 6], [5, 7, 8]];
    INDEX[i][j]
}

/// Two firms of each type; firms of a type share the fixed cost `f_t`.
///
/// Entry profits are `α₀ + α₁ (i + j) − f₁` for type 1 and
/// `β₀ + β₁ i + β₂ j − f₂` for type 2, where `i`, `j` count entrants of each
/// type including the firm itself; parameters are `(α₁, β₁, β₂)`.
pub fn oligopoly() -> GameSpec {
    let payoff: PayoffFn = Arc::new(|p: &[usize], th: &[f64], _: &Covariates, f: &[f64]| {
        let i = (p[0] + p[1]) as f64;
        let j = (p[2] + p[3]) as f64;
        let pi1 = OLIGOPOLY_ALPHA0 + th[0] * (i + j) - f[0];
        let pi2 = OLIGOPOLY_BETA0 + th[1] * i + th[2] * j - f[1];
        vec![
            pi1 * p[0] as f64,
            pi1 * p[1] as f64,
            pi2 * p[2] as f64,
            pi2 * p[3] as f64,
        ]
    });
    let map: OutcomeMapFn = Arc::new(|p: &[usize]| Some(oligopoly_outcome(p[0] + p[1], p[2] + p[3])));
    let cutoffs = Arc::new(|th: &[f64]| {
        let f1 = (1..=4).map(|k| OLIGOPOLY_ALPHA0 + th[0] * k as f64).collect();
        let f2 = (0..=2)
            .flat_map(|i| (1..=2).map(move |j| (i, j)))
            .map(|(i, j)| OLIGOPOLY_BETA0 + th[1] * i as f64 + th[2] * j as f64)
            .collect();
        vec![f1, f2]
    });
    let space = OutcomeSpace::new(OLIGOPOLY_OUTCOMES).expect("static labels");
    let canonical = [
        &["00"][..],
        &["01"],
        &["01", "10"],
        &["10"],
        &["10", "02"],
        &["02"],
        &["02", "20"],
        &["02", "11", "20"],
        &["20"],
        &["20", "12"],
        &["12"],
        &["12", "21"],
        &["21"],
        &["22"],
    ]
    .iter()
    .map(|ls| space.subset(ls).expect("static labels"))
    .collect();
    GameSpec::new("oligopoly-2type", vec![2, 2, 2, 2], 2, payoff)
        .expect("static game")
        .with_outcomes(space, map)
        .with_params(["alpha1", "beta1", "beta2"])
        .with_cutoffs(cutoffs)
        .with_canonical_combos(canonical)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::pure_nash_outcomes;

    #[test]
    fn names_round_trip() {
        for b in Builtin::ALL {
            assert_eq!(b.name().parse::<Builtin>().unwrap(), b);
            assert_eq!(serde_json::to_string(&b).unwrap(), format!("\"{}\"", b.name()));
        }
        assert!("chess".parse::<Builtin>().is_err());
    }

    #[test]
    fn oligopoly_regions() {
        let g = oligopoly();
        let th = [-0.25, -0.5, -0.4];
        let x = Covariates::new();
        // Very high costs: nobody enters.
        assert_eq!(
            pure_nash_outcomes(&g, &th, &x, &[0.99, 0.99]),
            g.space.subset(&["00"]).unwrap()
        );
        // Free entry: type 1 fills the market and crowds out type 2.
        assert_eq!(
            pure_nash_outcomes(&g, &th, &x, &[0.0, 0.0]),
            g.space.subset(&["20"]).unwrap()
        );
        assert_eq!(
            pure_nash_outcomes(&g, &th, &x, &[0.45, 0.15]),
            g.space.subset(&["02", "20"]).unwrap()
        );
        assert_eq!(
            pure_nash_outcomes(&g, &th, &x, &[0.45, 0.05]),
            g.space.subset(&["02", "11", "20"]).unwrap()
        );
    }
}
