//! JSON game descriptors: a built-in game with parameters and latent law,
//! or an explicit finite payoff table.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::builtins::Builtin;
use super::latent::LatentDistribution;
use super::{profile_index, profiles, Covariates, CutoffFn, GameSpec, OutcomeMapFn, PayoffFn};
use crate::error::{Error, Result};
use crate::space::OutcomeSpace;

/// Largest custom table: players and actions per player.
pub const MAX_CUSTOM_PLAYERS: usize = 3;
pub const MAX_CUSTOM_ACTIONS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NuScale {
    /// Multiply every coordinate by the first parameter.
    Theta,
}

/// A latent law, optionally rescaled by the parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NuSpec {
    #[serde(flatten)]
    pub dist: LatentDistribution,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<NuScale>,
}

impl NuSpec {
    pub fn fixed(dist: LatentDistribution) -> Self {
        Self { dist, scale: None }
    }

    pub fn resolve(&self, theta: &[f64]) -> Result<LatentDistribution> {
        self.dist.validate()?;
        match self.scale {
            None => Ok(self.dist.clone()),
            Some(NuScale::Theta) => {
                let k = theta.first().copied().unwrap_or(f64::NAN);
                if !(k > 0.0) {
                    return Err(Error::InvalidGame(format!(
                        "a theta-scaled latent law needs a positive first parameter, got {k}"
                    )));
                }
                Ok(self.dist.scaled(k))
            }
        }
    }
}

/// An explicit payoff table.
///
/// `payoffs[k][i]` is player `i`'s payoff at the `k`-th profile, profiles
/// listed with the last player's action varying fastest. Player `i` receives
/// the latent shock `ε_i` on top of the table whenever it plays a nonzero
/// action. `outcomes`, when given, labels each profile; profiles sharing a
/// label are observationally equivalent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CustomTable {
    #[serde(default)]
    pub name: Option<String>,
    pub actions: Vec<usize>,
    pub payoffs: Vec<Vec<f64>>,
    #[serde(default)]
    pub outcomes: Option<Vec<String>>,
}

impl CustomTable {
    pub fn game(&self) -> Result<GameSpec> {
        let n = self.actions.len();
        if n == 0 || n > MAX_CUSTOM_PLAYERS {
            return Err(Error::InvalidGame(format!(
                "custom tables take 1 to {MAX_CUSTOM_PLAYERS} players, got {n}"
            )));
        }
        if self.actions.iter().any(|&a| a == 0 || a > MAX_CUSTOM_ACTIONS) {
            return Err(Error::InvalidGame(format!(
                "custom tables take 1 to {MAX_CUSTOM_ACTIONS} actions per player"
            )));
        }
        let count: usize = self.actions.iter().product();
        if self.payoffs.len() != count || self.payoffs.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidGame(format!(
                "expected {count} payoff rows of {n} entries"
            )));
        }
        if self.payoffs.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGame("payoffs must be finite".into()));
        }
        let table = Arc::new(self.payoffs.clone());
        let actions = self.actions.clone();
        let t = table.clone();
        let radix = actions.clone();
        let payoff: PayoffFn = Arc::new(move |p: &[usize], _: &[f64], _: &Covariates, e: &[f64]| {
            let row = &t[profile_index(&radix, p)];
            row.iter()
                .enumerate()
                .map(|(i, v)| if p[i] != 0 { v + e[i] } else { *v })
                .collect()
        });
        let t = table.clone();
        let radix = actions.clone();
        // ε_i matters only when player i compares staying at 0 with a nonzero
        // action; each such comparison flips at one cutoff.
        let cutoffs: CutoffFn = Arc::new(move |_: &[f64]| {
            let all = profiles(&radix);
            (0..radix.len())
                .map(|i| {
                    let mut cuts: Vec<f64> = all
                        .iter()
                        .filter(|p| p[i] != 0)
                        .map(|p| {
                            let mut zero = p.clone();
                            zero[i] = 0;
                            t[profile_index(&radix, &zero)][i] - t[profile_index(&radix, p)][i]
                        })
                        .collect();
                    cuts.sort_by(f64::total_cmp);
                    cuts.dedup();
                    cuts
                })
                .collect()
        });
        let name = self.name.clone().unwrap_or_else(|| "custom".into());
        let mut game = GameSpec::new(name, actions.clone(), n, payoff)?.with_cutoffs(cutoffs);
        if let Some(labels) = &self.outcomes {
            if labels.len() != count {
                return Err(Error::InvalidGame(format!("expected {count} outcome labels")));
            }
            let mut distinct: Vec<String> = Vec::new();
            for l in labels {
                if !distinct.contains(l) {
                    distinct.push(l.clone());
                }
            }
            let space = OutcomeSpace::new(distinct.clone())?;
            let index: Vec<usize> = labels
                .iter()
                .map(|l| distinct.iter().position(|d| d == l).expect("collected above"))
                .collect();
            let map: OutcomeMapFn = Arc::new(move |p: &[usize]| Some(index[profile_index(&actions, p)]));
            game = game.with_outcomes(space, map);
        }
        Ok(game)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GameDescriptor {
    Builtin {
        builtin: Builtin,
        #[serde(default)]
        theta: Vec<f64>,
        #[serde(default)]
        nu: Option<NuSpec>,
    },
    Custom {
        custom: CustomTable,
        #[serde(default)]
        nu: Option<NuSpec>,
    },
}

/// A descriptor turned into a game, its default parameter and latent law.
#[derive(Clone, Debug)]
pub struct ResolvedGame {
    pub game: GameSpec,
    pub builtin: Option<Builtin>,
    pub theta: Vec<f64>,
    pub nu: NuSpec,
}

impl GameDescriptor {
    pub fn builtin(b: Builtin) -> Self {
        GameDescriptor::Builtin {
            builtin: b,
            theta: Vec::new(),
            nu: None,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(format!("game descriptor: {e}")))
    }

    pub fn resolve(&self) -> Result<ResolvedGame> {
        match self {
            GameDescriptor::Builtin { builtin, theta, nu } => Ok(ResolvedGame {
                game: builtin.game(),
                builtin: Some(*builtin),
                theta: theta.clone(),
                nu: nu.clone().unwrap_or_else(|| NuSpec::fixed(builtin.default_nu())),
            }),
            GameDescriptor::Custom { custom, nu } => {
                let game = custom.game()?;
                let dim = game.latent_dim;
                Ok(ResolvedGame {
                    game,
                    builtin: None,
                    theta: Vec::new(),
                    nu: nu.clone().unwrap_or_else(|| {
                        NuSpec::fixed(LatentDistribution::IidNormal {
                            mean: 0.0,
                            sd: 1.0,
                            dim,
                        })
                    }),
                })
            }
        }
    }
}
