//! Finite games with latent shocks: pure-Nash enumeration, 2×2 mixed
//! equilibria and the distribution of equilibrium combinations.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{OutcomeSpace, SubsetIndex};

pub mod builtins;
pub mod combos;
pub mod descriptor;
pub mod latent;

pub use builtins::Builtin;
pub use combos::{combos_analytic, combos_monte_carlo, ComboEstimate};
pub use descriptor::{CustomTable, GameDescriptor, NuSpec};
pub use latent::{LatentDistribution, Marginal};

/// Covariate record passed through to payoff functions.
pub type Covariates = BTreeMap<String, f64>;

/// `(profile, θ, x, ε) → per-player payoffs`.
pub type PayoffFn = Arc<dyn Fn(&[usize], &[f64], &Covariates, &[f64]) -> Vec<f64> + Send + Sync>;
/// Maps an action profile to an outcome index; `None` for profiles outside
/// the declared outcome space.
pub type OutcomeMapFn = Arc<dyn Fn(&[usize]) -> Option<usize> + Send + Sync>;
/// Per-coordinate latent cutoffs between which the pure-Nash set is constant.
pub type CutoffFn = Arc<dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync>;

/// A parameterized finite game.
#[derive(Clone)]
pub struct GameSpec {
    pub name: String,
    /// Number of actions per player.
    pub actions: Vec<usize>,
    pub space: OutcomeSpace,
    pub param_names: Vec<String>,
    pub latent_dim: usize,
    profiles: Arc<Vec<Vec<usize>>>,
    strides: Vec<usize>,
    payoff: PayoffFn,
    outcome_map: OutcomeMapFn,
    cutoffs: Option<CutoffFn>,
    /// Combinations listed first (and even at zero mass) in computed combos.
    pub canonical_combos: Vec<SubsetIndex>,
}

impl fmt::Debug for GameSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GameSpec")
            .field("name", &self.name)
            .field("actions", &self.actions)
            .field("space", &self.space)
            .field("param_names", &self.param_names)
            .field("latent_dim", &self.latent_dim)
            .finish_non_exhaustive()
    }
}

impl GameSpec {
    /// A game whose outcomes are the action profiles themselves, labelled by
    /// concatenated action digits.
    pub fn new(name: impl Into<String>, actions: Vec<usize>, latent_dim: usize, payoff: PayoffFn) -> Result<Self> {
        if actions.is_empty() || actions.contains(&0) {
            return Err(Error::InvalidGame("every player needs at least one action".into()));
        }
        let profiles = profiles(&actions);
        let sep = if actions.iter().any(|&a| a > 10) { "-" } else { "" };
        let labels: Vec<String> = profiles
            .iter()
            .map(|p| p.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(sep))
            .collect();
        let strides = (0..actions.len()).map(|i| actions[i + 1..].iter().product()).collect();
        let space = OutcomeSpace::new(labels)?;
        let radix = actions.clone();
        let outcome_map: OutcomeMapFn = Arc::new(move |p| Some(profile_index(&radix, p)));
        Ok(Self {
            name: name.into(),
            actions,
            space,
            param_names: Vec::new(),
            latent_dim,
            profiles: Arc::new(profiles),
            strides,
            payoff,
            outcome_map,
            cutoffs: None,
            canonical_combos: Vec::new(),
        })
    }

    pub fn with_outcomes(mut self, space: OutcomeSpace, map: OutcomeMapFn) -> Self {
        self.space = space;
        self.outcome_map = map;
        self
    }

    pub fn with_params<S: Into<String>>(mut self, names: impl IntoIterator<Item = S>) -> Self {
        self.param_names = names.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_cutoffs(mut self, cutoffs: CutoffFn) -> Self {
        self.cutoffs = Some(cutoffs);
        self
    }

    pub fn with_canonical_combos(mut self, combos: Vec<SubsetIndex>) -> Self {
        self.canonical_combos = combos;
        self
    }

    pub fn players(&self) -> usize {
        self.actions.len()
    }

    pub fn num_profiles(&self) -> usize {
        self.actions.iter().product()
    }

    pub fn profiles(&self) -> &[Vec<usize>] {
        &self.profiles
    }

    pub fn payoffs(&self, profile: &[usize], theta: &[f64], x: &Covariates, eps: &[f64]) -> Vec<f64> {
        (self.payoff)(profile, theta, x, eps)
    }

    pub fn outcome_of(&self, profile: &[usize]) -> Option<usize> {
        (self.outcome_map)(profile)
    }

    pub fn cutoffs(&self, theta: &[f64]) -> Option<Vec<Vec<f64>>> {
        self.cutoffs.as_ref().map(|f| f(theta))
    }

    pub fn is_2x2(&self) -> bool {
        self.actions == [2, 2]
    }

    pub fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.param_names.len() {
            return Err(Error::InvalidGame(format!(
                "game `{}` takes {} parameter(s) {:?}, got {}",
                self.name,
                self.param_names.len(),
                self.param_names,
                theta.len()
            )));
        }
        Ok(())
    }
}

/// All action profiles, the last player's action varying fastest.
pub fn profiles(actions: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = actions.iter().product();
    (0..total)
        .map(|mut idx| {
            let mut p = vec![0; actions.len()];
            for i in (0..actions.len()).rev() {
                p[i] = idx % actions[i];
                idx /= actions[i];
            }
            p
        })
        .collect()
}

pub fn profile_index(actions: &[usize], profile: &[usize]) -> usize {
    profile.iter().zip(actions).fold(0, |acc, (a, n)| acc * n + a)
}

/// Pure-strategy Nash equilibria; a deviation must be strictly profitable
/// to break an equilibrium, so ties count as equilibria.
pub fn pure_nash(game: &GameSpec, theta: &[f64], x: &Covariates, eps: &[f64]) -> Vec<Vec<usize>> {
    nash_indices(game, theta, x, eps)
        .into_iter()
        .map(|k| game.profiles[k].clone())
        .collect()
}

fn nash_indices(game: &GameSpec, theta: &[f64], x: &Covariates, eps: &[f64]) -> Vec<usize> {
    let all = game.profiles();
    let table: Vec<Vec<f64>> = all.iter().map(|p| game.payoffs(p, theta, x, eps)).collect();
    (0..all.len())
        .filter(|&k| {
            let p = &all[k];
            (0..game.players()).all(|i| {
                let base = k - p[i] * game.strides[i];
                (0..game.actions[i])
                    .filter(|&a| a != p[i])
                    .all(|a| table[base + a * game.strides[i]][i] <= table[k][i])
            })
        })
        .collect()
}

/// The set of outcomes reached by some pure equilibrium; equilibria outside
/// the outcome space are dropped.
pub fn pure_nash_outcomes(game: &GameSpec, theta: &[f64], x: &Covariates, eps: &[f64]) -> SubsetIndex {
    nash_indices(game, theta, x, eps)
        .into_iter()
        .filter_map(|k| game.outcome_of(&game.profiles[k]))
        .fold(SubsetIndex::EMPTY, SubsetIndex::with)
}

/// Per-player mixing probabilities and the induced outcome distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedProfile {
    /// `strategies[i][a]` is the probability that player `i` plays `a`.
    pub strategies: Vec<Vec<f64>>,
    /// Distribution over the outcome space.
    pub sigma: Vec<f64>,
}

impl MixedProfile {
    pub fn from_strategies(game: &GameSpec, strategies: Vec<Vec<f64>>) -> Result<Self> {
        let mut sigma = vec![0.0; game.space.len()];
        for p in game.profiles().iter() {
            let w: f64 = p.iter().enumerate().map(|(i, &a)| strategies[i][a]).product();
            if w > 0.0 {
                let y = game
                    .outcome_of(p)
                    .ok_or_else(|| Error::InvalidGame(format!("profile {p:?} is outside the outcome space")))?;
                sigma[y] += w;
            }
        }
        Ok(Self { strategies, sigma })
    }

    pub fn pure(game: &GameSpec, profile: &[usize]) -> Result<Self> {
        let strategies = profile
            .iter()
            .zip(&game.actions)
            .map(|(&a, &n)| (0..n).map(|b| if a == b { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::from_strategies(game, strategies)
    }

    /// Whether some player randomizes.
    pub fn is_proper(&self) -> bool {
        self.strategies
            .iter()
            .any(|s| s.iter().filter(|&&q| q > 0.0).count() > 1)
    }

    /// Probability of a set of outcomes.
    pub fn mass(&self, b: SubsetIndex) -> f64 {
        b.iter().map(|y| self.sigma[y]).sum()
    }
}

/// Result of the 2×2 indifference computation.
#[derive(Clone, Debug, PartialEq)]
pub enum Mixed2x2 {
    Interior(MixedProfile),
    /// The indifference point lies outside the open unit square.
    NoInterior,
    /// A payoff-difference denominator vanished.
    Degenerate,
}

impl Mixed2x2 {
    pub fn interior(self) -> Option<MixedProfile> {
        match self {
            Mixed2x2::Interior(m) => Some(m),
            _ => None,
        }
    }
}

/// The completely mixed equilibrium of a 2×2 game, when one exists.
pub fn mixed_nash_2x2(game: &GameSpec, theta: &[f64], x: &Covariates, eps: &[f64]) -> Result<Mixed2x2> {
    if !game.is_2x2() {
        return Err(Error::Unsupported(
            "mixed equilibria are computed for 2×2 games only".into(),
        ));
    }
    let u = |a: usize, b: usize| game.payoffs(&[a, b], theta, x, eps);
    let (u00, u01, u10, u11) = (u(0, 0), u(0, 1), u(1, 0), u(1, 1));
    // Player 1 mixes to make player 2 indifferent, and vice versa.
    let d1 = u11[1] - u01[1] - u10[1] + u00[1];
    let d2 = u11[0] - u10[0] - u01[0] + u00[0];
    if d1.abs() < 1e-14 || d2.abs() < 1e-14 {
        return Ok(Mixed2x2::Degenerate);
    }
    let x1 = (u00[1] - u01[1]) / d1;
    let x2 = (u00[0] - u10[0]) / d2;
    if !(x1 > 0.0 && x1 < 1.0 && x2 > 0.0 && x2 < 1.0) {
        return Ok(Mixed2x2::NoInterior);
    }
    Ok(Mixed2x2::Interior(MixedProfile::from_strategies(
        game,
        vec![vec![1.0 - x1, x1], vec![1.0 - x2, x2]],
    )?))
}

/// Pure equilibria as degenerate profiles, followed by the interior mixed one.
pub fn mixed_correspondence(game: &GameSpec, theta: &[f64], x: &Covariates, eps: &[f64]) -> Result<Vec<MixedProfile>> {
    if !game.is_2x2() {
        return Err(Error::Unsupported(
            "the mixed correspondence is computed for 2×2 games only".into(),
        ));
    }
    let mut out = pure_nash(game, theta, x, eps)
        .iter()
        .filter(|p| game.outcome_of(p).is_some())
        .map(|p| MixedProfile::pure(game, p))
        .collect::<Result<Vec<_>>>()?;
    if let Mixed2x2::Interior(m) = mixed_nash_2x2(game, theta, x, eps)? {
        out.push(m);
    }
    Ok(out)
}
