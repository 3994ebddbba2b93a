//! Distribution of equilibrium combinations under the latent law, by exact
//! rectangle integration or by simulation.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::latent::LatentDistribution;
use super::{pure_nash_outcomes, Covariates, GameSpec};
use crate::capacity::{EquilibriumCombos, COMBO_SUM_TOL};
use crate::error::{Error, Result};
use crate::space::SubsetIndex;

/// Draws per independently seeded simulation chunk.
pub const MC_CHUNK: usize = 4096;

/// Masses of the realized equilibrium sets.
///
/// Latent draws (or cells) without any pure equilibrium are not folded into
/// the list; their total is kept in `no_equilibrium`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComboEstimate {
    pub n: usize,
    pub masses: Vec<(SubsetIndex, f64)>,
    /// `sqrt(q (1 − q) / draws)` per entry of `masses`, for simulated estimates.
    pub std_errors: Option<Vec<f64>>,
    pub no_equilibrium: f64,
    pub draws: Option<usize>,
}

impl ComboEstimate {
    /// The combinations, failing when some latent mass has no pure equilibrium.
    pub fn combos(&self) -> Result<EquilibriumCombos> {
        if self.no_equilibrium > COMBO_SUM_TOL {
            return Err(Error::InvalidCombos(format!(
                "mass {} of the latent draws has no pure-strategy equilibrium",
                self.no_equilibrium
            )));
        }
        EquilibriumCombos::new(self.n, self.masses.clone())
    }

    /// The combinations conditional on some pure equilibrium existing.
    pub fn conditional(&self) -> Result<EquilibriumCombos> {
        let total: f64 = self.masses.iter().map(|m| m.1).sum();
        if total <= 0.0 {
            return Err(Error::InvalidCombos("no pure-strategy equilibrium anywhere".into()));
        }
        EquilibriumCombos::new(self.n, self.masses.iter().map(|&(u, q)| (u, q / total)).collect())
    }

    pub fn mass_of(&self, u: SubsetIndex) -> f64 {
        self.masses.iter().find(|m| m.0 == u).map_or(0.0, |m| m.1)
    }

    pub fn std_error_of(&self, u: SubsetIndex) -> Option<f64> {
        let k = self.masses.iter().position(|m| m.0 == u)?;
        self.std_errors.as_ref().map(|s| s[k])
    }
}

fn ordered(game: &GameSpec, found: BTreeMap<SubsetIndex, f64>) -> Vec<(SubsetIndex, f64)> {
    let mut out: Vec<(SubsetIndex, f64)> = game
        .canonical_combos
        .iter()
        .map(|u| (*u, found.get(u).copied().unwrap_or(0.0)))
        .collect();
    out.extend(found.into_iter().filter(|(u, _)| !game.canonical_combos.contains(u)));
    out
}

fn check_dims(game: &GameSpec, theta: &[f64], nu: &LatentDistribution) -> Result<()> {
    game.check_theta(theta)?;
    nu.validate()?;
    if nu.dim() != game.latent_dim {
        return Err(Error::DimensionMismatch {
            expected: game.latent_dim,
            got: nu.dim(),
        });
    }
    Ok(())
}

/// Exact combination masses for games that expose latent cutoffs.
///
/// Each latent coordinate is split at the game's cutoffs; the pure-Nash set is
/// constant on the open product cells, so evaluating it at one interior point
/// per cell and weighting by the cell's probability integrates exactly.
pub fn combos_analytic(
    game: &GameSpec,
    theta: &[f64],
    x: &Covariates,
    nu: &LatentDistribution,
) -> Result<ComboEstimate> {
    check_dims(game, theta, nu)?;
    let cutoffs = game.cutoffs(theta).ok_or_else(|| {
        Error::Unsupported(format!(
            "game `{}` has no closed-form regions; use combos_monte_carlo",
            game.name
        ))
    })?;
    let edges: Vec<Vec<f64>> = (0..nu.dim())
        .map(|i| {
            let (lo, hi) = nu.marginal(i).support();
            let mut e: Vec<f64> = cutoffs[i].iter().copied().filter(|c| *c > lo && *c < hi).collect();
            e.push(lo);
            e.push(hi);
            e.sort_by(f64::total_cmp);
            e.dedup();
            e
        })
        .collect();
    let cells: usize = edges.iter().map(|e| e.len() - 1).product();
    let mut found: BTreeMap<SubsetIndex, f64> = BTreeMap::new();
    let mut no_equilibrium = 0.0;
    let mut point = vec![0.0; nu.dim()];
    for mut c in 0..cells {
        let mut mass = 1.0;
        for i in (0..nu.dim()).rev() {
            let m = edges[i].len() - 1;
            let (a, b) = (edges[i][c % m], edges[i][c % m + 1]);
            c /= m;
            mass *= nu.marginal(i).interval_prob(a, b);
            point[i] = match (a.is_finite(), b.is_finite()) {
                (true, true) => 0.5 * (a + b),
                (true, false) => a + 1.0,
                (false, true) => b - 1.0,
                (false, false) => 0.0,
            };
        }
        if mass <= 0.0 {
            continue;
        }
        let u = pure_nash_outcomes(game, theta, x, &point);
        if u.is_empty() {
            no_equilibrium += mass;
        } else {
            *found.entry(u).or_insert(0.0) += mass;
        }
    }
    Ok(ComboEstimate {
        n: game.space.len(),
        masses: ordered(game, found),
        std_errors: None,
        no_equilibrium,
        draws: None,
    })
}

/// Simulated combination frequencies.
///
/// Chunk `k` of [`MC_CHUNK`] draws uses ChaCha8 stream `k` under `seed`, so
/// the result depends only on `(seed, n_draws)` and not on scheduling.
pub fn combos_monte_carlo(
    game: &GameSpec,
    theta: &[f64],
    x: &Covariates,
    nu: &LatentDistribution,
    n_draws: usize,
    seed: u64,
) -> Result<ComboEstimate> {
    check_dims(game, theta, nu)?;
    if n_draws == 0 {
        return Err(Error::InvalidGame("n_draws must be at least 1".into()));
    }
    let sampler = nu.sampler();
    let chunks = n_draws.div_ceil(MC_CHUNK);
    let counts: Vec<BTreeMap<SubsetIndex, u64>> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let len = MC_CHUNK.min(n_draws - k * MC_CHUNK);
            let mut eps = vec![0.0; sampler.dim()];
            let mut local = BTreeMap::new();
            for _ in 0..len {
                sampler.sample_into(&mut rng, &mut eps);
                *local.entry(pure_nash_outcomes(game, theta, x, &eps)).or_insert(0u64) += 1;
            }
            local
        })
        .collect();
    let mut total: BTreeMap<SubsetIndex, u64> = BTreeMap::new();
    for local in counts {
        for (u, c) in local {
            *total.entry(u).or_insert(0) += c;
        }
    }
    let n = n_draws as f64;
    let none = total.remove(&SubsetIndex::EMPTY).unwrap_or(0) as f64 / n;
    let masses = ordered(game, total.into_iter().map(|(u, c)| (u, c as f64 / n)).collect());
    let std_errors = masses.iter().map(|(_, q)| (q * (1.0 - q) / n).sqrt()).collect();
    Ok(ComboEstimate {
        n: game.space.len(),
        masses,
        std_errors: Some(std_errors),
        no_equilibrium: none,
        draws: Some(n_draws),
    })
}
