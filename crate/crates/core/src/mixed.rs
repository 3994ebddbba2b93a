//! Mixed-strategy identification for 2×2 games: the upper-envelope capacity
//! `L(B) = ∫ max_{σ∈G(ε)} σ(B) dν(ε)` with its core test, and the convex
//! feasibility program built on the support functional
//! `L̃(f) = ∫ max_{σ∈G(ε)} E_σ f dν(ε)`.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::Capacity;
use crate::error::{Error, Result};
use crate::games::builtins::Builtin;
use crate::games::combos::MC_CHUNK;
use crate::games::latent::LatentDistribution;
use crate::games::{mixed_correspondence, mixed_nash_2x2, pure_nash_outcomes, Covariates, GameSpec};
use crate::space::{subset_sums, ProbabilityVector, SubsetIndex};
use crate::submodular::{
    affine_minimizer, combine, core_membership_submodular_tol, dot, SubmodularCheck, SUBMODULAR_TOL,
};

/// Default tolerance of the convex route, absorbing simulation noise.
pub const CONVEX_TOL: f64 = 1e-6;
/// Subgradient iteration cap per slice.
pub const SUBGRADIENT_CAP: usize = 50_000;
/// Gauss–Legendre nodes per coordinate inside cells carrying a mixed equilibrium.
pub const QUADRATURE_POINTS: usize = 24;
/// Slack allowed when probing the pointwise envelope for submodularity.
pub const ENVELOPE_TOL: f64 = 1e-12;
/// Scenarios per parallel work item when evaluating the support functional.
const SCENARIO_CHUNK: usize = 2048;
/// Cap on certificate iterations (each adds one support point).
const CERTIFICATE_CAP: usize = 10_000;

/// How integrals over the latent law are computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Integration {
    /// Exact cell integration plus Gauss–Legendre quadrature where needed.
    ClosedForm,
    /// Simulation with a fixed draw set.
    MonteCarlo { n_draws: usize, seed: u64 },
}

/// Everything needed to integrate over the mixed equilibrium correspondence.
#[derive(Clone, Debug)]
pub struct MixedCapacitySpec {
    pub game: GameSpec,
    /// Set for built-in games; closed forms are keyed on it.
    pub builtin: Option<Builtin>,
    pub theta: Vec<f64>,
    pub x: Covariates,
    pub nu: LatentDistribution,
    pub integration: Integration,
}

impl MixedCapacitySpec {
    pub fn new(
        game: GameSpec,
        theta: Vec<f64>,
        x: Covariates,
        nu: LatentDistribution,
        integration: Integration,
    ) -> Result<Self> {
        Self::build(game, None, theta, x, nu, integration)
    }

    pub fn builtin(b: Builtin, theta: Vec<f64>, nu: LatentDistribution, integration: Integration) -> Result<Self> {
        Self::build(b.game(), Some(b), theta, Covariates::new(), nu, integration)
    }

    fn build(
        game: GameSpec,
        builtin: Option<Builtin>,
        theta: Vec<f64>,
        x: Covariates,
        nu: LatentDistribution,
        integration: Integration,
    ) -> Result<Self> {
        if !game.is_2x2() {
            return Err(Error::Unsupported(format!(
                "mixed-strategy identification needs a 2×2 game, `{}` is not",
                game.name
            )));
        }
        game.check_theta(&theta)?;
        nu.validate()?;
        if nu.dim() != game.latent_dim {
            return Err(Error::DimensionMismatch {
                expected: game.latent_dim,
                got: nu.dim(),
            });
        }
        if let Integration::MonteCarlo { n_draws: 0, .. } = integration {
            return Err(Error::InvalidGame("n_draws must be at least 1".into()));
        }
        Ok(Self {
            game,
            builtin,
            theta,
            x,
            nu,
            integration,
        })
    }

    pub fn n(&self) -> usize {
        self.game.space.len()
    }

    pub fn with_integration(&self, integration: Integration) -> Result<Self> {
        Self::build(
            self.game.clone(),
            self.builtin,
            self.theta.clone(),
            self.x.clone(),
            self.nu.clone(),
            integration,
        )
    }

    fn closed_form_supported(&self) -> bool {
        self.builtin == Some(Builtin::FamilyBargaining)
    }

    fn require_closed_form(&self) -> Result<()> {
        if self.closed_form_supported() {
            Ok(())
        } else {
            Err(Error::Unsupported(format!(
                "closed-form mixed integration is available for family-bargaining only, not `{}`; use monte-carlo",
                self.game.name
            )))
        }
    }

    /// Outcome distributions of all equilibria at `eps`.
    pub fn equilibria(&self, eps: &[f64]) -> Result<Vec<Vec<f64>>> {
        let eqs = mixed_correspondence(&self.game, &self.theta, &self.x, eps)?;
        if eqs.is_empty() {
            return Err(Error::InvalidGame(format!("no equilibrium at ε = {eps:?}")));
        }
        Ok(eqs.into_iter().map(|m| m.sigma).collect())
    }

    /// Runs `visit` on every simulated draw, chunk by chunk in parallel, and
    /// folds chunk accumulators in chunk order.
    fn simulate<A, V>(&self, n_draws: usize, seed: u64, init: impl Fn() -> A + Sync, visit: V) -> Result<Vec<A>>
    where
        A: Send,
        V: Fn(&mut A, &[f64]) -> Result<()> + Sync,
    {
        let sampler = self.nu.sampler();
        (0..n_draws.div_ceil(MC_CHUNK))
            .into_par_iter()
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k as u64);
                let len = MC_CHUNK.min(n_draws - k * MC_CHUNK);
                let mut eps = vec![0.0; sampler.dim()];
                let mut acc = init();
                for _ in 0..len {
                    sampler.sample_into(&mut rng, &mut eps);
                    visit(&mut acc, &eps)?;
                }
                Ok(acc)
            })
            .collect()
    }
}

/// Capacity values on every subset, with Monte Carlo standard errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedCapacityEstimate {
    pub values: Vec<f64>,
    pub std_errors: Option<Vec<f64>>,
}

/// `L(B)` for every subset `B`, indexed by subset bits.
pub fn mixed_capacity_all(spec: &MixedCapacitySpec) -> Result<MixedCapacityEstimate> {
    match spec.integration {
        Integration::ClosedForm => {
            spec.require_closed_form()?;
            Ok(MixedCapacityEstimate {
                values: family_closed_form(spec)?,
                std_errors: None,
            })
        }
        Integration::MonteCarlo { n_draws, seed } => {
            let size = 1usize << spec.n();
            let parts = spec.simulate(
                n_draws,
                seed,
                || (vec![0.0; size], vec![0.0; size]),
                |(sum, sq), eps| {
                    let sums: Vec<Vec<f64>> = spec.equilibria(eps)?.iter().map(|s| subset_sums(s)).collect();
                    for b in 0..size {
                        let m = sums.iter().map(|s| s[b]).fold(f64::NEG_INFINITY, f64::max);
                        sum[b] += m;
                        sq[b] += m * m;
                    }
                    Ok(())
                },
            )?;
            let (mut sum, mut sq) = (vec![0.0; size], vec![0.0; size]);
            for (s, q) in parts {
                for b in 0..size {
                    sum[b] += s[b];
                    sq[b] += q[b];
                }
            }
            let n = n_draws as f64;
            let values: Vec<f64> = sum.iter().map(|s| s / n).collect();
            let std_errors = values
                .iter()
                .zip(&sq)
                .map(|(m, q)| ((q / n - m * m).max(0.0) / n).sqrt())
                .collect();
            Ok(MixedCapacityEstimate {
                values,
                std_errors: Some(std_errors),
            })
        }
    }
}

/// `L(B) = ∫ max_{σ∈G(ε)} σ(B) dν(ε)`.
pub fn mixed_capacity(spec: &MixedCapacitySpec, b: SubsetIndex) -> Result<f64> {
    if b.as_usize() >= 1 << spec.n() {
        return Err(Error::InvalidGame(format!("subset {b} is outside the outcome space")));
    }
    Ok(mixed_capacity_all(spec)?.values[b.as_usize()])
}

/// The upper-envelope likelihood as a validated capacity.
pub fn mixed_capacity_function(spec: &MixedCapacitySpec) -> Result<Capacity> {
    Capacity::new(spec.n(), mixed_capacity_all(spec)?.values)
}

/// Cells of the latent box between consecutive cutoffs, clipped to the
/// support: `(lower, upper)` per coordinate.
fn cells(spec: &MixedCapacitySpec) -> Result<Vec<Vec<(f64, f64)>>> {
    let cutoffs = spec
        .game
        .cutoffs(&spec.theta)
        .ok_or_else(|| Error::Unsupported(format!("game `{}` exposes no cutoffs", spec.game.name)))?;
    let edges: Vec<Vec<f64>> = (0..spec.nu.dim())
        .map(|i| {
            let (lo, hi) = spec.nu.marginal(i).support();
            let mut e: Vec<f64> = cutoffs[i].iter().copied().filter(|c| *c > lo && *c < hi).collect();
            e.push(lo);
            e.push(hi);
            e.sort_by(f64::total_cmp);
            e.dedup();
            e
        })
        .collect();
    let count: usize = edges.iter().map(|e| e.len() - 1).product();
    Ok((0..count)
        .map(|mut c| {
            let mut cell = vec![(0.0, 0.0); edges.len()];
            for i in (0..edges.len()).rev() {
                let m = edges[i].len() - 1;
                cell[i] = (edges[i][c % m], edges[i][c % m + 1]);
                c /= m;
            }
            cell
        })
        .collect())
}

fn representative(cell: &[(f64, f64)]) -> Vec<f64> {
    cell.iter()
        .map(|&(a, b)| match (a.is_finite(), b.is_finite()) {
            (true, true) => 0.5 * (a + b),
            (true, false) => a + 1.0,
            (false, true) => b - 1.0,
            (false, false) => 0.0,
        })
        .collect()
}

/// Exact family-bargaining envelope capacity.
///
/// Off the band where the interior equilibrium exists only pure equilibria
/// occur, contributing `ν(cell) 1{G ∩ B ≠ ∅}`. Inside the band player 1
/// plays 1 with probability `(2θ + ε₂)/(3θ)` and player 2 with
/// `(2θ + ε₁)/(3θ)`; the maximum is 1 when a pure equilibrium lies in `B`
/// and the mixed `σ(B)` otherwise, whose integral factorizes over the two
/// coordinates.
fn family_closed_form(spec: &MixedCapacitySpec) -> Result<Vec<f64>> {
    let t = spec.theta[0];
    let size = 1usize << spec.n();
    let mut values = vec![0.0; size];
    let (m1, m2) = (spec.nu.marginal(0), spec.nu.marginal(1));
    for cell in cells(spec)? {
        let (i1, i2) = (cell[0], cell[1]);
        let mass = m1.interval_prob(i1.0, i1.1) * m2.interval_prob(i2.0, i2.1);
        if mass <= 0.0 {
            continue;
        }
        let point = representative(&cell);
        let pure = pure_nash_outcomes(&spec.game, &spec.theta, &spec.x, &point);
        let mixed = mixed_nash_2x2(&spec.game, &spec.theta, &spec.x, &point)?
            .interior()
            .is_some();
        // E[σ_y 1{cell}] for y = (a, b), outcome index 2a + b.
        let mut esig = [0.0; 4];
        if mixed {
            let (p2, e2) = (m2.interval_prob(i2.0, i2.1), m2.partial_mean(i2.0, i2.1));
            let (p1, e1) = (m1.interval_prob(i1.0, i1.1), m1.partial_mean(i1.0, i1.1));
            let s1 = [(t * p2 - e2) / (3.0 * t), (2.0 * t * p2 + e2) / (3.0 * t)];
            let s2 = [(t * p1 - e1) / (3.0 * t), (2.0 * t * p1 + e1) / (3.0 * t)];
            for a in 0..2 {
                for b in 0..2 {
                    esig[2 * a + b] = s1[a] * s2[b];
                }
            }
        }
        for (bits, v) in values.iter_mut().enumerate() {
            let b = SubsetIndex(bits as u32);
            if b.intersects(pure) {
                *v += mass;
            } else if mixed {
                *v += b.iter().map(|y| esig[y]).sum::<f64>();
            }
        }
    }
    Ok(values)
}

/// A finite representation of the integral: weighted latent points, each
/// with the outcome distributions of its equilibria.
#[derive(Clone, Debug)]
pub struct Scenarios {
    n: usize,
    weights: Vec<f64>,
    /// Scenario `k` owns atoms `offsets[k]..offsets[k + 1]`.
    offsets: Vec<usize>,
    /// Atom-major outcome distributions, `n` entries each.
    atoms: Vec<f64>,
}

impl Scenarios {
    pub fn build(spec: &MixedCapacitySpec) -> Result<Self> {
        let mut s = Scenarios {
            n: spec.n(),
            weights: Vec::new(),
            offsets: vec![0],
            atoms: Vec::new(),
        };
        match spec.integration {
            Integration::ClosedForm => {
                spec.require_closed_form()?;
                let rule = GaussLegendre::new(NonZeroUsize::new(QUADRATURE_POINTS).expect("positive"));
                let nodes = rule.as_node_weight_pairs();
                let marginals = spec.nu.marginals();
                for cell in cells(spec)? {
                    let probs: Vec<f64> = cell
                        .iter()
                        .zip(&marginals)
                        .map(|(&(a, b), m)| m.interval_prob(a, b))
                        .collect();
                    let mass: f64 = probs.iter().product();
                    if mass <= 0.0 {
                        continue;
                    }
                    let point = representative(&cell);
                    if mixed_nash_2x2(&spec.game, &spec.theta, &spec.x, &point)?
                        .interior()
                        .is_none()
                    {
                        s.push(mass, &spec.equilibria(&point)?);
                        continue;
                    }
                    // Tensor Gauss–Legendre in quantile space, where each
                    // coordinate's conditional law is uniform.
                    let axes: Vec<Vec<(f64, f64)>> = cell
                        .iter()
                        .zip(&marginals)
                        .map(|(&(a, b), m)| {
                            let (ua, ub) = (m.cdf(a), m.cdf(b));
                            let (mid, half) = (0.5 * (ua + ub), 0.5 * (ub - ua));
                            nodes
                                .iter()
                                .map(|&(x, w)| (m.quantile(mid + half * x), half * w))
                                .collect()
                        })
                        .collect();
                    for &(e1, w1) in &axes[0] {
                        for &(e2, w2) in &axes[1] {
                            s.push(w1 * w2, &spec.equilibria(&[e1, e2])?);
                        }
                    }
                }
            }
            Integration::MonteCarlo { n_draws, seed } => {
                let w = 1.0 / n_draws as f64;
                let n = s.n;
                let parts = spec.simulate(
                    n_draws,
                    seed,
                    || Scenarios {
                        n,
                        weights: Vec::new(),
                        offsets: vec![0],
                        atoms: Vec::new(),
                    },
                    |local, eps| {
                        local.push(w, &spec.equilibria(eps)?);
                        Ok(())
                    },
                )?;
                for part in parts {
                    s.extend(part);
                }
            }
        }
        Ok(s)
    }

    fn push(&mut self, weight: f64, sigmas: &[Vec<f64>]) {
        self.weights.push(weight);
        for sigma in sigmas {
            self.atoms.extend_from_slice(sigma);
        }
        self.offsets
            .push(self.offsets.last().expect("non-empty") + sigmas.len());
    }

    fn extend(&mut self, other: Scenarios) {
        let base = *self.offsets.last().expect("non-empty");
        self.weights.extend(other.weights);
        self.offsets.extend(other.offsets[1..].iter().map(|o| o + base));
        self.atoms.extend(other.atoms);
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `Σ_k w_k max_j ⟨σ_kj, f⟩` over scenarios `range`, with the argmax
    /// atoms' weighted sum.
    fn partial(&self, range: std::ops::Range<usize>, f: &[f64], grad: bool) -> (f64, Vec<f64>) {
        let n = self.n;
        let mut value = 0.0;
        let mut g = if grad { vec![0.0; n] } else { Vec::new() };
        for k in range {
            let mut best = (f64::NEG_INFINITY, 0);
            for j in self.offsets[k]..self.offsets[k + 1] {
                let v = dot(&self.atoms[j * n..(j + 1) * n], f);
                if v > best.0 {
                    best = (v, j);
                }
            }
            let w = self.weights[k];
            value += w * best.0;
            if grad {
                for (gi, a) in g.iter_mut().zip(&self.atoms[best.1 * n..(best.1 + 1) * n]) {
                    *gi += w * a;
                }
            }
        }
        (value, g)
    }

    fn evaluate(&self, f: &[f64], grad: bool) -> (f64, Vec<f64>) {
        let len = self.len();
        if len <= SCENARIO_CHUNK {
            return self.partial(0..len, f, grad);
        }
        let parts: Vec<(f64, Vec<f64>)> = (0..len.div_ceil(SCENARIO_CHUNK))
            .into_par_iter()
            .map(|c| self.partial(c * SCENARIO_CHUNK..((c + 1) * SCENARIO_CHUNK).min(len), f, grad))
            .collect();
        let mut value = 0.0;
        let mut g = if grad { vec![0.0; self.n] } else { Vec::new() };
        for (v, pg) in parts {
            value += v;
            for (gi, x) in g.iter_mut().zip(&pg) {
                *gi += x;
            }
        }
        (value, g)
    }

    /// `L̃(f)`.
    pub fn value(&self, f: &[f64]) -> f64 {
        self.evaluate(f, false).0
    }

    /// `L̃(f)` and a subgradient, which is a point of the set of
    /// outcome distributions reachable by equilibrium selection.
    pub fn value_and_subgradient(&self, f: &[f64]) -> (f64, Vec<f64>) {
        self.evaluate(f, true)
    }
}

/// `L̃(f) = ∫ max_{σ∈G(ε)} E_σ f dν(ε)`.
pub fn support_functional(spec: &MixedCapacitySpec, f: &[f64]) -> Result<f64> {
    if f.len() != spec.n() {
        return Err(Error::DimensionMismatch {
            expected: spec.n(),
            got: f.len(),
        });
    }
    Ok(Scenarios::build(spec)?.value(f))
}

/// Sampled regularity certificate of the equilibrium correspondence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularCoreReport {
    /// The pointwise upper envelope was submodular at every probe.
    pub regular: bool,
    /// At most one properly mixed equilibrium at every probe.
    pub sufficient_condition: bool,
    pub probes: usize,
    /// First probe at which the envelope failed submodularity.
    pub counterexample: Option<Vec<f64>>,
}

/// The capacity `B ↦ max_j σ_j(B)` of a finite set of distributions.
pub fn envelope(sigmas: &[Vec<f64>]) -> Vec<f64> {
    let sums: Vec<Vec<f64>> = sigmas.iter().map(|s| subset_sums(s)).collect();
    (0..sums[0].len())
        .map(|b| sums.iter().map(|s| s[b]).fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

/// Whether the upper envelope of `sigmas` is submodular on every pair.
pub fn envelope_is_submodular(sigmas: &[Vec<f64>]) -> bool {
    let v = envelope(sigmas);
    (0..v.len()).all(|a| (a + 1..v.len()).all(|b| v[a | b] + v[a & b] <= v[a] + v[b] + ENVELOPE_TOL))
}

/// Probes the correspondence at `n_probe_draws` seeded latent draws.
pub fn regular_core_check(spec: &MixedCapacitySpec, n_probe_draws: usize, seed: u64) -> Result<RegularCoreReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sampler = spec.nu.sampler();
    let mut eps = vec![0.0; sampler.dim()];
    let mut report = RegularCoreReport {
        regular: true,
        sufficient_condition: true,
        probes: n_probe_draws,
        counterexample: None,
    };
    for _ in 0..n_probe_draws {
        sampler.sample_into(&mut rng, &mut eps);
        let eqs = mixed_correspondence(&spec.game, &spec.theta, &spec.x, &eps)?;
        if eqs.iter().filter(|m| m.is_proper()).count() > 1 {
            report.sufficient_condition = false;
        }
        let sigmas: Vec<Vec<f64>> = eqs.into_iter().map(|m| m.sigma).collect();
        if !sigmas.is_empty() && !envelope_is_submodular(&sigmas) {
            report.regular = false;
            report.counterexample.get_or_insert_with(|| eps.clone());
        }
    }
    Ok(report)
}

/// Core membership under the envelope capacity by submodular minimization.
///
/// Sharp only when the correspondence has a regular core; callers should
/// run [`regular_core_check`] first.
pub fn membership_submodular_mixed(p: &ProbabilityVector, spec: &MixedCapacitySpec) -> Result<SubmodularCheck> {
    membership_submodular_mixed_tol(p, spec, SUBMODULAR_TOL)
}

pub fn membership_submodular_mixed_tol(
    p: &ProbabilityVector,
    spec: &MixedCapacitySpec,
    tol: f64,
) -> Result<SubmodularCheck> {
    if p.len() != spec.n() {
        return Err(Error::DimensionMismatch {
            expected: spec.n(),
            got: p.len(),
        });
    }
    let values = mixed_capacity_all(spec)?.values;
    // Simulated envelopes are monotone draw by draw, so only rounding can
    // break the capacity axioms; keep them unchecked beyond that.
    let capacity = Capacity::new(spec.n(), values.clone()).or_else(|_| Capacity::raw(spec.n(), values))?;
    core_membership_submodular_tol(p, &capacity, tol)
}

/// Three-way verdict of a membership test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    In,
    Out,
    Inconclusive,
}

impl Verdict {
    pub fn from_inside(inside: bool) -> Self {
        if inside {
            Verdict::In
        } else {
            Verdict::Out
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::In => "in",
            Verdict::Out => "out",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Settings of the convex route.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexConfig {
    /// A normalized slice value below `−tol` means outside; a distance from
    /// the selectable set of at most `tol` means inside.
    pub tol: f64,
    pub max_iter: usize,
    /// Coordinate fixed to ±1 on the two slices.
    pub anchor: usize,
}

impl Default for ConvexConfig {
    fn default() -> Self {
        Self {
            tol: CONVEX_TOL,
            max_iter: SUBGRADIENT_CAP,
            anchor: 0,
        }
    }
}

/// `φ(f) = L̃(f) − E_P f` for a fixed scenario set.
#[derive(Clone, Debug)]
pub struct ConvexFeasibilityProblem {
    pub scenarios: Scenarios,
    pub p: Vec<f64>,
}

impl ConvexFeasibilityProblem {
    pub fn new(spec: &MixedCapacitySpec, p: &ProbabilityVector) -> Result<Self> {
        Self::from_scenarios(Scenarios::build(spec)?, p)
    }

    pub fn from_scenarios(scenarios: Scenarios, p: &ProbabilityVector) -> Result<Self> {
        if p.len() != scenarios.n() {
            return Err(Error::DimensionMismatch {
                expected: scenarios.n(),
                got: p.len(),
            });
        }
        Ok(Self {
            scenarios,
            p: p.masses().to_vec(),
        })
    }

    pub fn phi(&self, f: &[f64]) -> f64 {
        self.scenarios.value(f) - dot(&self.p, f)
    }

    /// `φ(f)` and the point of the selectable set attaining `L̃(f)`.
    fn phi_and_support(&self, f: &[f64]) -> (f64, Vec<f64>) {
        let (v, g) = self.scenarios.value_and_subgradient(f);
        (v - dot(&self.p, f), g)
    }
}

/// Outcome of the convex route.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexCheck {
    pub verdict: Verdict,
    /// Unit-norm, zero-mean `f` with `E_P f > L̃(f)`, when outside.
    pub violating_f: Option<Vec<f64>>,
    /// Smallest `φ(f) / ‖f − f̄‖` seen on the slices `f_anchor = +1` and
    /// `f_anchor = −1`.
    pub slice_minima: [f64; 2],
    /// Distance from `p` to the closest selectable distribution found.
    pub distance: f64,
    pub iterations: usize,
}

fn centered_norm(f: &[f64]) -> (Vec<f64>, f64) {
    let mean = f.iter().sum::<f64>() / f.len() as f64;
    let c: Vec<f64> = f.iter().map(|v| v - mean).collect();
    let norm = dot(&c, &c).sqrt();
    (c, norm)
}

struct Tracker {
    tol: f64,
    anchor: usize,
    minima: [f64; 2],
    best: [Option<Vec<f64>>; 2],
}

impl Tracker {
    /// Records `φ(f)`; returns true once some normalized value is below `−tol`.
    fn record(&mut self, f: &[f64], phi: f64) -> bool {
        let (c, norm) = centered_norm(f);
        if norm <= 1e-300 {
            return false;
        }
        let slice = usize::from(c[self.anchor] < 0.0);
        let v = phi / norm;
        if v < self.minima[slice] {
            self.minima[slice] = v;
            self.best[slice] = Some(c.iter().map(|x| x / norm).collect());
        }
        self.minima.iter().any(|m| *m < -self.tol)
    }

    fn violating(&self) -> Option<Vec<f64>> {
        let k = usize::from(self.minima[1] < self.minima[0]);
        self.best[k].clone()
    }
}

enum Certificate {
    Inside(f64),
    Separated(f64),
    Open(f64),
}

/// Min-norm point of `C − p`, `C` the selectable set, by Wolfe's method
/// with the support functional as linear oracle.
fn hull_certificate(problem: &ConvexFeasibilityProblem, start: &[f64], tracker: &mut Tracker) -> Certificate {
    let shift = |c: Vec<f64>| -> Vec<f64> { c.iter().zip(&problem.p).map(|(a, b)| a - b).collect() };
    let mut points = vec![shift(start.to_vec())];
    let mut lambda = vec![1.0];
    let mut x = points[0].clone();
    let mut max_norm2 = dot(&x, &x);
    for _ in 0..CERTIFICATE_CAP {
        let xx = dot(&x, &x);
        if xx.sqrt() <= tracker.tol {
            return Certificate::Inside(xx.sqrt());
        }
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let (_, support) = problem.scenarios.value_and_subgradient(&neg);
        let q = shift(support);
        let xq = dot(&x, &q);
        if xq > 0.0 {
            // f = −x separates: φ(−x) = −⟨x, q⟩ < 0.
            if tracker.record(&neg, -xq) {
                return Certificate::Separated(xx.sqrt());
            }
        }
        max_norm2 = max_norm2.max(dot(&q, &q));
        if xx - xq <= 1e-12 * max_norm2 || points.iter().any(|p| p == &q) {
            return Certificate::Open(xx.sqrt());
        }
        points.push(q);
        lambda.push(0.0);
        loop {
            let alpha = affine_minimizer(&points);
            if alpha.iter().all(|&a| a > 1e-15) {
                x = combine(&points, &alpha);
                lambda = alpha;
                break;
            }
            let step = lambda
                .iter()
                .zip(&alpha)
                .filter(|(_, &a)| a <= 1e-15)
                .map(|(&l, &a)| l / (l - a))
                .fold(1.0f64, f64::min);
            for (l, a) in lambda.iter_mut().zip(&alpha) {
                *l = step * a + (1.0 - step) * *l;
            }
            let mut k = 0;
            while k < points.len() {
                if lambda[k] <= 1e-15 {
                    points.remove(k);
                    lambda.remove(k);
                } else {
                    k += 1;
                }
            }
            let s: f64 = lambda.iter().sum();
            lambda.iter_mut().for_each(|l| *l /= s);
            x = combine(&points, &lambda);
            if points.len() == 1 {
                break;
            }
        }
    }
    Certificate::Open(dot(&x, &x).sqrt())
}

/// Convex-route membership: `p` is selectable iff `φ ≥ 0` everywhere.
///
/// Projected subgradient descent runs on the slices `f_anchor = ±1` with
/// steps `c/√k`, `c` the inverse initial subgradient norm. At iterations
/// 16, 32, 64, … the best subgradient point seeds a min-norm-point
/// certificate over the selectable set, which either proves the distance
/// from `p` to that set is within `tol` (inside) or yields a separating
/// direction (outside). Without either by the iteration cap the verdict is
/// inconclusive.
pub fn membership_convex(problem: &ConvexFeasibilityProblem, cfg: &ConvexConfig) -> Result<ConvexCheck> {
    let n = problem.p.len();
    if cfg.anchor >= n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: cfg.anchor + 1,
        });
    }
    let mut tracker = Tracker {
        tol: cfg.tol,
        anchor: cfg.anchor,
        minima: [f64::INFINITY; 2],
        best: [None, None],
    };
    let mut f: [Vec<f64>; 2] = [vec![0.0; n], vec![0.0; n]];
    f[0][cfg.anchor] = 1.0;
    f[1][cfg.anchor] = -1.0;
    let mut scale = [None::<f64>; 2];
    let mut closest: (f64, Vec<f64>) = (f64::INFINITY, Vec::new());
    let mut distance = f64::INFINITY;
    let mut next_check = 16;
    let done = |verdict: Verdict, tracker: &Tracker, distance: f64, k: usize| ConvexCheck {
        verdict,
        violating_f: (verdict == Verdict::Out).then(|| tracker.violating()).flatten(),
        slice_minima: tracker.minima,
        distance,
        iterations: k,
    };
    for k in 1..=cfg.max_iter {
        for s in 0..2 {
            let (phi, support) = problem.phi_and_support(&f[s]);
            let gap: f64 = support.iter().zip(&problem.p).map(|(a, b)| (a - b) * (a - b)).sum();
            if gap < closest.0 {
                closest = (gap, support.clone());
            }
            if tracker.record(&f[s], phi) {
                return Ok(done(Verdict::Out, &tracker, distance, k));
            }
            let mut g: Vec<f64> = support.iter().zip(&problem.p).map(|(a, b)| a - b).collect();
            g[cfg.anchor] = 0.0;
            let norm = dot(&g, &g).sqrt();
            if norm == 0.0 {
                continue;
            }
            let c = *scale[s].get_or_insert(1.0 / norm);
            let step = c / (k as f64).sqrt();
            for (fi, gi) in f[s].iter_mut().zip(&g) {
                *fi -= step * gi;
            }
        }
        if k == next_check || k == cfg.max_iter {
            next_check *= 2;
            match hull_certificate(problem, &closest.1, &mut tracker) {
                Certificate::Inside(d) => return Ok(done(Verdict::In, &tracker, d, k)),
                Certificate::Separated(d) => return Ok(done(Verdict::Out, &tracker, d, k)),
                Certificate::Open(d) => distance = distance.min(d),
            }
        }
    }
    Ok(done(Verdict::Inconclusive, &tracker, distance, cfg.max_iter))
}
