//! Identification driver: parameter grids, per-point membership with a
//! selectable method, singleton-class comparison, core vertices and
//! sampling scatter data.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::capacity::{
    capacity_from_combos, check_capacity, core_contains_bruteforce, core_contains_bruteforce_tol, Capacity,
    EquilibriumCombos, CORE_TOL,
};
use crate::cd::{cd_membership, permutations};
use crate::error::{Error, Result};
use crate::flow::feasible;
use crate::games::descriptor::ResolvedGame;
use crate::games::{combos_analytic, combos_monte_carlo, Builtin, Covariates};
use crate::mixed::{
    membership_convex, membership_submodular_mixed, ConvexConfig, ConvexFeasibilityProblem, Integration,
    MixedCapacitySpec, Verdict,
};
use crate::space::{OutcomeSpace, ProbabilityVector, SubsetIndex};
use crate::submodular::core_membership_submodular;

/// Default bound on the number of grid points.
pub const MAX_GRID_POINTS: usize = 10_000_000;
/// Largest outcome space for vertex enumeration over all orderings.
pub const MAX_VERTEX_OUTCOMES: usize = 8;
/// Draws used when a game has no closed-form combination masses.
pub const DEFAULT_MC_DRAWS: usize = 100_000;
/// Grid points evaluated per parallel batch; output order is preserved.
const BATCH: usize = 1024;

/// Membership algorithm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Brute,
    Submodular,
    Maxflow,
    Cd,
    MixedSubmodular,
    MixedConvex,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Brute,
        Method::Submodular,
        Method::Maxflow,
        Method::Cd,
        Method::MixedSubmodular,
        Method::MixedConvex,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Brute => "brute",
            Method::Submodular => "submodular",
            Method::Maxflow => "maxflow",
            Method::Cd => "cd",
            Method::MixedSubmodular => "mixed-submodular",
            Method::MixedConvex => "mixed-convex",
        }
    }

    pub fn is_mixed(self) -> bool {
        matches!(self, Method::MixedSubmodular | Method::MixedConvex)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown method `{s}`")))
    }
}

/// Values taken by one parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    /// `steps + 1` evenly spaced values from `min` to `max` inclusive.
    Range {
        min: f64,
        max: f64,
        steps: usize,
    },
    Values {
        values: Vec<f64>,
    },
    /// Tied to another parameter: `value(of) + plus`.
    Tied {
        equals: String,
        #[serde(default)]
        plus: f64,
    },
}

impl Axis {
    fn values(&self) -> Option<Vec<f64>> {
        match self {
            Axis::Range { min, max, steps } => Some(if *steps == 0 {
                vec![*min]
            } else {
                (0..=*steps)
                    .map(|k| min + (max - min) * k as f64 / *steps as f64)
                    .collect()
            }),
            Axis::Values { values } => Some(values.clone()),
            Axis::Tied { .. } => None,
        }
    }
}

/// A parameter grid: the cartesian product of its free axes, the last
/// parameter varying fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub axes: Vec<(String, Axis)>,
    pub method: Option<Method>,
}

impl GridSpec {
    pub fn new(axes: Vec<(String, Axis)>) -> Self {
        Self { axes, method: None }
    }

    /// A single point.
    pub fn point(names: &[String], theta: &[f64]) -> Self {
        Self::new(
            names
                .iter()
                .zip(theta)
                .map(|(n, v)| (n.clone(), Axis::Values { values: vec![*v] }))
                .collect(),
        )
    }

    /// Parses `{"alpha1": {"min":-1,"max":0,"steps":100}, ..., "method": "maxflow"}`.
    pub fn from_json(s: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(s).map_err(|e| Error::Parse(format!("grid: {e}")))?;
        let Value::Object(map) = v else {
            return Err(Error::Parse("grid must be a JSON object".into()));
        };
        let mut grid = GridSpec::new(Vec::new());
        for (k, v) in map {
            if k == "method" {
                let m = v
                    .as_str()
                    .ok_or_else(|| Error::Parse("grid method must be a string".into()))?;
                grid.method = Some(m.parse()?);
            } else {
                let axis: Axis =
                    serde_json::from_value(v).map_err(|e| Error::Parse(format!("grid axis `{k}`: {e}")))?;
                grid.axes.push((k, axis));
            }
        }
        Ok(grid)
    }

    /// Lays the axes out in parameter order and checks the point count.
    pub fn plan(&self, param_names: &[String], max_points: usize) -> Result<GridPlan> {
        for (name, _) in &self.axes {
            if !param_names.contains(name) {
                return Err(Error::Parse(format!(
                    "grid parameter `{name}` is not one of {param_names:?}"
                )));
            }
        }
        let mut free = Vec::new();
        let mut tied = Vec::new();
        for (i, name) in param_names.iter().enumerate() {
            let axis = self
                .axes
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, a)| a)
                .ok_or_else(|| Error::Parse(format!("grid does not cover parameter `{name}`")))?;
            match axis {
                Axis::Tied { equals, plus } => {
                    let j = param_names
                        .iter()
                        .position(|n| n == equals)
                        .ok_or_else(|| Error::Parse(format!("`{name}` is tied to unknown `{equals}`")))?;
                    if matches!(
                        self.axes.iter().find(|(n, _)| n == equals),
                        Some((_, Axis::Tied { .. }))
                    ) {
                        return Err(Error::Parse(format!("`{name}` is tied to another tied parameter")));
                    }
                    tied.push((i, j, *plus));
                }
                other => free.push((i, other.values().expect("free axis"))),
            }
        }
        let mut count: usize = 1;
        for (_, v) in &free {
            count = count
                .checked_mul(v.len())
                .filter(|c| *c <= max_points)
                .ok_or_else(|| Error::Parse(format!("grid exceeds {max_points} points")))?;
        }
        if free.iter().any(|(_, v)| v.is_empty()) {
            count = 0;
        }
        Ok(GridPlan {
            names: param_names.to_vec(),
            free,
            tied,
            count,
        })
    }
}

/// A grid ready for enumeration.
#[derive(Clone, Debug)]
pub struct GridPlan {
    pub names: Vec<String>,
    free: Vec<(usize, Vec<f64>)>,
    tied: Vec<(usize, usize, f64)>,
    count: usize,
}

impl GridPlan {
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// The `k`-th point.
    pub fn theta(&self, mut k: usize) -> Vec<f64> {
        let mut theta = vec![0.0; self.names.len()];
        for (i, values) in self.free.iter().rev() {
            theta[*i] = values[k % values.len()];
            k /= values.len();
        }
        for &(i, j, plus) in &self.tied {
            theta[i] = theta[j] + plus;
        }
        theta
    }

    pub fn named(&self, theta: &[f64]) -> BTreeMap<String, f64> {
        self.names.iter().cloned().zip(theta.iter().copied()).collect()
    }
}

/// A violated set (as labels) or a violating function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Witness {
    Subset(Vec<String>),
    Function(Vec<f64>),
}

/// Verdict at one grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub index: usize,
    pub theta: BTreeMap<String, f64>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ms: Option<f64>,
}

/// Knobs shared by all grid points.
#[derive(Clone, Debug)]
pub struct IdentifyOptions {
    pub method: Method,
    pub seed: u64,
    /// Draws for simulated combinations or mixed integrals.
    pub mc_draws: usize,
    pub convex: ConvexConfig,
    /// Record wall time per point (makes output run-dependent).
    pub timing: bool,
    /// First grid index to evaluate, for resuming.
    pub start: usize,
    pub max_points: usize,
}

impl Default for IdentifyOptions {
    fn default() -> Self {
        Self {
            method: Method::Maxflow,
            seed: 0,
            mc_draws: DEFAULT_MC_DRAWS,
            convex: ConvexConfig::default(),
            timing: false,
            start: 0,
            max_points: MAX_GRID_POINTS,
        }
    }
}

/// A game, its latent law and the observed distribution.
#[derive(Clone, Debug)]
pub struct Model {
    pub resolved: ResolvedGame,
    pub p: ProbabilityVector,
}

impl Model {
    pub fn new(resolved: ResolvedGame, p: ProbabilityVector) -> Result<Self> {
        if p.len() != resolved.game.space.len() {
            return Err(Error::DimensionMismatch {
                expected: resolved.game.space.len(),
                got: p.len(),
            });
        }
        Ok(Self { resolved, p })
    }

    pub fn space(&self) -> &OutcomeSpace {
        &self.resolved.game.space
    }

    pub fn param_names(&self) -> &[String] {
        &self.resolved.game.param_names
    }

    /// Rejects method/game pairings that cannot work at any parameter value.
    pub fn check_method(&self, method: Method) -> Result<()> {
        let game = &self.resolved.game;
        if method.is_mixed() && !game.is_2x2() {
            return Err(Error::Incompatible {
                method: method.name().into(),
                reason: format!("mixed-strategy methods need a 2×2 game; `{}` is not", game.name),
            });
        }
        if method.is_mixed() && game.space.len() != game.num_profiles() {
            return Err(Error::Incompatible {
                method: method.name().into(),
                reason: format!("`{}` does not observe every action profile", game.name),
            });
        }
        Ok(())
    }

    /// Pure-strategy equilibrium combinations at `theta`.
    pub fn combos(&self, theta: &[f64], opts: &IdentifyOptions) -> Result<EquilibriumCombos> {
        let nu = self.resolved.nu.resolve(theta)?;
        let game = &self.resolved.game;
        let x = Covariates::new();
        let est = if game.cutoffs(theta).is_some() {
            combos_analytic(game, theta, &x, &nu)?
        } else {
            combos_monte_carlo(game, theta, &x, &nu, opts.mc_draws, opts.seed)?
        };
        est.combos()
    }

    /// Mixed-strategy integration setup at `theta`.
    pub fn mixed_spec(&self, theta: &[f64], opts: &IdentifyOptions) -> Result<MixedCapacitySpec> {
        let nu = self.resolved.nu.resolve(theta)?;
        let integration = if self.resolved.builtin == Some(Builtin::FamilyBargaining) {
            Integration::ClosedForm
        } else {
            Integration::MonteCarlo {
                n_draws: opts.mc_draws,
                seed: opts.seed,
            }
        };
        let spec = match self.resolved.builtin {
            Some(b) => MixedCapacitySpec::builtin(b, theta.to_vec(), nu, integration)?,
            None => MixedCapacitySpec::new(
                self.resolved.game.clone(),
                theta.to_vec(),
                Covariates::new(),
                nu,
                integration,
            )?,
        };
        Ok(spec)
    }

    /// Membership of `p` at one parameter value.
    pub fn check(&self, theta: &[f64], opts: &IdentifyOptions) -> Result<(Verdict, Option<Witness>)> {
        let space = self.space();
        let subset = |w: Option<SubsetIndex>| w.map(|w| Witness::Subset(space.subset_labels(w)));
        let method = opts.method;
        match method {
            Method::Brute | Method::Submodular | Method::Maxflow | Method::Cd => {
                let combos = self.combos(theta, opts)?;
                let (inside, witness) = match method {
                    Method::Brute => {
                        let r = core_contains_bruteforce(&self.p, &capacity_from_combos(&combos))?;
                        (r.inside, r.witness)
                    }
                    Method::Submodular => {
                        let r = core_membership_submodular(&self.p, &capacity_from_combos(&combos))?;
                        (r.inside, r.witness)
                    }
                    Method::Maxflow => {
                        let r = feasible(&combos, &self.p)?;
                        (r.inside, r.witness)
                    }
                    _ => {
                        let r = cd_membership(&combos, &self.p, None)?;
                        (r.inside, r.witness)
                    }
                };
                Ok((Verdict::from_inside(inside), subset(witness)))
            }
            Method::MixedSubmodular => {
                let r = membership_submodular_mixed(&self.p, &self.mixed_spec(theta, opts)?)?;
                Ok((Verdict::from_inside(r.inside), subset(r.witness)))
            }
            Method::MixedConvex => {
                let problem = ConvexFeasibilityProblem::new(&self.mixed_spec(theta, opts)?, &self.p)?;
                let r = membership_convex(&problem, &opts.convex)?;
                Ok((r.verdict, r.violating_f.map(Witness::Function)))
            }
        }
    }
}

/// Sweeps the grid in index order, handing each result to `emit`.
///
/// Points are evaluated in parallel batches but emitted strictly in order,
/// starting at `opts.start`; the output depends only on the inputs unless
/// `opts.timing` is set.
pub fn identify(
    model: &Model,
    grid: &GridSpec,
    opts: &IdentifyOptions,
    mut emit: impl FnMut(&PointResult) -> Result<()>,
) -> Result<usize> {
    model.check_method(opts.method)?;
    let plan = grid.plan(model.param_names(), opts.max_points)?;
    let mut done = 0;
    let mut k = opts.start;
    while k < plan.len() {
        let end = (k + BATCH).min(plan.len());
        let batch: Vec<Result<PointResult>> = (k..end)
            .into_par_iter()
            .map(|index| {
                let theta = plan.theta(index);
                let started = Instant::now();
                let (verdict, witness) = model.check(&theta, opts)?;
                Ok(PointResult {
                    index,
                    theta: plan.named(&theta),
                    verdict,
                    witness,
                    method: opts.method,
                    ms: opts.timing.then(|| started.elapsed().as_secs_f64() * 1e3),
                })
            })
            .collect();
        for r in batch {
            emit(&r?)?;
            done += 1;
        }
        k = end;
    }
    Ok(done)
}

/// Collects [`identify`] into a vector.
pub fn identify_all(model: &Model, grid: &GridSpec, opts: &IdentifyOptions) -> Result<Vec<PointResult>> {
    let mut out = Vec::new();
    identify(model, grid, opts, |r| {
        out.push(r.clone());
        Ok(())
    })?;
    Ok(out)
}

/// Sharp and singleton-class verdicts at one point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingletonPoint {
    pub index: usize,
    pub theta: BTreeMap<String, f64>,
    pub sharp: bool,
    pub singleton: bool,
}

/// The grid points in the sharp set and in the singleton-class relaxation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SingletonComparison {
    pub points: Vec<SingletonPoint>,
}

impl SingletonComparison {
    pub fn sharp(&self) -> impl Iterator<Item = &SingletonPoint> {
        self.points.iter().filter(|p| p.sharp)
    }

    pub fn singleton(&self) -> impl Iterator<Item = &SingletonPoint> {
        self.points.iter().filter(|p| p.singleton)
    }
}

/// `P({y}) ≤ L({y})` for every outcome.
pub fn singleton_class_contains(combos: &EquilibriumCombos, p: &ProbabilityVector) -> bool {
    (0..p.len()).all(|y| {
        let l: f64 = combos.iter().filter(|(u, _)| u.contains(y)).map(|(_, q)| q).sum();
        p.get(y) <= l + CORE_TOL
    })
}

/// Sharp (max-flow) versus singleton-class membership over a grid.
pub fn compare_singleton(model: &Model, grid: &GridSpec, opts: &IdentifyOptions) -> Result<SingletonComparison> {
    let plan = grid.plan(model.param_names(), opts.max_points)?;
    let points = (opts.start..plan.len())
        .into_par_iter()
        .map(|index| {
            let theta = plan.theta(index);
            let combos = model.combos(&theta, opts)?;
            Ok(SingletonPoint {
                index,
                theta: plan.named(&theta),
                sharp: feasible(&combos, &model.p)?.inside,
                singleton: singleton_class_contains(&combos, &model.p),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SingletonComparison { points })
}

/// Extreme points of the core of a submodular capacity: the greedy vertices
/// over every outcome ordering, deduplicated in order of first appearance.
pub fn core_vertices(capacity: &Capacity) -> Result<Vec<ProbabilityVector>> {
    let n = capacity.n();
    if n > MAX_VERTEX_OUTCOMES {
        return Err(Error::SpaceSize {
            got: n,
            max: MAX_VERTEX_OUTCOMES,
        });
    }
    let report = check_capacity(capacity);
    if !report.all() {
        return Err(Error::InvalidCapacity(
            "vertex enumeration needs a normalized, monotone, submodular capacity".into(),
        ));
    }
    let mut seen: Vec<Vec<f64>> = Vec::new();
    for perm in permutations(n) {
        let mut v = vec![0.0; n];
        let mut set = SubsetIndex::EMPTY;
        let mut prev = 0.0;
        for &y in &perm {
            set = set.with(y);
            let cur = capacity.value(set);
            v[y] = cur - prev;
            prev = cur;
        }
        if !seen
            .iter()
            .any(|s| s.iter().zip(&v).all(|(a, b)| (a - b).abs() <= 1e-12))
        {
            seen.push(v);
        }
    }
    seen.into_iter()
        .map(|v| {
            let v = v.into_iter().map(|x| x.max(0.0)).collect();
            ProbabilityVector::new(v)
        })
        .collect()
}

/// Average of the core vertices.
pub fn core_barycenter(vertices: &[ProbabilityVector]) -> Result<ProbabilityVector> {
    let n = vertices
        .first()
        .ok_or_else(|| Error::InvalidCapacity("no vertices".into()))?
        .len();
    let k = vertices.len() as f64;
    let mut b = vec![0.0; n];
    for v in vertices {
        for (bi, x) in b.iter_mut().zip(v.masses()) {
            *bi += x / k;
        }
    }
    ProbabilityVector::new(b)
}

/// One empirical distribution of a scatter run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub index: usize,
    pub p: Vec<f64>,
    pub distance: f64,
    pub inside: bool,
}

/// Kept empirical distributions with core-membership flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scatter {
    pub dgp_in_core: bool,
    pub samples: usize,
    pub points: Vec<ScatterPoint>,
}

impl Scatter {
    pub fn outside_fraction(&self) -> f64 {
        if self.points.is_empty() {
            return 0.0;
        }
        self.points.iter().filter(|p| !p.inside).count() as f64 / self.points.len() as f64
    }
}

/// Counts of `size` multinomial draws, by sequential conditional binomials.
pub fn multinomial<R: rand::Rng + ?Sized>(rng: &mut R, size: u64, probs: &[f64]) -> Vec<u64> {
    let mut counts = vec![0; probs.len()];
    let mut left = size;
    let mut rest = 1.0;
    for (i, &q) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i + 1 == probs.len() || rest <= q {
            counts[i] = left;
            break;
        }
        let c = Binomial::new(left, (q / rest).clamp(0.0, 1.0))
            .expect("probability in [0, 1]")
            .sample(rng);
        counts[i] = c;
        left -= c;
        rest -= q;
    }
    counts
}

/// Empirical distributions of `samples` multinomial samples of
/// `sample_size` from `dgp`, keeping the `keep_fraction` closest to `dgp` in
/// Euclidean distance, each flagged for core membership.
///
/// Sample `k` uses ChaCha8 stream `k` under `seed`.
pub fn montecarlo_scatter(
    capacity: &Capacity,
    dgp: &ProbabilityVector,
    samples: usize,
    sample_size: u64,
    seed: u64,
    keep_fraction: f64,
) -> Result<Scatter> {
    if capacity.n() != dgp.len() {
        return Err(Error::DimensionMismatch {
            expected: capacity.n(),
            got: dgp.len(),
        });
    }
    if !(0.0..=1.0).contains(&keep_fraction) || sample_size == 0 {
        return Err(Error::InvalidProbability(
            "keep_fraction must lie in [0, 1] and sample_size be positive".into(),
        ));
    }
    let dgp_in_core = core_contains_bruteforce(dgp, capacity)?.inside;
    let mut points = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let counts = multinomial(&mut rng, sample_size, dgp.masses());
            let p: Vec<f64> = counts.iter().map(|&c| c as f64 / sample_size as f64).collect();
            let distance = p
                .iter()
                .zip(dgp.masses())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let pv = ProbabilityVector::new(p.clone())?;
            let inside = core_contains_bruteforce_tol(&pv, capacity, CORE_TOL)?.inside;
            Ok(ScatterPoint {
                index: k,
                p,
                distance,
                inside,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    points.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.index.cmp(&b.index)));
    points.truncate((keep_fraction * samples as f64).round() as usize);
    points.sort_by_key(|p| p.index);
    Ok(Scatter {
        dgp_in_core,
        samples,
        points,
    })
}

/// Throughput of one method over a list of parameter values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub game: String,
    pub method: Method,
    pub points: usize,
    pub seconds: f64,
    pub per_second: f64,
    pub inside: usize,
}

/// Times sequential `check` calls, one per parameter value.
pub fn bench_method(model: &Model, thetas: &[Vec<f64>], opts: &IdentifyOptions) -> Result<BenchRecord> {
    model.check_method(opts.method)?;
    let started = Instant::now();
    let mut inside = 0;
    for theta in thetas {
        if model.check(theta, opts)?.0 == Verdict::In {
            inside += 1;
        }
    }
    let seconds = started.elapsed().as_secs_f64();
    Ok(BenchRecord {
        game: model.resolved.game.name.clone(),
        method: opts.method,
        points: thetas.len(),
        seconds,
        per_second: thetas.len() as f64 / seconds.max(1e-12),
        inside,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::descriptor::GameDescriptor;

    fn jovanovic_model(p11: f64) -> Model {
        let r = GameDescriptor::builtin(Builtin::Jovanovic).resolve().unwrap();
        Model::new(r, ProbabilityVector::new(vec![1.0 - p11, p11]).unwrap()).unwrap()
    }

    #[test]
    fn grid_parsing_and_layout() {
        let g = GridSpec::from_json(
            r#"{"beta1":{"equals":"beta2","plus":-0.1},"alpha1":{"min":-1,"max":0,"steps":4},
                "beta2":{"values":[-0.4,-0.3]},"method":"cd"}"#,
        )
        .unwrap();
        assert_eq!(g.method, Some(Method::Cd));
        let names: Vec<String> = ["alpha1", "beta1", "beta2"].map(String::from).to_vec();
        let plan = g.plan(&names, MAX_GRID_POINTS).unwrap();
        assert_eq!(plan.len(), 10);
        assert_eq!(plan.theta(0), vec![-1.0, -0.5, -0.4]);
        let t = plan.theta(3);
        assert!((t[0] + 0.75).abs() < 1e-15 && (t[1] + 0.4).abs() < 1e-12 && t[2] == -0.3);
        assert!(g.plan(&names, 5).is_err());
        assert!(GridSpec::from_json(r#"{"gamma":{"values":[1]}}"#)
            .unwrap()
            .plan(&names, 10)
            .is_err());
    }

    #[test]
    fn jovanovic_sweep() {
        let model = jovanovic_model(0.25);
        let grid = GridSpec::from_json(r#"{"theta":{"min":0,"max":1,"steps":100}}"#).unwrap();
        for method in [Method::Brute, Method::Submodular, Method::Maxflow, Method::Cd] {
            let opts = IdentifyOptions {
                method,
                ..Default::default()
            };
            let out = identify_all(&model, &grid, &opts).unwrap();
            assert_eq!(out.len(), 101);
            for r in &out {
                let inside = r.index >= 50;
                assert_eq!(r.verdict == Verdict::In, inside, "{method:?} at {}", r.index);
                if !inside {
                    assert_eq!(r.witness, Some(Witness::Subset(vec!["11".into()])), "{method:?}");
                }
            }
        }
    }

    #[test]
    fn empty_grid_and_resume() {
        let model = jovanovic_model(0.25);
        let grid = GridSpec::from_json(r#"{"theta":{"values":[]}}"#).unwrap();
        assert!(identify_all(&model, &grid, &IdentifyOptions::default())
            .unwrap()
            .is_empty());
        let grid = GridSpec::from_json(r#"{"theta":{"min":0,"max":1,"steps":10}}"#).unwrap();
        let opts = IdentifyOptions {
            start: 7,
            ..Default::default()
        };
        let out = identify_all(&model, &grid, &opts).unwrap();
        assert_eq!(out.iter().map(|r| r.index).collect::<Vec<_>>(), vec![7, 8, 9, 10]);
    }

    #[test]
    fn mixed_methods_rejected_for_large_games() {
        let r = GameDescriptor::builtin(Builtin::Oligopoly2Type).resolve().unwrap();
        let model = Model::new(r, ProbabilityVector::new(vec![1.0 / 9.0; 9]).unwrap()).unwrap();
        assert!(matches!(
            model.check_method(Method::MixedConvex),
            Err(Error::Incompatible { .. })
        ));
        assert!(model.check_method(Method::Maxflow).is_ok());
    }

    #[test]
    fn vertices_of_simple_cores() {
        let p = ProbabilityVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        let v = core_vertices(&Capacity::additive(&p)).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].masses(), p.masses());

        let combos = EquilibriumCombos::new(2, vec![(SubsetIndex(1), 0.75), (SubsetIndex(3), 0.25)]).unwrap();
        let v = core_vertices(&capacity_from_combos(&combos)).unwrap();
        let got: Vec<Vec<f64>> = v.iter().map(|v| v.masses().to_vec()).collect();
        assert_eq!(got, vec![vec![1.0, 0.0], vec![0.75, 0.25]]);
        for vertex in &v {
            assert!(
                core_contains_bruteforce(vertex, &capacity_from_combos(&combos))
                    .unwrap()
                    .inside
            );
        }

        let bad = Capacity::raw(2, vec![0.0, 0.2, 0.2, 1.0]).unwrap();
        assert!(core_vertices(&bad).is_err());
    }

    #[test]
    fn multinomial_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = multinomial(&mut rng, 1000, &[0.25, 0.75, 0.0, 0.0]);
        assert_eq!(c.iter().sum::<u64>(), 1000);
        assert_eq!(&c[2..], &[0, 0]);
    }

    #[test]
    fn scatter_is_deterministic_and_trimmed() {
        let combos = EquilibriumCombos::new(2, vec![(SubsetIndex(1), 0.75), (SubsetIndex(3), 0.25)]).unwrap();
        let cap = capacity_from_combos(&combos);
        let dgp = ProbabilityVector::new(vec![0.875, 0.125]).unwrap();
        let a = montecarlo_scatter(&cap, &dgp, 200, 100, 3, 0.95).unwrap();
        let b = montecarlo_scatter(&cap, &dgp, 200, 100, 3, 0.95).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.points.len(), 190);
        assert!(a.dgp_in_core);
    }
}
