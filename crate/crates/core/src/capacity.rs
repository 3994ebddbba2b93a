//! Choquet capacities, equilibrium combinations and the brute-force core oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{subset_sums, OutcomeSpace, ProbabilityVector, SubsetIndex, MAX_OUTCOMES};

/// Tolerance for normalization and monotonicity of capacities.
pub const CAPACITY_TOL: f64 = 1e-10;
/// Tolerance on the total mass of an [`EquilibriumCombos`] list.
pub const COMBO_SUM_TOL: f64 = 1e-10;
/// Slack tolerated by the exhaustive core test.
pub const CORE_TOL: f64 = 1e-10;

/// Above this many outcomes the submodularity check samples pairs.
pub const EXHAUSTIVE_PAIR_LIMIT: usize = 12;
/// Number of sampled `(A, B)` pairs above [`EXHAUSTIVE_PAIR_LIMIT`].
pub const SAMPLED_PAIRS: usize = 100_000;
const SAMPLING_SEED: u64 = 0x5eed_cafe;

/// A set function on all subsets of an `n`-outcome space, stored densely.
#[derive(Clone, Debug, PartialEq)]
pub struct Capacity {
    n: usize,
    values: Vec<f64>,
}

impl Capacity {
    /// Builds a capacity, rejecting values that are not normalized and monotone.
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        let c = Self::raw(n, values)?;
        let report = c.report_without_submodularity();
        if !report.normalized {
            return Err(Error::InvalidCapacity("not normalized".into()));
        }
        if !report.monotone {
            return Err(Error::InvalidCapacity("not monotone".into()));
        }
        Ok(c)
    }

    /// Builds a set function without checking the capacity axioms.
    pub fn raw(n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || n > MAX_OUTCOMES {
            return Err(Error::SpaceSize {
                got: n,
                max: MAX_OUTCOMES,
            });
        }
        if values.len() != 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                got: values.len(),
            });
        }
        Ok(Self { n, values })
    }

    /// The additive capacity of a probability vector.
    pub fn additive(p: &ProbabilityVector) -> Self {
        Self {
            n: p.len(),
            values: p.subset_masses(),
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn value(&self, a: SubsetIndex) -> f64 {
        self.values[a.as_usize()]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Serializable `{subset, value}` records, one per subset.
    pub fn to_records(&self, space: &OutcomeSpace) -> Result<Vec<CapacityRecord>> {
        check_dim(space.len(), self.n)?;
        Ok(space
            .subsets()
            .map(|s| CapacityRecord {
                subset: space.subset_labels(s),
                value: self.value(s),
            })
            .collect())
    }

    pub fn from_records(space: &OutcomeSpace, records: &[CapacityRecord]) -> Result<Self> {
        let mut values = vec![f64::NAN; space.num_subsets()];
        for r in records {
            values[space.subset(&r.subset)?.as_usize()] = r.value;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidCapacity("missing subsets in records".into()));
        }
        Self::new(space.len(), values)
    }

    fn report_without_submodularity(&self) -> CapacityReport {
        let full = self.values[self.values.len() - 1];
        let normalized = self.values[0].abs() <= CAPACITY_TOL && (full - 1.0).abs() <= CAPACITY_TOL;
        // Monotonicity along single-element extensions implies it for all A ⊆ B.
        let monotone = (0..self.values.len()).all(|a| {
            (0..self.n)
                .filter(|k| a >> k & 1 == 0)
                .all(|k| self.values[a] <= self.values[a | 1 << k] + CAPACITY_TOL)
        });
        CapacityReport {
            normalized,
            monotone,
            submodular: false,
        }
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityRecord {
    pub subset: Vec<String>,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub normalized: bool,
    pub monotone: bool,
    pub submodular: bool,
}

impl CapacityReport {
    pub fn all(&self) -> bool {
        self.normalized && self.monotone && self.submodular
    }
}

/// Checks normalization, monotonicity and submodularity.
///
/// Submodularity is tested on every pair of subsets for up to
/// [`EXHAUSTIVE_PAIR_LIMIT`] outcomes and on [`SAMPLED_PAIRS`] seeded random
/// pairs above that.
pub fn check_capacity(c: &Capacity) -> CapacityReport {
    let mut report = c.report_without_submodularity();
    report.submodular = if c.n <= EXHAUSTIVE_PAIR_LIMIT {
        let size = c.values.len();
        (0..size).all(|a| (a + 1..size).all(|b| submodular_pair(c, a, b)))
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(SAMPLING_SEED);
        let mask = (1usize << c.n) - 1;
        (0..SAMPLED_PAIRS).all(|_| {
            let a = rng.random::<u32>() as usize & mask;
            let b = rng.random::<u32>() as usize & mask;
            submodular_pair(c, a, b)
        })
    };
    report
}

#[inline]
fn submodular_pair(c: &Capacity, a: usize, b: usize) -> bool {
    let v = &c.values;
    v[a | b] + v[a & b] <= v[a] + v[b] + CAPACITY_TOL
}

/// The predicted equilibrium combinations `u` with their masses `q_u`.
#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumCombos {
    n: usize,
    combos: Vec<(SubsetIndex, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComboRecord {
    pub outcomes: Vec<String>,
    pub mass: f64,
}

impl EquilibriumCombos {
    pub fn new(n: usize, combos: Vec<(SubsetIndex, f64)>) -> Result<Self> {
        if n == 0 || n > MAX_OUTCOMES {
            return Err(Error::SpaceSize {
                got: n,
                max: MAX_OUTCOMES,
            });
        }
        if combos.is_empty() {
            return Err(Error::InvalidCombos("empty combination list".into()));
        }
        let full = SubsetIndex::full(n);
        let mut seen = std::collections::HashSet::with_capacity(combos.len());
        for &(u, q) in &combos {
            if u.is_empty() || !u.is_subset_of(full) {
                return Err(Error::InvalidCombos(format!(
                    "combination {u} is not a nonempty subset"
                )));
            }
            if !seen.insert(u) {
                return Err(Error::InvalidCombos(format!("duplicate combination {u}")));
            }
            if !q.is_finite() || q < 0.0 {
                return Err(Error::InvalidCombos(format!("mass {q} of {u} is negative")));
            }
        }
        let total: f64 = combos.iter().map(|c| c.1).sum();
        if (total - 1.0).abs() > COMBO_SUM_TOL {
            return Err(Error::InvalidCombos(format!("masses sum to {total}, not 1")));
        }
        Ok(Self { n, combos })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.combos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.combos.is_empty()
    }

    pub fn combos(&self) -> &[(SubsetIndex, f64)] {
        &self.combos
    }

    pub fn iter(&self) -> impl Iterator<Item = &(SubsetIndex, f64)> {
        self.combos.iter()
    }

    /// Mass of the combination `u`, zero if it is not listed.
    pub fn mass_of(&self, u: SubsetIndex) -> f64 {
        self.combos.iter().find(|c| c.0 == u).map_or(0.0, |c| c.1)
    }

    /// Drops zero-mass combinations.
    pub fn without_null(&self) -> Self {
        let combos: Vec<_> = self.combos.iter().copied().filter(|c| c.1 > 0.0).collect();
        Self { n: self.n, combos }
    }

    pub fn to_records(&self, space: &OutcomeSpace) -> Result<Vec<ComboRecord>> {
        check_dim(space.len(), self.n)?;
        Ok(self
            .combos
            .iter()
            .map(|&(u, q)| ComboRecord {
                outcomes: space.subset_labels(u),
                mass: q,
            })
            .collect())
    }

    pub fn from_records(space: &OutcomeSpace, records: &[ComboRecord]) -> Result<Self> {
        let combos = records
            .iter()
            .map(|r| Ok((space.subset(&r.outcomes)?, r.mass)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(space.len(), combos)
    }
}

/// `L(A) = Σ_{u ∩ A ≠ ∅} q_u`, computed as `1 − Σ_{u ⊆ Aᶜ} q_u`.
pub fn capacity_from_combos(combos: &EquilibriumCombos) -> Capacity {
    let n = combos.n;
    let size = 1usize << n;
    let mut inner = vec![0.0; size];
    for &(u, q) in &combos.combos {
        inner[u.as_usize()] += q;
    }
    // Zeta transform: inner[S] = Σ_{u ⊆ S} q_u.
    for k in 0..n {
        for s in 0..size {
            if s >> k & 1 == 1 {
                inner[s] += inner[s ^ (1 << k)];
            }
        }
    }
    let total = inner[size - 1];
    let mask = size - 1;
    let mut values: Vec<f64> = (0..size).map(|a| total - inner[!a & mask]).collect();
    values[0] = 0.0;
    Capacity { n, values }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoreCheck {
    pub inside: bool,
    pub witness: Option<SubsetIndex>,
    /// `min_A L(A) − P(A)`.
    pub slack: f64,
}

/// Exhaustive check of `P(A) ≤ L(A)` over all subsets.
pub fn core_contains_bruteforce(p: &ProbabilityVector, c: &Capacity) -> Result<CoreCheck> {
    core_contains_bruteforce_tol(p, c, CORE_TOL)
}

pub fn core_contains_bruteforce_tol(p: &ProbabilityVector, c: &Capacity, tol: f64) -> Result<CoreCheck> {
    check_dim(c.n, p.len())?;
    let pm = subset_sums(p.masses());
    let (argmin, slack) =
        c.values
            .iter()
            .zip(&pm)
            .map(|(l, q)| l - q)
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |best, (a, s)| if s < best.1 { (a, s) } else { best },
            );
    let inside = slack >= -tol;
    Ok(CoreCheck {
        inside,
        witness: (!inside).then_some(SubsetIndex(argmin as u32)),
        slack,
    })
}

/// Choquet integral of `f` with respect to a normalized capacity.
pub fn choquet_integral(f: &[f64], c: &Capacity) -> Result<f64> {
    check_dim(c.n, f.len())?;
    let mut order: Vec<usize> = (0..f.len()).collect();
    order.sort_by(|&a, &b| f[b].total_cmp(&f[a]));
    let mut set = SubsetIndex::EMPTY;
    let mut prev = 0.0;
    let mut total = 0.0;
    for k in order {
        set = set.with(k);
        let v = c.value(set);
        total += f[k] * (v - prev);
        prev = v;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jovanovic(theta: f64) -> EquilibriumCombos {
        let t2 = theta * theta;
        EquilibriumCombos::new(2, vec![(SubsetIndex(0b01), 1.0 - t2), (SubsetIndex(0b11), t2)]).unwrap()
    }

    #[test]
    fn jovanovic_capacity() {
        let c = capacity_from_combos(&jovanovic(0.5));
        assert_eq!(c.value(SubsetIndex(0b01)), 1.0);
        assert!((c.value(SubsetIndex(0b10)) - 0.25).abs() < 1e-15);
        assert!(check_capacity(&c).all());
    }

    #[test]
    fn point_mass_capacity() {
        let combos = EquilibriumCombos::new(3, vec![(SubsetIndex(0b001), 1.0)]).unwrap();
        let c = capacity_from_combos(&combos);
        for a in 0..8u32 {
            let expected = if a & 1 == 1 { 1.0 } else { 0.0 };
            assert_eq!(c.value(SubsetIndex(a)), expected);
        }
    }

    #[test]
    fn combos_validation() {
        assert!(EquilibriumCombos::new(2, vec![]).is_err());
        assert!(EquilibriumCombos::new(2, vec![(SubsetIndex(1), 0.5)]).is_err());
        assert!(EquilibriumCombos::new(2, vec![(SubsetIndex(0), 1.0)]).is_err());
        assert!(EquilibriumCombos::new(2, vec![(SubsetIndex(1), 0.5), (SubsetIndex(1), 0.5)]).is_err());
    }

    #[test]
    fn bruteforce_jovanovic() {
        let p = ProbabilityVector::new(vec![0.75, 0.25]).unwrap();
        let at_boundary = core_contains_bruteforce(&p, &capacity_from_combos(&jovanovic(0.5))).unwrap();
        assert!(at_boundary.inside);
        assert!(at_boundary.witness.is_none());
        let below = core_contains_bruteforce(&p, &capacity_from_combos(&jovanovic(0.4))).unwrap();
        assert!(!below.inside);
        assert_eq!(below.witness, Some(SubsetIndex(0b10)));
        assert!((below.slack + 0.09).abs() < 1e-12);
    }

    #[test]
    fn monotonicity_violation_detected() {
        let c = Capacity::raw(2, vec![0.0, 0.8, 0.1, 0.7]).unwrap();
        let r = check_capacity(&c);
        assert!(!r.monotone);
        assert!(!r.normalized);
        assert!(Capacity::new(2, vec![0.0, 0.8, 0.1, 0.7]).is_err());
    }

    #[test]
    fn choquet_by_hand() {
        let c = capacity_from_combos(&jovanovic(0.5));
        assert!((choquet_integral(&[2.0, 1.0], &c).unwrap() - 2.0).abs() < 1e-15);
        assert!((choquet_integral(&[1.0, 2.0], &c).unwrap() - 1.25).abs() < 1e-15);
        assert!((choquet_integral(&[0.0, 1.0], &c).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn additive_choquet_is_expectation() {
        let p = ProbabilityVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        let c = Capacity::additive(&p);
        let f = [1.5, -2.0, 0.25];
        let expected: f64 = f.iter().zip(p.masses()).map(|(a, b)| a * b).sum();
        assert!((choquet_integral(&f, &c).unwrap() - expected).abs() < 1e-14);
        let r = check_capacity(&c);
        assert!(r.all());
    }

    #[test]
    fn records_round_trip() {
        let space = OutcomeSpace::new(["00", "11"]).unwrap();
        let combos = jovanovic(0.5);
        let recs = combos.to_records(&space).unwrap();
        let json = serde_json::to_string(&recs).unwrap();
        let back: Vec<ComboRecord> = serde_json::from_str(&json).unwrap();
        assert_eq!(EquilibriumCombos::from_records(&space, &back).unwrap(), combos);
        let c = capacity_from_combos(&combos);
        let crecs = c.to_records(&space).unwrap();
        assert_eq!(Capacity::from_records(&space, &crecs).unwrap(), c);
    }
}
