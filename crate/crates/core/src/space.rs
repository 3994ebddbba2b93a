//! Finite outcome spaces, bit-encoded subsets and probability vectors.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on the number of outcomes. Capacities are stored densely over
/// all `2^I` subsets.
pub const MAX_OUTCOMES: usize = 20;

/// Tolerance on the total mass of a [`ProbabilityVector`].
pub const PROBABILITY_SUM_TOL: f64 = 1e-12;

/// A subset of an outcome space: bit `k` is set iff outcome `k` belongs to it.
///
/// Serializes as the raw integer; user-facing files use label lists instead
/// (see [`OutcomeSpace::subset_labels`]).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubsetIndex(pub u32);

impl SubsetIndex {
    pub const EMPTY: SubsetIndex = SubsetIndex(0);

    pub fn full(n: usize) -> Self {
        debug_assert!(n <= MAX_OUTCOMES);
        SubsetIndex(((1u64 << n) - 1) as u32)
    }

    pub fn singleton(k: usize) -> Self {
        SubsetIndex(1 << k)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        SubsetIndex(indices.into_iter().fold(0, |acc, k| acc | (1 << k)))
    }

    #[inline]
    pub fn bits(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn as_usize(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn contains(self, k: usize) -> bool {
        self.0 >> k & 1 == 1
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn union(self, other: Self) -> Self {
        SubsetIndex(self.0 | other.0)
    }

    #[inline]
    pub fn intersection(self, other: Self) -> Self {
        SubsetIndex(self.0 & other.0)
    }

    #[inline]
    pub fn difference(self, other: Self) -> Self {
        SubsetIndex(self.0 & !other.0)
    }

    /// Complement within a space of `n` outcomes.
    #[inline]
    pub fn complement(self, n: usize) -> Self {
        SubsetIndex(!self.0 & Self::full(n).0)
    }

    #[inline]
    pub fn intersects(self, other: Self) -> bool {
        self.0 & other.0 != 0
    }

    #[inline]
    pub fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    #[inline]
    pub fn with(self, k: usize) -> Self {
        SubsetIndex(self.0 | (1 << k))
    }

    #[inline]
    pub fn without(self, k: usize) -> Self {
        SubsetIndex(self.0 & !(1 << k))
    }

    /// Member indices in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let k = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(k)
            }
        })
    }

    /// Smallest and largest member index.
    pub fn min_max(self) -> Option<(usize, usize)> {
        if self.0 == 0 {
            None
        } else {
            Some((self.0.trailing_zeros() as usize, 31 - self.0.leading_zeros() as usize))
        }
    }
}

impl fmt::Display for SubsetIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, k) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, "}}")
    }
}

/// A finite, ordered set of observable outcomes.
///
/// The position of a label is its bit in every [`SubsetIndex`] built on this
/// space, so the label order is fixed at construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct OutcomeSpace {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl OutcomeSpace {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() || labels.len() > MAX_OUTCOMES {
            return Err(Error::SpaceSize {
                got: labels.len(),
                max: MAX_OUTCOMES,
            });
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (k, label) in labels.iter().enumerate() {
            if index.insert(label.clone(), k).is_some() {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        Ok(Self { labels, index })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, k: usize) -> &str {
        &self.labels[k]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn full(&self) -> SubsetIndex {
        SubsetIndex::full(self.len())
    }

    pub fn num_subsets(&self) -> usize {
        1 << self.len()
    }

    /// All subsets, in increasing integer order.
    pub fn subsets(&self) -> impl Iterator<Item = SubsetIndex> {
        (0..self.num_subsets() as u32).map(SubsetIndex)
    }

    pub fn subset<S: AsRef<str>>(&self, labels: &[S]) -> Result<SubsetIndex> {
        labels
            .iter()
            .try_fold(SubsetIndex::EMPTY, |acc, l| Ok(acc.with(self.index_of(l.as_ref())?)))
    }

    pub fn subset_labels(&self, s: SubsetIndex) -> Vec<String> {
        s.iter().map(|k| self.labels[k].clone()).collect()
    }

    /// Keeps the outcomes of `keep`, in their original order.
    pub fn restrict(&self, keep: SubsetIndex) -> Result<OutcomeSpace> {
        OutcomeSpace::new(keep.iter().map(|k| self.labels[k].clone()))
    }
}

impl TryFrom<Vec<String>> for OutcomeSpace {
    type Error = Error;

    fn try_from(labels: Vec<String>) -> Result<Self> {
        OutcomeSpace::new(labels)
    }
}

impl From<OutcomeSpace> for Vec<String> {
    fn from(space: OutcomeSpace) -> Self {
        space.labels
    }
}

/// A probability distribution over the outcomes of a space.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityVector {
    masses: Vec<f64>,
}

impl ProbabilityVector {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() || masses.len() > MAX_OUTCOMES {
            return Err(Error::SpaceSize {
                got: masses.len(),
                max: MAX_OUTCOMES,
            });
        }
        if let Some((k, m)) = masses.iter().enumerate().find(|(_, m)| !m.is_finite() || **m < 0.0) {
            return Err(Error::InvalidProbability(format!(
                "mass {m} at outcome {k} is not a nonnegative number"
            )));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > PROBABILITY_SUM_TOL {
            return Err(Error::InvalidProbability(format!("masses sum to {total}, not 1")));
        }
        Ok(Self { masses })
    }

    /// Point mass on outcome `k` of an `n`-outcome space.
    pub fn dirac(n: usize, k: usize) -> Self {
        let mut masses = vec![0.0; n];
        masses[k] = 1.0;
        Self { masses }
    }

    /// Normalizes nonnegative weights into a probability vector.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidProbability("weights sum to zero".into()));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn from_label_map(space: &OutcomeSpace, map: &BTreeMap<String, f64>) -> Result<Self> {
        let mut masses = vec![0.0; space.len()];
        for (label, mass) in map {
            masses[space.index_of(label)?] = *mass;
        }
        Self::new(masses)
    }

    pub fn to_label_map(&self, space: &OutcomeSpace) -> BTreeMap<String, f64> {
        space
            .labels()
            .iter()
            .cloned()
            .zip(self.masses.iter().copied())
            .collect()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    #[inline]
    pub fn get(&self, k: usize) -> f64 {
        self.masses[k]
    }

    /// `P(A)`.
    pub fn mass(&self, a: SubsetIndex) -> f64 {
        a.iter().map(|k| self.masses[k]).sum()
    }

    /// `P(A)` for every subset, indexed by [`SubsetIndex`].
    pub fn subset_masses(&self) -> Vec<f64> {
        subset_sums(&self.masses)
    }
}

/// Additive extension of point masses to all `2^n` subsets.
pub(crate) fn subset_sums(masses: &[f64]) -> Vec<f64> {
    let size = 1usize << masses.len();
    let mut out = vec![0.0; size];
    for s in 1..size {
        let low = s.trailing_zeros() as usize;
        out[s] = out[s & (s - 1)] + masses[low];
    }
    out
}
