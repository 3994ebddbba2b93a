//! Core-determining classes: monotone orderings, the interval class, the
//! isolated-outcome reduction and the integer certificate criterion.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::EquilibriumCombos;
use crate::error::{Error, Result};
use crate::space::{OutcomeSpace, ProbabilityVector, SubsetIndex};

/// Slack tolerated on each class inequality.
pub const CD_TOL: f64 = 1e-10;
/// Largest space for which all `I!` outcome orders are searched.
pub const ORDER_SEARCH_LIMIT: usize = 7;
/// Largest coefficient tried by [`check_cd_criterion`].
pub const CERTIFICATE_BOUND: u32 = 4;

/// Orderings of outcomes (`perm_y[rank] = outcome`) and of combinations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeOrdering {
    pub perm_y: Vec<usize>,
    pub perm_u: Vec<usize>,
}

fn is_permutation(perm: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    perm.len() == n && perm.iter().all(|&k| k < n && !std::mem::replace(&mut seen[k], true))
}

fn ranks(perm_y: &[usize]) -> Vec<usize> {
    let mut rank = vec![0; perm_y.len()];
    for (r, &y) in perm_y.iter().enumerate() {
        rank[y] = r;
    }
    rank
}

fn rank_bounds(u: SubsetIndex, rank: &[usize]) -> (usize, usize) {
    u.iter()
        .fold((usize::MAX, 0), |(lo, hi), y| (lo.min(rank[y]), hi.max(rank[y])))
}

impl OutcomeOrdering {
    pub fn new(perm_y: Vec<usize>, perm_u: Vec<usize>, combos: &EquilibriumCombos) -> Result<Self> {
        if !is_permutation(&perm_y, combos.n()) {
            return Err(Error::InvalidPermutation(combos.n()));
        }
        if !is_permutation(&perm_u, combos.len()) {
            return Err(Error::InvalidPermutation(combos.len()));
        }
        Ok(Self { perm_y, perm_u })
    }

    /// Pairs an outcome order with the combination order sorted by
    /// (lowest rank, highest rank).
    pub fn from_outcome_order(perm_y: Vec<usize>, combos: &[(SubsetIndex, f64)]) -> Self {
        let rank = ranks(&perm_y);
        let mut perm_u: Vec<usize> = (0..combos.len()).collect();
        perm_u.sort_by_key(|&k| (rank_bounds(combos[k].0, &rank), k));
        Self { perm_y, perm_u }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MonotonicityViolation {
    /// The combination is not an interval of the outcome order.
    Disconnected { combo: SubsetIndex },
    /// `inf` decreases from `prev` to `next` along the combination order.
    InfDecreasing { prev: SubsetIndex, next: SubsetIndex },
    /// `sup` decreases from `prev` to `next` along the combination order.
    SupDecreasing { prev: SubsetIndex, next: SubsetIndex },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub ok: bool,
    pub violations: Vec<MonotonicityViolation>,
}

pub fn check_monotonicity(combos: &[(SubsetIndex, f64)], ordering: &OutcomeOrdering) -> MonotonicityReport {
    let rank = ranks(&ordering.perm_y);
    let mut violations = Vec::new();
    for &(u, _) in combos {
        let (lo, hi) = rank_bounds(u, &rank);
        if hi - lo + 1 != u.len() {
            violations.push(MonotonicityViolation::Disconnected { combo: u });
        }
    }
    for w in ordering.perm_u.windows(2) {
        let (prev, next) = (combos[w[0]].0, combos[w[1]].0);
        let (plo, phi) = rank_bounds(prev, &rank);
        let (nlo, nhi) = rank_bounds(next, &rank);
        if nlo < plo {
            violations.push(MonotonicityViolation::InfDecreasing { prev, next });
        }
        if nhi < phi {
            violations.push(MonotonicityViolation::SupDecreasing { prev, next });
        }
    }
    MonotonicityReport {
        ok: violations.is_empty(),
        violations,
    }
}

/// Lower intervals `{y_1..y_i}` for `i < I` followed by upper intervals
/// `{y_i..y_I}` for `i > 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalClass {
    pub sets: Vec<SubsetIndex>,
}

impl IntervalClass {
    pub fn to_labels(&self, space: &OutcomeSpace) -> Vec<Vec<String>> {
        self.sets.iter().map(|&s| space.subset_labels(s)).collect()
    }

    pub fn from_labels(space: &OutcomeSpace, sets: &[Vec<String>]) -> Result<Self> {
        Ok(Self {
            sets: sets.iter().map(|s| space.subset(s)).collect::<Result<_>>()?,
        })
    }

    /// All nonempty singletons; not core determining in general.
    pub fn singletons(n: usize) -> Self {
        Self {
            sets: (0..n).map(SubsetIndex::singleton).collect(),
        }
    }

    pub fn power_set(n: usize) -> Self {
        Self {
            sets: (1..(1u32 << n)).map(SubsetIndex).collect(),
        }
    }
}

pub fn interval_class(perm_y: &[usize]) -> IntervalClass {
    let n = perm_y.len();
    let mut sets = Vec::with_capacity(2 * n.saturating_sub(1));
    let mut acc = SubsetIndex::EMPTY;
    for &y in &perm_y[..n.saturating_sub(1)] {
        acc = acc.with(y);
        sets.push(acc);
    }
    for i in 1..n {
        sets.push(SubsetIndex::from_indices(perm_y[i..].iter().copied()));
    }
    IntervalClass { sets }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pretest {
    pub outcome: usize,
    pub combo: SubsetIndex,
    pub p: f64,
    pub q: f64,
    pub pass: bool,
}

/// An instance with isolated outcomes netted out.
///
/// Outcomes are re-indexed to `0..kept.len()` in their original order.
/// Masses keep their absolute scale: both `p` and the combination masses sum
/// to one minus the removed outcome mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    pub kept: Vec<usize>,
    pub combos: Vec<(SubsetIndex, f64)>,
    pub p: Vec<f64>,
    pub pretests: Vec<Pretest>,
    /// `(outcome, remaining combination)` in original indices, in removal order.
    steps: Vec<(usize, SubsetIndex)>,
}

impl Reduction {
    pub fn passed(&self) -> bool {
        self.pretests.iter().all(|t| t.pass)
    }

    pub fn n(&self) -> usize {
        self.kept.len()
    }

    pub fn to_original(&self, a: SubsetIndex) -> SubsetIndex {
        SubsetIndex::from_indices(a.iter().map(|k| self.kept[k]))
    }

    pub fn to_reduced(&self, a: SubsetIndex) -> SubsetIndex {
        SubsetIndex::from_indices(
            self.kept
                .iter()
                .enumerate()
                .filter(|(_, &y)| a.contains(y))
                .map(|(k, _)| k),
        )
    }

    /// Lifts a violated reduced set to a violated set of the original instance.
    pub fn lift_witness(&self, a: SubsetIndex) -> SubsetIndex {
        let mut set = self.to_original(a);
        for &(y, rest) in self.steps.iter().rev() {
            if rest.intersects(set) {
                set = set.with(y);
            }
        }
        set
    }
}

/// Removes outcomes that appear in exactly one, non-singleton combination.
///
/// For such an outcome `y` in `u`, all of `p(y)` must be carried by `u`, so
/// after checking `p(y) ≤ q_u` the pair is replaced by `u∖{y}` with mass
/// `q_u − p(y)`, merged into an existing identical combination.
pub fn reduce_isolated(combos: &EquilibriumCombos, p: &ProbabilityVector) -> Result<Reduction> {
    if combos.n() != p.len() {
        return Err(Error::DimensionMismatch {
            expected: combos.n(),
            got: p.len(),
        });
    }
    let n = p.len();
    let mut list: Vec<(SubsetIndex, f64)> = combos.combos().to_vec();
    let mut pretests = Vec::new();
    let mut steps = Vec::new();
    let mut removed = SubsetIndex::EMPTY;
    loop {
        let isolated = (0..n).filter(|&y| !removed.contains(y)).find_map(|y| {
            let mut hits = list.iter().enumerate().filter(|(_, c)| c.0.contains(y));
            match (hits.next(), hits.next()) {
                (Some((k, c)), None) if c.0.len() > 1 => Some((y, k)),
                _ => None,
            }
        });
        let Some((y, k)) = isolated else { break };
        let (u, q) = list[k];
        let py = p.get(y);
        let pass = py <= q + CD_TOL;
        pretests.push(Pretest {
            outcome: y,
            combo: u,
            p: py,
            q,
            pass,
        });
        if !pass {
            break;
        }
        let rest = u.without(y);
        let left = (q - py).max(0.0);
        list.remove(k);
        match list.iter_mut().find(|c| c.0 == rest) {
            Some(existing) => existing.1 += left,
            None => list.push((rest, left)),
        }
        removed = removed.with(y);
        steps.push((y, rest));
    }
    let kept: Vec<usize> = (0..n).filter(|&y| !removed.contains(y)).collect();
    let mut red = Reduction {
        kept,
        combos: Vec::new(),
        p: Vec::new(),
        pretests,
        steps,
    };
    red.p = red.kept.iter().map(|&y| p.get(y)).collect();
    red.combos = list.iter().map(|&(u, q)| (red.to_reduced(u), q)).collect();
    Ok(red)
}

/// `L(A) = Σ_{u ∩ A ≠ ∅} q_u` without normalization.
fn hit_mass(combos: &[(SubsetIndex, f64)], a: SubsetIndex) -> f64 {
    combos.iter().filter(|c| c.0.intersects(a)).map(|c| c.1).sum()
}

/// Checks `P(A) ≤ L(A)` for the sets of the class only.
pub fn core_contains_cd(p: &ProbabilityVector, capacity: &crate::Capacity, class: &IntervalClass) -> bool {
    class.sets.iter().all(|&a| p.mass(a) <= capacity.value(a) + CD_TOL)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdCheck {
    pub inside: bool,
    /// A violated set in original indices, when outside.
    pub witness: Option<SubsetIndex>,
    pub reduction: Reduction,
    pub ordering: OutcomeOrdering,
}

/// Membership on a reduced instance through an interval class.
///
/// The outcome order is `perm_y` when given (in reduced indices); otherwise the
/// natural order is tried first, then every order when the reduced space has
/// at most [`ORDER_SEARCH_LIMIT`] outcomes. Fails with
/// [`Error::Incompatible`] when no monotone ordering is available.
pub fn cd_membership(combos: &EquilibriumCombos, p: &ProbabilityVector, perm_y: Option<&[usize]>) -> Result<CdCheck> {
    let red = reduce_isolated(combos, p)?;
    if let Some(t) = red.pretests.iter().find(|t| !t.pass) {
        let ordering = OutcomeOrdering {
            perm_y: (0..red.n()).collect(),
            perm_u: (0..red.combos.len()).collect(),
        };
        return Ok(CdCheck {
            inside: false,
            witness: Some(
                red.lift_witness(red.to_reduced(SubsetIndex::singleton(t.outcome)))
                    .with(t.outcome),
            ),
            reduction: red,
            ordering,
        });
    }
    let ordering = match perm_y {
        Some(perm) => {
            if !is_permutation(perm, red.n()) {
                return Err(Error::InvalidPermutation(red.n()));
            }
            let o = OutcomeOrdering::from_outcome_order(perm.to_vec(), &red.combos);
            if !check_monotonicity(&red.combos, &o).ok {
                return Err(incompatible("the supplied ordering is not monotone"));
            }
            o
        }
        None => find_monotone_ordering(&red.combos, red.n())
            .ok_or_else(|| incompatible("no monotone ordering of the outcomes was found"))?,
    };
    let class = interval_class(&ordering.perm_y);
    let full = SubsetIndex::full(red.n());
    let violated = class.sets.iter().copied().chain(std::iter::once(full)).find(|&a| {
        let pa: f64 = a.iter().map(|k| red.p[k]).sum();
        pa > hit_mass(&red.combos, a) + CD_TOL
    });
    Ok(CdCheck {
        inside: violated.is_none(),
        witness: violated.map(|a| red.lift_witness(a)),
        reduction: red,
        ordering,
    })
}

fn incompatible(reason: &str) -> Error {
    Error::Incompatible {
        method: "cd".into(),
        reason: reason.into(),
    }
}

/// Natural order first, then an exhaustive search for small spaces.
pub fn find_monotone_ordering(combos: &[(SubsetIndex, f64)], n: usize) -> Option<OutcomeOrdering> {
    let natural = OutcomeOrdering::from_outcome_order((0..n).collect(), combos);
    if check_monotonicity(combos, &natural).ok {
        return Some(natural);
    }
    if n > ORDER_SEARCH_LIMIT {
        return None;
    }
    permutations(n)
        .into_par_iter()
        .find_first(|perm| {
            let o = OutcomeOrdering::from_outcome_order(perm.clone(), combos);
            check_monotonicity(combos, &o).ok
        })
        .map(|perm| OutcomeOrdering::from_outcome_order(perm, combos))
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        // Next lexicographic permutation.
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
}

/// Searches integer certificates showing that every subset outside the
/// class is implied by the class inequalities.
///
/// For a subset `A` a certificate is a vector of coefficients `β_k ∈ 0..=B`
/// over the class and an integer `λ ≥ −B` with, for every outcome `y` and
/// every combination `u`,
/// `1_A(y) ≤ Σ β_k 1_{A_k}(y) − λ` and `1[u∩A≠∅] ≥ Σ β_k 1[u∩A_k≠∅] − λ`.
/// A negative `λ` stands for a multiple of the full set, whose inequality
/// always holds with equality. Bounds `B = 1..=CERTIFICATE_BOUND` are tried in
/// turn. `false` means no certificate was found within the bound, not that the
/// class fails to be core determining.
pub fn check_cd_criterion(class: &IntervalClass, combos: &EquilibriumCombos) -> bool {
    let n = combos.n();
    let members: Vec<SubsetIndex> = class.sets.clone();
    let full = SubsetIndex::full(n);
    (1..(1u32 << n))
        .map(SubsetIndex)
        .filter(|a| *a != full && !members.contains(a))
        .collect::<Vec<_>>()
        .par_iter()
        .all(|&a| certificate_exists(a, &members, combos))
}

fn certificate_exists(a: SubsetIndex, members: &[SubsetIndex], combos: &EquilibriumCombos) -> bool {
    let n = combos.n();
    let k = members.len();
    let hits_a: Vec<i64> = combos.iter().map(|c| c.0.intersects(a) as i64).collect();
    let in_member: Vec<Vec<bool>> = members
        .iter()
        .map(|m| (0..n).map(|y| m.contains(y)).collect())
        .collect();
    let hits_member: Vec<Vec<bool>> = members
        .iter()
        .map(|m| combos.iter().map(|c| c.0.intersects(*m)).collect())
        .collect();
    for bound in 1..=CERTIFICATE_BOUND as i64 {
        let mut beta = vec![0i64; k];
        loop {
            // Only vectors touching the current bound are new at this depth.
            if beta.contains(&bound) || bound == 1 {
                let upper = (0..n)
                    .map(|y| {
                        let c: i64 = (0..k).filter(|&j| in_member[j][y]).map(|j| beta[j]).sum();
                        c - a.contains(y) as i64
                    })
                    .min()
                    .unwrap_or(0);
                let lower = (0..combos.len())
                    .map(|u| {
                        let d: i64 = (0..k).filter(|&j| hits_member[j][u]).map(|j| beta[j]).sum();
                        d - hits_a[u]
                    })
                    .max()
                    .unwrap_or(0)
                    .max(-bound);
                if lower <= upper {
                    return true;
                }
            }
            // Odometer increment over {0..bound}^k.
            let mut pos = 0;
            while pos < k && beta[pos] == bound {
                beta[pos] = 0;
                pos += 1;
            }
            if pos == k {
                break;
            }
            beta[pos] += 1;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn family() -> EquilibriumCombos {
        // Outcomes 00, 01, 10, 11.
        EquilibriumCombos::new(
            4,
            vec![
                (SubsetIndex(0b0001), 0.0625),
                (SubsetIndex(0b0010), 0.328125),
                (SubsetIndex(0b0110), 0.140625),
                (SubsetIndex(0b0100), 0.328125),
                (SubsetIndex(0b1000), 0.140625),
            ],
        )
        .unwrap()
    }

    #[test]
    fn family_ordering_is_monotone() {
        let c = family();
        let o = OutcomeOrdering::new(vec![0, 1, 2, 3], vec![0, 1, 2, 3, 4], &c).unwrap();
        assert!(check_monotonicity(c.combos(), &o).ok);
        let derived = OutcomeOrdering::from_outcome_order(vec![0, 1, 2, 3], c.combos());
        assert_eq!(derived.perm_u, vec![0, 1, 2, 3, 4]);
        let swapped = OutcomeOrdering::from_outcome_order(vec![0, 1, 3, 2], c.combos());
        assert!(!check_monotonicity(c.combos(), &swapped).ok);
    }

    #[test]
    fn family_interval_class() {
        let class = interval_class(&[0, 1, 2, 3]);
        let bits: Vec<u32> = class.sets.iter().map(|s| s.0).collect();
        assert_eq!(bits, vec![0b0001, 0b0011, 0b0111, 0b1110, 0b1100, 0b1000]);
        assert_eq!(interval_class(&[0, 1]).sets, vec![SubsetIndex(1), SubsetIndex(2)]);
    }

    #[test]
    fn singletons_are_trivially_monotone() {
        let c = EquilibriumCombos::new(
            3,
            vec![(SubsetIndex(4), 0.2), (SubsetIndex(1), 0.5), (SubsetIndex(2), 0.3)],
        )
        .unwrap();
        let o = OutcomeOrdering::from_outcome_order(vec![2, 0, 1], c.combos());
        assert!(check_monotonicity(c.combos(), &o).ok);
    }

    #[test]
    fn no_isolated_outcomes_leaves_instance_unchanged() {
        let c = family();
        let p = ProbabilityVector::new(vec![0.25; 4]).unwrap();
        let r = reduce_isolated(&c, &p).unwrap();
        assert!(r.pretests.is_empty());
        assert_eq!(r.combos, c.combos().to_vec());
        assert_eq!(r.kept, vec![0, 1, 2, 3]);
    }

    #[test]
    fn isolated_outcome_is_netted_out() {
        // Outcomes a, b, c; b only appears in {a,b,c}.
        let c = EquilibriumCombos::new(
            3,
            vec![
                (SubsetIndex(0b001), 0.3),
                (SubsetIndex(0b101), 0.2),
                (SubsetIndex(0b111), 0.5),
            ],
        )
        .unwrap();
        let p = ProbabilityVector::new(vec![0.4, 0.1, 0.5]).unwrap();
        let r = reduce_isolated(&c, &p).unwrap();
        assert!(r.passed());
        // Removing b leaves {a,c} with 0.6, in which c is now isolated too.
        assert_eq!(r.pretests.len(), 2);
        assert_eq!(r.kept, vec![0]);
        assert_eq!(r.combos.len(), 1);
        assert!((r.combos[0].1 - 0.4).abs() < 1e-15);
        assert_eq!(r.lift_witness(SubsetIndex(1)), SubsetIndex(0b111));
        assert!(cd_membership(&c, &p, None).unwrap().inside);

        let p = ProbabilityVector::new(vec![0.0, 0.9, 0.1]).unwrap();
        let r = reduce_isolated(&c, &p).unwrap();
        assert!(!r.passed());
        let check = cd_membership(&c, &p, None).unwrap();
        assert!(!check.inside);
        assert_eq!(check.witness, Some(SubsetIndex(0b010)));
    }

    #[test]
    fn certificates() {
        let c = family();
        assert!(check_cd_criterion(&interval_class(&[0, 1, 2, 3]), &c));
        assert!(check_cd_criterion(&IntervalClass::power_set(4), &c));
        assert!(!check_cd_criterion(&IntervalClass::singletons(4), &c));
    }

    #[test]
    fn permutations_are_complete() {
        let perms = permutations(4);
        assert_eq!(perms.len(), 24);
        assert_eq!(perms[0], vec![0, 1, 2, 3]);
        assert_eq!(perms[23], vec![3, 2, 1, 0]);
    }
}
