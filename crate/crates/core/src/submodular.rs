//! Minimization of `B ↦ L(B) − P(B)` by the Fujishige–Wolfe min-norm-point
//! algorithm, with exhaustive search as oracle and fallback.

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::capacity::Capacity;
use crate::error::{Error, Result};
use crate::space::{ProbabilityVector, SubsetIndex};

/// Membership tolerance for the submodular route.
pub const SUBMODULAR_TOL: f64 = 1e-9;
/// Wolfe optimality tolerance, relative to the largest squared vertex norm.
pub const WOLFE_TOL: f64 = 1e-12;
/// Cap on major cycles before falling back to exhaustive search.
pub const MAX_MAJOR_CYCLES: usize = 10_000;

/// `F(A) = L(A) − P(A)` with an evaluation counter.
#[derive(Debug)]
pub struct SubmodularObjective<'a> {
    capacity: &'a Capacity,
    p: &'a ProbabilityVector,
    evaluations: AtomicU64,
}

impl<'a> SubmodularObjective<'a> {
    pub fn new(capacity: &'a Capacity, p: &'a ProbabilityVector) -> Result<Self> {
        if capacity.n() != p.len() {
            return Err(Error::DimensionMismatch {
                expected: capacity.n(),
                got: p.len(),
            });
        }
        Ok(Self {
            capacity,
            p,
            evaluations: AtomicU64::new(0),
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.p.len()
    }

    #[inline]
    pub fn value(&self, a: SubsetIndex) -> f64 {
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        self.capacity.value(a) - self.p.mass(a)
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations.load(Ordering::Relaxed)
    }
}

/// A vertex of the base polytope together with the chain that produced it.
struct Greedy {
    x: Vec<f64>,
    /// Smallest chain-prefix value and the prefix attaining it.
    best: (f64, SubsetIndex),
}

fn greedy(obj: &SubmodularObjective, perm: &[usize]) -> Greedy {
    let mut x = vec![0.0; perm.len()];
    let mut set = SubsetIndex::EMPTY;
    let mut prev = 0.0;
    let mut best = (0.0, SubsetIndex::EMPTY);
    for &k in perm {
        set = set.with(k);
        let v = obj.value(set);
        x[k] = v - prev;
        prev = v;
        if v < best.0 {
            best = (v, set);
        }
    }
    Greedy { x, best }
}

fn check_perm(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::InvalidPermutation(n));
    }
    for &k in perm {
        if k >= n || std::mem::replace(&mut seen[k], true) {
            return Err(Error::InvalidPermutation(n));
        }
    }
    Ok(())
}

/// Edmonds' greedy vertex: `x[perm(k)] = F(S_k) − F(S_{k−1})`.
pub fn greedy_vertex(obj: &SubmodularObjective, perm: &[usize]) -> Result<Vec<f64>> {
    check_perm(perm, obj.n())?;
    Ok(greedy(obj, perm).x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MinMethod {
    MinNormPoint,
    BruteForce,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinResult {
    pub min_value: f64,
    pub argmin: SubsetIndex,
    pub evaluations: u64,
    pub major_cycles: usize,
    /// Set when min-norm-point hit its cycle cap and exhaustive search was used.
    pub fell_back: bool,
}

/// Global minimum of the objective; ties go to the smallest subset index.
pub fn min_submodular(obj: &SubmodularObjective, method: MinMethod) -> MinResult {
    match method {
        MinMethod::BruteForce => brute_force(obj),
        MinMethod::MinNormPoint => match min_norm_point(obj, None) {
            MnpOutcome::Converged { value, argmin, cycles } => MinResult {
                min_value: value,
                argmin,
                evaluations: obj.evaluations(),
                major_cycles: cycles,
                fell_back: false,
            },
            MnpOutcome::Negative { .. } => unreachable!("no early stop requested"),
            MnpOutcome::CapHit { cycles } => MinResult {
                major_cycles: cycles,
                fell_back: true,
                ..brute_force(obj)
            },
        },
    }
}

fn brute_force(obj: &SubmodularObjective) -> MinResult {
    let mut best = (0.0, SubsetIndex::EMPTY);
    for a in 1..(1u32 << obj.n()) {
        let v = obj.value(SubsetIndex(a));
        if v < best.0 {
            best = (v, SubsetIndex(a));
        }
    }
    MinResult {
        min_value: best.0,
        argmin: best.1,
        evaluations: obj.evaluations(),
        major_cycles: 0,
        fell_back: false,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubmodularCheck {
    pub inside: bool,
    pub witness: Option<SubsetIndex>,
    pub evaluations: u64,
}

/// Core membership by min-norm-point, returning as soon as some evaluated
/// subset has value below `−tol` (that subset need not be the argmin).
pub fn core_membership_submodular(p: &ProbabilityVector, capacity: &Capacity) -> Result<SubmodularCheck> {
    core_membership_submodular_tol(p, capacity, SUBMODULAR_TOL)
}

pub fn core_membership_submodular_tol(p: &ProbabilityVector, capacity: &Capacity, tol: f64) -> Result<SubmodularCheck> {
    let obj = SubmodularObjective::new(capacity, p)?;
    let (inside, witness) = match min_norm_point(&obj, Some(tol)) {
        MnpOutcome::Negative { witness } => (false, Some(witness)),
        MnpOutcome::Converged { value, argmin, .. } => {
            let inside = value >= -tol;
            (inside, (!inside).then_some(argmin))
        }
        MnpOutcome::CapHit { .. } => {
            let r = brute_force(&obj);
            let inside = r.min_value >= -tol;
            (inside, (!inside).then_some(r.argmin))
        }
    };
    Ok(SubmodularCheck {
        inside,
        witness,
        evaluations: obj.evaluations(),
    })
}

enum MnpOutcome {
    Converged {
        value: f64,
        argmin: SubsetIndex,
        cycles: usize,
    },
    Negative {
        witness: SubsetIndex,
    },
    CapHit {
        cycles: usize,
    },
}

fn ascending(x: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    order
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `‖Σ α_i s_i‖` over the affine hull of `points`.
pub(crate) fn affine_minimizer(points: &[Vec<f64>]) -> Vec<f64> {
    let m = points.len();
    if m == 1 {
        return vec![1.0];
    }
    let mut a = DMatrix::<f64>::zeros(m + 1, m + 1);
    for i in 0..m {
        for j in i..m {
            let g = dot(&points[i], &points[j]);
            a[(i, j)] = g;
            a[(j, i)] = g;
        }
        a[(i, m)] = 1.0;
        a[(m, i)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(m + 1);
    rhs[m] = 1.0;
    let sol = a
        .clone()
        .lu()
        .solve(&rhs)
        .filter(|s| s.iter().all(|v| v.is_finite()))
        .unwrap_or_else(|| {
            a.svd(true, true)
                .solve(&rhs, 1e-14)
                .expect("SVD with both factors computed")
        });
    let alpha: Vec<f64> = sol.iter().take(m).copied().collect();
    let s: f64 = alpha.iter().sum();
    alpha.into_iter().map(|v| v / s).collect()
}

pub(crate) fn combine(points: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; points[0].len()];
    for (p, w) in points.iter().zip(weights) {
        for (xi, pi) in x.iter_mut().zip(p) {
            *xi += w * pi;
        }
    }
    x
}

/// Fujishige–Wolfe min-norm-point over the base polytope of the objective.
///
/// Every greedy call evaluates a full chain; the best chain prefix gives an
/// upper bound on the minimum and `Σ min(0, x_i)` a lower bound.
fn min_norm_point(obj: &SubmodularObjective, early_stop: Option<f64>) -> MnpOutcome {
    let n = obj.n();
    let mut upper = (0.0, SubsetIndex::EMPTY);
    let absorb = |g: &Greedy, upper: &mut (f64, SubsetIndex)| {
        if g.best.0 < upper.0 {
            *upper = g.best;
        }
    };

    let first = greedy(obj, &(0..n).collect::<Vec<_>>());
    absorb(&first, &mut upper);
    let mut points = vec![first.x.clone()];
    let mut lambda = vec![1.0];
    let mut x = first.x;
    let mut max_norm2 = dot(&x, &x);

    for cycle in 1..=MAX_MAJOR_CYCLES {
        if let Some(tol) = early_stop {
            if upper.0 < -tol {
                return MnpOutcome::Negative { witness: upper.1 };
            }
        }
        let lower: f64 = x.iter().map(|v| v.min(0.0)).sum();
        if let Some(tol) = early_stop {
            if lower >= -tol {
                return finish(obj, &x, upper, cycle);
            }
        }
        let g = greedy(obj, &ascending(&x));
        absorb(&g, &mut upper);
        let q = g.x;
        max_norm2 = max_norm2.max(dot(&q, &q));
        let xx = dot(&x, &x);
        if xx - dot(&x, &q) <= WOLFE_TOL * max_norm2 || upper.0 - lower <= WOLFE_TOL {
            return finish(obj, &x, upper, cycle);
        }
        if points.iter().any(|p| p == &q) {
            return finish(obj, &x, upper, cycle);
        }
        points.push(q);
        lambda.push(0.0);

        // Minor cycles: move towards the affine minimizer until it lies in the
        // relative interior of the current hull.
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
    MnpOutcome::CapHit {
        cycles: MAX_MAJOR_CYCLES,
    }
}

/// Recovers the minimal minimizer as the shortest ascending prefix of `x`
/// attaining the best value seen.
fn finish(obj: &SubmodularObjective, x: &[f64], upper: (f64, SubsetIndex), cycles: usize) -> MnpOutcome {
    let mut best = upper;
    let mut prefixes = Vec::with_capacity(x.len());
    let mut set = SubsetIndex::EMPTY;
    for k in ascending(x) {
        set = set.with(k);
        let v = obj.value(set);
        prefixes.push((v, set));
        if v < best.0 {
            best = (v, set);
        }
    }
    let cut = best.0 + 1e-12;
    let argmin = if best.0 >= -1e-12 {
        // ∅ attains the minimum.
        (0.0, SubsetIndex::EMPTY)
    } else {
        prefixes
            .into_iter()
            .chain(std::iter::once(best))
            .filter(|p| p.0 <= cut)
            .min_by_key(|p| (p.1.len(), p.1))
            .expect("best is always a candidate")
    };
    MnpOutcome::Converged {
        value: argmin.0,
        argmin: argmin.1,
        cycles,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::{capacity_from_combos, EquilibriumCombos};

    fn jovanovic(theta: f64) -> Capacity {
        let t2 = theta * theta;
        capacity_from_combos(
            &EquilibriumCombos::new(2, vec![(SubsetIndex(1), 1.0 - t2), (SubsetIndex(3), t2)]).unwrap(),
        )
    }

    #[test]
    fn additive_objective_has_zero_vertices() {
        let p = ProbabilityVector::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let c = Capacity::additive(&p);
        let obj = SubmodularObjective::new(&c, &p).unwrap();
        for perm in [[0, 1, 2, 3], [3, 1, 0, 2], [2, 3, 1, 0]] {
            let x = greedy_vertex(&obj, &perm).unwrap();
            assert!(x.iter().all(|v| v.abs() < 1e-15));
        }
    }

    #[test]
    fn jovanovic_vertex_and_minimum() {
        let p = ProbabilityVector::new(vec![0.75, 0.25]).unwrap();
        let c = jovanovic(0.5);
        let obj = SubmodularObjective::new(&c, &p).unwrap();
        let x = greedy_vertex(&obj, &[1, 0]).unwrap();
        assert!(x.iter().all(|v| v.abs() < 1e-15));
        let r = min_submodular(&obj, MinMethod::MinNormPoint);
        assert!(r.min_value.abs() < 1e-12);
        assert_eq!(r.argmin, SubsetIndex::EMPTY);

        let c = jovanovic(0.4);
        let obj = SubmodularObjective::new(&c, &p).unwrap();
        for method in [MinMethod::MinNormPoint, MinMethod::BruteForce] {
            let r = min_submodular(&obj, method);
            assert!((r.min_value + 0.09).abs() < 1e-12, "{method:?}: {r:?}");
            assert_eq!(r.argmin, SubsetIndex(0b10));
        }
        let check = core_membership_submodular(&p, &c).unwrap();
        assert!(!check.inside);
        assert_eq!(check.witness, Some(SubsetIndex(0b10)));
    }

    #[test]
    fn invalid_permutations_rejected() {
        let p = ProbabilityVector::new(vec![0.5, 0.5]).unwrap();
        let c = Capacity::additive(&p);
        let obj = SubmodularObjective::new(&c, &p).unwrap();
        assert!(greedy_vertex(&obj, &[0, 0]).is_err());
        assert!(greedy_vertex(&obj, &[0]).is_err());
        assert!(greedy_vertex(&obj, &[0, 2]).is_err());
    }

    #[test]
    fn affine_minimizer_of_segment() {
        let a = affine_minimizer(&[vec![1.0, -1.0], vec![-1.0, 1.0]]);
        assert!((a[0] - 0.5).abs() < 1e-12 && (a[1] - 0.5).abs() < 1e-12);
    }
}
