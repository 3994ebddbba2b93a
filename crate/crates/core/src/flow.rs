//! Core membership through the transportation / max-flow dual, and recovery
//! of a compatible equilibrium selection from the optimal flow.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::ops::{Add, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::capacity::EquilibriumCombos;
use crate::error::{Error, Result};
use crate::space::{OutcomeSpace, ProbabilityVector, SubsetIndex};

/// A flow of at least `1 − FLOW_TOL` counts as feasible.
pub const FLOW_TOL: f64 = 1e-9;
/// Capacity standing in for +∞ on outcome→combo arcs; total flow never exceeds 1.
pub const INFINITE_ARC: f64 = 2.0;
/// Residual capacities at or below this are treated as zero in double mode.
const F64_RESIDUAL_EPS: f64 = 1e-15;

/// Arithmetic needed by the max-flow solver.
pub trait FlowValue: Clone + PartialOrd + Zero + Add<Output = Self> + Sub<Output = Self> {
    /// Whether a residual capacity is usable.
    fn is_positive(&self) -> bool;
}

impl FlowValue for f64 {
    #[inline]
    fn is_positive(&self) -> bool {
        *self > F64_RESIDUAL_EPS
    }
}

impl FlowValue for BigRational {
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arc<T> {
    pub from: usize,
    pub to: usize,
    pub cap: T,
}

/// Dinic's algorithm on an arbitrary directed network.
///
/// Adjacency lists are scanned lowest target index first, so the returned flow
/// is deterministic. Returns the flow value and the flow on each input arc.
pub fn dinic<T: FlowValue>(nodes: usize, arcs: &[Arc<T>], source: usize, sink: usize) -> (T, Vec<T>) {
    let mut g = Residual::new(nodes, arcs);
    let mut total = T::zero();
    while g.levels(source, sink) {
        let mut next = vec![0usize; nodes];
        loop {
            let pushed = g.augment(source, sink, None, &mut next);
            match pushed {
                Some(f) => total = total + f,
                None => break,
            }
        }
    }
    let flows = (0..arcs.len())
        .map(|i| arcs[i].cap.clone() - g.cap[2 * i].clone())
        .collect();
    (total, flows)
}

struct Residual<T> {
    to: Vec<usize>,
    cap: Vec<T>,
    adj: Vec<Vec<usize>>,
    level: Vec<Option<usize>>,
}

impl<T: FlowValue> Residual<T> {
    fn new(nodes: usize, arcs: &[Arc<T>]) -> Self {
        let mut to = Vec::with_capacity(2 * arcs.len());
        let mut cap = Vec::with_capacity(2 * arcs.len());
        let mut adj = vec![Vec::new(); nodes];
        for a in arcs {
            adj[a.from].push(to.len());
            to.push(a.to);
            cap.push(a.cap.clone());
            adj[a.to].push(to.len());
            to.push(a.from);
            cap.push(T::zero());
        }
        for list in &mut adj {
            list.sort_by_key(|&e| (to[e], e));
        }
        Self {
            to,
            cap,
            adj,
            level: vec![None; nodes],
        }
    }

    fn levels(&mut self, source: usize, sink: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = None);
        self.level[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            let lv = self.level[v].unwrap();
            for &e in &self.adj[v] {
                let w = self.to[e];
                if self.level[w].is_none() && self.cap[e].is_positive() {
                    self.level[w] = Some(lv + 1);
                    queue.push_back(w);
                }
            }
        }
        self.level[sink].is_some()
    }

    fn augment(&mut self, v: usize, sink: usize, limit: Option<T>, next: &mut [usize]) -> Option<T> {
        if v == sink {
            return limit;
        }
        while next[v] < self.adj[v].len() {
            let e = self.adj[v][next[v]];
            let w = self.to[e];
            if self.cap[e].is_positive() && self.level[w] == self.level[v].map(|l| l + 1) {
                let bound = match &limit {
                    Some(l) if *l < self.cap[e] => l.clone(),
                    _ => self.cap[e].clone(),
                };
                if let Some(f) = self.augment(w, sink, Some(bound), next) {
                    if f.is_positive() {
                        self.cap[e] = self.cap[e].clone() - f.clone();
                        self.cap[e ^ 1] = self.cap[e ^ 1].clone() + f.clone();
                        return Some(f);
                    }
                }
            }
            next[v] += 1;
        }
        None
    }

    fn reachable(&self, source: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[source] = true;
        let mut stack = vec![source];
        while let Some(v) = stack.pop() {
            for &e in &self.adj[v] {
                let w = self.to[e];
                if !seen[w] && self.cap[e].is_positive() {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    }
}

/// Source, outcomes, combinations, sink — in that node order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowNetwork<T = f64> {
    pub outcomes: usize,
    pub combos: Vec<SubsetIndex>,
    pub arcs: Vec<Arc<T>>,
    /// Outcomes with positive mass but no incident combination.
    pub uncovered: Vec<usize>,
}

impl<T> FlowNetwork<T> {
    pub fn source(&self) -> usize {
        0
    }

    pub fn outcome_node(&self, y: usize) -> usize {
        1 + y
    }

    pub fn combo_node(&self, u: usize) -> usize {
        1 + self.outcomes + u
    }

    pub fn sink(&self) -> usize {
        1 + self.outcomes + self.combos.len()
    }

    pub fn node_count(&self) -> usize {
        self.sink() + 1
    }

    /// Arcs `(arc index, outcome, combo index)` between the two layers.
    pub fn middle_arcs(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let first_combo = 1 + self.outcomes;
        self.arcs.iter().enumerate().filter_map(move |(i, a)| {
            (a.from >= 1 && a.from < first_combo && a.to >= first_combo && a.to < self.sink())
                .then(|| (i, a.from - 1, a.to - first_combo))
        })
    }
}

fn layout<T: Clone + Zero + PartialOrd>(
    outcomes: usize,
    combos: &[(SubsetIndex, T)],
    p: &[T],
    infinite: T,
) -> FlowNetwork<T> {
    let combo_sets: Vec<SubsetIndex> = combos.iter().map(|c| c.0).collect();
    let mut net = FlowNetwork {
        outcomes,
        combos: combo_sets,
        arcs: Vec::new(),
        uncovered: Vec::new(),
    };
    for (y, py) in p.iter().enumerate() {
        net.arcs.push(Arc {
            from: net.source(),
            to: net.outcome_node(y),
            cap: py.clone(),
        });
    }
    for (y, py) in p.iter().enumerate() {
        let mut covered = false;
        for (k, (u, _)) in combos.iter().enumerate() {
            if u.contains(y) {
                covered = true;
                net.arcs.push(Arc {
                    from: net.outcome_node(y),
                    to: net.combo_node(k),
                    cap: infinite.clone(),
                });
            }
        }
        if !covered && *py > T::zero() {
            net.uncovered.push(y);
        }
    }
    for (k, (_, q)) in combos.iter().enumerate() {
        net.arcs.push(Arc {
            from: net.combo_node(k),
            to: net.sink(),
            cap: q.clone(),
        });
    }
    net
}

/// Builds the source → outcome → combination → sink network.
pub fn build_network(combos: &EquilibriumCombos, p: &ProbabilityVector) -> Result<FlowNetwork> {
    if combos.n() != p.len() {
        return Err(Error::DimensionMismatch {
            expected: combos.n(),
            got: p.len(),
        });
    }
    Ok(layout(p.len(), combos.combos(), p.masses(), INFINITE_ARC))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxFlow<T = f64> {
    pub value: T,
    /// Flow on each arc of the network, in arc order.
    pub flow: Vec<T>,
    /// Outcomes on the source side of a minimum cut.
    pub source_side: SubsetIndex,
}

pub fn max_flow<T: FlowValue>(net: &FlowNetwork<T>) -> MaxFlow<T> {
    let (value, flow) = dinic(net.node_count(), &net.arcs, net.source(), net.sink());
    // Rebuild the residual graph to read off the minimum cut.
    let residual_arcs: Vec<Arc<T>> = net
        .arcs
        .iter()
        .zip(&flow)
        .map(|(a, f)| Arc {
            from: a.from,
            to: a.to,
            cap: a.cap.clone() - f.clone(),
        })
        .collect();
    let mut g = Residual::new(net.node_count(), &residual_arcs);
    for (i, f) in flow.iter().enumerate() {
        g.cap[2 * i + 1] = f.clone();
    }
    let seen = g.reachable(net.source());
    let source_side = SubsetIndex::from_indices((0..net.outcomes).filter(|&y| seen[net.outcome_node(y)]));
    MaxFlow {
        value,
        flow,
        source_side,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowCheck {
    pub inside: bool,
    pub flow_value: f64,
    /// A set `A` with `P(A) > L(A)`, read off a minimum cut, when outside.
    pub witness: Option<SubsetIndex>,
}

/// Feasibility of a coupling between `p` and the combination masses.
pub fn feasible(combos: &EquilibriumCombos, p: &ProbabilityVector) -> Result<FlowCheck> {
    let net = build_network(combos, p)?;
    let mf = max_flow(&net);
    Ok(flow_check(&mf, net.uncovered.first().copied()))
}

/// As [`feasible`], also returning the network and the flow.
pub fn feasible_with_flow(
    combos: &EquilibriumCombos,
    p: &ProbabilityVector,
) -> Result<(FlowCheck, FlowNetwork, MaxFlow)> {
    let net = build_network(combos, p)?;
    let mf = max_flow(&net);
    let check = flow_check(&mf, net.uncovered.first().copied());
    Ok((check, net, mf))
}

fn flow_check(mf: &MaxFlow, uncovered: Option<usize>) -> FlowCheck {
    let inside = uncovered.is_none() && mf.value >= 1.0 - FLOW_TOL;
    let witness = (!inside).then(|| match uncovered {
        Some(y) => SubsetIndex::singleton(y),
        None => mf.source_side,
    });
    FlowCheck {
        inside,
        flow_value: mf.value,
        witness,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionEntry {
    pub outcome: usize,
    pub combo: SubsetIndex,
    pub mass: f64,
}

/// The joint law `α_y^u` of outcomes and equilibrium combinations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionMechanism {
    pub alpha: Vec<SelectionEntry>,
}

impl SelectionMechanism {
    /// `Σ_u α_y^u` per outcome.
    pub fn outcome_marginal(&self, n: usize) -> Vec<f64> {
        let mut m = vec![0.0; n];
        for e in &self.alpha {
            m[e.outcome] += e.mass;
        }
        m
    }

    /// `Σ_y α_y^u` per combination, in the order of `combos`.
    pub fn combo_marginal(&self, combos: &[SubsetIndex]) -> Vec<f64> {
        combos
            .iter()
            .map(|u| self.alpha.iter().filter(|e| e.combo == *u).map(|e| e.mass).sum())
            .collect()
    }

    /// Largest deviation of either marginal from `p` and the combination masses.
    pub fn marginal_error(&self, combos: &EquilibriumCombos, p: &ProbabilityVector) -> f64 {
        let sets: Vec<SubsetIndex> = combos.iter().map(|c| c.0).collect();
        let ey = self
            .outcome_marginal(p.len())
            .iter()
            .zip(p.masses())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let eu = self
            .combo_marginal(&sets)
            .iter()
            .zip(combos.iter())
            .map(|(a, c)| (a - c.1).abs())
            .fold(0.0, f64::max);
        ey.max(eu)
    }
}

/// Reads the selection mechanism off the flow on the middle arcs.
pub fn selection_from_flow(net: &FlowNetwork, flow: &MaxFlow) -> Result<SelectionMechanism> {
    if flow.value < 1.0 - FLOW_TOL {
        return Err(Error::Unsupported(format!(
            "flow value {} is below 1; no compatible selection exists",
            flow.value
        )));
    }
    let alpha = net
        .middle_arcs()
        .map(|(i, y, k)| SelectionEntry {
            outcome: y,
            combo: net.combos[k],
            mass: flow.flow[i],
        })
        .collect();
    Ok(SelectionMechanism { alpha })
}

/// Adjacency matrix as CSV: rows are the source and each combination,
/// columns each outcome and the sink.
pub fn adjacency_csv(net: &FlowNetwork, space: &OutcomeSpace) -> String {
    let mut out = String::from(",");
    out.push_str(&space.labels().join(","));
    out.push_str(",sink\n");
    let cols = net.outcomes + 1;
    let mut rows = vec![vec![String::new(); cols]; net.combos.len() + 1];
    for a in &net.arcs {
        if a.from == net.source() {
            rows[0][a.to - 1] = a.cap.to_string();
        } else if a.to == net.sink() {
            rows[1 + a.from - net.combo_node(0)][cols - 1] = a.cap.to_string();
        } else {
            rows[1 + a.to - net.combo_node(0)][a.from - 1] = "inf".into();
        }
    }
    for (r, row) in rows.iter().enumerate() {
        let name = if r == 0 {
            "source".to_string()
        } else {
            format!("\"{{{}}}\"", space.subset_labels(net.combos[r - 1]).join(","))
        };
        let _ = writeln!(out, "{name},{}", row.join(","));
    }
    out
}

/// Parses `"a/b"`, an integer, or a finite decimal into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let err = || Error::Parse(format!("`{s}` is not a rational number"));
    if let Some((num, den)) = s.split_once('/') {
        let num = BigInt::from_str(num.trim()).map_err(|_| err())?;
        let den = BigInt::from_str(den.trim()).map_err(|_| err())?;
        if den.is_zero() {
            return Err(err());
        }
        return Ok(BigRational::new(num, den));
    }
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if frac.chars().any(|c| !c.is_ascii_digit()) {
        return Err(err());
    }
    let negative = int.starts_with('-');
    let digits = format!("{}{frac}", int.trim_start_matches(['-', '+']));
    let mag = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).map_err(|_| err())?;
    let den = num_traits::pow(BigInt::from(10), frac.len());
    let r = BigRational::new(mag, den);
    Ok(if negative { -r } else { r })
}

/// Exact feasibility check on rational masses.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactFlowCheck {
    pub inside: bool,
    pub flow_value: BigRational,
    pub witness: Option<SubsetIndex>,
}

pub fn feasible_exact(n: usize, combos: &[(SubsetIndex, BigRational)], p: &[BigRational]) -> Result<ExactFlowCheck> {
    if p.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p.len(),
        });
    }
    let one = BigRational::one();
    let sum_p = p.iter().fold(BigRational::zero(), |a, b| a + b);
    let sum_q = combos.iter().fold(BigRational::zero(), |a, c| a + &c.1);
    if sum_p != one || sum_q != one {
        return Err(Error::InvalidProbability(format!(
            "exact masses must sum to 1 (outcomes {sum_p}, combinations {sum_q})"
        )));
    }
    if p.iter().chain(combos.iter().map(|c| &c.1)).any(Signed::is_negative) {
        return Err(Error::InvalidProbability("negative exact mass".into()));
    }
    let net = layout(n, combos, p, BigRational::from_integer(2.into()));
    let mf = max_flow(&net);
    let inside = mf.value == one;
    Ok(ExactFlowCheck {
        inside,
        witness: (!inside).then_some(mf.source_side),
        flow_value: mf.value,
    })
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::{capacity_from_combos, EquilibriumCombos};

    fn jovanovic(theta: f64) -> EquilibriumCombos {
        let t2 = theta * theta;
        EquilibriumCombos::new(2, vec![(SubsetIndex(1), 1.0 - t2), (SubsetIndex(3), t2)]).unwrap()
    }

    fn family() -> EquilibriumCombos {
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
    fn point_mass_network() {
        let combos = EquilibriumCombos::new(1, vec![(SubsetIndex(1), 1.0)]).unwrap();
        let p = ProbabilityVector::new(vec![1.0]).unwrap();
        let net = build_network(&combos, &p).unwrap();
        assert_eq!(net.arcs.len(), 3);
        assert_eq!(max_flow(&net).value, 1.0);
    }

    #[test]
    fn family_network_shape() {
        let p = ProbabilityVector::new(vec![0.25; 4]).unwrap();
        let net = build_network(&family(), &p).unwrap();
        assert_eq!(net.node_count(), 11);
        assert_eq!(net.middle_arcs().count(), 6);
    }

    #[test]
    fn jovanovic_flows() {
        let p = ProbabilityVector::new(vec![0.75, 0.25]).unwrap();
        let out = feasible(&jovanovic(0.4), &p).unwrap();
        assert!(!out.inside);
        assert!((out.flow_value - 0.91).abs() < 1e-12);
        assert_eq!(out.witness, Some(SubsetIndex(0b10)));

        let (check, net, mf) = feasible_with_flow(&jovanovic(0.5), &p).unwrap();
        assert!(check.inside);
        let sel = selection_from_flow(&net, &mf).unwrap();
        let mass = |y, u| {
            sel.alpha
                .iter()
                .find(|e| e.outcome == y && e.combo == SubsetIndex(u))
                .unwrap()
                .mass
        };
        assert!((mass(0, 1) - 0.75).abs() < 1e-12);
        assert!(mass(0, 3).abs() < 1e-12);
        assert!((mass(1, 3) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn uncovered_outcome_is_infeasible() {
        let combos = EquilibriumCombos::new(2, vec![(SubsetIndex(1), 1.0)]).unwrap();
        let p = ProbabilityVector::new(vec![0.5, 0.5]).unwrap();
        let out = feasible(&combos, &p).unwrap();
        assert!(!out.inside);
        assert_eq!(out.witness, Some(SubsetIndex(0b10)));
        assert!(selection_from_flow(
            &build_network(&combos, &p).unwrap(),
            &max_flow(&build_network(&combos, &p).unwrap())
        )
        .is_err());
    }

    #[test]
    fn cut_witness_violates_capacity() {
        let combos = family();
        let c = capacity_from_combos(&combos);
        let p = ProbabilityVector::new(vec![0.3, 0.2, 0.2, 0.3]).unwrap();
        let out = feasible(&combos, &p).unwrap();
        assert!(!out.inside);
        let a = out.witness.unwrap();
        assert!(p.mass(a) > c.value(a));
    }

    #[test]
    fn rationals_parse() {
        assert_eq!(parse_rational("3/4").unwrap(), BigRational::new(3.into(), 4.into()));
        assert_eq!(parse_rational("0.25").unwrap(), BigRational::new(1.into(), 4.into()));
        assert_eq!(parse_rational("-1.5").unwrap(), BigRational::new((-3).into(), 2.into()));
        assert_eq!(parse_rational("2").unwrap(), BigRational::from_integer(2.into()));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn exact_boundary() {
        let r = |s| parse_rational(s).unwrap();
        let combos = vec![(SubsetIndex(1), r("3/4")), (SubsetIndex(3), r("1/4"))];
        let at = feasible_exact(2, &combos, &[r("3/4"), r("1/4")]).unwrap();
        assert!(at.inside);
        let beyond = feasible_exact(2, &combos, &[r("0.7499999999999999"), r("0.2500000000000001")]).unwrap();
        assert!(!beyond.inside);
        assert_eq!(beyond.witness, Some(SubsetIndex(0b10)));
    }

    #[test]
    fn adjacency_layout() {
        let space = OutcomeSpace::new(["00", "11"]).unwrap();
        let p = ProbabilityVector::new(vec![0.75, 0.25]).unwrap();
        let net = build_network(&jovanovic(0.5), &p).unwrap();
        let csv = adjacency_csv(&net, &space);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], ",00,11,sink");
        assert_eq!(lines[1], "source,0.75,0.25,");
        assert_eq!(lines[2], "\"{00}\",inf,,0.75");
        assert_eq!(lines[3], "\"{00,11}\",inf,inf,0.25");
    }
}
