//! Exact consensus reliability.
//!
//! The activated-node sets form a Markov tree over the phase-dependence
//! tree: given `AN_j`, the subtrees hanging off phase `j` draw disjoint link
//! outcomes and are conditionally independent. The nested subset sum is
//! therefore evaluated bottom-up as a memoised recursion over
//! `(phase, AN mask)`, accumulating failure mass directly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{any_fails, binomial_pmf, PoissonBinomial, Prob};
use crate::params::{check_prob, ClusterParams};
use crate::protocol::{validate_structure, GraphKind, ProtocolStructure, ResolvedStructure};

/// Node subset as a bitmask over node indices `0..n`.
pub type NodeSet = u32;

/// Largest `n` for heterogeneous exact evaluation without many-to-many phases.
pub const EXACT_CAP: usize = 10;
/// Largest `n` for heterogeneous exact evaluation with a many-to-many phase.
pub const EXACT_CAP_C: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    ExactIid,
    Joint,
    PowerSeries,
    TreeApprox,
    IidFirstOrder,
    MonteCarlo,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::ExactIid => "exact_iid",
            Method::Joint => "joint",
            Method::PowerSeries => "power_series",
            Method::TreeApprox => "tree_approx",
            Method::IidFirstOrder => "iid_first_order",
            Method::MonteCarlo => "monte_carlo",
        }
    }
}

/// One labelled contribution to a result, e.g. a per-path failure term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityResult {
    pub p_c: f64,
    pub p_f: f64,
    pub method: Method,
    /// The raw value fell outside [0, 1] and was clamped.
    #[serde(default)]
    pub clamped: bool,
    /// Some threshold lies below `f + 1`.
    #[serde(default)]
    pub outside_regime: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub detail: Vec<Term>,
}

impl ReliabilityResult {
    pub fn from_failure(p_f: f64, method: Method) -> Self {
        let p_f = p_f.clamp(0.0, 1.0);
        ReliabilityResult {
            p_c: 1.0 - p_f,
            p_f,
            method,
            clamped: false,
            outside_regime: false,
            detail: Vec::new(),
        }
    }

    pub fn from_prob(pr: Prob, method: Method) -> Self {
        // keep whichever side is small at full precision
        let (p_c, p_f) = if pr.q <= 0.5 {
            let q = pr.q.clamp(0.0, 1.0);
            (1.0 - q, q)
        } else {
            let p = pr.p.clamp(0.0, 1.0);
            (p, 1.0 - p)
        };
        ReliabilityResult {
            p_c,
            p_f,
            method,
            clamped: false,
            outside_regime: false,
            detail: Vec::new(),
        }
    }

    pub fn with_detail(mut self, detail: Vec<Term>) -> Self {
        self.detail = detail;
        self
    }
}

pub(crate) fn members(set: NodeSet) -> impl Iterator<Item = usize> {
    (0..NodeSet::BITS as usize).filter(move |&i| set >> i & 1 == 1)
}

pub(crate) fn full_set(n: usize) -> NodeSet {
    if n >= NodeSet::BITS as usize {
        NodeSet::MAX
    } else {
        (1 << n) - 1
    }
}

fn check_mask_width(n: usize) -> Result<()> {
    if n > NodeSet::BITS as usize {
        return Err(Error::NTooLarge {
            n,
            cap: NodeSet::BITS as usize,
        });
    }
    Ok(())
}

/// Activation probability of `node` in a phase of the given kind, given the
/// activated set of the phase it depends on.
pub(crate) fn activation(
    kind: GraphKind,
    node: usize,
    params: &ClusterParams,
    prior: NodeSet,
) -> Prob {
    match kind {
        GraphKind::A => Prob::success(params.link_down[node]),
        GraphKind::B => Prob::success(params.link_up[node]),
        GraphKind::C => {
            let senders = members(prior)
                .filter(|&u| u != node)
                .map(|u| Prob::success(params.link_mesh[u][node]));
            let need = params.n - params.f - 1;
            PoissonBinomial::new(senders).at_least(need)
        }
    }
}

/// Probability that node `node` is activated in a phase of graph `kind`
/// whose prior activated set is `prior_set`.
pub fn activation_probability(
    kind: GraphKind,
    node: usize,
    params: &ClusterParams,
    prior_set: NodeSet,
) -> Result<f64> {
    params.validate()?;
    check_mask_width(params.n)?;
    if node >= params.n {
        return Err(Error::InvalidParams(format!(
            "node {node} out of range for n = {}",
            params.n
        )));
    }
    if prior_set & !full_set(params.n) != 0 {
        return Err(Error::InvalidParams(
            "prior set names nodes outside the cluster".to_string(),
        ));
    }
    if kind == GraphKind::C && prior_set >> node & 1 == 0 {
        return Err(Error::NodeNotInPriorSet { node });
    }
    Ok(activation(kind, node, params, prior_set).p)
}

/// Probability that the activated set of a phase is exactly `next`, given the
/// prior activated set `prior`. Zero unless `next ⊆ prior`.
pub fn transition_probability(
    kind: GraphKind,
    params: &ClusterParams,
    prior: NodeSet,
    next: NodeSet,
) -> Result<f64> {
    params.validate()?;
    check_mask_width(params.n)?;
    if next & !prior != 0 {
        return Ok(0.0);
    }
    Ok(members(prior)
        .map(|i| {
            let a = activation(kind, i, params, prior);
            if next >> i & 1 == 1 {
                a.p
            } else {
                a.q
            }
        })
        .product())
}

fn resolve(g: &ProtocolStructure, params: &ClusterParams) -> Result<ResolvedStructure> {
    params.validate()?;
    validate_structure(g, params.n, params.f)
}

fn check_cap(rs: &ResolvedStructure) -> Result<()> {
    let cap = if rs.structure.has_c_graph() {
        EXACT_CAP_C
    } else {
        EXACT_CAP
    };
    if rs.n > cap {
        return Err(Error::NTooLarge { n: rs.n, cap });
    }
    Ok(())
}

/// Memoised conditional failure of every subtree given its root's AN set.
struct TreeDp<'a> {
    rs: &'a ResolvedStructure,
    params: &'a ClusterParams,
    memo: Vec<Vec<f64>>,
}

impl<'a> TreeDp<'a> {
    fn new(rs: &'a ResolvedStructure, params: &'a ClusterParams) -> Self {
        let size = 1usize << rs.n;
        TreeDp {
            rs,
            params,
            memo: vec![vec![f64::NAN; size]; rs.phases() + 1],
        }
    }

    /// Failure probability of everything below `phase`, given `AN_phase = set`.
    fn fail_given(&mut self, phase: usize, set: NodeSet) -> f64 {
        let cached = self.memo[phase][set as usize];
        if !cached.is_nan() {
            return cached;
        }
        let children = self.rs.tree.children[phase].clone();
        let mut child_failures = Vec::with_capacity(children.len());
        for c in children {
            child_failures.push(self.child_fail(c, set));
        }
        let value = any_fails(child_failures);
        self.memo[phase][set as usize] = value;
        value
    }

    /// Failure probability of the subtree rooted at `phase` (inclusive),
    /// given its parent's AN set.
    fn child_fail(&mut self, phase: usize, prior: NodeSet) -> f64 {
        let kind = self.rs.kind(phase);
        let need = self.rs.m[phase];
        let nodes: Vec<usize> = members(prior).collect();
        let acts: Vec<Prob> = nodes
            .iter()
            .map(|&i| activation(kind, i, self.params, prior))
            .collect();
        let below = PoissonBinomial::new(acts.iter().copied()).at_least(need).q;
        if self.rs.tree.children[phase].is_empty() {
            return below;
        }
        let mut acc = below;
        let k = nodes.len();
        // ascending over local subsets of the prior set
        for local in 0u32..(1u32 << k) {
            if (local.count_ones() as usize) < need {
                continue;
            }
            let mut weight = 1.0;
            let mut set: NodeSet = 0;
            for (b, (&node, a)) in nodes.iter().zip(&acts).enumerate() {
                if local >> b & 1 == 1 {
                    weight *= a.p;
                    set |= 1 << node;
                } else {
                    weight *= a.q;
                }
            }
            if weight == 0.0 {
                continue;
            }
            acc += weight * self.fail_given(phase, set);
        }
        acc.min(1.0)
    }

    /// `(S_0, P(S_0), P_F | S_0)` for every node-fault outcome.
    fn by_node_set(&mut self) -> Vec<(NodeSet, f64, f64)> {
        let n = self.rs.n;
        let quorum = n - self.rs.f;
        let mut out = Vec::with_capacity(1 << n);
        for set in 0..=full_set(n) {
            let weight: f64 = (0..n)
                .map(|i| {
                    let p = self.params.node[i];
                    if set >> i & 1 == 1 {
                        p
                    } else {
                        1.0 - p
                    }
                })
                .product();
            let fail = if (set.count_ones() as usize) < quorum {
                1.0
            } else if weight == 0.0 {
                0.0
            } else {
                self.fail_given(0, set)
            };
            out.push((set, weight, fail));
        }
        out
    }
}

/// Exact reliability for heterogeneous node and link probabilities.
pub fn exact_reliability(g: &ProtocolStructure, params: &ClusterParams) -> Result<ReliabilityResult> {
    let rs = resolve(g, params)?;
    check_cap(&rs)?;
    let mut dp = TreeDp::new(&rs, params);
    let p_f: f64 = dp
        .by_node_set()
        .into_iter()
        .map(|(_, w, fail)| w * fail)
        .sum();
    let mut result = ReliabilityResult::from_failure(p_f, Method::Exact);
    result.outside_regime = rs.outside_regime();
    Ok(result)
}

/// Activation probability of one node in an iid cluster whose prior phase
/// has `prior` activated nodes.
pub(crate) fn iid_activation(kind: GraphKind, n: usize, f: usize, p_l: f64, prior: usize) -> Prob {
    match kind {
        GraphKind::A | GraphKind::B => Prob::success(p_l),
        GraphKind::C => {
            let need = n - f - 1;
            let others = prior.saturating_sub(1);
            let link = Prob::success(p_l);
            let q: f64 = (0..need.min(others + 1))
                .map(|k| binomial_pmf(others, k, link))
                .sum();
            let p: f64 = (need..=others).map(|k| binomial_pmf(others, k, link)).sum();
            Prob { p, q }
        }
    }
}

struct IidDp<'a> {
    rs: &'a ResolvedStructure,
    p_l: f64,
    memo: Vec<Vec<f64>>,
}

impl IidDp<'_> {
    fn fail_given(&mut self, phase: usize, count: usize) -> f64 {
        let cached = self.memo[phase][count];
        if !cached.is_nan() {
            return cached;
        }
        let children = self.rs.tree.children[phase].clone();
        let mut child_failures = Vec::with_capacity(children.len());
        for c in children {
            child_failures.push(self.child_fail(c, count));
        }
        let value = any_fails(child_failures);
        self.memo[phase][count] = value;
        value
    }

    fn child_fail(&mut self, phase: usize, prior: usize) -> f64 {
        let need = self.rs.m[phase];
        let a = iid_activation(self.rs.kind(phase), self.rs.n, self.rs.f, self.p_l, prior);
        let mut acc: f64 = (0..need.min(prior + 1))
            .map(|y| binomial_pmf(prior, y, a))
            .sum();
        if !self.rs.tree.children[phase].is_empty() {
            for y in need..=prior {
                let w = binomial_pmf(prior, y, a);
                if w > 0.0 {
                    acc += w * self.fail_given(phase, y);
                }
            }
        }
        acc.min(1.0)
    }
}

/// Exact reliability when every node shares `p_n` and every link shares `p_l`.
pub fn exact_reliability_iid(
    g: &ProtocolStructure,
    n: usize,
    f: usize,
    p_n: f64,
    p_l: f64,
) -> Result<ReliabilityResult> {
    check_prob("p_n", p_n)?;
    check_prob("p_l", p_l)?;
    let rs = validate_structure(g, n, f)?;
    let mut dp = IidDp {
        rs: &rs,
        p_l,
        memo: vec![vec![f64::NAN; n + 1]; rs.phases() + 1],
    };
    let node = Prob::success(p_n);
    let quorum = n - f;
    let mut p_f: f64 = (0..quorum).map(|x| binomial_pmf(n, x, node)).sum();
    for x in quorum..=n {
        let w = binomial_pmf(n, x, node);
        if w > 0.0 {
            p_f += w * dp.fail_given(0, x);
        }
    }
    let mut result = ReliabilityResult::from_failure(p_f, Method::ExactIid);
    result.outside_regime = rs.outside_regime();
    Ok(result)
}

/// Reliability with every link perfect: only node faults can break consensus.
pub fn node_only_reliability(
    g: &ProtocolStructure,
    params: &ClusterParams,
) -> Result<ReliabilityResult> {
    let rs = resolve(g, params)?;
    // with perfect links every phase inherits its parent's full AN set
    let need = rs.m.iter().copied().max().unwrap_or(0);
    let tail = PoissonBinomial::new(params.node.iter().map(|&p| Prob::success(p))).at_least(need);
    let mut result = ReliabilityResult::from_prob(tail, Method::Exact);
    result.outside_regime = rs.outside_regime();
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiInstanceMode {
    /// Condition on the fault set, raise the link-only reliability to `w`.
    Exact,
    /// `w·P_C − (w−1)·P_C^node`, clamped.
    Approx,
}

/// Probability that `w` consecutive instances all succeed with a fault set
/// that is drawn once and shared by every instance.
pub fn multi_instance_reliability(
    g: &ProtocolStructure,
    params: &ClusterParams,
    w: u64,
    mode: MultiInstanceMode,
) -> Result<f64> {
    if w == 0 {
        return Err(Error::WNonPositive);
    }
    let rs = resolve(g, params)?;
    check_cap(&rs)?;
    let mut dp = TreeDp::new(&rs, params);
    let outcomes = dp.by_node_set();
    match mode {
        MultiInstanceMode::Exact => {
            let exponent = w as f64;
            Ok(outcomes
                .into_iter()
                .map(|(_, weight, fail)| {
                    if fail >= 1.0 {
                        0.0
                    } else {
                        weight * (exponent * (-fail).ln_1p()).exp()
                    }
                })
                .sum())
        }
        MultiInstanceMode::Approx => {
            let p_f: f64 = outcomes.iter().map(|&(_, weight, fail)| weight * fail).sum();
            let node_fail = node_only_reliability(g, params)?.p_f;
            let wf = w as f64;
            let fail = wf * p_f - (wf - 1.0) * node_fail;
            Ok((1.0 - fail).clamp(0.0, 1.0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::Builtin;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn activation_examples() {
        let p = ClusterParams::iid(4, 1, 1.0, 0.9);
        assert_eq!(activation_probability(GraphKind::A, 0, &p, 0b1111).unwrap(), 0.9);
        let c = activation_probability(GraphKind::C, 0, &p, 0b1111).unwrap();
        assert!(close(c, 0.972, 1e-15));
        let perfect = ClusterParams::iid(4, 1, 1.0, 1.0);
        assert_eq!(activation_probability(GraphKind::C, 0, &perfect, 0b1111).unwrap(), 1.0);
        assert_eq!(
            activation_probability(GraphKind::C, 0, &p, 0b1110).unwrap_err(),
            Error::NodeNotInPriorSet { node: 0 }
        );
    }

    #[test]
    fn raft_three_nodes() {
        let g = Builtin::Raft.structure();
        let r = exact_reliability(&g, &ClusterParams::iid(3, 1, 1.0, 0.9)).unwrap();
        let expect: f64 = (2..=3)
            .map(|x| binomial_pmf(3, x, Prob::success(0.81)))
            .sum();
        assert!(close(r.p_c, expect, 1e-15));
        assert!(close(r.p_c, 0.905418, 5e-7));
        assert_eq!(r.p_c + r.p_f, 1.0);
    }

    #[test]
    fn degenerate_probabilities() {
        for b in Builtin::ALL {
            let g = b.structure();
            let ok = exact_reliability(&g, &ClusterParams::iid(4, 1, 1.0, 1.0)).unwrap();
            assert_eq!(ok.p_c, 1.0);
            let iid = exact_reliability_iid(&g, 9, 2, 1.0, 1.0).unwrap();
            assert_eq!(iid.p_c, 1.0);
        }
        let dead = exact_reliability(&Builtin::Raft.structure(), &ClusterParams::iid(3, 1, 1.0, 0.0))
            .unwrap();
        assert_eq!(dead.p_c, 0.0);
    }

    #[test]
    fn iid_matches_heterogeneous_engine() {
        for b in Builtin::ALL {
            let g = b.structure();
            for n in 2..=7 {
                let f = b.family().default_f(n);
                for (p_n, p_l) in [(0.97, 0.9), (0.999, 0.99), (0.8, 0.7)] {
                    let a = exact_reliability(&g, &ClusterParams::iid(n, f, p_n, p_l)).unwrap();
                    let b2 = exact_reliability_iid(&g, n, f, p_n, p_l).unwrap();
                    assert!(
                        close(a.p_f, b2.p_f, 1e-12),
                        "{} n={n}: {} vs {}",
                        g.name,
                        a.p_f,
                        b2.p_f
                    );
                }
            }
        }
    }

    #[test]
    fn perfect_links_reduce_to_binomial_tail() {
        let g = Builtin::Pbft.structure();
        let r = exact_reliability_iid(&g, 12, 4, 0.99, 1.0).unwrap();
        let expect: f64 = (8..=12)
            .map(|x| binomial_pmf(12, x, Prob::success(0.99)))
            .sum();
        assert!(close(r.p_c, expect, 1e-14));
    }

    #[test]
    fn node_only_examples() {
        let g = Builtin::Raft.structure();
        let r = node_only_reliability(&g, &ClusterParams::iid(4, 1, 0.9, 0.5)).unwrap();
        assert!(close(r.p_c, 0.9477, 1e-12));
        let r = node_only_reliability(&g, &ClusterParams::iid(2, 0, 0.5, 0.5)).unwrap();
        assert!(close(r.p_c, 0.25, 1e-15));
        let mut p = ClusterParams::iid(5, 2, 0.9, 0.3);
        p.node = vec![0.9, 0.8, 0.95, 0.7, 0.99];
        let a = node_only_reliability(&g, &p).unwrap();
        let b = exact_reliability(&g, &p.node_only()).unwrap();
        assert!(close(a.p_c, b.p_c, 1e-14));
    }

    #[test]
    fn caps_are_enforced() {
        let g = Builtin::Pbft.structure();
        assert_eq!(
            exact_reliability(&g, &ClusterParams::iid(9, 3, 1.0, 0.9)).unwrap_err(),
            Error::NTooLarge { n: 9, cap: 8 }
        );
        let g = Builtin::Raft.structure();
        assert_eq!(
            exact_reliability(&g, &ClusterParams::iid(11, 5, 1.0, 0.9)).unwrap_err(),
            Error::NTooLarge { n: 11, cap: 10 }
        );
    }

    #[test]
    fn multi_instance_single_instance_matches() {
        let g = Builtin::Raft.structure();
        let p = ClusterParams::iid(3, 1, 0.95, 0.99);
        let exact = exact_reliability(&g, &p).unwrap().p_c;
        for mode in [MultiInstanceMode::Exact, MultiInstanceMode::Approx] {
            let m = multi_instance_reliability(&g, &p, 1, mode).unwrap();
            assert!(close(m, exact, 1e-14));
        }
        assert_eq!(
            multi_instance_reliability(&g, &p, 0, MultiInstanceMode::Exact).unwrap_err(),
            Error::WNonPositive
        );
    }

    #[test]
    fn transition_rows_sum_to_one() {
        let mut p = ClusterParams::iid(4, 1, 1.0, 0.9);
        for (u, row) in p.link_mesh.iter_mut().enumerate() {
            for (i, x) in row.iter_mut().enumerate() {
                *x = 0.5 + 0.1 * ((u * 4 + i) % 5) as f64;
            }
        }
        for kind in [GraphKind::A, GraphKind::B, GraphKind::C] {
            for prior in [0b1111u32, 0b1011, 0b0110] {
                let mut total = 0.0;
                let mut next = prior;
                loop {
                    total += transition_probability(kind, &p, prior, next).unwrap();
                    if next == 0 {
                        break;
                    }
                    next = (next - 1) & prior;
                }
                assert!(close(total, 1.0, 1e-12));
            }
        }
    }
}
