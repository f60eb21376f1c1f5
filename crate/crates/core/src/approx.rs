//! Approximations: joint reliability, the power series in joint failures,
//! dependence-tree decomposition, and the closed-form gains.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{iid_activation, Method, ReliabilityResult, Term};
use crate::math::{
    any_fails, binomial, clamp_unit, elementary_symmetric, neumaier_sum, power_mean,
    PoissonBinomial, Prob,
};
use crate::params::{check_prob, ClusterParams};
use crate::protocol::{validate_structure, Family, GraphKind, ProtocolStructure, ResolvedStructure};

/// Per-node probability of being activated in every phase.
#[derive(Debug, Clone, PartialEq)]
pub struct JointReliabilityVector {
    pub joint: Vec<Prob>,
}

impl JointReliabilityVector {
    pub fn from_failures(jf: &[f64]) -> Self {
        JointReliabilityVector {
            joint: jf.iter().map(|&q| Prob::failure(q)).collect(),
        }
    }

    pub fn success(&self) -> Vec<f64> {
        self.joint.iter().map(|p| p.p).collect()
    }

    pub fn failure(&self) -> Vec<f64> {
        self.joint.iter().map(|p| p.q).collect()
    }

    pub fn len(&self) -> usize {
        self.joint.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joint.is_empty()
    }
}

/// Mean over all `w`-subsets of the other nodes of the probability that at
/// least `need` of them deliver to `node`.
fn subset_averaged_tail(params: &ClusterParams, node: usize, w: usize, need: usize) -> Prob {
    // dp[c][s]: total weight over chosen-count c, delivered-count s
    let mut dp = vec![vec![0.0f64; w + 1]; w + 1];
    dp[0][0] = 1.0;
    for u in (0..params.n).filter(|&u| u != node) {
        let link = Prob::success(params.link_mesh[u][node]);
        for c in (0..w).rev() {
            for s in (0..=c).rev() {
                let mass = dp[c][s];
                if mass == 0.0 {
                    continue;
                }
                dp[c + 1][s + 1] += mass * link.p;
                dp[c + 1][s] += mass * link.q;
            }
        }
    }
    let total = binomial(params.n - 1, w);
    Prob {
        p: dp[w][need.min(w + 1)..].iter().sum::<f64>() / total,
        q: dp[w][..need.min(w + 1)].iter().sum::<f64>() / total,
    }
}

/// Averaged many-to-many activation of `node`: the order-`f+1` power mean over
/// prior-set sizes of the subset-averaged receipt probability.
pub(crate) fn c_avg_heterogeneous(params: &ClusterParams, node: usize) -> Prob {
    let (n, f) = (params.n, params.f);
    let need = n - f - 1;
    let per_size: Vec<Prob> = (n - f - 1..n)
        .map(|w| subset_averaged_tail(params, node, w, need))
        .collect();
    power_mean(&per_size, f + 1)
}

/// Averaged many-to-many activation in an iid cluster.
pub fn c_graph_avg_activation_iid(n: usize, f: usize, p_l: f64) -> Result<f64> {
    check_prob("p_l", p_l)?;
    if f >= n {
        return Err(Error::InvalidParams(format!("f = {f} must be below n = {n}")));
    }
    Ok(c_avg_iid(n, f, p_l).p)
}

pub(crate) fn c_avg_iid(n: usize, f: usize, p_l: f64) -> Prob {
    let per_size: Vec<Prob> = (n - f..=n)
        .map(|a| iid_activation(GraphKind::C, n, f, p_l, a))
        .collect();
    power_mean(&per_size, f + 1)
}

/// Averaged activation of `node` in many-to-many `phase` of `g`.
pub fn c_graph_avg_activation(
    g: &ProtocolStructure,
    phase: usize,
    params: &ClusterParams,
    node: usize,
) -> Result<f64> {
    params.validate()?;
    let rs = validate_structure(g, params.n, params.f)?;
    if phase == 0 || phase > rs.phases() || rs.kind(phase) != GraphKind::C {
        return Err(Error::NotCGraph { phase });
    }
    if node >= params.n {
        return Err(Error::InvalidParams(format!("node {node} out of range")));
    }
    Ok(c_avg_heterogeneous(params, node).p)
}

/// Per-node activation pairs for phase `phase`, with many-to-many phases averaged.
fn phase_activation(kind: GraphKind, params: &ClusterParams, c_avg: &[Prob], node: usize) -> Prob {
    match kind {
        GraphKind::A => Prob::success(params.link_down[node]),
        GraphKind::B => Prob::success(params.link_up[node]),
        GraphKind::C => c_avg[node],
    }
}

fn c_averages(rs: &ResolvedStructure, params: &ClusterParams) -> Vec<Prob> {
    if rs.structure.has_c_graph() {
        (0..params.n).map(|i| c_avg_heterogeneous(params, i)).collect()
    } else {
        Vec::new()
    }
}

/// Joint activation of every node across the listed phases (phase 0 included).
fn joint_along(
    rs: &ResolvedStructure,
    params: &ClusterParams,
    c_avg: &[Prob],
    phases: &[usize],
) -> JointReliabilityVector {
    let joint = (0..params.n)
        .map(|i| {
            let failures = phases.iter().map(|&j| {
                if j == 0 {
                    1.0 - params.node[i]
                } else {
                    phase_activation(rs.kind(j), params, c_avg, i).q
                }
            });
            Prob::failure(any_fails(failures))
        })
        .collect();
    JointReliabilityVector { joint }
}

fn check_first_order(rs: &ResolvedStructure) -> Result<()> {
    for (idx, c) in rs.structure.components.iter().enumerate() {
        if c.r != 1 {
            return Err(Error::NotFirstOrder {
                phase: idx + 1,
                r: c.r as usize,
            });
        }
    }
    let expected = rs.n - rs.f;
    for (idx, &m) in rs.thresholds().iter().enumerate() {
        if m != expected {
            return Err(Error::MNotNf {
                phase: idx + 1,
                m,
                expected,
            });
        }
    }
    Ok(())
}

/// Joint reliability vector of a first-order chain structure.
pub fn joint_vector(g: &ProtocolStructure, params: &ClusterParams) -> Result<JointReliabilityVector> {
    params.validate()?;
    let rs = validate_structure(g, params.n, params.f)?;
    check_first_order(&rs)?;
    let c_avg = c_averages(&rs, params);
    let phases: Vec<usize> = (0..=rs.phases()).collect();
    Ok(joint_along(&rs, params, &c_avg, &phases))
}

/// Consensus reliability as the probability that at least `n - f` nodes are
/// jointly activated through every phase.
pub fn joint_reliability(g: &ProtocolStructure, params: &ClusterParams) -> Result<ReliabilityResult> {
    let jv = joint_vector(g, params)?;
    let tail = PoissonBinomial::new(jv.joint.iter().map(|p| p.complement())).at_least(params.f + 1);
    // at least f+1 joint failures is consensus failure
    Ok(ReliabilityResult::from_prob(tail.complement(), Method::Joint))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSeriesExpansion {
    /// `a_t` for `t = f+1..=n`.
    pub coefficients: Vec<f64>,
    /// `Q_t` for `t = f+1..=n`.
    pub terms: Vec<f64>,
    pub t_max: usize,
    pub p_f: f64,
    pub clamped: bool,
}

/// `a_t = (-1)^(t-f-1) C(t-1, f)`.
pub fn series_coefficient(t: usize, f: usize) -> f64 {
    let sign = if (t - f - 1) % 2 == 0 { 1.0 } else { -1.0 };
    sign * binomial(t - 1, f)
}

pub fn power_series_failure(
    jf: &JointReliabilityVector,
    n: usize,
    f: usize,
    t_max: usize,
) -> Result<PowerSeriesExpansion> {
    if jf.len() != n {
        return Err(Error::InvalidParams(format!(
            "joint vector has {} entries, expected {n}",
            jf.len()
        )));
    }
    if f >= n {
        return Err(Error::InvalidParams(format!("f = {f} must be below n = {n}")));
    }
    if t_max < f + 1 || t_max > n {
        return Err(Error::TruncationOutOfRange {
            t_max,
            lo: f + 1,
            hi: n,
        });
    }
    let e = elementary_symmetric(&jf.failure(), n);
    let coefficients: Vec<f64> = (f + 1..=n).map(|t| series_coefficient(t, f)).collect();
    let terms: Vec<f64> = e[f + 1..=n].to_vec();
    let raw = neumaier_sum(
        coefficients
            .iter()
            .zip(&terms)
            .take(t_max - f)
            .map(|(a, q)| a * q),
    );
    let (p_f, clamped) = clamp_unit(raw);
    Ok(PowerSeriesExpansion {
        coefficients,
        terms,
        t_max,
        p_f,
        clamped,
    })
}

fn first_order_paths_or_root(rs: &ResolvedStructure) -> Vec<Vec<usize>> {
    let paths = rs.first_order_paths();
    if paths.is_empty() {
        vec![vec![0]]
    } else {
        paths
    }
}

fn path_label(path: &[usize]) -> String {
    let parts: Vec<String> = path.iter().map(usize::to_string).collect();
    parts.join("-")
}

/// Sum over first-order root-to-leaf paths of the leading power-series term.
pub fn tree_decomposed_failure(
    g: &ProtocolStructure,
    params: &ClusterParams,
) -> Result<ReliabilityResult> {
    params.validate()?;
    let rs = validate_structure(g, params.n, params.f)?;
    let c_avg = c_averages(&rs, params);
    let f = params.f;
    let mut detail = Vec::new();
    let mut terms = Vec::new();
    for path in first_order_paths_or_root(&rs) {
        let jv = joint_along(&rs, params, &c_avg, &path);
        let term = elementary_symmetric(&jv.failure(), f + 1)[f + 1];
        detail.push(Term {
            label: path_label(&path),
            value: term,
        });
        terms.push(term);
    }
    let (p_f, clamped) = clamp_unit(neumaier_sum(terms));
    let mut result = ReliabilityResult::from_failure(p_f, Method::TreeApprox).with_detail(detail);
    result.clamped = clamped;
    result.outside_regime = rs.outside_regime();
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverallJointFailure {
    pub value: f64,
    pub per_path: Vec<f64>,
}

impl OverallJointFailure {
    /// `p_{J,R} = 1 - p_{JF,R}`.
    pub fn joint_success(&self) -> f64 {
        1.0 - self.value
    }
}

/// Per-path iid joint failures combined by an order-`f+1` power sum.
pub fn overall_joint_failure_rate_iid(
    g: &ProtocolStructure,
    n: usize,
    f: usize,
    p_n: f64,
    p_l: f64,
) -> Result<OverallJointFailure> {
    check_prob("p_n", p_n)?;
    check_prob("p_l", p_l)?;
    let rs = validate_structure(g, n, f)?;
    let c = c_avg_iid(n, f, p_l);
    let per_path: Vec<f64> = first_order_paths_or_root(&rs)
        .iter()
        .map(|path| {
            any_fails(path.iter().map(|&j| {
                if j == 0 {
                    1.0 - p_n
                } else if rs.kind(j) == GraphKind::C {
                    c.q
                } else {
                    1.0 - p_l
                }
            }))
        })
        .collect();
    let k = (f + 1) as i32;
    let sum: f64 = per_path.iter().map(|q| q.powi(k)).sum();
    Ok(OverallJointFailure {
        value: sum.powf(1.0 / k as f64),
        per_path,
    })
}

/// `C(n, f+1) p_jfr^(f+1)`, clamped to [0, 1].
pub fn iid_first_order_failure(n: usize, f: usize, p_jfr: f64) -> f64 {
    clamp_unit(binomial(n, f + 1) * p_jfr.powi(f as i32 + 1)).0
}

/// Relation of `n` to `f` in the tolerance-gain cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NForm {
    #[serde(rename = "2f")]
    TwoF,
    #[serde(rename = "2f+1")]
    TwoFPlusOne,
    #[serde(rename = "3f")]
    ThreeF,
    #[serde(rename = "3f+1")]
    ThreeFPlusOne,
    #[serde(rename = "3f+2")]
    ThreeFPlusTwo,
}

impl NForm {
    pub fn family(self) -> Family {
        match self {
            NForm::TwoF | NForm::TwoFPlusOne => Family::Cft,
            _ => Family::Bft,
        }
    }

    pub fn n(self, f: usize) -> usize {
        match self {
            NForm::TwoF => 2 * f,
            NForm::TwoFPlusOne => 2 * f + 1,
            NForm::ThreeF => 3 * f,
            NForm::ThreeFPlusOne => 3 * f + 1,
            NForm::ThreeFPlusTwo => 3 * f + 2,
        }
    }

    /// The form matching `n` within `family`, if any.
    pub fn classify(family: Family, n: usize, f: usize) -> Option<NForm> {
        [
            NForm::TwoF,
            NForm::TwoFPlusOne,
            NForm::ThreeF,
            NForm::ThreeFPlusOne,
            NForm::ThreeFPlusTwo,
        ]
        .into_iter()
        .find(|form| form.family() == family && form.n(f) == n)
    }
}

impl std::str::FromStr for NForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "2f" => Ok(NForm::TwoF),
            "2f+1" => Ok(NForm::TwoFPlusOne),
            "3f" => Ok(NForm::ThreeF),
            "3f+1" => Ok(NForm::ThreeFPlusOne),
            "3f+2" => Ok(NForm::ThreeFPlusTwo),
            other => Err(Error::InvalidCase(other.to_string())),
        }
    }
}

/// Linear law for `log10 P_F`, either against `log10 p_JF,R` or against `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainReport {
    pub family: Option<Family>,
    pub slope: f64,
    pub intercept: f64,
    /// `-½ log10 f`; zero for the reliability gain.
    pub delta_f: f64,
    /// Case-dependent shift added for `n = 2f+1`, `3f+1`, `3f+2`.
    pub offset: f64,
    pub predicted_log_pf: Option<f64>,
    pub predicted_log_pf_without_delta: Option<f64>,
}

impl GainReport {
    /// `slope * x + intercept`, for the reliability gain with `x = log10 p_JF,R`.
    pub fn predict(&self, x: f64) -> f64 {
        self.slope * x + self.intercept + self.offset
    }
}

pub fn reliability_gain(n: usize, f: usize) -> Result<GainReport> {
    if f >= n {
        return Err(Error::InvalidParams(format!("f = {f} must be below n = {n}")));
    }
    Ok(GainReport {
        family: None,
        slope: (f + 1) as f64,
        intercept: binomial(n, f + 1).log10(),
        delta_f: 0.0,
        offset: 0.0,
        predicted_log_pf: None,
        predicted_log_pf_without_delta: None,
    })
}

pub fn tolerance_gain(family: Family, n_form: NForm, f: usize, p_jfr: f64) -> Result<GainReport> {
    if n_form.family() != family {
        return Err(Error::InvalidCase(format!(
            "{n_form:?} does not belong to {family:?}"
        )));
    }
    if f < 1 {
        return Err(Error::InvalidCase("f must be at least 1".to_string()));
    }
    if !(p_jfr > 0.0 && p_jfr < 1.0) {
        return Err(Error::InvalidParams(format!("p_jfr = {p_jfr} outside (0, 1)")));
    }
    let lg = f64::log10;
    let p_j = 1.0 - p_jfr;
    let delta_f = -0.5 * lg(f as f64);
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let (slope, base) = match family {
        Family::Cft => (
            lg(p_jfr) + lg(p_j) + 2.0 * lg(2.0),
            lg(p_jfr / (p_j * sqrt_pi)),
        ),
        Family::Bft => (
            lg(p_jfr) + 2.0 * lg(p_j) + 3.0 * lg(3.0) - 2.0 * lg(2.0),
            lg(3f64.sqrt() * p_jfr / (sqrt_pi * p_j)),
        ),
    };
    let offset = match n_form {
        NForm::TwoF | NForm::ThreeF => 0.0,
        NForm::TwoFPlusOne => lg(2.0 * p_j),
        NForm::ThreeFPlusOne => lg(1.5 * p_j),
        NForm::ThreeFPlusTwo => 2.0 * lg(1.5 * p_j),
    };
    let without = slope * f as f64 + base + offset;
    Ok(GainReport {
        family: Some(family),
        slope,
        intercept: base + delta_f,
        delta_f,
        offset,
        predicted_log_pf: Some(without + delta_f),
        predicted_log_pf_without_delta: Some(without),
    })
}

/// Closed-form failure ratio of the threshold-signature hotstuff variant to
/// plain hotstuff.
pub fn hotstuff_variant_ratio(f: usize) -> f64 {
    let k = f as i32 + 1;
    (3.0 * 2f64.powi(k) + 1.0) / (2f64.powi(k) + 3f64.powi(k) + 2.0 * 4f64.powi(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::Builtin;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn joint_raft_iid_is_exact() {
        let g = Builtin::Raft.structure();
        let p = ClusterParams::iid(3, 1, 1.0, 0.9);
        let jv = joint_vector(&g, &p).unwrap();
        assert!(jv.success().iter().all(|&x| close(x, 0.81, 1e-15)));
        let r = joint_reliability(&g, &p).unwrap();
        assert!(close(r.p_c, 0.905418, 5e-7));
    }

    #[test]
    fn joint_from_heterogeneous_failures() {
        let jv = JointReliabilityVector::from_failures(&[0.1, 0.2, 0.3]);
        let series = power_series_failure(&jv, 3, 1, 3).unwrap();
        assert!(close(1.0 - series.p_f, 0.902, 1e-15));
    }

    #[test]
    fn joint_rejects_non_first_order() {
        let p = ClusterParams::iid(4, 1, 1.0, 0.9);
        assert_eq!(
            joint_reliability(&Builtin::Paxos.structure(), &p).unwrap_err(),
            Error::NotFirstOrder { phase: 3, r: 3 }
        );
        assert_eq!(
            joint_reliability(&Builtin::Pbft.structure(), &p).unwrap_err(),
            Error::MNotNf {
                phase: 3,
                m: 2,
                expected: 3
            }
        );
    }

    #[test]
    fn c_average_iid_examples() {
        assert_eq!(c_graph_avg_activation_iid(4, 1, 1.0).unwrap(), 1.0);
        let v = c_graph_avg_activation_iid(4, 1, 0.9).unwrap();
        let expect = ((0.81f64.powi(2) + 0.972f64.powi(2)) / 2.0).sqrt();
        assert!(close(v, expect, 1e-15));
        assert!(close(v, 0.894674, 5e-7));
    }

    #[test]
    fn c_average_heterogeneous_degenerates() {
        let g = Builtin::Pbft.structure();
        for (n, f) in [(4, 1), (6, 2), (7, 2)] {
            let p = ClusterParams::iid(n, f, 1.0, 0.93);
            let iid = c_graph_avg_activation_iid(n, f, 0.93).unwrap();
            for i in 0..n {
                let het = c_graph_avg_activation(&g, 2, &p, i).unwrap();
                assert!(close(het, iid, 1e-12));
            }
        }
        let p = ClusterParams::iid(4, 1, 1.0, 0.93);
        assert_eq!(
            c_graph_avg_activation(&g, 1, &p, 0).unwrap_err(),
            Error::NotCGraph { phase: 1 }
        );
    }

    #[test]
    fn power_series_examples() {
        let jv = JointReliabilityVector::from_failures(&[0.19; 3]);
        let full = power_series_failure(&jv, 3, 1, 3).unwrap();
        assert_eq!(full.coefficients, vec![1.0, -2.0]);
        assert!(close(full.terms[0], 0.1083, 1e-15));
        assert!(close(full.terms[1], 0.006859, 1e-15));
        assert!(close(full.p_f, 0.094582, 1e-15));
        let first = power_series_failure(&jv, 3, 1, 2).unwrap();
        assert!(close(first.p_f, 0.1083, 1e-15));
        let zero = JointReliabilityVector::from_failures(&[0.0; 3]);
        assert_eq!(power_series_failure(&zero, 3, 1, 3).unwrap().p_f, 0.0);
        assert_eq!(
            power_series_failure(&jv, 3, 1, 1).unwrap_err(),
            Error::TruncationOutOfRange { t_max: 1, lo: 2, hi: 3 }
        );
    }

    #[test]
    fn tree_decomposition_examples() {
        let raft = Builtin::Raft.structure();
        let p = ClusterParams::iid(5, 2, 0.99, 0.97);
        let r = tree_decomposed_failure(&raft, &p).unwrap();
        let jf: f64 = 1.0 - 0.99 * 0.97 * 0.97;
        assert!(close(r.p_f, 10.0 * jf.powi(3), 1e-15));

        let hs = Builtin::Hotstuff.structure();
        let r = tree_decomposed_failure(&hs, &ClusterParams::iid(3, 1, 1.0, 0.9)).unwrap();
        let raw: f64 = [0.19f64, 0.271, 0.3439, 0.3439]
            .iter()
            .map(|q| 3.0 * q * q)
            .sum();
        assert!(raw > 1.0);
        assert!(r.clamped);
        assert_eq!(r.p_f, 1.0);
        assert_eq!(r.detail.len(), 4);

        for b in Builtin::ALL {
            let r = tree_decomposed_failure(&b.structure(), &ClusterParams::iid(6, 2, 1.0, 1.0))
                .unwrap();
            assert_eq!(r.p_f, 0.0);
        }
    }

    #[test]
    fn overall_joint_failure_examples() {
        let (n, f, p_n, p_l) = (7, 3, 0.995, 0.98);
        let raft = overall_joint_failure_rate_iid(&Builtin::Raft.structure(), n, f, p_n, p_l).unwrap();
        assert!(close(raft.value, 1.0 - p_n * p_l * p_l, 1e-15));
        let paxos =
            overall_joint_failure_rate_iid(&Builtin::Paxos.structure(), n, f, p_n, p_l).unwrap();
        assert!(close(
            paxos.value,
            2f64.powf(1.0 / 4.0) * (1.0 - p_n * p_l * p_l),
            1e-15
        ));
        let hs = overall_joint_failure_rate_iid(&Builtin::Hotstuff.structure(), 3, 1, 1.0, 0.9)
            .unwrap();
        let expect = (0.19f64.powi(2) + 0.271f64.powi(2) + 2.0 * 0.3439f64.powi(2)).sqrt();
        assert!(close(hs.value, expect, 1e-15));
        assert!(close(hs.value, 0.588282, 5e-7));
    }

    #[test]
    fn first_order_examples() {
        assert!(close(iid_first_order_failure(4, 2, 0.1), 0.004, 1e-17));
        assert_eq!(iid_first_order_failure(4, 2, 0.0), 0.0);
        assert!(close(iid_first_order_failure(12, 6, 0.01), 7.92e-12, 1e-25));
    }

    #[test]
    fn reliability_gain_examples() {
        let g = reliability_gain(12, 6).unwrap();
        assert_eq!(g.slope, 7.0);
        assert!(close(g.intercept, 792f64.log10(), 1e-15));
        assert!(close(g.intercept, 2.89873, 5e-6));
        let g = reliability_gain(9, 0).unwrap();
        assert_eq!(g.slope, 1.0);
        assert!(close(g.intercept, 9f64.log10(), 1e-15));
        assert_eq!(reliability_gain(12, 4).unwrap().slope, 5.0);
    }

    #[test]
    fn tolerance_gain_examples() {
        let cf = tolerance_gain(Family::Cft, NForm::TwoF, 3, 0.01).unwrap();
        assert!(close(cf.slope, -1.40230, 5e-6));
        let bf = tolerance_gain(Family::Bft, NForm::ThreeF, 3, 0.01).unwrap();
        let expect = 0.01f64.log10() + 2.0 * 0.99f64.log10() + 3.0 * 3f64.log10()
            - 2.0 * 2f64.log10();
        assert!(close(bf.slope, expect, 1e-15));
        assert!(close(bf.slope, -1.179426, 5e-7));
        let odd = tolerance_gain(Family::Cft, NForm::TwoFPlusOne, 3, 0.01).unwrap();
        let diff = odd.predicted_log_pf.unwrap() - cf.predicted_log_pf.unwrap();
        assert!(close(diff, (2.0 * 0.99f64).log10(), 1e-14));
        assert!(cf.delta_f < 0.0);
        assert!(close(
            cf.predicted_log_pf.unwrap() - cf.predicted_log_pf_without_delta.unwrap(),
            cf.delta_f,
            1e-15
        ));
        assert!(matches!(
            tolerance_gain(Family::Cft, NForm::ThreeF, 3, 0.01),
            Err(Error::InvalidCase(_))
        ));
    }

    #[test]
    fn variant_ratio_examples() {
        assert!(close(hotstuff_variant_ratio(1), 13.0 / 45.0, 1e-15));
        assert!(close(hotstuff_variant_ratio(2), 25.0 / 163.0, 1e-15));
        assert!(hotstuff_variant_ratio(10) <= 2f64.powi(-10));
    }
}
