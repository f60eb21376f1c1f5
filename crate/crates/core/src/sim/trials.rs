//! Monte Carlo consensus trials under the activated-node rules.

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::{substream, Threshold, DOMAIN_TRIALS};
use crate::error::{Error, Result};
use crate::exact::{members, NodeSet};
use crate::params::ClusterParams;
use crate::protocol::{validate_structure, GraphKind, ProtocolStructure, ResolvedStructure};

const BLOCK: u64 = 1 << 14;

/// Success probabilities pre-converted to integer thresholds.
#[derive(Debug, Clone)]
pub struct Sampler {
    n: usize,
    need_c: usize,
    node: Vec<Threshold>,
    down: Vec<Threshold>,
    up: Vec<Threshold>,
    mesh: Vec<Vec<Threshold>>,
}

impl Sampler {
    pub fn new(params: &ClusterParams) -> Result<Self> {
        params.validate()?;
        if params.n > NodeSet::BITS as usize {
            return Err(Error::NTooLarge {
                n: params.n,
                cap: NodeSet::BITS as usize,
            });
        }
        let conv = |v: &[f64]| v.iter().map(|&p| Threshold::new(p)).collect::<Vec<_>>();
        Ok(Sampler {
            n: params.n,
            need_c: params.n - params.f - 1,
            node: conv(&params.node),
            down: conv(&params.link_down),
            up: conv(&params.link_up),
            mesh: params.link_mesh.iter().map(|row| conv(row)).collect(),
        })
    }

    pub fn sample_nodes<R: RngCore>(&self, rng: &mut R) -> NodeSet {
        let mut set = 0;
        for i in 0..self.n {
            if self.node[i].hit(rng.next_u64()) {
                set |= 1 << i;
            }
        }
        set
    }

    /// Draw the activated set of one phase given the prior activated set.
    pub fn sample_phase<R: RngCore>(&self, kind: GraphKind, prior: NodeSet, rng: &mut R) -> NodeSet {
        let mut set = 0;
        for i in members(prior) {
            let active = match kind {
                GraphKind::A => self.down[i].hit(rng.next_u64()),
                GraphKind::B => self.up[i].hit(rng.next_u64()),
                GraphKind::C => {
                    let mut received = 0;
                    for u in members(prior) {
                        if u != i && self.mesh[u][i].hit(rng.next_u64()) {
                            received += 1;
                        }
                    }
                    received >= self.need_c
                }
            };
            if active {
                set |= 1 << i;
            }
        }
        set
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialOutcome {
    pub success: bool,
    /// `AN_j` for every phase, phase 0 first.
    pub sets: Vec<NodeSet>,
}

/// One consensus instance: node faults, then every phase in order.
pub fn run_trial<R: RngCore>(rs: &ResolvedStructure, sampler: &Sampler, rng: &mut R) -> TrialOutcome {
    let mut sets = Vec::with_capacity(rs.phases() + 1);
    sets.push(sampler.sample_nodes(rng));
    let mut success = sets[0].count_ones() as usize >= rs.m[0];
    for j in 1..=rs.phases() {
        let prior = sets[rs.parent_of(j)];
        let set = sampler.sample_phase(rs.kind(j), prior, rng);
        debug_assert_eq!(set & !prior, 0);
        success &= set.count_ones() as usize >= rs.m[j];
        sets.push(set);
    }
    TrialOutcome { success, sets }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub p_c: f64,
    pub std_err: f64,
    pub successes: u64,
    pub trials: u64,
}

impl McEstimate {
    pub fn p_f(&self) -> f64 {
        1.0 - self.p_c
    }
}

pub fn simulate_consensus_trials(
    g: &ProtocolStructure,
    params: &ClusterParams,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    if trials == 0 {
        return Err(Error::InvalidParams("trials must be at least 1".to_string()));
    }
    let rs = validate_structure(g, params.n, params.f)?;
    let sampler = Sampler::new(params)?;
    let blocks = trials.div_ceil(BLOCK);
    let successes: u64 = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, DOMAIN_TRIALS, b, 0);
            let count = BLOCK.min(trials - b * BLOCK);
            (0..count)
                .filter(|_| run_trial(&rs, &sampler, &mut rng).success)
                .count() as u64
        })
        .sum();
    let p_c = successes as f64 / trials as f64;
    Ok(McEstimate {
        p_c,
        std_err: (p_c * (1.0 - p_c) / trials as f64).sqrt(),
        successes,
        trials,
    })
}
