//! Discrete-event RAFT log replication: Poisson arrivals, independent
//! attempts with timeout-driven reattempts, commits in index order.

use rand::{Rng, RngCore};
use rand_distr::Exp;
use rayon::prelude::*;

use super::rng::{substream, Threshold, DOMAIN_ARRIVALS, DOMAIN_ATTEMPTS};
use super::trace::{SimTrace, TraceRecord};
use super::trials::{run_trial, Sampler};
use crate::error::{Error, Result};
use crate::params::ClusterParams;
use crate::protocol::{validate_structure, ProtocolStructure};

/// Attempt cap for a single instance; reached only when `p_f` is
/// indistinguishable from 1.
const MAX_ATTEMPTS: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq)]
pub enum FailureSource {
    /// Each attempt fails independently with this probability.
    Fixed(f64),
    /// Each attempt is a fresh consensus trial on the given cluster.
    Consensus {
        structure: ProtocolStructure,
        params: ClusterParams,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Instances(usize),
    /// Simulate every arrival before this time, seconds.
    Duration(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub arrival_rate: f64,
    pub horizon: Horizon,
    pub l_c: f64,
    pub l_timeout: f64,
    pub source: FailureSource,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.arrival_rate > 0.0) || !self.arrival_rate.is_finite() {
            return Err(Error::InvalidParams("arrival rate must be positive".to_string()));
        }
        if !(self.l_c > 0.0) {
            return Err(Error::InvalidParams("l_c must be positive".to_string()));
        }
        if !(self.l_timeout >= self.l_c) {
            return Err(Error::InvalidParams(format!(
                "timeout {} is shorter than l_c = {}",
                self.l_timeout, self.l_c
            )));
        }
        match self.horizon {
            Horizon::Duration(d) if !(d > 0.0) => {
                return Err(Error::InvalidParams("duration must be positive".to_string()))
            }
            _ => {}
        }
        match &self.source {
            FailureSource::Fixed(p) => {
                if !(0.0..1.0).contains(p) {
                    return Err(Error::InvalidParams(format!("p_f = {p} outside [0, 1)")));
                }
            }
            FailureSource::Consensus { structure, params } => {
                params.validate()?;
                validate_structure(structure, params.n, params.f)?;
            }
        }
        Ok(())
    }
}

fn arrivals(cfg: &SimConfig) -> Vec<f64> {
    let mut rng = substream(cfg.seed, DOMAIN_ARRIVALS, 0, 0);
    let gap = Exp::new(cfg.arrival_rate).expect("rate checked positive");
    let mut t = 0.0;
    let mut out = Vec::new();
    loop {
        t += rng.sample(gap);
        match cfg.horizon {
            Horizon::Instances(count) if out.len() >= count => break,
            Horizon::Duration(d) if t >= d => break,
            _ => out.push(t),
        }
    }
    out
}

fn count_attempts(mut succeed: impl FnMut(u64) -> bool) -> u64 {
    let mut k = 1;
    while k < MAX_ATTEMPTS && !succeed(k) {
        k += 1;
    }
    k
}

pub fn simulate_raft_latency(cfg: &SimConfig) -> Result<SimTrace> {
    cfg.validate()?;
    let arrivals = arrivals(cfg);
    let attempts: Vec<u64> = match &cfg.source {
        FailureSource::Fixed(p_f) => {
            let fail = Threshold::new(*p_f);
            (0..arrivals.len() as u64)
                .into_par_iter()
                .map(|i| {
                    let mut rng = substream(cfg.seed, DOMAIN_ATTEMPTS, i, 0);
                    count_attempts(|_| !fail.hit(rng.next_u64()))
                })
                .collect()
        }
        FailureSource::Consensus { structure, params } => {
            let rs = validate_structure(structure, params.n, params.f)?;
            let sampler = Sampler::new(params)?;
            (0..arrivals.len() as u64)
                .into_par_iter()
                .map(|i| {
                    count_attempts(|k| {
                        let mut rng = substream(cfg.seed, DOMAIN_ATTEMPTS, i, k);
                        run_trial(&rs, &sampler, &mut rng).success
                    })
                })
                .collect()
        }
    };
    let mut records = Vec::with_capacity(arrivals.len());
    let mut last_commit = f64::NEG_INFINITY;
    for (index, (&arrival, &k)) in arrivals.iter().zip(&attempts).enumerate() {
        let finish = arrival + (k - 1) as f64 * cfg.l_timeout + cfg.l_c;
        let commit = finish.max(last_commit);
        last_commit = commit;
        records.push(TraceRecord {
            index,
            arrival,
            attempts: k,
            finish,
            commit,
            latency: commit - arrival,
        });
    }
    Ok(SimTrace { records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::trace::summarize_trace;

    fn fixed(p_f: f64, rate: f64, count: usize) -> SimConfig {
        SimConfig {
            arrival_rate: rate,
            horizon: Horizon::Instances(count),
            l_c: 0.2,
            l_timeout: 0.3,
            source: FailureSource::Fixed(p_f),
            seed: 7,
        }
    }

    #[test]
    fn no_failures_means_constant_latency() {
        let t = simulate_raft_latency(&fixed(0.0, 60.0, 2000)).unwrap();
        assert_eq!(t.records.len(), 2000);
        for r in &t.records {
            assert_eq!(r.attempts, 1);
            assert!((r.latency - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn commits_are_monotone_and_reproducible() {
        let cfg = fixed(0.05, 60.0, 10_000);
        let t = simulate_raft_latency(&cfg).unwrap();
        assert!(t.records.windows(2).all(|w| w[1].commit >= w[0].commit));
        assert!(t.records.iter().all(|r| r.latency >= cfg.l_c - 1e-12));
        assert_eq!(t.to_csv(), simulate_raft_latency(&cfg).unwrap().to_csv());
        let s = summarize_trace(&t).unwrap();
        assert!(s.mean_latency > 0.2);
    }

    #[test]
    fn duration_horizon() {
        let mut cfg = fixed(0.0, 50.0, 0);
        cfg.horizon = Horizon::Duration(10.0);
        let t = simulate_raft_latency(&cfg).unwrap();
        assert!(t.records.iter().all(|r| r.arrival < 10.0));
        assert!((300..700).contains(&t.records.len()));
    }

    #[test]
    fn consensus_source_runs() {
        let cfg = SimConfig {
            source: FailureSource::Consensus {
                structure: crate::protocol::Builtin::Raft.structure(),
                params: ClusterParams::iid(3, 1, 1.0, 0.95),
            },
            ..fixed(0.0, 5.0, 3000)
        };
        let t = simulate_raft_latency(&cfg).unwrap();
        let s = summarize_trace(&t).unwrap();
        assert!(s.empirical_pf > 0.0 && s.empirical_pf < 0.1);
    }
}
