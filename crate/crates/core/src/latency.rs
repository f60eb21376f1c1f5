//! Transmission latency under geometric reattempts and queuing latency from
//! the Pollaczek-Khinchine mean-wait formula.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyParams {
    /// Latency of one consensus attempt, seconds.
    pub l_c: f64,
    /// Per-attempt consensus failure rate.
    pub p_f: f64,
    /// Instance arrivals per second.
    pub arrival_rate: f64,
    /// Reattempt timeout, seconds. Only the simulator uses it.
    pub l_timeout: f64,
}

impl LatencyParams {
    pub fn new(l_c: f64, p_f: f64, arrival_rate: f64) -> Self {
        LatencyParams {
            l_c,
            p_f,
            arrival_rate,
            l_timeout: l_c,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l_c > 0.0) {
            return Err(Error::InvalidParams(format!("l_c = {} must be positive", self.l_c)));
        }
        if !(0.0..=1.0).contains(&self.p_f) {
            return Err(Error::InvalidParams(format!("p_f = {} outside [0, 1]", self.p_f)));
        }
        if self.p_f == 1.0 {
            return Err(Error::PfIsOne);
        }
        if !(self.arrival_rate > 0.0) {
            return Err(Error::InvalidParams(format!(
                "arrival rate {} must be positive",
                self.arrival_rate
            )));
        }
        if !(self.l_timeout >= self.l_c) {
            return Err(Error::InvalidParams(format!(
                "timeout {} is shorter than l_c = {}",
                self.l_timeout, self.l_c
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub e_transmission: f64,
    pub e_queuing: f64,
    pub e_serve: f64,
    pub var_serve: f64,
    pub utilization: f64,
}

impl LatencyReport {
    pub fn total(&self) -> f64 {
        self.e_transmission + self.e_queuing
    }
}

/// `Pr(L_tr = k·L_C) = p_f^(k-1) (1 - p_f)`.
pub fn transmission_latency_pmf(p: &LatencyParams, k: u64) -> Result<f64> {
    if k == 0 {
        return Err(Error::KNonPositive);
    }
    if k == 1 {
        return Ok(1.0 - p.p_f);
    }
    Ok(p.p_f.powf((k - 1) as f64) * (1.0 - p.p_f))
}

pub fn expected_transmission_latency(p: &LatencyParams) -> Result<f64> {
    if p.p_f >= 1.0 {
        return Err(Error::PfIsOne);
    }
    Ok(p.l_c / (1.0 - p.p_f))
}

pub fn queuing_latency(p: &LatencyParams) -> Result<LatencyReport> {
    p.validate()?;
    let e_transmission = expected_transmission_latency(p)?;
    let keep = 1.0 - p.p_f;
    let e_serve = p.p_f * p.l_c / keep;
    let var_serve = p.p_f * p.l_c * p.l_c / (keep * keep);
    let utilization = e_serve * p.arrival_rate;
    if utilization >= 1.0 {
        return Err(Error::UnstableQueue { utilization });
    }
    let e_queuing = (var_serve + e_serve * e_serve) / (2.0 * (1.0 / p.arrival_rate - e_serve));
    Ok(LatencyReport {
        e_transmission,
        e_queuing,
        e_serve,
        var_serve,
        utilization,
    })
}
