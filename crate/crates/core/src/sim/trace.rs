use std::fmt::Write as _;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "index,arrival,attempts,finish,commit,latency";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub index: usize,
    pub arrival: f64,
    pub attempts: u64,
    pub finish: f64,
    pub commit: f64,
    pub latency: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SimTrace {
    pub records: Vec<TraceRecord>,
}

impl SimTrace {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        out.write_all(self.to_csv().as_bytes())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(64 * (self.records.len() + 1));
        s.push_str(CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{:.6},{},{:.6},{:.6},{:.6}",
                r.index, r.arrival, r.attempts, r.finish, r.commit, r.latency
            );
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub instances: usize,
    pub total_attempts: u64,
    pub mean_latency: f64,
    pub p50_latency: f64,
    pub p90_latency: f64,
    pub p99_latency: f64,
    pub max_latency: f64,
    pub mean_attempts: f64,
    pub empirical_pf: f64,
}

/// Nearest-rank percentile of ascending `sorted`.
pub fn nearest_rank(sorted: &[f64], pct: f64) -> f64 {
    let rank = ((pct / 100.0) * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

pub fn summarize_trace(t: &SimTrace) -> Result<TraceSummary> {
    if t.records.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let count = t.records.len();
    let total_attempts: u64 = t.records.iter().map(|r| r.attempts).sum();
    let mut lat: Vec<f64> = t.records.iter().map(|r| r.latency).collect();
    let mean_latency = lat.iter().sum::<f64>() / count as f64;
    lat.sort_by(f64::total_cmp);
    Ok(TraceSummary {
        instances: count,
        total_attempts,
        mean_latency,
        p50_latency: nearest_rank(&lat, 50.0),
        p90_latency: nearest_rank(&lat, 90.0),
        p99_latency: nearest_rank(&lat, 99.0),
        max_latency: lat[count - 1],
        mean_attempts: total_attempts as f64 / count as f64,
        empirical_pf: 1.0 - count as f64 / total_attempts as f64,
    })
}
