//! Rayleigh-outage link losses, RAFT failure from per-node losses, and
//! transmit-power allocation under a total budget.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::exact_reliability_iid;
use crate::math::{PoissonBinomial, Prob};
use crate::protocol::Builtin;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WirelessScenario {
    pub n: usize,
    pub f: usize,
    /// Target SNR, linear.
    pub gamma_th: f64,
    /// Noise power per node, watts.
    pub p_noise: Vec<f64>,
    /// Channel gain per node, linear.
    pub gain: Vec<f64>,
    /// Total transmit power over both directions of every link, watts.
    pub p_total: f64,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl WirelessScenario {
    pub fn validate(&self) -> Result<()> {
        if self.p_total <= 0.0 || self.p_total.is_nan() {
            return Err(Error::Infeasible);
        }
        if self.n == 0 || self.f >= self.n {
            return Err(Error::InvalidParams(format!(
                "need 0 <= f < n, got n = {}, f = {}",
                self.n, self.f
            )));
        }
        if self.p_noise.len() != self.n || self.gain.len() != self.n {
            return Err(Error::InvalidParams(format!(
                "noise and gain lists must have {} entries",
                self.n
            )));
        }
        if !(self.gamma_th > 0.0) {
            return Err(Error::InvalidParams("gamma_th must be positive".to_string()));
        }
        if self.gain.iter().chain(&self.p_noise).any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParams(
                "gains and noise powers must be positive".to_string(),
            ));
        }
        Ok(())
    }

    /// `gamma_th * noise / gain` per node: the loss exponent numerator.
    fn outage_scale(&self) -> Vec<f64> {
        self.gain
            .iter()
            .zip(&self.p_noise)
            .map(|(g, noise)| self.gamma_th * noise / g)
            .collect()
    }
}

/// Outage probability `1 - exp(-gamma_th / (gain * p_tr / p_noise))`.
pub fn rayleigh_link_loss(gamma_th: f64, gain: f64, p_tr: f64, p_noise: f64) -> f64 {
    if p_tr <= 0.0 {
        return 1.0;
    }
    -(-gamma_th * p_noise / (gain * p_tr)).exp_m1()
}

/// Failure of `n`-node RAFT when node `i` loses each direction independently
/// with probability `losses[i]` and nodes never fail.
///
/// Evaluated as the tail `Pr(at least f+1 joint failures)`, which equals the
/// full power series in the joint failures.
pub fn raft_failure_from_losses(losses: &[f64], n: usize, f: usize) -> Result<f64> {
    if losses.len() != n {
        return Err(Error::InvalidParams(format!(
            "{} losses given for n = {n}",
            losses.len()
        )));
    }
    if f >= n {
        return Err(Error::InvalidParams(format!("f = {f} must be below n = {n}")));
    }
    if losses.iter().any(|l| !(0.0..=1.0).contains(l)) {
        return Err(Error::InvalidParams("losses must lie in [0, 1]".to_string()));
    }
    let joint = losses.iter().map(|&l| {
        let keep = 1.0 - l;
        Prob::failure(l * (1.0 + keep)).complement()
    });
    Ok(PoissonBinomial::new(joint).at_least(f + 1).p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    /// Per-node transmit power of each directional link, watts.
    pub p_tr: Vec<f64>,
    pub loss: Vec<f64>,
    pub joint_failure: Vec<f64>,
    pub p_f: f64,
    /// Index of the winning start; 0 is equal split.
    pub start: usize,
}

/// Evaluate a given allocation of per-link powers.
pub fn evaluate_allocation(s: &WirelessScenario, p_tr: &[f64]) -> Result<PowerAllocation> {
    s.validate()?;
    if p_tr.len() != s.n {
        return Err(Error::InvalidParams(format!(
            "{} powers given for n = {}",
            p_tr.len(),
            s.n
        )));
    }
    let scale = s.outage_scale();
    let joint: Vec<Prob> = p_tr.iter().zip(&scale).map(|(&x, &c)| joint_failure(c, x)).collect();
    let loss = p_tr
        .iter()
        .zip(&scale)
        .map(|(&x, &c)| if x <= 0.0 { 1.0 } else { -(-c / x).exp_m1() })
        .collect();
    Ok(PowerAllocation {
        p_tr: p_tr.to_vec(),
        loss,
        joint_failure: joint.iter().map(|j| j.q).collect(),
        p_f: tail_failure(&joint, s.f),
        start: 0,
    })
}

/// The uninformed baseline: `p_total / (2n)` on every link.
pub fn equal_split_allocation(s: &WirelessScenario) -> Result<PowerAllocation> {
    s.validate()?;
    evaluate_allocation(s, &vec![s.p_total / (2.0 * s.n as f64); s.n])
}

/// Joint (down and up) failure of a node given its loss scale and power.
fn joint_failure(scale: f64, x: f64) -> Prob {
    if x <= 0.0 {
        return Prob::ZERO;
    }
    let e = -2.0 * scale / x;
    Prob {
        p: e.exp(),
        q: -e.exp_m1(),
    }
}

fn tail_failure(joint: &[Prob], f: usize) -> f64 {
    PoissonBinomial::new(joint.iter().map(|j| j.complement())).at_least(f + 1).p
}

const STARTS: usize = 16;
const MAX_ITER: usize = 200;
const STATIONARITY: f64 = 1e-8;

/// Euclidean projection onto `{y >= 0, sum y = 1}`.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cum += uk;
        let t = (cum - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// `ln P_F` and its gradient in budget-normalised coordinates.
struct Objective {
    scale: Vec<f64>,
    budget: f64,
    f: usize,
}

impl Objective {
    fn joint(&self, y: &[f64]) -> Vec<Prob> {
        y.iter()
            .zip(&self.scale)
            .map(|(&yi, &c)| joint_failure(c, yi * self.budget))
            .collect()
    }

    fn value(&self, y: &[f64]) -> f64 {
        tail_failure(&self.joint(y), self.f).ln()
    }

    fn gradient(&self, y: &[f64]) -> (f64, Vec<f64>) {
        let joint = self.joint(y);
        let p_f = tail_failure(&joint, self.f);
        let grad = (0..y.len())
            .map(|i| {
                let x = y[i] * self.budget;
                if x <= 0.0 {
                    return 0.0;
                }
                let others = joint
                    .iter()
                    .enumerate()
                    .filter(|&(u, _)| u != i)
                    .map(|(_, j)| j.complement());
                let pivotal = PoissonBinomial::new(others).pmf(self.f);
                let c = self.scale[i];
                let dq_dx = -joint[i].p * 2.0 * c / (x * x);
                pivotal * dq_dx * self.budget / p_f
            })
            .collect();
        (p_f.ln(), grad)
    }

    /// Projected gradient with Barzilai-Borwein steps and Armijo backtracking.
    fn descend(&self, start: Vec<f64>) -> (Vec<f64>, f64) {
        let mut y = project_simplex(&start);
        let (mut value, mut grad) = self.gradient(&y);
        if !value.is_finite() {
            return (y, value);
        }
        let mut step = 1e-2;
        for _ in 0..MAX_ITER {
            let probe: Vec<f64> = y.iter().zip(&grad).map(|(a, g)| a - g).collect();
            let probe = project_simplex(&probe);
            let gap = y
                .iter()
                .zip(&probe)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if gap < STATIONARITY {
                break;
            }
            let mut t = step;
            let mut accepted = None;
            for _ in 0..60 {
                let trial: Vec<f64> = y.iter().zip(&grad).map(|(a, g)| a - t * g).collect();
                let trial = project_simplex(&trial);
                let decrease: f64 = grad
                    .iter()
                    .zip(trial.iter().zip(&y))
                    .map(|(g, (a, b))| g * (a - b))
                    .sum();
                let v = self.value(&trial);
                if v.is_finite() && v <= value + 1e-4 * decrease {
                    accepted = Some(trial);
                    break;
                }
                t *= 0.5;
            }
            let Some(next) = accepted else { break };
            let (next_value, next_grad) = self.gradient(&next);
            let s: Vec<f64> = next.iter().zip(&y).map(|(a, b)| a - b).collect();
            let d: Vec<f64> = next_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
            let ss: f64 = s.iter().map(|v| v * v).sum();
            let sd: f64 = s.iter().zip(&d).map(|(a, b)| a * b).sum();
            step = if sd > 0.0 { (ss / sd).clamp(1e-12, 1e6) } else { t * 2.0 };
            let improved = next_value < value;
            y = next;
            value = next_value;
            grad = next_grad;
            if !improved && ss == 0.0 {
                break;
            }
        }
        (y, value)
    }
}

/// Random feasible allocation drawn uniformly from the budget simplex.
pub fn random_allocation<R: Rng>(s: &WirelessScenario, rng: &mut R) -> Vec<f64> {
    let draws: Vec<f64> = (0..s.n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = draws.iter().sum();
    let budget = s.p_total / 2.0;
    draws.iter().map(|d| d / total * budget).collect()
}

/// Minimise RAFT failure over per-node powers with `2 Σ p_tr = p_total`.
pub fn optimize_power(s: &WirelessScenario) -> Result<PowerAllocation> {
    optimize_power_seeded(s, 0)
}

pub fn optimize_power_seeded(s: &WirelessScenario, seed: u64) -> Result<PowerAllocation> {
    s.validate()?;
    let budget = s.p_total / 2.0;
    let objective = Objective {
        scale: s.outage_scale(),
        budget,
        f: s.f,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = vec![vec![1.0 / s.n as f64; s.n]];
    for _ in 1..STARTS {
        starts.push(random_allocation(s, &mut rng).iter().map(|x| x / budget).collect());
    }
    let runs: Vec<(Vec<f64>, f64)> = starts
        .into_par_iter()
        .map(|y| objective.descend(y))
        .collect();
    let mut best = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.1 < runs[best].1 {
            best = i;
        }
    }
    let y = &runs[best].0;
    let total: f64 = y.iter().sum();
    let p_tr: Vec<f64> = y.iter().map(|v| v / total * budget).collect();
    let mut alloc = evaluate_allocation(s, &p_tr)?;
    alloc.start = best;
    let baseline = equal_split_allocation(s)?;
    if baseline.p_f < alloc.p_f {
        return Ok(baseline);
    }
    Ok(alloc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub f: usize,
    pub p_f: f64,
}

/// Exact iid failure of `protocol` across cluster sizes, `f` set by its family.
pub fn node_count_sweep(protocol: Builtin, p_n: f64, p_l: f64, n_values: &[usize]) -> Result<Vec<SweepRow>> {
    if n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParams("n values must be ascending".to_string()));
    }
    let g = protocol.structure();
    n_values
        .iter()
        .map(|&n| {
            let f = protocol.family().default_f(n);
            let r = exact_reliability_iid(&g, n, f, p_n, p_l)?;
            Ok(SweepRow { n, f, p_f: r.p_f })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::exact_reliability;
    use crate::params::ClusterParams;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn reference_scenario() -> WirelessScenario {
        let gain_db = [-68.0, -70.0, -44.0, -69.0, -65.0, -41.0, -54.0, -63.0];
        WirelessScenario {
            n: 8,
            f: 4,
            gamma_th: db_to_linear(10.0),
            p_noise: vec![1e-9; 8],
            gain: gain_db.iter().map(|&d| db_to_linear(d)).collect(),
            p_total: 1.6,
        }
    }

    #[test]
    fn loss_examples() {
        let l = rayleigh_link_loss(10.0, 3.981e-5, 0.1, 1e-9);
        assert!(close(l, 0.0025088, 5e-8));
        assert_eq!(rayleigh_link_loss(10.0, 1e-5, 0.0, 1e-9), 1.0);
        assert!(rayleigh_link_loss(10.0, 1e-5, 1e12, 1e-9) < 1e-9);
    }

    #[test]
    fn raft_losses_examples() {
        assert_eq!(raft_failure_from_losses(&[0.0; 3], 3, 1).unwrap(), 0.0);
        let l = 1.0 - 0.9f64.sqrt();
        assert!(close(raft_failure_from_losses(&[l; 3], 3, 1).unwrap(), 0.028, 1e-15));
        let losses = [0.01, 0.03, 0.002, 0.05, 0.2];
        let mut p = ClusterParams::iid(5, 2, 1.0, 1.0);
        for (i, &l) in losses.iter().enumerate() {
            p.link_down[i] = 1.0 - l;
            p.link_up[i] = 1.0 - l;
        }
        let exact = exact_reliability(&Builtin::Raft.structure(), &p).unwrap().p_f;
        assert!(close(raft_failure_from_losses(&losses, 5, 2).unwrap(), exact, 1e-12));
    }

    #[test]
    fn projection_lands_on_simplex() {
        let y = project_simplex(&[0.5, -0.2, 2.0, 0.1]);
        assert!(close(y.iter().sum::<f64>(), 1.0, 1e-15));
        assert!(y.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn symmetric_scenario_splits_equally() {
        let s = WirelessScenario {
            n: 5,
            f: 2,
            gamma_th: 10.0,
            p_noise: vec![1e-9; 5],
            gain: vec![db_to_linear(-60.0); 5],
            p_total: 1.0,
        };
        let a = optimize_power(&s).unwrap();
        let eq = s.p_total / (2.0 * s.n as f64);
        for &x in &a.p_tr {
            assert!(((x - eq) / eq).abs() < 1e-6, "{:?}", a.p_tr);
        }
    }

    #[test]
    fn reference_scenario_improves_on_equal_split() {
        let s = reference_scenario();
        let base = equal_split_allocation(&s).unwrap();
        let opt = optimize_power(&s).unwrap();
        assert!(opt.p_f <= base.p_f);
        assert!(close(2.0 * opt.p_tr.iter().sum::<f64>(), s.p_total, 1e-9));
        assert_eq!(optimize_power(&s).unwrap(), opt);
    }

    #[test]
    fn infeasible_budget() {
        let mut s = reference_scenario();
        s.p_total = 0.0;
        assert_eq!(optimize_power(&s).unwrap_err(), Error::Infeasible);
    }

    #[test]
    fn sweep_examples() {
        let rows = node_count_sweep(Builtin::Raft, 1.0, 0.93, &[4, 6, 8, 10]).unwrap();
        assert!(rows.windows(2).all(|w| w[1].p_f < w[0].p_f));
        let rows = node_count_sweep(Builtin::Raft, 1.0, 1.0, &[4, 6, 8, 10]).unwrap();
        assert!(rows.iter().all(|r| r.p_f == 0.0));
        assert!(node_count_sweep(Builtin::Raft, 1.0, 1.0, &[6, 4]).is_err());
    }
}
