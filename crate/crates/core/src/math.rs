//! Small numeric kernels shared by the exact and approximate analyses.
//!
//! Probabilities that are routinely close to 1 are carried as a [`Prob`]
//! pair so the failure side never has to be recovered as `1 - p`.

/// A probability carried together with its complement.
///
/// `p + q == 1` mathematically; both are stored so that whichever side is
/// tiny keeps full relative precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prob {
    pub p: f64,
    pub q: f64,
}

impl Prob {
    pub const ONE: Prob = Prob { p: 1.0, q: 0.0 };
    pub const ZERO: Prob = Prob { p: 0.0, q: 1.0 };

    pub fn success(p: f64) -> Self {
        Prob { p, q: 1.0 - p }
    }

    pub fn failure(q: f64) -> Self {
        Prob { p: 1.0 - q, q }
    }

    pub fn complement(self) -> Self {
        Prob { p: self.q, q: self.p }
    }

    /// Probability that two independent events both succeed.
    pub fn and(self, other: Prob) -> Prob {
        // q = q1 + p1*q2 has no cancellation
        Prob {
            p: self.p * other.p,
            q: self.q + self.p * other.q,
        }
    }
}

/// Binomial coefficient as a float. Exact for the sizes used here (n ≤ 60).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// `C(n, k) p^k q^(n-k)`.
pub fn binomial_pmf(n: usize, k: usize, pr: Prob) -> f64 {
    if k > n {
        return 0.0;
    }
    binomial(n, k) * pow_usize(pr.p, k) * pow_usize(pr.q, n - k)
}

fn pow_usize(x: f64, e: usize) -> f64 {
    if e == 0 {
        1.0
    } else {
        x.powi(e as i32)
    }
}

/// Count distribution of independent heterogeneous Bernoulli trials.
#[derive(Debug, Clone)]
pub struct PoissonBinomial {
    pmf: Vec<f64>,
}

impl PoissonBinomial {
    pub fn new<I: IntoIterator<Item = Prob>>(trials: I) -> Self {
        let mut pmf = vec![1.0];
        for pr in trials {
            let mut next = vec![0.0; pmf.len() + 1];
            for (k, &mass) in pmf.iter().enumerate() {
                next[k] += mass * pr.q;
                next[k + 1] += mass * pr.p;
            }
            pmf = next;
        }
        PoissonBinomial { pmf }
    }

    pub fn trials(&self) -> usize {
        self.pmf.len() - 1
    }

    pub fn pmf(&self, k: usize) -> f64 {
        self.pmf.get(k).copied().unwrap_or(0.0)
    }

    /// `Pr(count >= k)` paired with `Pr(count < k)`, both summed directly.
    pub fn at_least(&self, k: usize) -> Prob {
        let k = k.min(self.pmf.len());
        Prob {
            p: self.pmf[k..].iter().sum(),
            q: self.pmf[..k].iter().sum(),
        }
    }
}

/// Elementary symmetric polynomials `e_0..=e_t_max` of `values`.
pub fn elementary_symmetric(values: &[f64], t_max: usize) -> Vec<f64> {
    let mut e = vec![0.0; t_max + 1];
    e[0] = 1.0;
    for (seen, &v) in values.iter().enumerate() {
        let top = (seen + 1).min(t_max);
        for t in (1..=top).rev() {
            e[t] += v * e[t - 1];
        }
    }
    e
}

/// Failure probability of a conjunction given each member's failure
/// probability: `1 - Π(1 - q_i)`.
pub fn any_fails(failures: impl IntoIterator<Item = f64>) -> f64 {
    let mut log_ok = 0.0f64;
    for q in failures {
        if q >= 1.0 {
            return 1.0;
        }
        log_ok += (-q).ln_1p();
    }
    -log_ok.exp_m1()
}

/// Power mean of order `order` over probabilities given as [`Prob`] pairs,
/// returned as a pair so the complement stays accurate near 1.
pub fn power_mean(values: &[Prob], order: usize) -> Prob {
    debug_assert!(!values.is_empty());
    let k = order as f64;
    // 1 - mean(p^k), accumulated from the failure side
    let shortfall: f64 = values
        .iter()
        .map(|v| {
            if v.q >= 1.0 {
                1.0
            } else {
                -(k * (-v.q).ln_1p()).exp_m1()
            }
        })
        .sum::<f64>()
        / values.len() as f64;
    if shortfall >= 1.0 {
        return Prob::ZERO;
    }
    let log_mean = (-shortfall).ln_1p() / k;
    Prob {
        p: log_mean.exp(),
        q: -log_mean.exp_m1(),
    }
}

/// Compensated (Neumaier) summation.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Clamp into [0, 1], reporting whether clamping happened.
pub fn clamp_unit(x: f64) -> (f64, bool) {
    if x < 0.0 {
        (0.0, true)
    } else if x > 1.0 {
        (1.0, true)
    } else {
        (x, false)
    }
}
