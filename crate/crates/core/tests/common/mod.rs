#![allow(dead_code)]

use std::collections::HashMap;

use consensus_reliab::{validate_structure, ClusterParams, GraphKind, ProtocolStructure};
use rand::Rng;

/// Success probability by enumerating every node-fault and link-loss outcome.
///
/// Phases are processed in order; each phase enumerates all of its own link
/// bits (every primary link for A/B, every ordered mesh link for C) and the
/// state keeps only the AN sets later phases still read.
pub fn brute_force_success(g: &ProtocolStructure, p: &ClusterParams) -> f64 {
    let rs = validate_structure(g, p.n, p.f).unwrap();
    let n = p.n;
    let phases = rs.phases();
    let last_reader: Vec<usize> = (0..=phases)
        .map(|k| (1..=phases).filter(|&j| rs.parent_of(j) == k).max().unwrap_or(0))
        .collect();

    let mut states: HashMap<Vec<u32>, f64> = HashMap::new();
    for s in 0u32..(1 << n) {
        let w: f64 = (0..n)
            .map(|i| if s >> i & 1 == 1 { p.node[i] } else { 1.0 - p.node[i] })
            .product();
        if (s.count_ones() as usize) < rs.m[0] || w == 0.0 {
            continue;
        }
        let mut key = vec![0u32; phases + 1];
        key[0] = s;
        *states.entry(key).or_insert(0.0) += w;
    }

    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (0..n).filter(move |&i| i != u).map(move |i| (u, i)))
        .collect();
    let need_c = n - p.f - 1;

    for j in 1..=phases {
        let kind = rs.kind(j);
        let parent = rs.parent_of(j);
        let bits = match kind {
            GraphKind::A | GraphKind::B => n,
            GraphKind::C => pairs.len(),
        };
        let link = |b: usize| match kind {
            GraphKind::A => p.link_down[b],
            GraphKind::B => p.link_up[b],
            GraphKind::C => p.link_mesh[pairs[b].0][pairs[b].1],
        };
        let mut next: HashMap<Vec<u32>, f64> = HashMap::new();
        for (key, w) in &states {
            let prior = key[parent];
            for pattern in 0u64..(1u64 << bits) {
                let mut wt = *w;
                for b in 0..bits {
                    let q = link(b);
                    wt *= if pattern >> b & 1 == 1 { q } else { 1.0 - q };
                }
                if wt == 0.0 {
                    continue;
                }
                let mut an = 0u32;
                for i in (0..n).filter(|&i| prior >> i & 1 == 1) {
                    let active = match kind {
                        GraphKind::A | GraphKind::B => pattern >> i & 1 == 1,
                        GraphKind::C => {
                            let got = pairs
                                .iter()
                                .enumerate()
                                .filter(|(b, &(u, t))| {
                                    t == i && u != i && prior >> u & 1 == 1 && pattern >> b & 1 == 1
                                })
                                .count();
                            got >= need_c
                        }
                    };
                    if active {
                        an |= 1 << i;
                    }
                }
                if (an.count_ones() as usize) < rs.m[j] {
                    continue;
                }
                let mut nk = key.clone();
                nk[j] = an;
                for k in 0..=j {
                    if last_reader[k] <= j {
                        nk[k] = 0;
                    }
                }
                *next.entry(nk).or_insert(0.0) += wt;
            }
        }
        states = next;
    }
    states.values().sum()
}

/// Heterogeneous parameters with every probability uniform in `[lo, 1]`.
pub fn random_params<R: Rng>(rng: &mut R, n: usize, f: usize, lo: f64) -> ClusterParams {
    let draw = |rng: &mut R| rng.random_range(lo..=1.0);
    let mut p = ClusterParams::iid(n, f, 1.0, 1.0);
    for i in 0..n {
        p.node[i] = draw(rng);
        p.link_down[i] = draw(rng);
        p.link_up[i] = draw(rng);
        for u in 0..n {
            p.link_mesh[u][i] = if u == i { 1.0 } else { draw(rng) };
        }
    }
    p
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// `count` points log-spaced over `[lo, hi]`, endpoints included.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    (0..count)
        .map(|k| 10f64.powf(a + (b - a) * k as f64 / (count - 1) as f64))
        .collect()
}
