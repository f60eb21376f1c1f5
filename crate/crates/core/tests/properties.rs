mod common;

use common::random_params;
use consensus_reliab::approx::series_coefficient;
use consensus_reliab::wireless::evaluate_allocation;
use consensus_reliab::{
    db_to_linear, exact_reliability, exact_reliability_iid, optimize_power, power_series_failure,
    rayleigh_link_loss, transition_probability, tree_decomposed_failure, Builtin, ClusterParams,
    Component, GraphKind, JointReliabilityVector, ProtocolStructure, ThresholdSpec,
    WirelessScenario,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn structure_strategy() -> impl Strategy<Value = ProtocolStructure> {
    (1usize..8)
        .prop_flat_map(|len| {
            proptest::collection::vec((0u8..3, 0u32..8, 0u8..3, 1u32..6), len)
        })
        .prop_map(|raw| {
            let components = raw
                .into_iter()
                .enumerate()
                .map(|(idx, (kind, r, m, v))| {
                    let kind = [GraphKind::A, GraphKind::B, GraphKind::C][kind as usize];
                    let r = 1 + r % (idx as u32 + 1);
                    let m = match m {
                        0 => ThresholdSpec::NMinusF,
                        1 => ThresholdSpec::FPlusOne,
                        _ => ThresholdSpec::Explicit(v),
                    };
                    Component::new(kind, r, m)
                })
                .collect();
            ProtocolStructure::new("custom", components)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn structure_json_round_trips(g in structure_strategy()) {
        let text = g.to_json();
        let back = ProtocolStructure::from_json(&text).unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(back.to_json(), text);
    }

    #[test]
    fn dependence_tree_shape(g in structure_strategy()) {
        let t = g.dependence_tree().unwrap();
        prop_assert_eq!(t.node_count(), g.phases() + 1);
        prop_assert_eq!(t.edge_count(), g.phases());
        prop_assert_eq!(t.paths.len(), t.leaves.len());
        for (j, kids) in t.children.iter().enumerate() {
            prop_assert!(kids.iter().all(|&c| c > j));
        }
    }

    #[test]
    fn reliability_is_monotone(seed in any::<u64>(), proto in 0usize..4, n in 2usize..=6, slot in 0usize..4) {
        let b = Builtin::CLASSIC[proto];
        let g = b.structure();
        let f = b.family().default_f(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_params(&mut rng, n, f, 0.5);
        let base = exact_reliability(&g, &p).unwrap().p_c;
        let i = (seed as usize) % n;
        let u = (i + 1) % n;
        let mut up = p.clone();
        match slot {
            0 => up.node[i] = (up.node[i] + 0.2).min(1.0),
            1 => up.link_down[i] = (up.link_down[i] + 0.2).min(1.0),
            2 => up.link_up[i] = (up.link_up[i] + 0.2).min(1.0),
            _ => up.link_mesh[u][i] = (up.link_mesh[u][i] + 0.2).min(1.0),
        }
        let better = exact_reliability(&g, &up).unwrap().p_c;
        prop_assert!(better >= base - 1e-12, "{} < {}", better, base);
    }

    #[test]
    fn iid_engines_agree(proto in 0usize..5, n in 2usize..=7, p_n in 0.5f64..=1.0, p_l in 0.5f64..=1.0) {
        let b = Builtin::ALL[proto];
        let g = b.structure();
        let f = b.family().default_f(n);
        let het = exact_reliability(&g, &ClusterParams::iid(n, f, p_n, p_l)).unwrap();
        let iid = exact_reliability_iid(&g, n, f, p_n, p_l).unwrap();
        prop_assert!((het.p_f - iid.p_f).abs() <= 1e-12);
        prop_assert_eq!(het.p_c + het.p_f, 1.0);
    }

    #[test]
    fn transitions_normalise(seed in any::<u64>(), n in 2usize..=6, kind in 0usize..3, prior in any::<u32>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_params(&mut rng, n, (n - 1) / 2, 0.0);
        let kind = [GraphKind::A, GraphKind::B, GraphKind::C][kind];
        let prior = prior & ((1 << n) - 1);
        let mut total = 0.0;
        let mut next = prior;
        loop {
            total += transition_probability(kind, &p, prior, next).unwrap();
            if next == 0 {
                break;
            }
            next = (next - 1) & prior;
        }
        prop_assert!((total - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn series_at_full_order_is_the_tail(jf in proptest::collection::vec(0.0f64..=1.0, 2..=10), f_raw in 0usize..10) {
        let n = jf.len();
        let f = f_raw % n;
        let jv = JointReliabilityVector::from_failures(&jf);
        let series = power_series_failure(&jv, n, f, n).unwrap();
        let tail = consensus_reliab::math::PoissonBinomial::new(
            jf.iter().map(|&q| consensus_reliab::Prob::success(q)),
        )
        .at_least(f + 1)
        .p;
        prop_assert!((series.p_f - tail).abs() <= 1e-12);
    }

    #[test]
    fn truncations_bracket(n in 3usize..=12, f_raw in 0usize..12, q in 0.0f64..=0.1) {
        let f = f_raw % (n - 1);
        let jv = JointReliabilityVector::from_failures(&vec![q; n]);
        let truth = power_series_failure(&jv, n, f, n).unwrap().p_f;
        for t in f + 1..=n {
            let raw: f64 = (f + 1..=t)
                .map(|s| series_coefficient(s, f) * consensus_reliab::math::binomial(n, s) * q.powi(s as i32))
                .sum();
            let slack = 1e-14 + 1e-12 * truth;
            if (t - f - 1) % 2 == 0 {
                prop_assert!(raw >= truth - slack, "t={} {} < {}", t, raw, truth);
            } else {
                prop_assert!(raw <= truth + slack, "t={} {} > {}", t, raw, truth);
            }
        }
    }

    #[test]
    fn variant_never_worse(f in 1usize..=5, extra in 0usize..3, p_n in 0.9f64..=1.0, p_l in 0.9f64..=1.0) {
        let n = 3 * f + extra;
        let p = ClusterParams::iid(n, f, p_n, p_l);
        let v = tree_decomposed_failure(&Builtin::HotstuffVariant.structure(), &p).unwrap().p_f;
        let h = tree_decomposed_failure(&Builtin::Hotstuff.structure(), &p).unwrap().p_f;
        prop_assert!(v <= h);
    }

    #[test]
    fn loss_monotone(gain_db in -80.0f64..-30.0, p_tr in 1e-4f64..10.0, gamma_db in 0.0f64..20.0) {
        let (g, gamma) = (db_to_linear(gain_db), db_to_linear(gamma_db));
        let l = rayleigh_link_loss(gamma, g, p_tr, 1e-9);
        let saturated = l == 0.0 || l == 1.0;
        let more_power = rayleigh_link_loss(gamma, g, p_tr * 1.01, 1e-9);
        let stricter = rayleigh_link_loss(gamma * 1.01, g, p_tr, 1e-9);
        prop_assert!(more_power <= l && stricter >= l);
        prop_assert!(saturated || (more_power < l && stricter > l));
    }
}

fn scenario(p_total: f64) -> WirelessScenario {
    let gain_db = [-62.0, -58.0, -66.0, -50.0, -60.0];
    WirelessScenario {
        n: 5,
        f: 2,
        gamma_th: 10.0,
        p_noise: vec![1e-9; 5],
        gain: gain_db.iter().map(|&d| db_to_linear(d)).collect(),
        p_total,
    }
}

#[test]
fn optimized_failure_falls_with_budget() {
    let mut last = f64::INFINITY;
    for k in 1..=12 {
        let s = scenario(0.05 * k as f64);
        let a = optimize_power(&s).unwrap();
        assert!((2.0 * a.p_tr.iter().sum::<f64>() - s.p_total).abs() <= 1e-9);
        assert!(a.p_tr.iter().all(|&x| x >= 0.0));
        assert!(a.p_f <= last * (1.0 + 1e-9), "budget {}: {} > {}", s.p_total, a.p_f, last);
        last = a.p_f;
    }
}

#[test]
fn two_node_toy_matches_grid() {
    let s = WirelessScenario {
        n: 2,
        f: 1,
        gamma_th: 10.0,
        p_noise: vec![1e-9; 2],
        gain: vec![1e-7, 1e-6],
        p_total: 0.2,
    };
    let opt = optimize_power(&s).unwrap();
    let half = s.p_total / 2.0;
    let best = (0..=100_000)
        .map(|k| {
            let x = half * k as f64 / 1e5;
            evaluate_allocation(&s, &[x, half - x]).unwrap().p_f
        })
        .fold(f64::INFINITY, f64::min);
    assert!(opt.p_f <= best * (1.0 + 1e-4));
    let equal = consensus_reliab::equal_split_allocation(&s).unwrap();
    assert!(opt.p_f < equal.p_f);
}
