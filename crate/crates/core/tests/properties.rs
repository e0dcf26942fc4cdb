use bld_core::beliefdyn::build_belief_vectors;
use bld_core::events::{detect_spikes, AttractorActivity, SpikeConfig};
use bld_core::landscape::{AttractorProfile, ProfileSet};
use bld_core::measures::{attractor_bias, bias_score, homogeneity, BeliefBias};
use bld_core::*;
use proptest::prelude::*;

const WEEK: i64 = 604_800;

fn events_strategy() -> impl Strategy<Value = Vec<BeliefEvent>> {
    prop::collection::vec((0u8..6, 0i64..10 * WEEK, 0u32..8), 1..120).prop_map(|raw| {
        raw.into_iter()
            .map(|(u, ts, b)| BeliefEvent {
                user: format!("u{u}"),
                timestamp: ts,
                belief: b,
                community: if u % 2 == 0 {
                    Community::A
                } else {
                    Community::B
                },
                is_amplifier: false,
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn vectors_are_normalized(events in events_strategy(), h in 0.5f64..20.0) {
        let counts = bin_weekly(&events, 0, 8).unwrap();
        let series = build_belief_vectors(&counts, SmoothingParams::from_half_life(h).unwrap());
        for e in series.entries() {
            prop_assert!((e.vector.l1() - 1.0).abs() < 1e-12);
            prop_assert!(e.vector.to_dense().iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn binning_ignores_order_and_conserves_events(mut events in events_strategy(), seed in any::<u64>()) {
        let a = bin_weekly(&events, 0, 8).unwrap();
        let n = events.len();
        let mut s = seed | 1;
        for i in (1..n).rev() {
            s ^= s << 13; s ^= s >> 7; s ^= s << 17;
            events.swap(i, (s % (i as u64 + 1)) as usize);
        }
        let b = bin_weekly(&events, 0, 8).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.total(), n as u64);
        prop_assert_eq!(a.community_totals().iter().sum::<u64>(), n as u64);
    }

    #[test]
    fn homogeneity_bounds(a in 0u32..1000, b in 0u32..1000) {
        let (x, y) = (f64::from(a), f64::from(b));
        match homogeneity(x, y) {
            None => prop_assert!(a == 0 && b == 0),
            Some(h) => {
                prop_assert!((0.0..=1.0).contains(&h));
                prop_assert_eq!(Some(h), homogeneity(y, x));
                prop_assert_eq!(h == 0.0, a == b);
                prop_assert_eq!(h == 1.0, a == 0 || b == 0);
            }
        }
    }

    #[test]
    fn bias_is_scale_free(p in 1e-6f64..1.0, q in 1e-6f64..1.0, c in 1e-3f64..1e3) {
        let b = bias_score(p, q).unwrap();
        prop_assert!((b - bias_score(c * p, c * q).unwrap()).abs() < 1e-12);
        prop_assert!((b + bias_score(q, p).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn attractor_bias_is_convex(freq in prop::collection::vec(0.0f64..1.0, 2..12), biases in prop::collection::vec(0.0f64..=1.0, 12)) {
        let total: f64 = freq.iter().sum();
        prop_assume!(total > 0.0);
        let profile = AttractorProfile { attractor: 0, frequency: freq.iter().map(|f| f / total).collect() };
        let beliefs: Vec<BeliefBias> = (0..freq.len())
            .map(|b| BeliefBias { belief: b as u32, p_a: 0.0, p_b: 0.0, bias: biases[b] })
            .collect();
        let table = attractor_bias(&ProfileSet { profiles: vec![profile], empty: vec![] }, &beliefs);
        let support = freq.iter().zip(&biases).filter(|(f, _)| **f > 0.0).map(|(_, b)| *b);
        let lo = support.clone().fold(f64::INFINITY, f64::min);
        let hi = support.fold(f64::NEG_INFINITY, f64::max);
        let v = table.bias[&0];
        prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
    }

    #[test]
    fn z_grows_with_current_count(history in prop::collection::vec(5u64..50, 8), extra in 1u64..40) {
        let build = |last: u64| {
            let mut act = AttractorActivity::zeros(2, 9);
            for (w, &x) in history.iter().enumerate() {
                *act.get_mut(Community::A, 0, w as u32) = x;
                *act.get_mut(Community::A, 1, w as u32) = 50;
            }
            *act.get_mut(Community::A, 0, 8) = last;
            *act.get_mut(Community::A, 1, 8) = 50;
            act
        };
        let cfg = SpikeConfig::new(SmoothingParams::default());
        let z = |act: &AttractorActivity| detect_spikes(act, &cfg).get(0, 8, Community::A).unwrap().z;
        if let (Some(lo), Some(hi)) = (z(&build(20)), z(&build(20 + extra))) {
            prop_assert!(hi > lo);
        }
    }
}
