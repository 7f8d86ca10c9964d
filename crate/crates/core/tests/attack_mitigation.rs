use std::collections::BTreeMap;

use proptest::prelude::*;
use sybil_atsc_core::attack::{
    apply_phantoms, inject, phantoms_present, plan_coordinated_attack, plan_optimal_attack, AttackPlan, AttackTiming,
};
use sybil_atsc_core::game::MixedStrategy;
use sybil_atsc_core::mitigation::{beta_to_weights, filter_perception, MitigationKind, MitigationPolicy};
use sybil_atsc_core::sim::{adaptive_decide, AdaptiveConfig, LaneObservation, PerceivedObservation, SignalState, Topology};
use sybil_atsc_core::traffic_model::fixture::{grid, FixtureParams};
use sybil_atsc_core::traffic_model::{JunctionId, LaneId};

fn observation(counts: &[f64], speeds: &[f64]) -> PerceivedObservation {
    PerceivedObservation {
        time: 10.0,
        lanes: counts
            .iter()
            .zip(speeds)
            .enumerate()
            .map(|(i, (&count, &mean_speed))| LaneObservation { lane: LaneId(i as u32), count, mean_speed, window: 8.0 })
            .collect(),
        signals: vec![SignalState { junction: JunctionId(0), active_phase: 0, phase_elapsed: 10.0, in_yellow: false, next_phase: None }],
    }
}

fn lanes(n: usize) -> Vec<LaneId> {
    (0..n as u32).map(LaneId).collect()
}

proptest! {
    #[test]
    fn optimal_plan_respects_headroom_and_budget(
        pairs in prop::collection::vec((0.1..3.0f64, 0.0..3.0f64), 1..16),
        budget in 0.01..20.0f64,
    ) {
        let theta: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let f: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let ids = lanes(theta.len());
        let plan = plan_optimal_attack(&ids, &theta, &f, budget, AttackTiming::default()).unwrap();
        prop_assert!(plan.total_rate() <= budget + 1e-9);
        for (i, id) in ids.iter().enumerate() {
            let rate = plan.rate(*id);
            prop_assert!(rate >= 0.0);
            prop_assert!(rate <= (theta[i] - f[i]).max(0.0) + 1e-12);
        }
    }

    #[test]
    fn coordinated_plan_uses_one_phase_per_junction(
        f in prop::collection::vec(0.0..1.0f64, 12),
        budget in 0.1..10.0f64,
    ) {
        let topo = Topology::new(&grid(1, 3, &FixtureParams::default()));
        let theta = vec![1.4; 12];
        let plan = plan_coordinated_attack(&topo.lane_ids, &theta, &f, &topo.phase_lanes, budget, AttackTiming::default()).unwrap();
        for phases in &topo.phase_lanes {
            let hit: Vec<bool> = phases.iter().map(|g| g.iter().any(|&i| plan.rate(topo.lane_ids[i]) > 0.0)).collect();
            prop_assert!(hit.iter().filter(|&&h| h).count() <= 1);
        }
    }

    #[test]
    fn phantoms_only_slow_perceived_traffic(
        lanes_in in prop::collection::vec((0.0..20.0f64, 0.0..35.0f64, 0u32..5), 1..12),
    ) {
        let counts: Vec<f64> = lanes_in.iter().map(|l| l.0).collect();
        let speeds: Vec<f64> = lanes_in.iter().map(|l| l.1).collect();
        let obs = observation(&counts, &speeds);
        let phantoms: BTreeMap<LaneId, u32> = lanes_in.iter().enumerate().map(|(i, l)| (LaneId(i as u32), l.2)).collect();
        let out = apply_phantoms(obs.clone(), &phantoms);
        for (a, b) in obs.lanes.iter().zip(&out.lanes) {
            prop_assert!(b.mean_speed <= a.mean_speed + 1e-12);
            prop_assert!(b.count >= a.count);
        }
    }

    #[test]
    fn injection_only_in_on_windows(rate in 0.0..2.0f64, t in 0.0..2000.0f64, on in 0.5..5.0f64, off in 0.0..5.0f64) {
        let timing = AttackTiming { start_time: 300.0, duration: 1000.0, duty_on: on, duty_off: off };
        let mut plan = AttackPlan::empty(timing, 1.0);
        plan.per_lane_rate.insert(LaneId(0), rate);
        let added = inject(&plan, t, 1.0);
        let present = phantoms_present(&plan, t, 1.0);
        if timing.on_offset(t).is_none() {
            prop_assert!(added.is_empty() && present.is_empty());
        }
        let n = present.get(&LaneId(0)).copied().unwrap_or(0);
        prop_assert!(f64::from(n) <= rate * on + 1e-9);
    }

    #[test]
    fn filtering_never_adds_load(counts in prop::collection::vec(0.0..50.0f64, 1..12), seed_w in prop::collection::vec(0.0..1.0f64, 12)) {
        let obs = observation(&counts, &vec![10.0; counts.len()]);
        let policy = MitigationPolicy { kind: MitigationKind::Optimal, weights: seed_w[..counts.len()].to_vec() };
        let out = filter_perception(&obs, &policy);
        for (a, b) in obs.lanes.iter().zip(&out.lanes) {
            prop_assert!(b.count <= a.count);
            prop_assert_eq!(b.mean_speed, a.mean_speed);
        }
        let identity = filter_perception(&obs, &MitigationPolicy::none(counts.len()));
        prop_assert_eq!(&identity, &obs);
        let fair = filter_perception(&obs, &MitigationPolicy::fair(counts.len()));
        for (a, b) in obs.lanes.iter().zip(&fair.lanes) {
            prop_assert_eq!(b.count, a.count * 0.5);
        }
    }

    #[test]
    fn mitigation_changes_choice_only_if_pressures_reorder(
        counts in prop::collection::vec(0.0..15.0f64, 4),
        weights in prop::collection::vec(0.0..1.0f64, 4),
    ) {
        let topo = Topology::new(&grid(1, 1, &FixtureParams::default()));
        let config = AdaptiveConfig::default();
        let raw = observation(&counts, &[10.0; 4]);
        let policy = MitigationPolicy { kind: MitigationKind::Optimal, weights: weights.clone() };
        let filtered = filter_perception(&raw, &policy);
        let pressure = |obs: &PerceivedObservation| -> Vec<f64> {
            topo.phase_lanes[0].iter().enumerate().map(|(p, g)| {
                g.iter().map(|&i| obs.lanes[i].count).sum::<f64>() - if p == 0 { 0.0 } else { config.switch_penalty }
            }).collect()
        };
        let a = adaptive_decide(&raw.signals, &raw, &topo, &config);
        let b = adaptive_decide(&filtered.signals, &filtered, &topo, &config);
        if a != b {
            let (pa, pb) = (pressure(&raw), pressure(&filtered));
            prop_assert!((pa[0] >= pa[1]) != (pb[0] >= pb[1]));
        }
    }
}

#[test]
fn uniform_beta_keeps_full_trust() {
    for d in [1, 2, 12, 400] {
        assert!(beta_to_weights(&MixedStrategy::uniform(d), d).iter().all(|&w| (w - 1.0).abs() < 1e-12));
    }
}
