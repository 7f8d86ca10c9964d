//! Trip metrics and per-run reports.

use alloc::string::String;
use alloc::vec::Vec;

use crate::attack::AttackStrategy;
use crate::mitigation::MitigationKind;
use crate::sim::VehicleRecord;
use crate::traffic_model::LaneId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripRecord {
    pub vehicle: u64,
    pub spawn_time: f64,
    pub depart_time: f64,
    pub accumulated_wait: f64,
    pub free_flow_time: f64,
    pub is_sybil: bool,
}

impl TripRecord {
    /// Completed trips only; `None` while the vehicle is still in the network.
    pub fn from_vehicle(v: &VehicleRecord) -> Option<Self> {
        v.depart_time.map(|depart_time| TripRecord {
            vehicle: v.id.0,
            spawn_time: v.spawn_time,
            depart_time,
            accumulated_wait: v.accumulated_wait,
            free_flow_time: v.free_flow_time,
            is_sybil: v.is_sybil,
        })
    }

    pub fn duration(&self) -> f64 {
        self.depart_time - self.spawn_time
    }
}

/// A mean that may have been taken over nothing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanValue {
    pub value: f64,
    /// No real trips contributed; `value` is 0 by convention.
    pub empty: bool,
}

fn order_free_mean(mut values: Vec<f64>) -> MeanValue {
    if values.is_empty() {
        return MeanValue { value: 0.0, empty: true };
    }
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    MeanValue { value: values.iter().sum::<f64>() / n, empty: false }
}

/// Mean waiting time over real completed trips.
pub fn mean_trip_waiting_time(trips: &[TripRecord]) -> MeanValue {
    order_free_mean(trips.iter().filter(|t| !t.is_sybil).map(|t| t.accumulated_wait).collect())
}

pub fn time_loss(trip: &TripRecord) -> f64 {
    (trip.duration() - trip.free_flow_time).max(0.0)
}

pub fn mean_time_loss(trips: &[TripRecord]) -> MeanValue {
    order_free_mean(trips.iter().filter(|t| !t.is_sybil).map(time_loss).collect())
}

/// Percentage reduction from `reference` to `treated`. `None` when the
/// reference is zero.
pub fn improvement_pct(reference: f64, treated: f64) -> Option<f64> {
    (reference != 0.0).then(|| 100.0 * (reference - treated) / reference)
}

pub fn improvement(reference: &ScenarioReport, treated: &ScenarioReport) -> Option<f64> {
    improvement_pct(reference.mean_time_loss, treated.mean_time_loss)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub scenario: String,
    pub seed: u64,
    pub mean_trip_waiting_time: f64,
    pub mean_time_loss: f64,
    pub trips_completed: usize,
    /// Vehicles still in the network at the horizon.
    pub censored: usize,
    /// Mean discharge rate per lane over the run, veh/s.
    pub lane_flows: Vec<(LaneId, f64)>,
    pub policy: MitigationKind,
    pub attack: AttackStrategy,
    /// Mitigation solver failed at least once and fell back to no filtering.
    pub mitigation_fallback: bool,
    /// Greedy planning found no eligible lane at least once.
    pub empty_attack_plans: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for fewer than two values.
    pub std_dev: f64,
}

pub fn summarize(values: &[f64]) -> Summary {
    let n = values.len();
    if n == 0 {
        return Summary { n, mean: 0.0, std_dev: 0.0 };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let std_dev = if n > 1 {
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        libm::sqrt(ss / (n - 1) as f64)
    } else {
        0.0
    };
    Summary { n, mean, std_dev }
}

/// `lower`'s mean + 1 sd lies strictly below `upper`'s mean - 1 sd.
pub fn bands_separated(lower: &Summary, upper: &Summary) -> bool {
    lower.mean + lower.std_dev < upper.mean - upper.std_dev
}

/// Welch's t statistic for `mean(b) - mean(a)` and its degrees of freedom.
pub fn welch_t(a: &Summary, b: &Summary) -> Option<(f64, f64)> {
    if a.n < 2 || b.n < 2 {
        return None;
    }
    let va = a.std_dev * a.std_dev / a.n as f64;
    let vb = b.std_dev * b.std_dev / b.n as f64;
    let se2 = va + vb;
    if se2 <= 0.0 {
        return None;
    }
    let t = (b.mean - a.mean) / libm::sqrt(se2);
    let df = se2 * se2 / (va * va / (a.n - 1) as f64 + vb * vb / (b.n - 1) as f64);
    Some((t, df))
}
