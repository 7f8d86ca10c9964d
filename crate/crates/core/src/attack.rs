//! Sybil attack planning and intermittent injection into perception.
//!
//! A plan assigns each targeted lane a phantom rate in veh/s. While the duty
//! cycle is ON, phantoms accumulate on the lane at that rate; when it turns
//! OFF they all disappear. Phantoms are reported stopped at the stop line.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::game::{build_payoff_matrix, solve_maxmin, GameError};
use crate::sim::PerceivedObservation;
use crate::traffic_model::LaneId;

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum AttackError {
    InvalidBudget(f64),
    InvalidTiming,
    DimensionMismatch { expected: usize, got: usize },
    /// No lane in the low-to-medium density band; the plan is empty.
    NoEligibleLane,
    Game(GameError),
}

impl fmt::Display for AttackError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttackError::InvalidBudget(b) => write!(f, "attack budget must be > 0, got {b}"),
            AttackError::InvalidTiming => write!(f, "duty_on must be > 0, duty_off and duration >= 0"),
            AttackError::DimensionMismatch { expected, got } => {
                write!(f, "expected {expected} lane values, got {got}")
            }
            AttackError::NoEligibleLane => write!(f, "no lane with density at or below critical"),
            AttackError::Game(e) => write!(f, "game solver failed: {e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for AttackError {}

impl From<GameError> for AttackError {
    fn from(e: GameError) -> Self {
        AttackError::Game(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AttackStrategy {
    #[default]
    None,
    GreedyCriticalPhase,
    GameOptimal,
}

impl AttackStrategy {
    pub fn name(self) -> &'static str {
        match self {
            AttackStrategy::None => "none",
            AttackStrategy::GreedyCriticalPhase => "greedy",
            AttackStrategy::GameOptimal => "game_optimal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackTiming {
    pub start_time: f64,
    pub duration: f64,
    pub duty_on: f64,
    pub duty_off: f64,
}

impl Default for AttackTiming {
    fn default() -> Self {
        AttackTiming { start_time: 0.0, duration: f64::INFINITY, duty_on: 2.0, duty_off: 2.0 }
    }
}

impl AttackTiming {
    fn validate(&self) -> Result<(), AttackError> {
        let ok = self.duty_on > 0.0 && self.duty_off >= 0.0 && self.duration >= 0.0 && self.start_time.is_finite();
        if ok {
            Ok(())
        } else {
            Err(AttackError::InvalidTiming)
        }
    }

    /// Seconds into the current ON window, if `t` falls in one.
    pub fn on_offset(&self, t: f64) -> Option<f64> {
        let since = t - self.start_time;
        if since < -EPS || since >= self.duration - EPS {
            return None;
        }
        let since = since.max(0.0);
        let period = self.duty_on + self.duty_off;
        let offset = since - libm::floor(since / period + EPS) * period;
        let offset = offset.max(0.0);
        (offset < self.duty_on - EPS).then_some(offset)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackPlan {
    /// Phantom rate per targeted lane, veh/s.
    pub per_lane_rate: BTreeMap<LaneId, f64>,
    pub timing: AttackTiming,
    pub total_budget: f64,
}

impl AttackPlan {
    pub fn empty(timing: AttackTiming, total_budget: f64) -> Self {
        AttackPlan { per_lane_rate: BTreeMap::new(), timing, total_budget }
    }

    pub fn total_rate(&self) -> f64 {
        self.per_lane_rate.values().sum()
    }

    pub fn rate(&self, lane: LaneId) -> f64 {
        self.per_lane_rate.get(&lane).copied().unwrap_or(0.0)
    }

    pub fn is_empty(&self) -> bool {
        self.per_lane_rate.values().all(|&r| r <= 0.0)
    }
}

/// What the attacker knows about one lane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaneEstimate {
    pub lane: LaneId,
    pub delay: f64,
    pub density: f64,
    pub critical_density: f64,
    pub headroom: f64,
}

/// Split `budget` as evenly as possible subject to per-slot caps.
pub fn water_fill(budget: f64, caps: &[f64]) -> Vec<f64> {
    let mut out = alloc::vec![0.0; caps.len()];
    let mut order: Vec<usize> = (0..caps.len()).collect();
    order.sort_by(|&a, &b| caps[a].total_cmp(&caps[b]));
    let mut remaining = budget.max(0.0);
    let mut left = caps.len();
    for i in order {
        let share = remaining / left as f64;
        let give = share.min(caps[i].max(0.0));
        out[i] = give;
        remaining -= give;
        left -= 1;
    }
    out
}

/// Puts the whole budget on the phase with the largest delay.
///
/// `phases` lists lane groups that are served together. Only lanes at or
/// below critical density are targeted.
pub fn plan_greedy_attack(
    estimates: &[LaneEstimate],
    phases: &[Vec<LaneId>],
    budget: f64,
    timing: AttackTiming,
) -> Result<AttackPlan, AttackError> {
    if !(budget > 0.0) {
        return Err(AttackError::InvalidBudget(budget));
    }
    timing.validate()?;
    let by_lane: BTreeMap<LaneId, &LaneEstimate> = estimates.iter().map(|e| (e.lane, e)).collect();
    let mut best: Option<(f64, Vec<&LaneEstimate>)> = None;
    for phase in phases {
        let eligible: Vec<&LaneEstimate> = phase
            .iter()
            .filter_map(|id| by_lane.get(id).copied())
            .filter(|e| e.density <= e.critical_density)
            .collect();
        if eligible.is_empty() {
            continue;
        }
        let delay: f64 = eligible.iter().map(|e| e.delay).sum();
        if best.as_ref().is_none_or(|(d, _)| delay > *d) {
            best = Some((delay, eligible));
        }
    }
    let (_, lanes) = best.ok_or(AttackError::NoEligibleLane)?;
    let caps: Vec<f64> = lanes.iter().map(|e| e.headroom).collect();
    let rates = water_fill(budget, &caps);
    let per_lane_rate = lanes.iter().zip(rates).map(|(e, r)| (e.lane, r)).collect();
    Ok(AttackPlan { per_lane_rate, timing, total_budget: budget })
}

fn check_lengths(lanes: &[LaneId], theta: &[f64], f: &[f64]) -> Result<(), AttackError> {
    for got in [theta.len(), f.len()] {
        if got != lanes.len() {
            return Err(AttackError::DimensionMismatch { expected: lanes.len(), got });
        }
    }
    Ok(())
}

/// Splits the budget by the attacker's maxmin strategy over `lanes`.
pub fn plan_optimal_attack(
    lanes: &[LaneId],
    theta: &[f64],
    f: &[f64],
    budget: f64,
    timing: AttackTiming,
) -> Result<AttackPlan, AttackError> {
    if !(budget > 0.0) {
        return Err(AttackError::InvalidBudget(budget));
    }
    timing.validate()?;
    check_lengths(lanes, theta, f)?;
    let u = build_payoff_matrix(theta, f)?;
    let (alpha, _) = solve_maxmin(&u)?;
    let per_lane_rate = lanes
        .iter()
        .zip(alpha.probs())
        .zip(theta.iter().zip(f))
        .map(|((id, a), (t, q))| (*id, (a * budget).min((t - q).max(0.0))))
        .collect();
    Ok(AttackPlan { per_lane_rate, timing, total_budget: budget })
}

/// Game-optimal attack restricted to one phase per junction.
///
/// `junction_phases[j][p]` holds indices into `lanes` for phase `p` of
/// junction `j`. Each junction contributes the phase with the most
/// headroom; the maxmin game is then solved over those lanes only.
pub fn plan_coordinated_attack(
    lanes: &[LaneId],
    theta: &[f64],
    f: &[f64],
    junction_phases: &[Vec<Vec<usize>>],
    budget: f64,
    timing: AttackTiming,
) -> Result<AttackPlan, AttackError> {
    check_lengths(lanes, theta, f)?;
    let headroom = |i: usize| (theta[i] - f[i]).max(0.0);
    let mut targets = Vec::new();
    for phases in junction_phases {
        let mut best: Option<(f64, &Vec<usize>)> = None;
        for group in phases {
            let total: f64 = group.iter().map(|&i| headroom(i)).sum();
            if best.is_none_or(|(b, _)| total > b + EPS) {
                best = Some((total, group));
            }
        }
        if let Some((_, group)) = best {
            targets.extend(group.iter().copied().filter(|&i| i < lanes.len()));
        }
    }
    targets.sort_unstable();
    targets.dedup();
    if targets.is_empty() {
        timing.validate()?;
        return Ok(AttackPlan::empty(timing, budget));
    }
    let sub_lanes: Vec<LaneId> = targets.iter().map(|&i| lanes[i]).collect();
    let sub_theta: Vec<f64> = targets.iter().map(|&i| theta[i]).collect();
    let sub_f: Vec<f64> = targets.iter().map(|&i| f[i]).collect();
    plan_optimal_attack(&sub_lanes, &sub_theta, &sub_f, budget, timing)
}

/// Whole phantoms present on a lane of rate `rate` just after the step
/// starting at `t` of length `dt`.
fn present_after(timing: &AttackTiming, rate: f64, t: f64, dt: f64) -> u32 {
    match timing.on_offset(t) {
        Some(offset) => {
            let elapsed = (offset + dt).min(timing.duty_on);
            libm::floor(rate * elapsed + EPS) as u32
        }
        None => 0,
    }
}

/// New phantoms added during the step `[t, t + dt)`.
pub fn inject(plan: &AttackPlan, t: f64, dt: f64) -> BTreeMap<LaneId, u32> {
    let Some(offset) = plan.timing.on_offset(t) else {
        return BTreeMap::new();
    };
    plan.per_lane_rate
        .iter()
        .filter_map(|(&lane, &rate)| {
            let before = libm::floor(rate * offset + EPS) as u32;
            let after = present_after(&plan.timing, rate, t, dt);
            (after > before).then_some((lane, after - before))
        })
        .collect()
}

/// Phantoms visible to the controller for the step starting at `t`.
pub fn phantoms_present(plan: &AttackPlan, t: f64, dt: f64) -> BTreeMap<LaneId, u32> {
    plan.per_lane_rate
        .iter()
        .filter_map(|(&lane, &rate)| {
            let n = present_after(&plan.timing, rate, t, dt);
            (n > 0).then_some((lane, n))
        })
        .collect()
}

/// Add stopped phantoms to an observation.
pub fn apply_phantoms(mut obs: PerceivedObservation, phantoms: &BTreeMap<LaneId, u32>) -> PerceivedObservation {
    if phantoms.is_empty() {
        return obs;
    }
    for lane in &mut obs.lanes {
        if let Some(&n) = phantoms.get(&lane.lane) {
            let extra = f64::from(n);
            let total = lane.count + extra;
            if total > 0.0 {
                lane.mean_speed = lane.mean_speed * lane.count / total;
            }
            lane.count = total;
        }
    }
    obs
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn pulse() -> AttackTiming {
        AttackTiming { start_time: 100.0, duration: 1000.0, duty_on: 2.0, duty_off: 2.0 }
    }

    fn estimate(lane: u32, delay: f64, density: f64) -> LaneEstimate {
        LaneEstimate { lane: LaneId(lane), delay, density, critical_density: 0.08, headroom: 1.3 }
    }

    #[test]
    fn greedy_targets_largest_delay_phase() {
        let est = [estimate(0, 40.0, 0.01), estimate(2, 40.0, 0.01), estimate(1, 10.0, 0.01), estimate(3, 10.0, 0.01)];
        let phases = [vec![LaneId(0), LaneId(2)], vec![LaneId(1), LaneId(3)]];
        let plan = plan_greedy_attack(&est, &phases, 0.5, pulse()).unwrap();
        assert!((plan.rate(LaneId(0)) + plan.rate(LaneId(2)) - 0.5).abs() < 1e-12);
        assert_eq!(plan.rate(LaneId(1)), 0.0);
    }

    #[test]
    fn greedy_without_eligible_lane() {
        let est = [estimate(0, 40.0, 0.16), estimate(1, 10.0, 0.16)];
        let phases = [vec![LaneId(0)], vec![LaneId(1)]];
        assert_eq!(plan_greedy_attack(&est, &phases, 0.5, pulse()), Err(AttackError::NoEligibleLane));
    }

    #[test]
    fn greedy_saturates_at_headroom() {
        let mut est = [estimate(0, 40.0, 0.01), estimate(1, 30.0, 0.01)];
        est[0].headroom = 0.2;
        est[1].headroom = 0.3;
        let phases = [vec![LaneId(0), LaneId(1)]];
        let plan = plan_greedy_attack(&est, &phases, 10.0, pulse()).unwrap();
        assert!((plan.total_rate() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn water_fill_oracle() {
        let rates = water_fill(1.0, &[0.1, 1.0, 1.0]);
        assert!((rates[0] - 0.1).abs() < 1e-12);
        assert!((rates[1] - 0.45).abs() < 1e-12);
        assert!((rates[2] - 0.45).abs() < 1e-12);
    }

    #[test]
    fn optimal_uniform_over_twelve() {
        let lanes: Vec<LaneId> = (0..12).map(LaneId).collect();
        let plan = plan_optimal_attack(&lanes, &[1.0; 12], &[0.0; 12], 0.6, pulse()).unwrap();
        for l in &lanes {
            assert!((plan.rate(*l) - 0.05).abs() < 1e-9);
        }
    }

    #[test]
    fn optimal_two_lane_toy() {
        let lanes = [LaneId(0), LaneId(1)];
        let plan = plan_optimal_attack(&lanes, &[1.0, 3.0], &[0.0, 0.0], 1.0, pulse()).unwrap();
        assert!((plan.rate(LaneId(0)) - 0.75).abs() < 1e-9);
        assert!((plan.rate(LaneId(1)) - 0.25).abs() < 1e-9);
    }

    #[test]
    fn optimal_without_headroom() {
        let lanes = [LaneId(0), LaneId(1), LaneId(2)];
        let plan = plan_optimal_attack(&lanes, &[1.4; 3], &[1.4, 1.5, 2.0], 1.0, pulse()).unwrap();
        assert!(plan.is_empty());
    }

    #[test]
    fn coordinated_picks_one_phase_per_junction() {
        let lanes: Vec<LaneId> = (0..4).map(LaneId).collect();
        let theta = [1.4; 4];
        let f = [0.3, 0.1, 0.3, 0.05];
        let phases = vec![vec![vec![0, 2], vec![1, 3]]];
        let plan = plan_coordinated_attack(&lanes, &theta, &f, &phases, 1.0, pulse()).unwrap();
        assert_eq!(plan.rate(LaneId(0)), 0.0);
        assert_eq!(plan.rate(LaneId(2)), 0.0);
        assert!(plan.rate(LaneId(1)) > 0.0 && plan.rate(LaneId(3)) > 0.0);
        assert!((plan.total_rate() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn injection_windows() {
        let mut plan = AttackPlan::empty(pulse(), 1.0);
        plan.per_lane_rate.insert(LaneId(0), 0.5);
        assert!(inject(&plan, 50.0, 1.0).is_empty());
        assert!(inject(&plan, 103.0, 1.0).is_empty());
        assert_eq!(inject(&plan, 100.0, 2.0).get(&LaneId(0)), Some(&1));
        assert_eq!(phantoms_present(&plan, 101.0, 1.0).get(&LaneId(0)), Some(&1));
        assert!(phantoms_present(&plan, 102.0, 1.0).is_empty());
        assert!(phantoms_present(&plan, 1100.0, 1.0).is_empty());
    }

    #[test]
    fn phantoms_drag_speed_down() {
        use crate::sim::LaneObservation;
        let obs = PerceivedObservation {
            time: 0.0,
            lanes: vec![LaneObservation { lane: LaneId(0), count: 3.0, mean_speed: 30.0, window: 8.0 }],
            signals: vec![],
        };
        let mut ph = BTreeMap::new();
        ph.insert(LaneId(0), 1);
        let out = apply_phantoms(obs, &ph);
        assert_eq!(out.lanes[0].count, 4.0);
        assert!((out.lanes[0].mean_speed - 22.5).abs() < 1e-12);
    }
}
