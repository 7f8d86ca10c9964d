//! Signal controllers. All of them read only the [`PerceivedObservation`].

use alloc::vec::Vec;

use super::{PerceivedObservation, SignalState, Topology};

const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseCommand {
    Hold,
    /// Enter yellow, then activate the given phase index.
    SwitchTo(usize),
}

/// Static schedule of `(phase index, seconds)` slots repeated every cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedTimePlan {
    pub slots: Vec<(usize, f64)>,
}

impl FixedTimePlan {
    pub fn two_phase(first: f64, second: f64) -> Self {
        FixedTimePlan { slots: alloc::vec![(0, first), (1, second)] }
    }

    pub fn cycle(&self) -> f64 {
        self.slots.iter().map(|(_, d)| d).sum()
    }

    /// Scheduled phase at time `t`.
    pub fn phase_at(&self, t: f64) -> usize {
        let cycle = self.cycle();
        if !(cycle > 0.0) {
            return self.slots.first().map_or(0, |s| s.0);
        }
        let mut offset = t - libm::floor(t / cycle) * cycle;
        for &(phase, duration) in &self.slots {
            if offset < duration - TIME_EPS {
                return phase;
            }
            offset -= duration;
        }
        self.slots.last().map_or(0, |s| s.0)
    }
}

pub fn fixed_time_decide(state: &SignalState, plan: &FixedTimePlan, t: f64) -> PhaseCommand {
    let wanted = plan.phase_at(t);
    if state.in_yellow || wanted == state.active_phase {
        PhaseCommand::Hold
    } else {
        PhaseCommand::SwitchTo(wanted)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapActuatedConfig {
    /// Green is extended while some served lane's headway is below this.
    pub max_gap: f64,
    /// Finest headway the detector resolves, seconds.
    pub detector_gap: f64,
}

impl Default for GapActuatedConfig {
    fn default() -> Self {
        GapActuatedConfig { max_gap: 3.0, detector_gap: 0.8 }
    }
}

/// Perceived headway on a lane, 0.1 s resolution. Infinite when empty.
pub fn perceived_headway(count: f64, window: f64, detector_gap: f64) -> f64 {
    if count > 0.0 {
        let h = libm::round(window / count * 10.0) / 10.0;
        h.max(detector_gap)
    } else {
        f64::INFINITY
    }
}

/// `timing` is `(min_green, max_green)` of the active phase and
/// `served` the observation indices of its lanes.
pub fn gap_actuated_decide(
    state: &SignalState,
    obs: &PerceivedObservation,
    served: &[usize],
    timing: (f64, f64),
    phase_count: usize,
    config: &GapActuatedConfig,
) -> PhaseCommand {
    let (min_green, max_green) = timing;
    if state.in_yellow || phase_count < 2 || state.phase_elapsed < min_green - TIME_EPS {
        return PhaseCommand::Hold;
    }
    let next = (state.active_phase + 1) % phase_count;
    if state.phase_elapsed >= max_green - TIME_EPS {
        return PhaseCommand::SwitchTo(next);
    }
    let busy = served.iter().any(|&i| {
        let lane = &obs.lanes[i];
        perceived_headway(lane.count, lane.window, config.detector_gap) < config.max_gap
    });
    if busy {
        PhaseCommand::Hold
    } else {
        PhaseCommand::SwitchTo(next)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveConfig {
    pub decision_interval: f64,
    /// Perceived vehicles a challenger phase must beat the active one by.
    pub switch_penalty: f64,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        AdaptiveConfig { decision_interval: 5.0, switch_penalty: 2.0 }
    }
}

fn on_boundary(t: f64, interval: f64) -> bool {
    if !(interval > 0.0) {
        return true;
    }
    let k = libm::round(t / interval);
    (t - k * interval).abs() < 1e-6
}

/// Pressure policy over every junction at once.
pub fn adaptive_decide(
    states: &[SignalState],
    obs: &PerceivedObservation,
    topo: &Topology,
    config: &AdaptiveConfig,
) -> Vec<PhaseCommand> {
    let boundary = on_boundary(obs.time, config.decision_interval);
    states
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let phases = &topo.phase_lanes[j];
            let min_green = topo.phase_timing[j][s.active_phase].0;
            if !boundary || s.in_yellow || s.phase_elapsed < min_green - TIME_EPS {
                return PhaseCommand::Hold;
            }
            let mut best = s.active_phase;
            let mut best_pressure = f64::NEG_INFINITY;
            for (p, lanes) in phases.iter().enumerate() {
                let mut pressure: f64 = lanes.iter().map(|&i| obs.lanes[i].count).sum();
                if p != s.active_phase {
                    pressure -= config.switch_penalty;
                }
                let better = pressure > best_pressure
                    || (pressure == best_pressure && p == s.active_phase);
                if better {
                    best = p;
                    best_pressure = pressure;
                }
            }
            if best == s.active_phase {
                PhaseCommand::Hold
            } else {
                PhaseCommand::SwitchTo(best)
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Controller {
    /// Same schedule at every junction.
    FixedTime(FixedTimePlan),
    GapActuated(GapActuatedConfig),
    Adaptive(AdaptiveConfig),
}

impl Controller {
    pub fn name(&self) -> &'static str {
        match self {
            Controller::FixedTime(_) => "fixed",
            Controller::GapActuated(_) => "gap_actuated",
            Controller::Adaptive(_) => "adaptive",
        }
    }

    pub fn decide(&self, t: f64, obs: &PerceivedObservation, topo: &Topology) -> Vec<PhaseCommand> {
        match self {
            Controller::FixedTime(plan) => obs.signals.iter().map(|s| fixed_time_decide(s, plan, t)).collect(),
            Controller::GapActuated(cfg) => obs
                .signals
                .iter()
                .enumerate()
                .map(|(j, s)| {
                    let (min_green, max_green, _) = topo.phase_timing[j][s.active_phase];
                    gap_actuated_decide(
                        s,
                        obs,
                        &topo.phase_lanes[j][s.active_phase],
                        (min_green, max_green),
                        topo.phase_lanes[j].len(),
                        cfg,
                    )
                })
                .collect(),
            Controller::Adaptive(cfg) => adaptive_decide(&obs.signals, obs, topo, cfg),
        }
    }
}
