//! One scenario arm: a network, a controller, an optional attacker and an
//! optional defender, run for one seed.

use alloc::string::String;
use alloc::vec::Vec;

use crate::attack::{
    apply_phantoms, phantoms_present, plan_coordinated_attack, plan_greedy_attack, AttackError, AttackPlan,
    AttackStrategy, AttackTiming, LaneEstimate,
};
use crate::metrics::{mean_time_loss, mean_trip_waiting_time, ScenarioReport, TripRecord};
use crate::mitigation::{
    compute_beta_with_floor, filter_perception, MitigationKind, MitigationPolicy, WeightMapping,
};
use crate::sim::{Controller, PerceivedObservation, PerceptionLayer, RunOutput, SimError, Simulation, World, WorldConfig};
use crate::traffic_model::{LaneId, Network};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackConfig {
    pub strategy: AttackStrategy,
    /// Budget as a fraction of the summed lane capacities.
    pub budget_fraction: f64,
    pub timing: AttackTiming,
    pub replan_interval: f64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            strategy: AttackStrategy::None,
            budget_fraction: 0.3,
            timing: AttackTiming { start_time: 300.0, ..AttackTiming::default() },
            replan_interval: 300.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MitigationConfig {
    pub kind: MitigationKind,
    pub mapping: WeightMapping,
    pub cadence: f64,
    pub impact_floor: Option<f64>,
}

impl Default for MitigationConfig {
    fn default() -> Self {
        MitigationConfig { kind: MitigationKind::None, mapping: WeightMapping::Scaled, cadence: 300.0, impact_floor: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub label: String,
    pub network: Network,
    pub controller: Controller,
    pub horizon: f64,
    pub dt: f64,
    pub flow_window: f64,
    pub attack: AttackConfig,
    pub mitigation: MitigationConfig,
}

impl ExperimentConfig {
    pub fn new(label: impl Into<String>, network: Network, controller: Controller) -> Self {
        ExperimentConfig {
            label: label.into(),
            network,
            controller,
            horizon: 5000.0,
            dt: 1.0,
            flow_window: 300.0,
            attack: AttackConfig::default(),
            mitigation: MitigationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentError {
    Sim(SimError),
    Attack(AttackError),
}

impl core::fmt::Display for ExperimentError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ExperimentError::Sim(e) => write!(f, "simulation: {e}"),
            ExperimentError::Attack(e) => write!(f, "attack: {e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ExperimentError {}

impl From<SimError> for ExperimentError {
    fn from(e: SimError) -> Self {
        ExperimentError::Sim(e)
    }
}

/// Trust weights in force from `time` on.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightUpdate {
    pub time: f64,
    pub weights: Vec<f64>,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub report: ScenarioReport,
    pub run: RunOutput,
    pub plans: Vec<(f64, AttackPlan)>,
    pub weights: Vec<WeightUpdate>,
}

fn on_cadence(t: f64, origin: f64, interval: f64) -> bool {
    let since = t - origin;
    if since < -1e-9 {
        return false;
    }
    if !(interval > 0.0 && interval.is_finite()) {
        return since.abs() < 1e-9;
    }
    let k = libm::round(since / interval);
    (since - k * interval).abs() < 1e-6
}

/// Attacker and defender sitting between the world and the controller.
struct ArmLayer {
    attack: AttackConfig,
    mitigation: MitigationConfig,
    lanes: Vec<LaneId>,
    theta: Vec<f64>,
    critical: Vec<f64>,
    junction_phases: Vec<Vec<Vec<usize>>>,
    phase_groups: Vec<Vec<LaneId>>,
    budget: f64,
    plan: Option<AttackPlan>,
    policy: MitigationPolicy,
    plans: Vec<(f64, AttackPlan)>,
    weights: Vec<WeightUpdate>,
    fallback: bool,
    empty_plans: usize,
    error: Option<AttackError>,
}

impl ArmLayer {
    fn new(world: &World, attack: AttackConfig, mitigation: MitigationConfig) -> Self {
        let topo = world.topology();
        let network = world.network();
        let theta: Vec<f64> = network.max_flows();
        let critical = network.lanes().map(|l| l.diagram.critical_density()).collect();
        let phase_groups = topo
            .phase_lanes
            .iter()
            .flat_map(|phases| phases.iter().map(|g| g.iter().map(|&i| topo.lane_ids[i]).collect()))
            .collect();
        let n = topo.lane_count();
        let policy = match mitigation.kind {
            MitigationKind::None => MitigationPolicy::none(n),
            MitigationKind::Fair => MitigationPolicy::fair(n),
            MitigationKind::Optimal => MitigationPolicy { kind: MitigationKind::Optimal, weights: alloc::vec![1.0; n] },
        };
        ArmLayer {
            budget: attack.budget_fraction * theta.iter().sum::<f64>(),
            attack,
            mitigation,
            lanes: topo.lane_ids.clone(),
            theta,
            critical,
            junction_phases: topo.phase_lanes.clone(),
            phase_groups,
            plan: None,
            policy,
            plans: Vec::new(),
            weights: Vec::new(),
            fallback: false,
            empty_plans: 0,
            error: None,
        }
    }

    fn replan(&mut self, world: &World, t: f64) {
        let f = world.measured_flows();
        let mut timing = self.attack.timing;
        if self.plan.is_none() {
            timing.start_time = timing.start_time.max(t);
        } else if let Some(p) = &self.plan {
            timing = p.timing;
        }
        let result = match self.attack.strategy {
            AttackStrategy::None => return,
            AttackStrategy::GreedyCriticalPhase => {
                let estimates: Vec<LaneEstimate> = world
                    .measurements()
                    .iter()
                    .enumerate()
                    .map(|(i, m)| LaneEstimate {
                        lane: m.lane,
                        delay: m.delay,
                        density: m.density,
                        critical_density: self.critical[i],
                        headroom: (self.theta[i] - m.flow).max(0.0),
                    })
                    .collect();
                match plan_greedy_attack(&estimates, &self.phase_groups, self.budget, timing) {
                    Err(AttackError::NoEligibleLane) => {
                        self.empty_plans += 1;
                        Ok(AttackPlan::empty(timing, self.budget))
                    }
                    other => other,
                }
            }
            AttackStrategy::GameOptimal => {
                plan_coordinated_attack(&self.lanes, &self.theta, &f, &self.junction_phases, self.budget, timing)
            }
        };
        match result {
            Ok(plan) => {
                self.plans.push((t, plan.clone()));
                self.plan = Some(plan);
            }
            Err(e) => {
                self.error.get_or_insert(e);
                self.plan = None;
            }
        }
    }

    fn update_weights(&mut self, world: &World, t: f64) {
        let f = world.measured_flows();
        match compute_beta_with_floor(&self.theta, &f, self.mitigation.impact_floor) {
            Ok(beta) => self.policy = MitigationPolicy::optimal(&beta, self.mitigation.mapping),
            Err(_) => {
                self.policy = MitigationPolicy::none(self.lanes.len());
                self.fallback = true;
            }
        }
        self.weights.push(WeightUpdate { time: t, weights: self.policy.weights.clone(), fallback: self.fallback });
    }
}

impl PerceptionLayer for ArmLayer {
    fn perceive(&mut self, world: &World, obs: PerceivedObservation) -> PerceivedObservation {
        let t = world.time();
        let dt = world.config().dt;
        if self.attack.strategy != AttackStrategy::None
            && self.error.is_none()
            && on_cadence(t, self.attack.timing.start_time, self.attack.replan_interval)
        {
            self.replan(world, t);
        }
        if self.mitigation.kind == MitigationKind::Optimal && !self.fallback && on_cadence(t, 0.0, self.mitigation.cadence) {
            self.update_weights(world, t);
        }
        let obs = match &self.plan {
            Some(plan) => apply_phantoms(obs, &phantoms_present(plan, t, dt)),
            None => obs,
        };
        filter_perception(&obs, &self.policy)
    }
}

pub fn run_experiment(config: &ExperimentConfig, seed: u64) -> Result<ExperimentOutput, ExperimentError> {
    let world = World::new(
        config.network.clone(),
        WorldConfig { dt: config.dt, seed, flow_window: config.flow_window },
    )?;
    let mut layer = ArmLayer::new(&world, config.attack, config.mitigation);
    let run = Simulation::new(world, config.controller.clone()).run(config.horizon, &mut layer);
    if let Some(e) = layer.error.take() {
        return Err(ExperimentError::Attack(e));
    }

    let trips: Vec<TripRecord> = run.trips.iter().filter_map(TripRecord::from_vehicle).collect();
    let horizon = run.horizon;
    let lane_flows = layer
        .lanes
        .iter()
        .zip(&run.discharged)
        .map(|(id, &n)| (*id, if horizon > 0.0 { n as f64 / horizon } else { 0.0 }))
        .collect();
    let report = ScenarioReport {
        scenario: config.label.clone(),
        seed,
        mean_trip_waiting_time: mean_trip_waiting_time(&trips).value,
        mean_time_loss: mean_time_loss(&trips).value,
        trips_completed: trips.len(),
        censored: run.censored,
        lane_flows,
        policy: config.mitigation.kind,
        attack: config.attack.strategy,
        mitigation_fallback: layer.fallback,
        empty_attack_plans: layer.empty_plans,
    };
    Ok(ExperimentOutput { report, run, plans: layer.plans, weights: layer.weights })
}
