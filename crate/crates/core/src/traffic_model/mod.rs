//! Road network data model and the linear speed-density (Greenshields)
//! fundamental diagram shared by the attacker and the defender.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub mod fixture;

/// Error raised for invalid model parameters or out-of-domain queries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelError {
    /// Free speed must be finite and strictly positive.
    InvalidFreeSpeed(f64),
    /// Jam density must be finite and strictly positive.
    InvalidJamDensity(f64),
    /// Density outside `[0, jam_density]`.
    DensityOutOfRange { density: f64, jam_density: f64 },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::InvalidFreeSpeed(v) => write!(f, "free speed must be > 0, got {v}"),
            ModelError::InvalidJamDensity(k) => write!(f, "jam density must be > 0, got {k}"),
            ModelError::DensityOutOfRange { density, jam_density } => {
                write!(f, "density {density} outside [0, {jam_density}]")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ModelError {}

/// Free speed `v_f` and jam density `k_j` of a lane, in SI units.
///
/// Both values are validated at construction, so every method below can
/// assume `v_f > 0` and `k_j > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalDiagramParams {
    free_speed: f64,
    jam_density: f64,
}

impl FundamentalDiagramParams {
    /// Speed limit of the reference grid, m/s.
    pub const REFERENCE_FREE_SPEED: f64 = 35.0;
    /// One 6.25 m effective vehicle slot per lane, veh/m.
    pub const REFERENCE_JAM_DENSITY: f64 = 0.16;

    pub fn new(free_speed: f64, jam_density: f64) -> Result<Self, ModelError> {
        if !(free_speed.is_finite() && free_speed > 0.0) {
            return Err(ModelError::InvalidFreeSpeed(free_speed));
        }
        if !(jam_density.is_finite() && jam_density > 0.0) {
            return Err(ModelError::InvalidJamDensity(jam_density));
        }
        Ok(Self { free_speed, jam_density })
    }

    pub fn reference() -> Self {
        Self {
            free_speed: Self::REFERENCE_FREE_SPEED,
            jam_density: Self::REFERENCE_JAM_DENSITY,
        }
    }

    pub fn free_speed(&self) -> f64 {
        self.free_speed
    }

    pub fn jam_density(&self) -> f64 {
        self.jam_density
    }

    /// Space one stopped vehicle occupies, `1 / k_j`.
    pub fn effective_vehicle_length(&self) -> f64 {
        1.0 / self.jam_density
    }

    fn check_density(&self, k: f64) -> Result<(), ModelError> {
        if k.is_nan() || k < 0.0 || k > self.jam_density {
            return Err(ModelError::DensityOutOfRange { density: k, jam_density: self.jam_density });
        }
        Ok(())
    }

    /// Mean speed at density `k`: `v_f - (v_f / k_j) k`.
    pub fn speed_at_density(&self, k: f64) -> Result<f64, ModelError> {
        self.check_density(k)?;
        let v = self.free_speed - (self.free_speed / self.jam_density) * k;
        Ok(v.clamp(0.0, self.free_speed))
    }

    /// Flow at density `k`: `v_f k - (v_f / k_j) k^2`.
    pub fn flow_at_density(&self, k: f64) -> Result<f64, ModelError> {
        self.check_density(k)?;
        let q = self.free_speed * k - (self.free_speed / self.jam_density) * k * k;
        Ok(q.max(0.0))
    }

    /// Density at which flow peaks, `k_j / 2`.
    pub fn critical_density(&self) -> f64 {
        self.jam_density / 2.0
    }

    /// Peak flow `v_f k_j / 4`.
    pub fn max_flow(&self) -> f64 {
        self.free_speed * self.jam_density / 4.0
    }

    /// Room left under capacity, `max(0, q_max - q_actual)`.
    ///
    /// This bounds the undetectable Sybil injection rate on a lane.
    /// Oversaturated measurements clamp to zero.
    pub fn headroom(&self, q_actual: f64) -> f64 {
        (self.max_flow() - q_actual.max(0.0)).max(0.0)
    }
}

/// Opaque lane identifier, unique across a [`Network`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LaneId(pub u32);

impl fmt::Display for LaneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JunctionId(pub u32);

impl fmt::Display for JunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "J{}", self.0)
    }
}

/// One approach segment feeding a junction.
#[derive(Debug, Clone, PartialEq)]
pub struct Lane {
    pub id: LaneId,
    pub label: String,
    /// Meters.
    pub length: f64,
    pub diagram: FundamentalDiagramParams,
    /// Discharge rate under green, veh/s.
    pub saturation_flow: f64,
    /// Exogenous Poisson arrival rate, veh/s. Zero for interior lanes.
    pub inflow_rate: f64,
}

impl Lane {
    /// Free-flow traversal time, seconds.
    pub fn free_flow_time(&self) -> f64 {
        self.length / self.diagram.free_speed()
    }

    /// Whole vehicles the lane can hold at jam density.
    pub fn storage_capacity(&self) -> usize {
        // floor without std
        let slots = self.length * self.diagram.jam_density();
        if slots <= 0.0 {
            0
        } else {
            slots as usize
        }
    }
}

/// A signal phase: the lanes it gives green to and its timing bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalPhase {
    pub id: u32,
    pub served_lanes: Vec<LaneId>,
    /// Seconds.
    pub min_green: f64,
    /// Seconds.
    pub max_green: f64,
    /// Seconds.
    pub yellow: f64,
}

impl SignalPhase {
    pub fn serves(&self, lane: LaneId) -> bool {
        self.served_lanes.contains(&lane)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Junction {
    pub id: JunctionId,
    pub label: String,
    pub approach_lanes: Vec<Lane>,
    pub phase_table: Vec<SignalPhase>,
}

/// Junctions plus lane-to-lane routing. Lanes without an adjacency entry
/// discharge to a sink.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Network {
    pub junctions: Vec<Junction>,
    pub adjacency: BTreeMap<LaneId, LaneId>,
}

impl Network {
    /// All lanes in junction order, then approach order.
    pub fn lanes(&self) -> impl Iterator<Item = &Lane> {
        self.junctions.iter().flat_map(|j| j.approach_lanes.iter())
    }

    pub fn lane_count(&self) -> usize {
        self.junctions.iter().map(|j| j.approach_lanes.len()).sum()
    }

    pub fn lane(&self, id: LaneId) -> Option<&Lane> {
        self.lanes().find(|l| l.id == id)
    }

    /// Theoretical maximum flow of every lane, in [`Network::lanes`] order.
    pub fn max_flows(&self) -> Vec<f64> {
        self.lanes().map(|l| l.diagram.max_flow()).collect()
    }
}

/// A single problem found by [`validate_network`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    UnservedLane(LaneId),
    DuplicateLaneId(LaneId),
    DanglingAdjacency { from: LaneId, to: LaneId },
    SaturationExceedsCapacity { lane: LaneId, saturation: f64, capacity: f64 },
    NonPositiveLength(LaneId),
    NegativeInflow(LaneId),
    PhaseServesForeignLane { junction: JunctionId, lane: LaneId },
    BadPhaseTiming { junction: JunctionId, phase: u32 },
    NoPhases(JunctionId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnservedLane(l) => write!(f, "unserved lane {l}"),
            Violation::DuplicateLaneId(l) => write!(f, "duplicate lane id {l}"),
            Violation::DanglingAdjacency { from, to } => {
                write!(f, "dangling adjacency {from} -> {to}")
            }
            Violation::SaturationExceedsCapacity { lane, saturation, capacity } => write!(
                f,
                "saturation exceeds capacity on {lane}: {saturation} > {capacity} veh/s"
            ),
            Violation::NonPositiveLength(l) => write!(f, "non-positive length on {l}"),
            Violation::NegativeInflow(l) => write!(f, "negative inflow on {l}"),
            Violation::PhaseServesForeignLane { junction, lane } => {
                write!(f, "phase at {junction} serves lane {lane} of another junction")
            }
            Violation::BadPhaseTiming { junction, phase } => {
                write!(f, "phase {phase} at {junction} needs 0 < min_green <= max_green, yellow >= 0")
            }
            Violation::NoPhases(j) => write!(f, "junction {j} has no phases"),
        }
    }
}

/// Lint a network. Returns every violation found, not just the first.
pub fn validate_network(network: &Network) -> Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    let mut seen = BTreeSet::new();

    for lane in network.lanes() {
        if !seen.insert(lane.id) {
            violations.push(Violation::DuplicateLaneId(lane.id));
        }
        if !(lane.length > 0.0) {
            violations.push(Violation::NonPositiveLength(lane.id));
        }
        if lane.inflow_rate < 0.0 || lane.inflow_rate.is_nan() {
            violations.push(Violation::NegativeInflow(lane.id));
        }
        let capacity = lane.diagram.max_flow();
        if !(lane.saturation_flow > 0.0) || lane.saturation_flow > capacity {
            violations.push(Violation::SaturationExceedsCapacity {
                lane: lane.id,
                saturation: lane.saturation_flow,
                capacity,
            });
        }
    }

    for junction in &network.junctions {
        if junction.phase_table.is_empty() {
            violations.push(Violation::NoPhases(junction.id));
        }
        for phase in &junction.phase_table {
            let timing_ok = phase.min_green > 0.0
                && phase.min_green <= phase.max_green
                && phase.yellow >= 0.0;
            if !timing_ok {
                violations.push(Violation::BadPhaseTiming { junction: junction.id, phase: phase.id });
            }
            for lane in &phase.served_lanes {
                if !junction.approach_lanes.iter().any(|l| l.id == *lane) {
                    violations.push(Violation::PhaseServesForeignLane {
                        junction: junction.id,
                        lane: *lane,
                    });
                }
            }
        }
        for lane in &junction.approach_lanes {
            if !junction.phase_table.iter().any(|p| p.serves(lane.id)) {
                violations.push(Violation::UnservedLane(lane.id));
            }
        }
    }

    for (from, to) in &network.adjacency {
        if !seen.contains(from) || !seen.contains(to) {
            violations.push(Violation::DanglingAdjacency { from: *from, to: *to });
        }
    }

    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}
