//! Reference topologies: a grid of two-phase junctions with straight-through
//! routing, and the three-junction corridor used for headline runs.
//!
//! Every junction has four approach segments in the order N, E, S, W. The
//! N approach carries southbound traffic entering from the top, the W
//! approach carries eastbound traffic entering from the left, and so on.
//! Phase 0 serves N+S, phase 1 serves E+W.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{FundamentalDiagramParams, Junction, JunctionId, Lane, LaneId, Network, SignalPhase};

/// Approach index within a junction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Approach {
    North = 0,
    East = 1,
    South = 2,
    West = 3,
}

impl Approach {
    pub const ALL: [Approach; 4] = [Approach::North, Approach::East, Approach::South, Approach::West];

    pub fn label(self) -> &'static str {
        match self {
            Approach::North => "N",
            Approach::East => "E",
            Approach::South => "S",
            Approach::West => "W",
        }
    }
}

/// Boundary inflows per entry segment, veh/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inflows {
    pub top: f64,
    pub bottom: f64,
    pub left: f64,
    pub right: f64,
}

impl Inflows {
    /// Grid inflows of the reference topology, veh/h.
    pub const REFERENCE_VPH: Inflows = Inflows { top: 20.0, bottom: 40.0, left: 40.0, right: 50.0 };

    pub fn from_vph(vph: Inflows) -> Self {
        Inflows {
            top: vph.top / 3600.0,
            bottom: vph.bottom / 3600.0,
            left: vph.left / 3600.0,
            right: vph.right / 3600.0,
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        Inflows {
            top: self.top * factor,
            bottom: self.bottom * factor,
            left: self.left * factor,
            right: self.right * factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureParams {
    /// Per-lane diagram. A segment with `n` lanes gets `n` times the jam density.
    pub diagram: FundamentalDiagramParams,
    pub lanes_per_direction: u32,
    /// Meters, every approach segment.
    pub segment_length: f64,
    /// Per-lane discharge rate under green, veh/s.
    pub saturation_flow: f64,
    pub inflows: Inflows,
    pub min_green: f64,
    pub max_green: f64,
    pub yellow: f64,
}

impl FixtureParams {
    /// Reference inflows are the grid's veh/h figures times this factor.
    pub const REFERENCE_INFLOW_SCALE: f64 = 3.0;
}

impl Default for FixtureParams {
    fn default() -> Self {
        FixtureParams {
            diagram: FundamentalDiagramParams::reference(),
            lanes_per_direction: 1,
            segment_length: 300.0,
            saturation_flow: 0.5,
            inflows: Inflows::from_vph(Inflows::REFERENCE_VPH).scaled(Self::REFERENCE_INFLOW_SCALE),
            min_green: 5.0,
            max_green: 45.0,
            yellow: 3.0,
        }
    }
}

/// `rows x cols` grid with straight-through routing.
pub fn grid(rows: usize, cols: usize, params: &FixtureParams) -> Network {
    let lanes_n = f64::from(params.lanes_per_direction.max(1));
    let diagram = FundamentalDiagramParams::new(
        params.diagram.free_speed(),
        params.diagram.jam_density() * lanes_n,
    )
    .unwrap_or(params.diagram);
    let saturation = params.saturation_flow * lanes_n;

    let lane_id = |r: usize, c: usize, a: Approach| LaneId(((r * cols + c) * 4 + a as usize) as u32);

    let mut junctions = Vec::with_capacity(rows * cols);
    let mut adjacency = BTreeMap::new();

    for r in 0..rows {
        for c in 0..cols {
            let index = r * cols + c;
            let label = if rows == 1 { format!("J{c}") } else { format!("J{r}_{c}") };
            let approach_lanes = Approach::ALL
                .iter()
                .map(|&a| {
                    let inflow_rate = match a {
                        Approach::North if r == 0 => params.inflows.top,
                        Approach::South if r + 1 == rows => params.inflows.bottom,
                        Approach::West if c == 0 => params.inflows.left,
                        Approach::East if c + 1 == cols => params.inflows.right,
                        _ => 0.0,
                    };
                    Lane {
                        id: lane_id(r, c, a),
                        label: format!("{label}.{}", a.label()),
                        length: params.segment_length,
                        diagram,
                        saturation_flow: saturation,
                        inflow_rate,
                    }
                })
                .collect();

            let phase = |id: u32, served: Vec<LaneId>| SignalPhase {
                id,
                served_lanes: served,
                min_green: params.min_green,
                max_green: params.max_green,
                yellow: params.yellow,
            };
            let phase_table = vec![
                phase(0, vec![lane_id(r, c, Approach::North), lane_id(r, c, Approach::South)]),
                phase(1, vec![lane_id(r, c, Approach::East), lane_id(r, c, Approach::West)]),
            ];

            if r + 1 < rows {
                adjacency.insert(lane_id(r, c, Approach::North), lane_id(r + 1, c, Approach::North));
            }
            if r > 0 {
                adjacency.insert(lane_id(r, c, Approach::South), lane_id(r - 1, c, Approach::South));
            }
            if c + 1 < cols {
                adjacency.insert(lane_id(r, c, Approach::West), lane_id(r, c + 1, Approach::West));
            }
            if c > 0 {
                adjacency.insert(lane_id(r, c, Approach::East), lane_id(r, c - 1, Approach::East));
            }

            junctions.push(Junction {
                id: JunctionId(index as u32),
                label,
                approach_lanes,
                phase_table,
            });
        }
    }

    Network { junctions, adjacency }
}

/// Three junctions in a row, 4 approach segments each.
pub fn three_junction_reference(params: &FixtureParams) -> Network {
    grid(1, 3, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traffic_model::validate_network;

    #[test]
    fn corridor_routing() {
        let net = three_junction_reference(&FixtureParams::default());
        assert_eq!(net.junctions.len(), 3);
        // eastbound: J0.W -> J1.W -> J2.W -> sink
        assert_eq!(net.adjacency.get(&LaneId(3)), Some(&LaneId(7)));
        assert_eq!(net.adjacency.get(&LaneId(7)), Some(&LaneId(11)));
        assert_eq!(net.adjacency.get(&LaneId(11)), None);
        // westbound: J2.E -> J1.E -> J0.E -> sink
        assert_eq!(net.adjacency.get(&LaneId(9)), Some(&LaneId(5)));
        assert_eq!(net.adjacency.get(&LaneId(5)), Some(&LaneId(1)));
        // cross streets exit straight to a sink
        assert_eq!(net.adjacency.get(&LaneId(0)), None);
        let fed: Vec<_> = net.lanes().filter(|l| l.inflow_rate > 0.0).map(|l| l.label.clone()).collect();
        assert_eq!(fed, ["J0.N", "J0.S", "J0.W", "J1.N", "J1.S", "J2.N", "J2.E", "J2.S"]);
    }

    #[test]
    fn table_grid_is_valid() {
        let params = FixtureParams { lanes_per_direction: 2, ..FixtureParams::default() };
        let net = grid(10, 10, &params);
        assert_eq!(net.lane_count(), 400);
        assert_eq!(validate_network(&net), Ok(()));
        let lane = net.lanes().next().unwrap();
        assert!((lane.diagram.jam_density() - 0.32).abs() < 1e-12);
        assert!((lane.saturation_flow - 1.0).abs() < 1e-12);
    }
}
