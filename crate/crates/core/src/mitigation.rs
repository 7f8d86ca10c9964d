//! Defender layer: per-lane trust weights from the minimax strategy and the
//! perception filter applied before the controller sees an observation.

use alloc::vec;
use alloc::vec::Vec;

use crate::game::{build_payoff_matrix, solve_minimax, GameError, MixedStrategy};
use crate::sim::PerceivedObservation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MitigationKind {
    #[default]
    None,
    Fair,
    Optimal,
}

impl MitigationKind {
    pub fn name(self) -> &'static str {
        match self {
            MitigationKind::None => "none",
            MitigationKind::Fair => "fair",
            MitigationKind::Optimal => "optimal",
        }
    }
}

/// How a defender probability vector becomes trust weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightMapping {
    /// `w_i = min(1, beta_i * D)`.
    #[default]
    Scaled,
    /// `w_i = beta_i / max_j beta_j`.
    MaxNormalized,
}

pub const FAIR_WEIGHT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct MitigationPolicy {
    pub kind: MitigationKind,
    /// Trust weight per lane, in observation order.
    pub weights: Vec<f64>,
}

impl MitigationPolicy {
    pub fn none(lanes: usize) -> Self {
        MitigationPolicy { kind: MitigationKind::None, weights: vec![1.0; lanes] }
    }

    pub fn fair(lanes: usize) -> Self {
        MitigationPolicy { kind: MitigationKind::Fair, weights: vec![FAIR_WEIGHT; lanes] }
    }

    pub fn optimal(beta: &MixedStrategy, mapping: WeightMapping) -> Self {
        let weights = match mapping {
            WeightMapping::Scaled => beta_to_weights(beta, beta.len()),
            WeightMapping::MaxNormalized => {
                let top = beta.probs().iter().copied().fold(0.0, f64::max);
                beta.probs().iter().map(|b| if top > 0.0 { b / top } else { 1.0 }).collect()
            }
        };
        MitigationPolicy { kind: MitigationKind::Optimal, weights }
    }
}

/// Defender strategy for the current flow estimates.
pub fn compute_beta(theta: &[f64], f: &[f64]) -> Result<MixedStrategy, GameError> {
    compute_beta_with_floor(theta, f, None)
}

/// As [`compute_beta`], optionally flooring every impact at `floor`.
pub fn compute_beta_with_floor(theta: &[f64], f: &[f64], floor: Option<f64>) -> Result<MixedStrategy, GameError> {
    let mut u = build_payoff_matrix(theta, f)?;
    if let Some(eps) = floor {
        u = u.with_impact_floor(eps);
    }
    solve_minimax(&u).map(|(beta, _)| beta)
}

pub fn beta_to_weights(beta: &MixedStrategy, d: usize) -> Vec<f64> {
    beta.probs().iter().map(|b| (b * d as f64).min(1.0)).collect()
}

/// Scale each lane's perceived count by its trust weight.
///
/// Lanes beyond the end of `policy.weights` are passed through.
pub fn filter_perception(raw: &PerceivedObservation, policy: &MitigationPolicy) -> PerceivedObservation {
    if policy.kind == MitigationKind::None {
        return raw.clone();
    }
    let mut out = raw.clone();
    for (lane, w) in out.lanes.iter_mut().zip(&policy.weights) {
        lane.count *= w.clamp(0.0, 1.0);
    }
    out
}
