//! Core models for studying coordinated Sybil attacks on adaptive traffic
//! signal control and a minimax-game mitigation layer.
//!
//! The crate is `no_std` (with `alloc`). Everything here is deterministic
//! given a seed: the fundamental-diagram relations, the LP engine and the
//! zero-sum game built on it, the point-queue simulator, the attacker and
//! defender models, and the metric aggregation. File formats, the CLI and
//! parallel batch execution live in the `sybil-atsc` crate.
//!
//! Module map:
//!
//! - [`traffic_model`]: network data model, fundamental diagram, fixtures
//! - [`lp`]: two-phase simplex with Bland's rule
//! - [`game`]: payoff matrix, maxmin / minimax solvers, closed-form oracle
//! - [`sim`]: time-stepped queue simulator and the three signal controllers
//! - [`attack`]: greedy and game-optimal Sybil injection plans
//! - [`mitigation`]: trust weights and perception filtering
//! - [`metrics`]: trip metrics and scenario reports
//! - [`experiment`]: wires attacker, defender and controller into one run

#![cfg_attr(not(any(test, feature = "std")), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod attack;
pub mod experiment;
pub mod game;
pub mod lp;
pub mod metrics;
pub mod mitigation;
pub mod sim;
pub mod traffic_model;

pub use game::{GameSolution, MixedStrategy, PayoffMatrix};
pub use traffic_model::{FundamentalDiagramParams, Junction, Lane, LaneId, Network};
