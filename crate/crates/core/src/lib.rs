//! Planning library for crowdsourced air-ground package delivery.
//!
//! UAVs deliver packages from depots and may hitch rides on ground vehicles
//! between interchange points to stretch their limited flight time. The crate
//! covers the whole planning chain:
//!
//! - [`pricing`]: dynamic hitching prices for one interchange point and the
//!   expected vehicle response time they induce.
//! - [`network`]: the traffic network (depots, package addresses, interchange
//!   points, transit routes), random benchmark generation and shortest paths.
//! - [`allocation`]: splitting the package set into per-UAV subtask sequences
//!   through a minimum-cost circulation relaxation.
//! - [`pathfinding`]: direct, single-hop and multi-hop path planning with
//!   flight-time limits and interchange occupancy reservations.
//! - [`simulator`]: the end-to-end pipeline and the experiment suites.

pub mod allocation;
pub mod error;
pub mod network;
pub mod pathfinding;
pub mod pricing;
pub mod simulator;

mod rng;

pub use error::{Error, Result};
pub use rng::derive_seed;
