//! Layer 2 path planning for single subtasks.
//!
//! Three delivery networks are supported: direct flight, single-hop (at most
//! one ride per half-subtask) and multi-hop CABPS, a label-setting A* that
//! plans one UAV at a time against the reservations of every UAV planned
//! before it. A subtask `(d, g, d')` is planned as two halves, `d -> g` and
//! `g -> d'`, each with half of the maximum flight time.
//!
//! Boarding a ride at interchange `i` holds one of its landing slots for the
//! response time of `i`. When all slots are taken the UAV hovers until one
//! frees; hovering costs time but no flight budget.

use std::path::Path;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::allocation::Subtask;
use crate::network::{Mode, NodeId, TrafficNetwork};
use crate::{Error, Result};

mod astar;
mod cbs;
mod occupancy;
mod search_graph;

pub use cbs::{plan_cbs_reference, CbsError, CbsOptions, CbsSolution};
pub use occupancy::{OccupancyTable, OpenGate, Reservation, SlotGate};
pub use search_graph::{SearchEdge, SearchGraph, DEPARTURE, ENDPOINT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeliveryMode {
    Direct,
    SingleHop,
    MultiHop,
}

impl DeliveryMode {
    pub const ALL: [DeliveryMode; 3] = [Self::Direct, Self::SingleHop, Self::MultiHop];

    pub fn name(self) -> &'static str {
        match self {
            Self::Direct => "direct",
            Self::SingleHop => "single-hop",
            Self::MultiHop => "multi-hop",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOptions {
    /// Wall-clock limit for planning one subtask.
    pub time_budget: Duration,
    /// Labels created per half-subtask before giving up.
    pub label_cap: usize,
    /// Drop labels dominated in (time, flight). Without it the search is
    /// restricted to simple paths; meant for cross-checking only.
    pub prune_dominated: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            time_budget: Duration::from_secs(300),
            label_cap: 100_000,
            prune_dominated: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlanFailure {
    #[error("leg {from} -> {to} needs {flight:.3} s of flight, budget is {budget:.3} s")]
    FlightBudget {
        half: usize,
        from: NodeId,
        to: NodeId,
        flight: f64,
        budget: f64,
    },
    #[error("no flight-feasible path in half {half}")]
    NoFeasiblePath { half: usize },
    #[error("label cap reached in half {half}")]
    LabelCap { half: usize },
    #[error("compute budget exhausted in half {half}")]
    Timeout { half: usize },
    #[error("invalid subtask: {reason}")]
    Invalid { reason: String },
}

/// One visited node. `mode` is how the UAV got there (none for the start);
/// `extra_wait` is the hover before boarding, on ride legs only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    pub node: NodeId,
    pub arrival: f64,
    pub mode: Option<Mode>,
    #[serde(default)]
    pub extra_wait: f64,
}

/// Plan for one half-subtask. The departure node is not listed in `legs`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HalfPlan {
    pub legs: Vec<Leg>,
    pub start_time: f64,
    pub end_time: f64,
    pub flight: f64,
    pub ride_time: f64,
    pub response_wait: f64,
    pub extra_wait: f64,
    pub conflicts: usize,
    pub reservations: Vec<Reservation>,
}

impl HalfPlan {
    fn idle(at: f64) -> Self {
        Self {
            start_time: at,
            end_time: at,
            ..Self::default()
        }
    }

    fn flight(net: &TrafficNetwork, from: NodeId, to: NodeId, at: f64) -> Self {
        if from == to {
            return Self::idle(at);
        }
        let t = net.flight_time(from, to);
        Self {
            legs: vec![Leg {
                node: to,
                arrival: at + t,
                mode: Some(Mode::Flight),
                extra_wait: 0.0,
            }],
            start_time: at,
            end_time: at + t,
            flight: t,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedPath {
    pub subtask: Subtask,
    pub legs: Vec<Leg>,
    pub start_time: f64,
    pub end_time: f64,
    pub total_time: f64,
    /// Flight seconds spent on `d -> g` and on `g -> d'`.
    pub flight_consumed: [f64; 2],
    /// Time from the start until the package is dropped.
    pub delivery_time: f64,
    pub ride_time: f64,
    pub response_wait: f64,
    pub extra_wait: f64,
    /// Reservations of earlier UAVs that blocked this UAV's fastest
    /// unconstrained route.
    pub conflicts: usize,
    pub reservations: Vec<Reservation>,
}

impl PlannedPath {
    fn join(subtask: Subtask, first: HalfPlan, second: HalfPlan) -> Self {
        let mut legs = vec![Leg {
            node: subtask.start_depot,
            arrival: first.start_time,
            mode: None,
            extra_wait: 0.0,
        }];
        legs.extend(&first.legs);
        legs.extend(&second.legs);
        let mut reservations = first.reservations.clone();
        reservations.extend(&second.reservations);
        Self {
            subtask,
            legs,
            start_time: first.start_time,
            end_time: second.end_time,
            total_time: second.end_time - first.start_time,
            flight_consumed: [first.flight, second.flight],
            delivery_time: first.end_time - first.start_time,
            ride_time: first.ride_time + second.ride_time,
            response_wait: first.response_wait + second.response_wait,
            extra_wait: first.extra_wait + second.extra_wait,
            conflicts: first.conflicts + second.conflicts,
            reservations,
        }
    }

    pub fn flight_time(&self) -> f64 {
        self.flight_consumed[0] + self.flight_consumed[1]
    }

    /// Checks the structural invariants: arrivals never go backwards, each
    /// half stays within `half_budget`, rides burn no flight and the time
    /// splits into flight, ride, response wait and hover.
    pub fn check(&self, net: &TrafficNetwork) -> Result<()> {
        let half_budget = net.speeds().half_budget();
        let tol = 1e-6 * self.total_time.abs().max(1.0);
        for f in self.flight_consumed {
            if f > half_budget * (1.0 + 1e-12) {
                return Err(Error::Consistency(format!(
                    "half uses {f} s of flight, budget {half_budget}"
                )));
            }
        }
        let mut flight = 0.0;
        for w in self.legs.windows(2) {
            if w[1].arrival < w[0].arrival {
                return Err(Error::Consistency("arrival times go backwards".into()));
            }
            if w[1].mode == Some(Mode::Flight) {
                flight += net.flight_time(w[0].node, w[1].node);
            }
        }
        if (flight - self.flight_time()).abs() > tol {
            return Err(Error::Consistency(format!(
                "flight legs sum to {flight}, path reports {}",
                self.flight_time()
            )));
        }
        let parts = self.flight_time() + self.ride_time + self.response_wait + self.extra_wait;
        if (parts - self.total_time).abs() > tol {
            return Err(Error::Consistency(format!(
                "time parts sum to {parts}, total is {}",
                self.total_time
            )));
        }
        Ok(())
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

fn halves(subtask: &Subtask) -> [(NodeId, NodeId); 2] {
    [
        (subtask.start_depot, subtask.package),
        (subtask.package, subtask.end_depot),
    ]
}

/// Straight flights `d -> g -> d'`; fails when either leg exceeds half the
/// maximum flight time.
pub fn plan_direct(
    net: &TrafficNetwork,
    subtask: &Subtask,
    start_time: f64,
) -> Result<PlannedPath, PlanFailure> {
    let budget = net.speeds().half_budget();
    let mut at = start_time;
    let mut parts = Vec::with_capacity(2);
    for (half, (from, to)) in halves(subtask).into_iter().enumerate() {
        let plan = HalfPlan::flight(net, from, to, at);
        if plan.flight > budget {
            return Err(PlanFailure::FlightBudget {
                half,
                from,
                to,
                flight: plan.flight,
                budget,
            });
        }
        at = plan.end_time;
        parts.push(plan);
    }
    let second = parts.pop().expect("two halves");
    let first = parts.pop().expect("two halves");
    Ok(PlannedPath::join(*subtask, first, second))
}

fn single_hop_half(
    net: &TrafficNetwork,
    from: NodeId,
    to: NodeId,
    at: f64,
    gate: &dyn SlotGate,
    half: usize,
) -> Result<HalfPlan, PlanFailure> {
    if from == to {
        return Ok(HalfPlan::idle(at));
    }
    let budget = net.speeds().half_budget();
    let direct = HalfPlan::flight(net, from, to, at);
    let mut best = (direct.flight <= budget).then_some(direct);
    for r in net.transit_routes() {
        let (i, j) = (r.from, r.to);
        let (fi, fj) = (net.flight_time(from, i), net.flight_time(j, to));
        if fi + fj > budget {
            continue;
        }
        let response = net.response_time(i);
        let arrive = at + fi;
        let board = gate.earliest_start(i, arrive, response);
        if !board.is_finite() {
            continue;
        }
        let ride = net.vehicle_time(r);
        let at_j = board + response + ride;
        let end = at_j + fj;
        if best.as_ref().is_some_and(|b| b.end_time <= end) {
            continue;
        }
        let mut plan = HalfPlan {
            legs: vec![
                Leg {
                    node: i,
                    arrival: arrive,
                    mode: Some(Mode::Flight),
                    extra_wait: 0.0,
                },
                Leg {
                    node: j,
                    arrival: at_j,
                    mode: Some(Mode::Transit),
                    extra_wait: board - arrive,
                },
                Leg {
                    node: to,
                    arrival: end,
                    mode: Some(Mode::Flight),
                    extra_wait: 0.0,
                },
            ],
            start_time: at,
            end_time: end,
            flight: fi + fj,
            ride_time: ride,
            response_wait: response,
            extra_wait: board - arrive,
            conflicts: 0,
            reservations: Vec::new(),
        };
        if board > arrive {
            plan.conflicts = gate.blocking(i, arrive, board);
        }
        if response > 0.0 {
            plan.reservations.push(Reservation {
                interchange: i,
                start: board,
                end: board + response,
            });
        }
        best = Some(plan);
    }
    best.ok_or(PlanFailure::NoFeasiblePath { half })
}

/// At most one ride per half: scans every transit route `(i, j)` whose two
/// flight legs fit in the half budget, waits for a slot at `i` when needed,
/// and keeps the fastest option, direct flight included. Commits the chosen
/// reservations on success.
pub fn plan_single_hop(
    net: &TrafficNetwork,
    subtask: &Subtask,
    occupancy: &mut OccupancyTable,
    start_time: f64,
) -> Result<PlannedPath, PlanFailure> {
    let [(d, g), (g2, e)] = halves(subtask);
    let first = single_hop_half(net, d, g, start_time, occupancy, 0)?;
    let mut scratch = occupancy.clone();
    first.reservations.iter().for_each(|&r| scratch.commit(r));
    let second = single_hop_half(net, g2, e, first.end_time, &scratch, 1)?;
    second.reservations.iter().for_each(|&r| scratch.commit(r));
    *occupancy = scratch;
    Ok(PlannedPath::join(*subtask, first, second))
}

#[allow(clippy::too_many_arguments)]
fn cabps_half_with(
    net: &TrafficNetwork,
    from: NodeId,
    to: NodeId,
    at: f64,
    gate: &dyn SlotGate,
    options: &SearchOptions,
    started: Instant,
    half: usize,
) -> Result<HalfPlan, PlanFailure> {
    if from == to {
        return Ok(HalfPlan::idle(at));
    }
    let graph = SearchGraph::new(net, from, to).map_err(|e| PlanFailure::Invalid {
        reason: e.to_string(),
    })?;
    astar::search_half(&graph, at, net.speeds().half_budget(), gate, options, started, half)
}

#[allow(clippy::too_many_arguments)]
fn cabps_half(
    net: &TrafficNetwork,
    from: NodeId,
    to: NodeId,
    at: f64,
    occupancy: &OccupancyTable,
    options: &SearchOptions,
    started: Instant,
    half: usize,
) -> Result<HalfPlan, PlanFailure> {
    let mut plan = cabps_half_with(net, from, to, at, occupancy, options, started, half)?;
    if !occupancy.is_empty() && !plan.legs.is_empty() {
        // replay the conflict-free optimum against the table to count the
        // reservations that stood in its way
        let free = cabps_half_with(net, from, to, at, &OpenGate, options, started, half)?;
        plan.conflicts = count_blocking(net, &free, occupancy);
    }
    Ok(plan)
}

fn count_blocking(net: &TrafficNetwork, free: &HalfPlan, gate: &dyn SlotGate) -> usize {
    let mut conflicts = 0;
    let mut t = free.start_time;
    let mut prev_arrival = free.start_time;
    let mut prev_node = None;
    for leg in &free.legs {
        let dur = leg.arrival - prev_arrival;
        match (leg.mode, prev_node) {
            (Some(Mode::Transit), Some(i)) => {
                let response = net.response_time(i);
                let board = gate.earliest_start(i, t, response);
                if !board.is_finite() {
                    return conflicts + 1;
                }
                if board > t {
                    conflicts += gate.blocking(i, t, board);
                }
                t = board + dur;
            }
            _ => t += dur,
        }
        prev_arrival = leg.arrival;
        prev_node = Some(leg.node);
    }
    conflicts
}

/// Multi-hop planning with conflict avoidance. Each half is an A* search over
/// its search graph with f = g + h, h the unconstrained time to the endpoint;
/// labels whose flight plus the least remaining flight would break the half
/// budget are never created. Earlier UAVs' reservations are respected by
/// waiting, never by moving them. On success the new reservations are
/// committed to `occupancy`; on failure it is left untouched.
pub fn plan_multi_hop_cabps(
    net: &TrafficNetwork,
    subtask: &Subtask,
    occupancy: &mut OccupancyTable,
    start_time: f64,
    options: &SearchOptions,
) -> Result<PlannedPath, PlanFailure> {
    let started = Instant::now();
    let [(d, g), (g2, e)] = halves(subtask);
    let first = cabps_half(net, d, g, start_time, occupancy, options, started, 0)?;
    let mut scratch = occupancy.clone();
    first.reservations.iter().for_each(|&r| scratch.commit(r));
    let second = cabps_half(net, g2, e, first.end_time, &scratch, options, started, 1)?;
    second.reservations.iter().for_each(|&r| scratch.commit(r));
    *occupancy = scratch;
    Ok(PlannedPath::join(*subtask, first, second))
}

/// Plans one subtask in the given delivery network.
pub fn plan_subtask(
    mode: DeliveryMode,
    net: &TrafficNetwork,
    subtask: &Subtask,
    occupancy: &mut OccupancyTable,
    start_time: f64,
    options: &SearchOptions,
) -> Result<PlannedPath, PlanFailure> {
    match mode {
        DeliveryMode::Direct => plan_direct(net, subtask, start_time),
        DeliveryMode::SingleHop => plan_single_hop(net, subtask, occupancy, start_time),
        DeliveryMode::MultiHop => plan_multi_hop_cabps(net, subtask, occupancy, start_time, options),
    }
}
