//! Label-setting A* over a search graph with a flight budget and
//! time-dependent boarding waits.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use super::occupancy::{Reservation, SlotGate};
use super::search_graph::{SearchGraph, DEPARTURE, ENDPOINT};
use super::{HalfPlan, Leg, PlanFailure, SearchOptions};
use crate::network::Mode;

const NO_PARENT: usize = usize::MAX;

struct Label {
    node: usize,
    time: f64,
    flight: f64,
    parent: usize,
    mode: Mode,
    /// hover before boarding, rides only
    extra: f64,
    board: f64,
    response: f64,
    travel: f64,
    alive: bool,
}

#[derive(PartialEq)]
struct Key {
    f: f64,
    flight: f64,
    id: usize,
}

impl Eq for Key {}

impl Ord for Key {
    // reversed for a min-heap: lowest f, then lowest flight, then oldest
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then(other.flight.total_cmp(&self.flight))
            .then(other.id.cmp(&self.id))
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn on_path(labels: &[Label], mut id: usize, node: usize) -> bool {
    while id != NO_PARENT {
        if labels[id].node == node {
            return true;
        }
        id = labels[id].parent;
    }
    false
}

/// Fastest departure-to-endpoint route leaving at `start_time` whose flight
/// stays within `budget`. Boarding a ride at interchange `i` holds the slot
/// for the response time of `i`, and `gate` decides when that can begin.
pub(crate) fn search_half(
    graph: &SearchGraph,
    start_time: f64,
    budget: f64,
    gate: &dyn SlotGate,
    options: &SearchOptions,
    started: Instant,
    half: usize,
) -> Result<HalfPlan, PlanFailure> {
    let h = graph.time_to_goal();
    let h_flight = graph.flight_to_goal();
    let tol = 1e-9 * budget.max(1.0);
    if h_flight[DEPARTURE] > budget + tol {
        return Err(PlanFailure::NoFeasiblePath { half });
    }

    let mut labels = vec![Label {
        node: DEPARTURE,
        time: start_time,
        flight: 0.0,
        parent: NO_PARENT,
        mode: Mode::Flight,
        extra: 0.0,
        board: start_time,
        response: 0.0,
        travel: 0.0,
        alive: true,
    }];
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new(); graph.len()];
    frontier[DEPARTURE].push(0);
    let mut heap = BinaryHeap::new();
    heap.push(Key {
        f: h[DEPARTURE],
        flight: 0.0,
        id: 0,
    });

    let mut pops = 0usize;
    while let Some(Key { id, .. }) = heap.pop() {
        if !labels[id].alive {
            continue;
        }
        pops += 1;
        if pops.is_multiple_of(64) && started.elapsed() > options.time_budget {
            return Err(PlanFailure::Timeout { half });
        }
        let (u, tu, fu) = (labels[id].node, labels[id].time, labels[id].flight);
        if u == ENDPOINT {
            return Ok(assemble(graph, &labels, id, start_time));
        }
        for e in graph.edges_from(u) {
            let v = e.to;
            let flight = fu + e.flight_cost;
            if flight + h_flight[v] > budget + tol {
                continue;
            }
            let (time, extra, board) = match e.mode {
                Mode::Flight => (tu + e.travel, 0.0, tu),
                Mode::Transit => {
                    let board = gate.earliest_start(graph.node_id(u), tu, e.response);
                    if !board.is_finite() {
                        continue;
                    }
                    (board + e.response + e.travel, board - tu, board)
                }
            };
            if options.prune_dominated {
                let dominated = frontier[v]
                    .iter()
                    .any(|&l| labels[l].time <= time && labels[l].flight <= flight);
                if dominated {
                    continue;
                }
                frontier[v].retain(|&l| {
                    let beaten = time <= labels[l].time && flight <= labels[l].flight;
                    if beaten {
                        labels[l].alive = false;
                    }
                    !beaten
                });
            } else if on_path(&labels, id, v) {
                continue;
            }
            if labels.len() >= options.label_cap {
                return Err(PlanFailure::LabelCap { half });
            }
            let nid = labels.len();
            labels.push(Label {
                node: v,
                time,
                flight,
                parent: id,
                mode: e.mode,
                extra,
                board,
                response: e.response,
                travel: e.travel,
                alive: true,
            });
            frontier[v].push(nid);
            heap.push(Key {
                f: time - start_time + h[v],
                flight,
                id: nid,
            });
        }
    }
    Err(PlanFailure::NoFeasiblePath { half })
}

fn assemble(graph: &SearchGraph, labels: &[Label], goal: usize, start_time: f64) -> HalfPlan {
    let mut chain = Vec::new();
    let mut id = goal;
    while labels[id].parent != NO_PARENT {
        chain.push(id);
        id = labels[id].parent;
    }
    chain.reverse();
    let mut plan = HalfPlan {
        legs: Vec::with_capacity(chain.len()),
        start_time,
        end_time: labels[goal].time,
        flight: labels[goal].flight,
        ..HalfPlan::default()
    };
    for &l in &chain {
        let lab = &labels[l];
        let tail = graph.node_id(labels[lab.parent].node);
        plan.legs.push(Leg {
            node: graph.node_id(lab.node),
            arrival: lab.time,
            mode: Some(lab.mode),
            extra_wait: lab.extra,
        });
        if lab.mode == Mode::Transit {
            plan.ride_time += lab.travel;
            plan.response_wait += lab.response;
            plan.extra_wait += lab.extra;
            if lab.response > 0.0 {
                plan.reservations.push(Reservation {
                    interchange: tail,
                    start: lab.board,
                    end: lab.board + lab.response,
                });
            }
        }
    }
    plan
}
