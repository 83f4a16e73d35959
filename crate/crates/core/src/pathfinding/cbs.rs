//! Conflict-based search over interchange slots, used as a small-instance
//! reference for the sequential planner.
//!
//! Every interchange holds one UAV at a time. A conflict is a pair of
//! overlapping stays `[s_a, e_a)` and `[s_b, e_b)` at the same interchange;
//! both contain the instant `t = min(e_a, e_b)` when read as `(s, e]`. The
//! search branches by forbidding either UAV to hold the interchange at `t`.
//! Any conflict-free joint plan obeys one of the two branches, so the best
//! first search over summed path time returns the joint optimum.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::occupancy::SlotGate;
use super::{cabps_half_with, halves, HalfPlan, PlanFailure, PlannedPath, SearchOptions};
use crate::allocation::Subtask;
use crate::network::{NodeId, TrafficNetwork};

#[derive(Debug, Clone, PartialEq)]
pub struct CbsOptions {
    pub search: SearchOptions,
    /// High-level nodes expanded before giving up.
    pub max_expansions: usize,
}

impl Default for CbsOptions {
    fn default() -> Self {
        Self {
            search: SearchOptions::default(),
            max_expansions: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbsSolution {
    pub paths: Vec<PlannedPath>,
    pub sum_of_costs: f64,
    pub expansions: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CbsError {
    #[error("expansion cap of {0} reached")]
    Timeout(usize),
    #[error("agent {agent} has no path: {failure}")]
    NoPath { agent: usize, failure: PlanFailure },
    #[error("{0} start times for {1} subtasks")]
    Mismatch(usize, usize),
}

/// Per-agent forbidden instants, sorted per interchange.
#[derive(Debug, Clone, Default, PartialEq)]
struct Forbidden(BTreeMap<NodeId, Vec<f64>>);

impl Forbidden {
    fn add(&mut self, node: NodeId, t: f64) {
        let v = self.0.entry(node).or_default();
        let at = v.partition_point(|&x| x < t);
        v.insert(at, t);
    }
}

impl SlotGate for Forbidden {
    /// A stay `(s, s + d]` may not contain a forbidden instant.
    fn earliest_start(&self, node: NodeId, arrival: f64, duration: f64) -> f64 {
        let mut s = arrival;
        if duration > 0.0 {
            for &p in self.0.get(&node).map_or(&[][..], |v| v.as_slice()) {
                if s < p && p <= s + duration {
                    s = p;
                }
            }
        }
        s
    }
}

fn plan_agent(
    net: &TrafficNetwork,
    subtask: &Subtask,
    start: f64,
    gate: &Forbidden,
    options: &SearchOptions,
) -> Result<PlannedPath, PlanFailure> {
    let started = Instant::now();
    let [(d, g), (g2, e)] = halves(subtask);
    let first: HalfPlan = cabps_half_with(net, d, g, start, gate, options, started, 0)?;
    let second = cabps_half_with(net, g2, e, first.end_time, gate, options, started, 1)?;
    Ok(PlannedPath::join(*subtask, first, second))
}

struct CtNode {
    cost: f64,
    id: usize,
    constraints: Vec<Forbidden>,
    paths: Vec<PlannedPath>,
}

impl PartialEq for CtNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for CtNode {}

impl Ord for CtNode {
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then(other.id.cmp(&self.id))
    }
}

impl PartialOrd for CtNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Earliest conflict as (agent a, agent b, interchange, instant).
fn first_conflict(paths: &[PlannedPath]) -> Option<(usize, usize, NodeId, f64)> {
    let mut best: Option<(usize, usize, NodeId, f64)> = None;
    for a in 0..paths.len() {
        for b in a + 1..paths.len() {
            for ra in &paths[a].reservations {
                for rb in &paths[b].reservations {
                    if ra.interchange == rb.interchange && ra.start < rb.end && rb.start < ra.end {
                        let t = ra.end.min(rb.end);
                        if best.is_none_or(|(_, _, _, bt)| t < bt) {
                            best = Some((a, b, ra.interchange, t));
                        }
                    }
                }
            }
        }
    }
    best
}

/// Jointly optimal (minimum summed time) plans for one subtask per agent,
/// interchange capacity one. Agent `n` starts at `start_times[n]`.
pub fn plan_cbs_reference(
    net: &TrafficNetwork,
    subtasks: &[Subtask],
    start_times: &[f64],
    options: &CbsOptions,
) -> Result<CbsSolution, CbsError> {
    if subtasks.len() != start_times.len() {
        return Err(CbsError::Mismatch(start_times.len(), subtasks.len()));
    }
    let n = subtasks.len();
    let constraints = vec![Forbidden::default(); n];
    let mut paths = Vec::with_capacity(n);
    for (agent, (s, &t)) in subtasks.iter().zip(start_times).enumerate() {
        let p = plan_agent(net, s, t, &constraints[agent], &options.search)
            .map_err(|failure| CbsError::NoPath { agent, failure })?;
        paths.push(p);
    }
    let mut next_id = 0;
    let mut open = BinaryHeap::new();
    open.push(CtNode {
        cost: paths.iter().map(|p| p.total_time).sum(),
        id: next_id,
        constraints,
        paths,
    });
    let mut expansions = 0;
    while let Some(node) = open.pop() {
        let Some((a, b, at, t)) = first_conflict(&node.paths) else {
            return Ok(CbsSolution {
                sum_of_costs: node.cost,
                paths: node.paths,
                expansions,
            });
        };
        expansions += 1;
        if expansions > options.max_expansions {
            return Err(CbsError::Timeout(options.max_expansions));
        }
        for agent in [a, b] {
            let mut constraints = node.constraints.clone();
            constraints[agent].add(at, t);
            let Ok(p) = plan_agent(
                net,
                &subtasks[agent],
                start_times[agent],
                &constraints[agent],
                &options.search,
            ) else {
                continue;
            };
            let mut paths = node.paths.clone();
            paths[agent] = p;
            next_id += 1;
            open.push(CtNode {
                cost: paths.iter().map(|p| p.total_time).sum(),
                id: next_id,
                constraints,
                paths,
            });
        }
    }
    // every branch ran out of paths; the root agents all had one, so this
    // only happens when constraints leave some agent stranded
    Err(CbsError::NoPath {
        agent: 0,
        failure: PlanFailure::NoFeasiblePath { half: 0 },
    })
}
