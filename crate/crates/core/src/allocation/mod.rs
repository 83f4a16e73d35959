//! Layer 1 task allocation.
//!
//! The delivery problem is relaxed to minimum connecting tours: every package
//! is entered once from some depot and left once towards some depot, and
//! depots may be chained by empty repositioning flights. That relaxation is a
//! minimum-cost circulation ([`solve_mcc`]). Its connected components are
//! joined through the cheapest depot round trips ([`merge_components`]), the
//! resulting Eulerian multigraph is walked into one grand tour
//! ([`extract_tour`]) and the tour is cut into per-UAV subtask sequences of
//! roughly equal predicted time ([`split_tour`]).
//!
//! All weights live in an [`AllocationMatrix`] indexed by position: depots
//! first, then packages.

use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::network::NodeId;
use crate::{Error, Result};

mod mcc;
mod tour;

pub use mcc::{solve_mcc, CirculationSolution};
pub use tour::{extract_tour, merge_components, split_tour, GrandTour, MergedMultigraph};

/// Complete weighted digraph over depots and packages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationMatrix {
    ids: Vec<NodeId>,
    depots: usize,
    weights: Vec<f64>,
}

impl AllocationMatrix {
    /// `weights` is row-major over `ids`; the first `depots` ids are depots.
    pub fn new(ids: Vec<NodeId>, depots: usize, weights: Vec<f64>) -> Result<Self> {
        let n = ids.len();
        if weights.len() != n * n {
            return Err(Error::Consistency(format!(
                "{} weights for {n} nodes",
                weights.len()
            )));
        }
        if depots == 0 && n > 0 {
            return Err(Error::Consistency("allocation needs a depot".into()));
        }
        if depots > n {
            return Err(Error::Consistency(format!("{depots} depots among {n} nodes")));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::Consistency(format!("invalid weight {w}")));
        }
        Ok(Self {
            ids,
            depots,
            weights,
        })
    }

    /// Matrix whose node ids are simply the positions.
    pub fn from_rows(depots: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Consistency("weight matrix is not square".into()));
        }
        Self::new((0..n).collect(), depots, rows.concat())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// K
    pub fn depots(&self) -> usize {
        self.depots
    }

    /// M
    pub fn packages(&self) -> usize {
        self.ids.len() - self.depots
    }

    pub fn is_depot(&self, i: usize) -> bool {
        i < self.depots
    }

    pub fn id(&self, i: usize) -> NodeId {
        self.ids[i]
    }

    pub fn ids(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.ids.len() + j]
    }

    /// max over depot pairs of w_dd' + w_d'd, zero with a single depot
    pub fn max_depot_round_trip(&self) -> f64 {
        let mut best = 0.0f64;
        for d in 0..self.depots {
            for e in 0..self.depots {
                if d != e {
                    best = best.max(self.weight(d, e) + self.weight(e, d));
                }
            }
        }
        best
    }

    /// max over d, g, d' of w_dg + w_gd'
    pub fn max_subtask_time(&self) -> f64 {
        let mut best = 0.0f64;
        for g in self.depots..self.len() {
            let inbound = (0..self.depots).map(|d| self.weight(d, g)).fold(0.0, f64::max);
            let outbound = (0..self.depots).map(|d| self.weight(g, d)).fold(0.0, f64::max);
            best = best.max(inbound + outbound);
        }
        best
    }

    /// Long-format CSV `from,to,weight` with network node ids.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(["from", "to", "weight"])?;
        for i in 0..self.len() {
            for j in 0..self.len() {
                w.write_record([
                    self.ids[i].to_string(),
                    self.ids[j].to_string(),
                    self.weight(i, j).to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Subtask {
    pub start_depot: NodeId,
    pub package: NodeId,
    pub end_depot: NodeId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationPlan {
    /// One ordered subtask list per UAV.
    pub orders: Vec<Vec<Subtask>>,
    /// Sum of w_dg + w_gd' over each UAV's subtasks, seconds.
    pub predicted_times: Vec<f64>,
}

impl AllocationPlan {
    pub fn max_predicted_time(&self) -> f64 {
        self.predicted_times.iter().copied().fold(0.0, f64::max)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// CSV `uav,subtasks,predicted_time`.
    pub fn write_times_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(["uav", "subtasks", "predicted_time"])?;
        for (n, (order, t)) in self.orders.iter().zip(&self.predicted_times).enumerate() {
            w.write_record([n.to_string(), order.len().to_string(), t.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Everything Layer 1 produces for one instance.
#[derive(Debug, Clone)]
pub struct Allocation {
    pub circulation: CirculationSolution,
    pub merged: MergedMultigraph,
    pub tour: GrandTour,
    pub plan: AllocationPlan,
}

/// Runs the full Layer 1 pipeline.
pub fn allocate(matrix: &AllocationMatrix, n_uavs: usize) -> Result<Allocation> {
    if n_uavs == 0 {
        return Err(Error::Parameter("at least one UAV is required".into()));
    }
    let circulation = solve_mcc(matrix)?;
    let merged = merge_components(&circulation, matrix)?;
    let tour = extract_tour(&merged, matrix)?;
    let plan = split_tour(&tour, n_uavs)?;
    Ok(Allocation {
        circulation,
        merged,
        tour,
        plan,
    })
}
