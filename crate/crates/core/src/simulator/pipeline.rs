use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, PricingConfig};
use crate::allocation::{allocate, AllocationPlan};
use crate::network::{allocation_subgraph, generate_network, NodeId, NodeKind, TrafficNetwork};
use crate::pathfinding::{plan_subtask, DeliveryMode, OccupancyTable, PlannedPath, SearchOptions};
use crate::pricing::steady_state;
use crate::{Error, Result};

/// Steady-state expected response time of every node in seconds; zero for
/// depots and packages.
pub fn response_times(net: &TrafficNetwork, pricing: &PricingConfig) -> Result<Vec<f64>> {
    net.nodes()
        .iter()
        .map(|n| match (n.kind, n.alpha) {
            (NodeKind::Interchange, Some(alpha)) => {
                let ss = steady_state(&pricing.params(alpha)?)?;
                Ok(ss.wait_star * pricing.slot_seconds)
            }
            (NodeKind::Interchange, None) => Err(Error::Consistency(format!(
                "interchange {} has no arrival probability",
                n.id
            ))),
            _ => Ok(0.0),
        })
        .collect()
}

/// Prices every interchange and stores its response time in the network.
/// With `max_response_time` set, times are rescaled so the slowest
/// interchange takes exactly that long.
pub fn assign_response_times(
    net: TrafficNetwork,
    pricing: &PricingConfig,
    max_response_time: Option<f64>,
) -> Result<TrafficNetwork> {
    let mut times = response_times(&net, pricing)?;
    if let Some(target) = max_response_time {
        let top = times.iter().copied().fold(0.0, f64::max);
        if top > 0.0 {
            times.iter_mut().for_each(|t| *t *= target / top);
        }
    }
    net.with_response_times(&times)
}

/// Generated network with priced interchanges.
pub fn prepare_network(cfg: &ExperimentConfig, seed: u64) -> Result<TrafficNetwork> {
    let net = generate_network(&cfg.network, seed)?;
    assign_response_times(net, &cfg.pricing, cfg.max_response_time)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackageOutcome {
    pub package: NodeId,
    /// None when allocation itself failed.
    pub uav: Option<usize>,
    pub start_depot: Option<NodeId>,
    pub success: bool,
    /// UAV clock when the subtask was started.
    pub start_time: f64,
    /// Depot to package, seconds.
    pub delivery_time: Option<f64>,
    /// Whole subtask including the return.
    pub subtask_time: Option<f64>,
    pub extra_wait: f64,
    pub conflicts: usize,
    pub failure: Option<String>,
}

/// Wall-clock figures, kept apart because they never repeat exactly.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTiming {
    pub allocation_secs: f64,
    pub planning_secs: f64,
    /// Planning seconds per subtask.
    pub avg_planning_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub mode: DeliveryMode,
    pub packages: Vec<PackageOutcome>,
    /// Time(P_n): final clock of each UAV.
    pub uav_times: Vec<f64>,
    pub max_time: f64,
    pub predicted_max_time: f64,
    pub successes: usize,
    pub failures: usize,
    pub failure_rate: f64,
    pub extra_wait_total: f64,
    pub conflicts_total: usize,
    pub timing: RunTiming,
}

impl RunMetrics {
    fn empty(mode: DeliveryMode, uavs: usize) -> Self {
        Self {
            mode,
            packages: Vec::new(),
            uav_times: vec![0.0; uavs],
            max_time: 0.0,
            predicted_max_time: 0.0,
            successes: 0,
            failures: 0,
            failure_rate: 0.0,
            extra_wait_total: 0.0,
            conflicts_total: 0,
            timing: RunTiming::default(),
        }
    }

    /// Copy with the wall-clock fields zeroed, for comparing runs.
    pub fn without_timing(&self) -> Self {
        Self {
            timing: RunTiming::default(),
            ..self.clone()
        }
    }

    pub fn successful(&self) -> impl Iterator<Item = &PackageOutcome> + '_ {
        self.packages.iter().filter(|p| p.success)
    }

    /// Mean over UAVs of Time(P_n).
    pub fn mean_uav_time(&self) -> f64 {
        if self.uav_times.is_empty() {
            0.0
        } else {
            self.uav_times.iter().sum::<f64>() / self.uav_times.len() as f64
        }
    }

    fn finish(&mut self) {
        self.packages.sort_by_key(|p| p.package);
        self.successes = self.packages.iter().filter(|p| p.success).count();
        self.failures = self.packages.len() - self.successes;
        self.failure_rate = if self.packages.is_empty() {
            0.0
        } else {
            self.failures as f64 / self.packages.len() as f64
        };
        self.max_time = self.uav_times.iter().copied().fold(0.0, f64::max);
        self.extra_wait_total = self.packages.iter().map(|p| p.extra_wait).sum();
        self.conflicts_total = self.packages.iter().map(|p| p.conflicts).sum();
        let planned = self.packages.iter().filter(|p| p.uav.is_some()).count();
        if planned > 0 {
            self.timing.avg_planning_secs = self.timing.planning_secs / planned as f64;
        }
    }
}

/// A run together with the committed paths and the final occupancy table.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub metrics: RunMetrics,
    pub allocation: Option<AllocationPlan>,
    pub paths: Vec<PlannedPath>,
    pub occupancy: OccupancyTable,
}

fn plan_orders(
    net: &TrafficNetwork,
    plan: &AllocationPlan,
    mode: DeliveryMode,
    occupancy: &mut OccupancyTable,
    options: &SearchOptions,
    metrics: &mut RunMetrics,
    paths: &mut Vec<PlannedPath>,
) {
    let rounds = plan.orders.iter().map(Vec::len).max().unwrap_or(0);
    let started = Instant::now();
    for i in 0..rounds {
        for (n, order) in plan.orders.iter().enumerate() {
            let Some(subtask) = order.get(i) else {
                continue;
            };
            let clock = metrics.uav_times[n];
            let mut outcome = PackageOutcome {
                package: subtask.package,
                uav: Some(n),
                start_depot: Some(subtask.start_depot),
                success: false,
                start_time: clock,
                delivery_time: None,
                subtask_time: None,
                extra_wait: 0.0,
                conflicts: 0,
                failure: None,
            };
            match plan_subtask(mode, net, subtask, occupancy, clock, options) {
                Ok(path) => {
                    outcome.success = true;
                    outcome.delivery_time = Some(path.delivery_time);
                    outcome.subtask_time = Some(path.total_time);
                    outcome.extra_wait = path.extra_wait;
                    outcome.conflicts = path.conflicts;
                    metrics.uav_times[n] = path.end_time;
                    paths.push(path);
                }
                // a failed delivery leaves the clock where it was
                Err(e) => outcome.failure = Some(e.to_string()),
            }
            metrics.packages.push(outcome);
        }
    }
    metrics.timing.planning_secs = started.elapsed().as_secs_f64();
}

/// Allocates packages to `uavs` UAVs, then plan their subtasks
/// round-robin (all first subtasks in UAV order, then all second ones, and so
/// on), each starting from its UAV's clock and committing reservations as it
/// goes. Delivery failures are recorded per package and never abort the run;
/// only invalid arguments return an error.
pub fn run_on_network(
    net: &TrafficNetwork,
    uavs: usize,
    mode: DeliveryMode,
    capacity: usize,
    options: &SearchOptions,
) -> Result<RunMetrics> {
    trace_on_network(net, uavs, mode, capacity, options).map(|t| t.metrics)
}

/// Same as [`run_on_network`], keeping the plans.
pub fn trace_on_network(
    net: &TrafficNetwork,
    uavs: usize,
    mode: DeliveryMode,
    capacity: usize,
    options: &SearchOptions,
) -> Result<RunTrace> {
    if uavs == 0 {
        return Err(Error::Config("uavs must be positive".into()));
    }
    let mut occupancy = OccupancyTable::new(capacity).map_err(|e| Error::Config(e.to_string()))?;
    let mut metrics = RunMetrics::empty(mode, uavs);
    let mut paths = Vec::new();
    if net.packages().is_empty() {
        return Ok(RunTrace {
            metrics,
            allocation: None,
            paths,
            occupancy,
        });
    }
    let started = Instant::now();
    let allocation = allocation_subgraph(net).and_then(|m| allocate(&m, uavs));
    metrics.timing.allocation_secs = started.elapsed().as_secs_f64();
    let mut plan = None;
    match allocation {
        Ok(a) => {
            metrics.predicted_max_time = a.plan.max_predicted_time();
            plan_orders(net, &a.plan, mode, &mut occupancy, options, &mut metrics, &mut paths);
            plan = Some(a.plan);
        }
        Err(e) => {
            let reason = format!("allocation failed: {e}");
            metrics.packages = net
                .packages()
                .into_iter()
                .map(|package| PackageOutcome {
                    package,
                    uav: None,
                    start_depot: None,
                    success: false,
                    start_time: 0.0,
                    delivery_time: None,
                    subtask_time: None,
                    extra_wait: 0.0,
                    conflicts: 0,
                    failure: Some(reason.clone()),
                })
                .collect();
        }
    }
    metrics.finish();
    Ok(RunTrace {
        metrics,
        allocation: plan,
        paths,
        occupancy,
    })
}

/// One full run on the network generated from `cfg.seed`.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<RunMetrics> {
    cfg.validate()?;
    let net = prepare_network(cfg, cfg.seed)?;
    run_on_network(&net, cfg.uavs, cfg.mode, cfg.capacity, &cfg.search_options())
}
