//! Sweeps over seeded trials. Trial `t` of every sweep point uses the
//! network seeded with `derive_seed(base.seed, t)`, so all points share
//! common random numbers. Trials run in parallel; aggregation walks them in
//! trial order, so results do not depend on the thread count.

use std::fs::File;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pipeline::{assign_response_times, prepare_network, run_on_network, RunMetrics};
use super::ExperimentConfig;
use crate::allocation::allocate;
use crate::network::{allocation_subgraph, generate_network, GeneratorConfig, SpeedModel};
use crate::pathfinding::DeliveryMode;
use crate::{derive_seed, Error, Result};

/// Writes rows as CSV with a header taken from the field names.
pub fn write_rows<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    NonIncreasing,
    NonDecreasing,
    StrictlyDecreasing,
}

/// Adjacent pairs that break `trend`. For the non-strict trends a step
/// against the trend is forgiven when it stays within `rel_tol` of the
/// previous value.
pub fn count_violations(values: &[f64], trend: Trend, rel_tol: f64) -> usize {
    values
        .windows(2)
        .filter(|w| {
            let (prev, next) = (w[0], w[1]);
            let slack = rel_tol * prev.abs();
            match trend {
                Trend::NonIncreasing => next > prev + slack,
                Trend::NonDecreasing => next < prev - slack,
                Trend::StrictlyDecreasing => next >= prev,
            }
        })
        .count()
}

fn trial_seeds(base: &ExperimentConfig) -> Vec<u64> {
    (0..base.trials as u64)
        .map(|t| derive_seed(base.seed, t))
        .collect()
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// Delivery failure rate against the number of transit routes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FailureRateSweep {
    pub base: ExperimentConfig,
    pub transit_routes: Vec<usize>,
}

impl Default for FailureRateSweep {
    /// 10 km box, 2 depots, 20 packages, 5 UAVs, 250 interchanges and a
    /// 300 s flight budget, so about four in five packages are out of direct
    /// range. Routes go from 0 to 300 in steps of 50.
    fn default() -> Self {
        let base = ExperimentConfig {
            network: GeneratorConfig {
                interchanges: 250,
                speeds: SpeedModel {
                    uav_speed: 13.0,
                    vehicle_speed: 10.0,
                    max_flight_time: 300.0,
                },
                ..GeneratorConfig::default()
            },
            ..ExperimentConfig::default()
        };
        Self {
            base,
            transit_routes: (0..=6).map(|i| i * 50).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRateRow {
    pub transit_routes: usize,
    pub trials: usize,
    pub direct: f64,
    pub single_hop: f64,
    pub multi_hop: f64,
}

pub fn experiment_failure_rate(sweep: &FailureRateSweep) -> Result<Vec<FailureRateRow>> {
    let base = &sweep.base;
    base.validate()?;
    let mut probe = base.network.clone();
    for &l in &sweep.transit_routes {
        probe.transit_routes = l;
        probe.validate().map_err(|e| Error::Config(e.to_string()))?;
    }
    let options = base.search_options();
    // per trial, per sweep point: failure rate of each mode
    let per_trial: Vec<Vec<[f64; 3]>> = trial_seeds(base)
        .into_par_iter()
        .map(|seed| -> Result<Vec<[f64; 3]>> {
            let mut cfg = base.clone();
            sweep
                .transit_routes
                .iter()
                .map(|&l| {
                    cfg.network.transit_routes = l;
                    let net = prepare_network(&cfg, seed)?;
                    let mut rates = [0.0; 3];
                    for (slot, mode) in rates.iter_mut().zip(DeliveryMode::ALL) {
                        *slot = run_on_network(&net, cfg.uavs, mode, cfg.capacity, &options)?
                            .failure_rate;
                    }
                    Ok(rates)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(sweep
        .transit_routes
        .iter()
        .enumerate()
        .map(|(k, &l)| {
            let col = |m: usize| mean(per_trial.iter().map(|t| t[k][m]));
            FailureRateRow {
                transit_routes: l,
                trials: base.trials,
                direct: col(0),
                single_hop: col(1),
                multi_hop: col(2),
            }
        })
        .collect())
}

/// Mean subtask time against interchange capacity and the largest
/// response time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapacitySweep {
    pub base: ExperimentConfig,
    pub capacities: Vec<usize>,
    /// seconds
    pub max_response_times: Vec<f64>,
}

impl Default for CapacitySweep {
    /// 10 UAVs on 40 packages share 20 interchanges; the flight budget forces
    /// most deliveries onto rides so slots are contended.
    fn default() -> Self {
        let base = ExperimentConfig {
            network: GeneratorConfig {
                packages: 40,
                interchanges: 20,
                transit_routes: 200,
                speeds: SpeedModel {
                    uav_speed: 13.0,
                    vehicle_speed: 10.0,
                    max_flight_time: 400.0,
                },
                ..GeneratorConfig::default()
            },
            uavs: 10,
            trials: 50,
            ..ExperimentConfig::default()
        };
        Self {
            base,
            capacities: (1..=5).collect(),
            max_response_times: vec![30.0, 60.0, 120.0, 240.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityRow {
    pub capacity: usize,
    pub max_response_time: f64,
    pub trials: usize,
    /// Over successful subtasks of all trials.
    pub mean_subtask_time: f64,
    pub mean_extra_wait: f64,
    pub failure_rate: f64,
    /// Mean over trials of the slowest UAV's total time.
    pub mean_max_time: f64,
}

struct CellSums {
    time: f64,
    wait: f64,
    done: usize,
    failure_rate: f64,
    max_time: f64,
}

impl CellSums {
    fn of(m: &RunMetrics) -> Self {
        Self {
            time: m.successful().filter_map(|p| p.subtask_time).sum(),
            wait: m.successful().map(|p| p.extra_wait).sum(),
            done: m.successes,
            failure_rate: m.failure_rate,
            max_time: m.max_time,
        }
    }
}

pub fn experiment_capacity(sweep: &CapacitySweep) -> Result<Vec<CapacityRow>> {
    let base = &sweep.base;
    base.validate()?;
    if sweep.capacities.contains(&0) {
        return Err(Error::Config("capacities must be positive".into()));
    }
    if sweep.max_response_times.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(Error::Config("max response times must be finite and nonnegative".into()));
    }
    let options = base.search_options();
    let cells: Vec<(f64, usize)> = sweep
        .max_response_times
        .iter()
        .flat_map(|&w| sweep.capacities.iter().map(move |&c| (w, c)))
        .collect();
    let per_trial: Vec<Vec<CellSums>> = trial_seeds(base)
        .into_par_iter()
        .map(|seed| -> Result<Vec<CellSums>> {
            let raw = generate_network(&base.network, seed)?;
            let mut out = Vec::with_capacity(cells.len());
            for &w in &sweep.max_response_times {
                let net = assign_response_times(raw.clone(), &base.pricing, Some(w))?;
                for &c in &sweep.capacities {
                    let m = run_on_network(&net, base.uavs, base.mode, c, &options)?;
                    out.push(CellSums::of(&m));
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(cells
        .iter()
        .enumerate()
        .map(|(k, &(w, c))| {
            let done: usize = per_trial.iter().map(|t| t[k].done).sum();
            let per_done = |x: f64| if done == 0 { f64::NAN } else { x / done as f64 };
            CapacityRow {
                capacity: c,
                max_response_time: w,
                trials: base.trials,
                mean_subtask_time: per_done(per_trial.iter().map(|t| t[k].time).sum()),
                mean_extra_wait: per_done(per_trial.iter().map(|t| t[k].wait).sum()),
                failure_rate: mean(per_trial.iter().map(|t| t[k].failure_rate)),
                mean_max_time: mean(per_trial.iter().map(|t| t[k].max_time)),
            }
        })
        .collect())
}

/// Worst-case delivery time of the air-ground system against a ground
/// vehicle driving the street grid, over a range of flight budgets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VsVehicleSweep {
    pub base: ExperimentConfig,
    /// seconds
    pub max_flight_times: Vec<f64>,
}

impl Default for VsVehicleSweep {
    /// UAVs at 13 m/s, vehicles at 10 m/s, 60 transit routes.
    fn default() -> Self {
        let base = ExperimentConfig {
            network: GeneratorConfig {
                transit_routes: 60,
                ..GeneratorConfig::default()
            },
            ..ExperimentConfig::default()
        };
        Self {
            base,
            max_flight_times: vec![300.0, 600.0, 900.0, 1200.0, 1800.0, 2400.0, 1e6],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VsVehicleRow {
    pub max_flight_time: f64,
    pub trials: usize,
    /// Mean over trials of the slowest depot-to-package delivery.
    pub multimodal_max: f64,
    /// Same packages and depots, driven at vehicle speed on the street grid.
    pub vehicle_max: f64,
    /// Mean over trials of multimodal_max / vehicle_max.
    pub ratio: f64,
    pub failure_rate: f64,
}

pub fn experiment_vs_vehicle(sweep: &VsVehicleSweep) -> Result<Vec<VsVehicleRow>> {
    let base = &sweep.base;
    base.validate()?;
    if sweep.max_flight_times.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(Error::Config("flight budgets must be positive and finite".into()));
    }
    let options = base.search_options();
    // per trial, per budget: (multimodal max, vehicle max, failure rate)
    let per_trial: Vec<Vec<(f64, f64, f64)>> = trial_seeds(base)
        .into_par_iter()
        .map(|seed| -> Result<Vec<(f64, f64, f64)>> {
            let net = prepare_network(base, seed)?;
            let vehicle = net.speeds().vehicle_speed;
            sweep
                .max_flight_times
                .iter()
                .map(|&t| {
                    let speeds = SpeedModel {
                        max_flight_time: t,
                        ..*net.speeds()
                    };
                    let net = net.clone().with_speeds(speeds)?;
                    let m = run_on_network(&net, base.uavs, base.mode, base.capacity, &options)?;
                    let mut multi = 0.0f64;
                    let mut ground = 0.0f64;
                    for p in m.successful() {
                        if let (Some(d), Some(time)) = (p.start_depot, p.delivery_time) {
                            multi = multi.max(time);
                            ground = ground.max(net.road_distance(d, p.package) / vehicle);
                        }
                    }
                    Ok((multi, ground, m.failure_rate))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(sweep
        .max_flight_times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let ratios = per_trial
                .iter()
                .filter(|r| r[k].1 > 0.0)
                .map(|r| r[k].0 / r[k].1);
            VsVehicleRow {
                max_flight_time: t,
                trials: base.trials,
                multimodal_max: mean(per_trial.iter().map(|r| r[k].0)),
                vehicle_max: mean(per_trial.iter().map(|r| r[k].1)),
                ratio: mean(ratios),
                failure_rate: mean(per_trial.iter().map(|r| r[k].2)),
            }
        })
        .collect())
}

/// Allocation run time over (K, M) and fleet performance over (N, K).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingSweep {
    /// Fleet runs use its network, pricing, mode, capacity and trials.
    pub base: ExperimentConfig,
    pub allocation_depots: Vec<usize>,
    pub allocation_packages: Vec<usize>,
    /// Random instances timed per (K, M) cell.
    pub allocation_repeats: usize,
    pub fleet_uavs: Vec<usize>,
    pub fleet_depots: Vec<usize>,
}

impl Default for ScalingSweep {
    /// 100 packages and a flight budget that reaches every package directly.
    fn default() -> Self {
        let base = ExperimentConfig {
            network: GeneratorConfig {
                packages: 100,
                speeds: SpeedModel {
                    uav_speed: 13.0,
                    vehicle_speed: 10.0,
                    max_flight_time: 3600.0,
                },
                ..GeneratorConfig::default()
            },
            trials: 10,
            ..ExperimentConfig::default()
        };
        Self {
            base,
            allocation_depots: vec![1, 3, 5, 10, 20, 30],
            allocation_packages: vec![10, 20, 50, 100, 200],
            allocation_repeats: 5,
            fleet_uavs: vec![1, 5, 10, 20, 30],
            fleet_depots: vec![1, 3, 5, 10, 20, 30],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationTimingRow {
    pub depots: usize,
    pub packages: usize,
    pub repeats: usize,
    pub mean_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetRow {
    pub uavs: usize,
    pub depots: usize,
    pub trials: usize,
    /// Allocation plus planning wall-clock per run.
    pub avg_calc_secs: f64,
    /// Mean over trials of the mean per-UAV total time.
    pub avg_delivery_time: f64,
    /// Mean over trials of the slowest UAV's total time.
    pub max_delivery_time: f64,
    pub failure_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTables {
    pub allocation: Vec<AllocationTimingRow>,
    pub fleet: Vec<FleetRow>,
}

pub fn experiment_scaling(sweep: &ScalingSweep) -> Result<ScalingTables> {
    let base = &sweep.base;
    base.validate()?;
    if sweep.allocation_repeats == 0 {
        return Err(Error::Config("allocation_repeats must be positive".into()));
    }
    for (name, v) in [
        ("allocation_depots", &sweep.allocation_depots),
        ("fleet_uavs", &sweep.fleet_uavs),
        ("fleet_depots", &sweep.fleet_depots),
    ] {
        if v.contains(&0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
    }

    // allocation only, on flight-only networks; sequential so timings are
    // not disturbed by other work
    let mut allocation = Vec::new();
    for &k in &sweep.allocation_depots {
        for &m in &sweep.allocation_packages {
            let cfg = GeneratorConfig {
                depots: k,
                packages: m,
                interchanges: 0,
                transit_routes: 0,
                ..base.network.clone()
            };
            let mut secs = 0.0;
            for r in 0..sweep.allocation_repeats as u64 {
                let net = generate_network(&cfg, derive_seed(base.seed, r))?;
                let matrix = allocation_subgraph(&net)?;
                let started = Instant::now();
                allocate(&matrix, 1)?;
                secs += started.elapsed().as_secs_f64();
            }
            allocation.push(AllocationTimingRow {
                depots: k,
                packages: m,
                repeats: sweep.allocation_repeats,
                mean_secs: secs / sweep.allocation_repeats as f64,
            });
        }
    }

    let options = base.search_options();
    let cells: Vec<(usize, usize)> = sweep
        .fleet_depots
        .iter()
        .flat_map(|&k| sweep.fleet_uavs.iter().map(move |&n| (n, k)))
        .collect();
    let per_trial: Vec<Vec<RunMetrics>> = trial_seeds(base)
        .into_iter()
        .map(|seed| -> Result<Vec<RunMetrics>> {
            let mut out = Vec::with_capacity(cells.len());
            let mut cfg = base.clone();
            for &k in &sweep.fleet_depots {
                cfg.network.depots = k;
                let net = prepare_network(&cfg, seed)?;
                for &n in &sweep.fleet_uavs {
                    out.push(run_on_network(&net, n, cfg.mode, cfg.capacity, &options)?);
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let fleet = cells
        .iter()
        .enumerate()
        .map(|(c, &(n, k))| FleetRow {
            uavs: n,
            depots: k,
            trials: base.trials,
            avg_calc_secs: mean(
                per_trial
                    .iter()
                    .map(|t| t[c].timing.allocation_secs + t[c].timing.planning_secs),
            ),
            avg_delivery_time: mean(per_trial.iter().map(|t| t[c].mean_uav_time())),
            max_delivery_time: mean(per_trial.iter().map(|t| t[c].max_time)),
            failure_rate: mean(per_trial.iter().map(|t| t[c].failure_rate)),
        })
        .collect();
    Ok(ScalingTables { allocation, fleet })
}
