//! End-to-end runs and the experiment suites.
//!
//! A run generates (or loads) a network, prices every interchange to get its
//! predicted response time, allocates packages to UAVs and then plans the
//! subtasks round-robin across UAVs, committing interchange reservations as
//! it goes. Experiments repeat runs over seeded trials and sweep one or two
//! parameters, writing one CSV per table.
//!
//! Configuration is JSON:
//!
//! ```json
//! {
//!   "seed": 7,
//!   "network": {
//!     "depots": 2, "packages": 20, "interchanges": 40, "transit_routes": 120,
//!     "width": 10000.0, "height": 10000.0, "alpha_range": [0.6, 1.0],
//!     "speeds": {"uav_speed": 13.0, "vehicle_speed": 10.0, "max_flight_time": 600.0}
//!   },
//!   "pricing": {"b": 2.0, "rho": 0.9, "horizon": 100, "slot_seconds": 60.0},
//!   "uavs": 5,
//!   "mode": "multi-hop",
//!   "capacity": 1,
//!   "trials": 50,
//!   "budget_secs": 300.0,
//!   "max_response_time": null
//! }
//! ```
//!
//! Only `seed` is required; every other field falls back to the value shown.
//! `mode` is one of `direct`, `single-hop`, `multi-hop`. When
//! `max_response_time` (seconds) is set, all response times are scaled so the
//! slowest interchange has exactly that value.

use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::network::GeneratorConfig;
use crate::pathfinding::{DeliveryMode, SearchOptions};
use crate::pricing::PricingParams;
use crate::{Error, Result};

mod experiments;
mod pipeline;

pub use experiments::{
    count_violations, experiment_capacity, experiment_failure_rate, experiment_scaling,
    experiment_vs_vehicle, write_rows, AllocationTimingRow, CapacityRow, CapacitySweep,
    FailureRateRow, FailureRateSweep, FleetRow, ScalingSweep, ScalingTables, Trend,
    VsVehicleRow, VsVehicleSweep,
};
pub use pipeline::{
    assign_response_times, prepare_network, response_times, run_on_network, run_pipeline,
    trace_on_network, PackageOutcome, RunMetrics, RunTiming, RunTrace,
};

/// Pricing constants shared by all interchanges; each interchange brings its
/// own arrival probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PricingConfig {
    pub b: f64,
    pub rho: f64,
    pub horizon: usize,
    /// Seconds per pricing slot.
    pub slot_seconds: f64,
}

impl Default for PricingConfig {
    fn default() -> Self {
        Self {
            b: 2.0,
            rho: 0.9,
            horizon: 100,
            slot_seconds: 60.0,
        }
    }
}

impl PricingConfig {
    pub fn params(&self, alpha: f64) -> Result<PricingParams> {
        PricingParams::new(alpha, self.b, self.rho, self.horizon)
    }

    pub fn validate(&self) -> Result<()> {
        self.params(1.0).map_err(|e| Error::Config(e.to_string()))?;
        if !(self.slot_seconds > 0.0 && self.slot_seconds.is_finite()) {
            return Err(Error::Config("slot_seconds must be positive".into()));
        }
        Ok(())
    }
}

fn default_of<T: Default>() -> T {
    T::default()
}

fn defaults() -> ExperimentConfig {
    ExperimentConfig::default()
}

fn default_uavs() -> usize {
    defaults().uavs
}

fn default_mode() -> DeliveryMode {
    defaults().mode
}

fn default_capacity() -> usize {
    defaults().capacity
}

fn default_trials() -> usize {
    defaults().trials
}

fn default_budget() -> f64 {
    defaults().budget_secs
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; required in config files.
    pub seed: u64,
    #[serde(default = "default_of")]
    pub network: GeneratorConfig,
    #[serde(default = "default_of")]
    pub pricing: PricingConfig,
    /// N
    #[serde(default = "default_uavs")]
    pub uavs: usize,
    #[serde(default = "default_mode")]
    pub mode: DeliveryMode,
    /// Landing slots per interchange.
    #[serde(default = "default_capacity")]
    pub capacity: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Wall-clock limit per subtask, seconds.
    #[serde(default = "default_budget")]
    pub budget_secs: f64,
    #[serde(default)]
    pub max_response_time: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            network: GeneratorConfig::default(),
            pricing: PricingConfig::default(),
            uavs: 5,
            mode: DeliveryMode::MultiHop,
            capacity: 1,
            trials: 50,
            budget_secs: 300.0,
            max_response_time: None,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.network
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.pricing.validate()?;
        for (name, v) in [
            ("uavs", self.uavs),
            ("capacity", self.capacity),
            ("trials", self.trials),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !(self.budget_secs > 0.0) {
            return Err(Error::Config("budget_secs must be positive".into()));
        }
        if let Some(w) = self.max_response_time {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::Config(format!("invalid max_response_time {w}")));
            }
        }
        Ok(())
    }

    pub fn search_options(&self) -> SearchOptions {
        SearchOptions {
            time_budget: Duration::from_secs_f64(self.budget_secs),
            ..SearchOptions::default()
        }
    }
}
