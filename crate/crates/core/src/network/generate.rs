use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Node, NodeKind, SpeedModel, TrafficNetwork, TransitRoute};
use crate::{derive_seed, rng::seeded, Error, Result};

/// Parameters of the random benchmark networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    /// K
    pub depots: usize,
    /// M
    pub packages: usize,
    /// L′
    pub interchanges: usize,
    /// L, directed interchange pairs carrying a transit route
    pub transit_routes: usize,
    /// meters
    pub width: f64,
    /// meters
    pub height: f64,
    /// Per-interchange arrival probabilities are drawn uniformly from here.
    pub alpha_range: [f64; 2],
    pub speeds: SpeedModel,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            depots: 2,
            packages: 20,
            interchanges: 40,
            transit_routes: 120,
            width: 10_000.0,
            height: 10_000.0,
            alpha_range: [0.6, 1.0],
            speeds: SpeedModel {
                uav_speed: 13.0,
                vehicle_speed: 10.0,
                max_flight_time: 600.0,
            },
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        self.speeds.validate()?;
        if self.depots == 0 {
            return Err(Error::Generation("at least one depot is required".into()));
        }
        let pairs = self.interchanges * self.interchanges.saturating_sub(1);
        if self.transit_routes > pairs {
            return Err(Error::Generation(format!(
                "{} transit routes requested but only {pairs} directed interchange pairs exist",
                self.transit_routes
            )));
        }
        if !(self.width > 0.0 && self.height > 0.0) {
            return Err(Error::Generation("area must have positive extent".into()));
        }
        let [lo, hi] = self.alpha_range;
        if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
            return Err(Error::Generation(format!(
                "alpha range [{lo}, {hi}] must lie in (0, 1]"
            )));
        }
        Ok(())
    }
}

// Separate streams per node class keep the layout nested across sweeps: the
// first K depots, the packages and the interchanges do not move when another
// count changes, and transit routes are a prefix of one fixed shuffle.
const DEPOT_STREAM: u64 = 1;
const PACKAGE_STREAM: u64 = 2;
const INTERCHANGE_STREAM: u64 = 3;
const ROUTE_STREAM: u64 = 4;

/// Random network in a `width x height` box. Node ids are assigned depots
/// first, then packages, then interchanges. Route lengths follow the street
/// grid (Manhattan distance). Response times start at zero.
pub fn generate_network(config: &GeneratorConfig, seed: u64) -> Result<TrafficNetwork> {
    config.validate()?;
    let mut nodes = Vec::with_capacity(config.depots + config.packages + config.interchanges);

    let place = |kind: NodeKind, count: usize, stream: u64, nodes: &mut Vec<Node>| {
        let mut rng = seeded(derive_seed(seed, stream));
        for _ in 0..count {
            let x = rng.gen_range(0.0..config.width);
            let y = rng.gen_range(0.0..config.height);
            let alpha = (kind == NodeKind::Interchange).then(|| {
                let [lo, hi] = config.alpha_range;
                if lo == hi {
                    lo
                } else {
                    rng.gen_range(lo..=hi)
                }
            });
            nodes.push(Node {
                id: nodes.len(),
                kind,
                x,
                y,
                alpha,
                response_time: 0.0,
            });
        }
    };
    place(NodeKind::Depot, config.depots, DEPOT_STREAM, &mut nodes);
    place(NodeKind::Package, config.packages, PACKAGE_STREAM, &mut nodes);
    place(
        NodeKind::Interchange,
        config.interchanges,
        INTERCHANGE_STREAM,
        &mut nodes,
    );

    let first = config.depots + config.packages;
    let l = config.interchanges;
    let mut pairs: Vec<(usize, usize)> = (0..l)
        .flat_map(|i| (0..l).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    pairs.shuffle(&mut seeded(derive_seed(seed, ROUTE_STREAM)));

    let routes = pairs
        .into_iter()
        .take(config.transit_routes)
        .map(|(i, j)| {
            let (a, b) = (&nodes[first + i], &nodes[first + j]);
            let length = ((a.x - b.x).abs() + (a.y - b.y).abs()).max(1e-6);
            TransitRoute {
                from: first + i,
                to: first + j,
                length,
            }
        })
        .collect();

    TrafficNetwork::new(nodes, routes, config.speeds)
}
