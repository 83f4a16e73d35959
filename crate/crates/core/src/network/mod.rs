//! Traffic network shared by allocation and path planning.
//!
//! Nodes are depots, package addresses and interchange points in a planar box
//! (coordinates in meters). A UAV can fly between any two nodes; flight edges
//! are implicit and complete, with passage time equal to the flight time it
//! consumes. Transit routes are directed interchange-to-interchange road
//! sections on which the UAV rides a vehicle: the passage time is the
//! predicted vehicle response time at the origin plus the vehicle travel time,
//! and no flight time is consumed.
//!
//! On disk a network is one JSON document:
//!
//! ```json
//! {
//!   "nodes": [
//!     {"id": 0, "kind": "depot", "x": 120.0, "y": 40.5},
//!     {"id": 1, "kind": "package", "x": 900.0, "y": 310.0},
//!     {"id": 2, "kind": "interchange", "x": 400.0, "y": 200.0,
//!      "alpha": 0.8, "response_time": 16.7}
//!   ],
//!   "transit_routes": [{"from": 2, "to": 3, "length": 1250.0}],
//!   "speeds": {"uav_speed": 13.0, "vehicle_speed": 10.0, "max_flight_time": 600.0}
//! }
//! ```
//!
//! `id` must equal the node's position in `nodes`. `alpha` is the per-slot
//! vehicle arrival probability used to price the interchange, and
//! `response_time` (seconds) is the predicted wait for a ride; both are only
//! meaningful on interchanges. `length` is the road length of a route in
//! meters.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

mod generate;
mod paths;

pub use generate::{generate_network, GeneratorConfig};
pub use paths::{
    allocation_subgraph, shortest_flight_costs_to, shortest_time_path, shortest_times_from,
    ShortestPath,
};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Depot,
    Package,
    Interchange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub x: f64,
    pub y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub response_time: f64,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Flight,
    Transit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub mode: Mode,
    /// Seconds from leaving `from` to arriving at `to`.
    pub passage_time: f64,
    /// Seconds of flight consumed.
    pub flight_cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitRoute {
    pub from: NodeId,
    pub to: NodeId,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedModel {
    /// m/s
    pub uav_speed: f64,
    /// m/s
    pub vehicle_speed: f64,
    /// Maximum flight time per subtask, seconds. Each direction of a subtask
    /// gets half of it.
    pub max_flight_time: f64,
}

impl SpeedModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("uav_speed", self.uav_speed),
            ("vehicle_speed", self.vehicle_speed),
            ("max_flight_time", self.max_flight_time),
        ] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn half_budget(&self) -> f64 {
        self.max_flight_time / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkFile", into = "NetworkFile")]
pub struct TrafficNetwork {
    nodes: Vec<Node>,
    transit_routes: Vec<TransitRoute>,
    speeds: SpeedModel,
    /// route indices leaving each node
    routes_out: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    nodes: Vec<Node>,
    transit_routes: Vec<TransitRoute>,
    speeds: SpeedModel,
}

impl TryFrom<NetworkFile> for TrafficNetwork {
    type Error = Error;

    fn try_from(f: NetworkFile) -> Result<Self> {
        TrafficNetwork::new(f.nodes, f.transit_routes, f.speeds)
    }
}

impl From<TrafficNetwork> for NetworkFile {
    fn from(n: TrafficNetwork) -> Self {
        NetworkFile {
            nodes: n.nodes,
            transit_routes: n.transit_routes,
            speeds: n.speeds,
        }
    }
}

impl TrafficNetwork {
    pub fn new(
        nodes: Vec<Node>,
        transit_routes: Vec<TransitRoute>,
        speeds: SpeedModel,
    ) -> Result<Self> {
        speeds.validate()?;
        for (i, n) in nodes.iter().enumerate() {
            if n.id != i {
                return Err(Error::Consistency(format!(
                    "node at position {i} carries id {}",
                    n.id
                )));
            }
            if !(n.x.is_finite() && n.y.is_finite()) {
                return Err(Error::Consistency(format!("node {i} has non-finite position")));
            }
            if !(n.response_time >= 0.0 && n.response_time.is_finite()) {
                return Err(Error::Consistency(format!(
                    "node {i} has invalid response time {}",
                    n.response_time
                )));
            }
        }
        if !nodes.iter().any(|n| n.kind == NodeKind::Depot) {
            return Err(Error::Consistency("network needs at least one depot".into()));
        }
        let mut routes_out = vec![Vec::new(); nodes.len()];
        for (r, route) in transit_routes.iter().enumerate() {
            for end in [route.from, route.to] {
                match nodes.get(end) {
                    None => return Err(Error::UnknownNode(end)),
                    Some(n) if n.kind != NodeKind::Interchange => {
                        return Err(Error::Consistency(format!(
                            "transit route {r} ends at non-interchange node {end}"
                        )))
                    }
                    _ => {}
                }
            }
            if route.from == route.to {
                return Err(Error::Consistency(format!("transit route {r} is a loop")));
            }
            if !(route.length > 0.0 && route.length.is_finite()) {
                return Err(Error::Consistency(format!(
                    "transit route {r} has invalid length {}",
                    route.length
                )));
            }
            routes_out[route.from].push(r);
        }
        Ok(Self {
            nodes,
            transit_routes,
            speeds,
            routes_out,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Result<&Node> {
        self.nodes.get(id).ok_or(Error::UnknownNode(id))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn transit_routes(&self) -> &[TransitRoute] {
        &self.transit_routes
    }

    pub fn routes_from(&self, node: NodeId) -> impl Iterator<Item = &TransitRoute> + '_ {
        self.routes_out[node].iter().map(|&r| &self.transit_routes[r])
    }

    pub fn speeds(&self) -> &SpeedModel {
        &self.speeds
    }

    pub fn with_speeds(mut self, speeds: SpeedModel) -> Result<Self> {
        speeds.validate()?;
        self.speeds = speeds;
        Ok(self)
    }

    fn ids_of(&self, kind: NodeKind) -> Vec<NodeId> {
        self.nodes.iter().filter(|n| n.kind == kind).map(|n| n.id).collect()
    }

    pub fn depots(&self) -> Vec<NodeId> {
        self.ids_of(NodeKind::Depot)
    }

    pub fn packages(&self) -> Vec<NodeId> {
        self.ids_of(NodeKind::Package)
    }

    pub fn interchanges(&self) -> Vec<NodeId> {
        self.ids_of(NodeKind::Interchange)
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        self.nodes[id].kind
    }

    pub fn distance(&self, u: NodeId, v: NodeId) -> f64 {
        let (a, b) = (&self.nodes[u], &self.nodes[v]);
        (a.x - b.x).hypot(a.y - b.y)
    }

    /// Road distance between two points on the street grid (Manhattan metric).
    pub fn road_distance(&self, u: NodeId, v: NodeId) -> f64 {
        let (a, b) = (&self.nodes[u], &self.nodes[v]);
        (a.x - b.x).abs() + (a.y - b.y).abs()
    }

    pub fn flight_time(&self, u: NodeId, v: NodeId) -> f64 {
        self.distance(u, v) / self.speeds.uav_speed
    }

    pub fn response_time(&self, id: NodeId) -> f64 {
        self.nodes[id].response_time
    }

    pub fn flight_edge(&self, u: NodeId, v: NodeId) -> Edge {
        let t = self.flight_time(u, v);
        Edge {
            from: u,
            to: v,
            mode: Mode::Flight,
            passage_time: t,
            flight_cost: t,
        }
    }

    pub fn vehicle_time(&self, route: &TransitRoute) -> f64 {
        route.length / self.speeds.vehicle_speed
    }

    /// Transit edge with the predicted response time at the origin folded in.
    pub fn transit_edge(&self, route: &TransitRoute) -> Edge {
        Edge {
            from: route.from,
            to: route.to,
            mode: Mode::Transit,
            passage_time: self.response_time(route.from) + self.vehicle_time(route),
            flight_cost: 0.0,
        }
    }

    /// All edges leaving `u`: a flight edge to every other node plus the
    /// transit routes starting at `u`.
    pub fn edges_from(&self, u: NodeId) -> impl Iterator<Item = Edge> + '_ {
        let flights = (0..self.nodes.len())
            .filter(move |&v| v != u)
            .map(move |v| self.flight_edge(u, v));
        flights.chain(self.routes_from(u).map(move |r| self.transit_edge(r)))
    }

    /// Replaces the interchange response times; `times[i]` belongs to node `i`
    /// and entries for other node kinds must be zero.
    pub fn with_response_times(mut self, times: &[f64]) -> Result<Self> {
        if times.len() != self.nodes.len() {
            return Err(Error::Consistency(format!(
                "{} response times for {} nodes",
                times.len(),
                self.nodes.len()
            )));
        }
        for (node, &t) in self.nodes.iter_mut().zip(times) {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::Consistency(format!(
                    "invalid response time {t} at node {}",
                    node.id
                )));
            }
            if node.kind != NodeKind::Interchange && t != 0.0 {
                return Err(Error::Consistency(format!(
                    "response time on non-interchange node {}",
                    node.id
                )));
            }
            node.response_time = t;
        }
        Ok(self)
    }

    pub fn max_response_time(&self) -> f64 {
        self.nodes.iter().map(|n| n.response_time).fold(0.0, f64::max)
    }
}
