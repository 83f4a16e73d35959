use crate::network::{Mode, NodeId, NodeKind, TrafficNetwork};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchEdge {
    /// Local index of the head.
    pub to: usize,
    pub mode: Mode,
    /// Flight time, or vehicle travel time on a ride.
    pub travel: f64,
    /// Predicted wait for a vehicle at the tail; zero on flights.
    pub response: f64,
    pub flight_cost: f64,
}

impl SearchEdge {
    /// Passage time without conflict waiting.
    pub fn passage_time(&self) -> f64 {
        self.response + self.travel
    }
}

/// Half-subtask search graph over the departure, the endpoint and all
/// interchanges. Local index 0 is the departure, 1 the endpoint.
///
/// The departure flies to the endpoint and to every interchange, and every
/// interchange flies to the endpoint. An ordered interchange pair joined by
/// transit routes gets only those ride edges; any other pair gets a flight.
#[derive(Debug, Clone)]
pub struct SearchGraph {
    nodes: Vec<NodeId>,
    edges: Vec<Vec<SearchEdge>>,
}

pub const DEPARTURE: usize = 0;
pub const ENDPOINT: usize = 1;

impl SearchGraph {
    pub fn new(net: &TrafficNetwork, from: NodeId, to: NodeId) -> Result<Self> {
        for id in [from, to] {
            if net.node(id)?.kind == NodeKind::Interchange {
                return Err(Error::Consistency(format!(
                    "search graph endpoints must be depots or packages, got interchange {id}"
                )));
            }
        }
        if from == to {
            return Err(Error::Consistency(format!("departure and endpoint are both {from}")));
        }
        let interchanges = net.interchanges();
        let mut nodes = vec![from, to];
        nodes.extend(&interchanges);
        let n = nodes.len();
        let mut local = vec![usize::MAX; net.len()];
        for (i, &id) in nodes.iter().enumerate() {
            local[id] = i;
        }

        let flight = |u: usize, v: usize| {
            let t = net.flight_time(nodes[u], nodes[v]);
            SearchEdge {
                to: v,
                mode: Mode::Flight,
                travel: t,
                response: 0.0,
                flight_cost: t,
            }
        };
        let mut edges = vec![Vec::new(); n];
        edges[DEPARTURE] = (1..n).map(|v| flight(DEPARTURE, v)).collect();
        for u in 2..n {
            let mut out = vec![flight(u, ENDPOINT)];
            let mut ridden = vec![false; n];
            let mut rides = Vec::new();
            for r in net.routes_from(nodes[u]) {
                let v = local[r.to];
                ridden[v] = true;
                rides.push(SearchEdge {
                    to: v,
                    mode: Mode::Transit,
                    travel: net.vehicle_time(r),
                    response: net.response_time(nodes[u]),
                    flight_cost: 0.0,
                });
            }
            for v in 2..n {
                if v != u && !ridden[v] {
                    out.push(flight(u, v));
                }
            }
            out.extend(rides);
            edges[u] = out;
        }
        Ok(Self { nodes, edges })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_id(&self, local: usize) -> NodeId {
        self.nodes[local]
    }

    pub fn edges_from(&self, local: usize) -> &[SearchEdge] {
        &self.edges[local]
    }

    fn reverse_dijkstra(&self, cost: impl Fn(&SearchEdge) -> f64) -> Vec<f64> {
        let n = self.len();
        let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (u, out) in self.edges.iter().enumerate() {
            for e in out {
                incoming[e.to].push((u, cost(e)));
            }
        }
        let mut dist = vec![f64::INFINITY; n];
        let mut done = vec![false; n];
        dist[ENDPOINT] = 0.0;
        loop {
            let mut best = None;
            for v in 0..n {
                if !done[v] && dist[v].is_finite() && best.is_none_or(|b: usize| dist[v] < dist[b]) {
                    best = Some(v);
                }
            }
            let Some(v) = best else { break };
            done[v] = true;
            for &(u, c) in &incoming[v] {
                if dist[v] + c < dist[u] {
                    dist[u] = dist[v] + c;
                }
            }
        }
        dist
    }

    /// Unconstrained shortest passage time to the endpoint, per local node.
    pub fn time_to_goal(&self) -> Vec<f64> {
        self.reverse_dijkstra(SearchEdge::passage_time)
    }

    /// Least flight time any route to the endpoint consumes, per local node.
    pub fn flight_to_goal(&self) -> Vec<f64> {
        self.reverse_dijkstra(|e| e.flight_cost)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::tests::{node, speeds};
    use crate::network::TransitRoute;

    fn net() -> TrafficNetwork {
        let mut nodes = vec![
            node(0, NodeKind::Depot, 0.0, 0.0),
            node(1, NodeKind::Package, 1000.0, 0.0),
            node(2, NodeKind::Interchange, 100.0, 0.0),
            node(3, NodeKind::Interchange, 900.0, 0.0),
        ];
        nodes[2].response_time = 4.0;
        let routes = vec![TransitRoute {
            from: 2,
            to: 3,
            length: 800.0,
        }];
        TrafficNetwork::new(nodes, routes, speeds()).unwrap()
    }

    #[test]
    fn definition_edges() {
        let g = SearchGraph::new(&net(), 0, 1).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(g.edges_from(DEPARTURE).len(), 3);
        assert!(g.edges_from(ENDPOINT).is_empty());
        // 2 -> 3 is a transit route: ride only, no parallel flight
        let from2: Vec<_> = g.edges_from(2).iter().filter(|e| e.to == 3).collect();
        assert_eq!(from2.len(), 1);
        assert_eq!(from2[0].mode, Mode::Transit);
        assert_eq!(from2[0].flight_cost, 0.0);
        assert_eq!(from2[0].passage_time(), 84.0);
        // 3 -> 2 is not: flight
        let from3: Vec<_> = g.edges_from(3).iter().filter(|e| e.to == 2).collect();
        assert_eq!(from3[0].mode, Mode::Flight);
        assert_eq!(from3[0].flight_cost, from3[0].passage_time());
    }

    #[test]
    fn heuristics() {
        let g = SearchGraph::new(&net(), 0, 1).unwrap();
        let h = g.time_to_goal();
        assert!((h[DEPARTURE] - 100.0).abs() < 1e-9);
        assert!((h[2] - 90.0).abs() < 1e-9);
        let hf = g.flight_to_goal();
        assert!((hf[DEPARTURE] - 20.0).abs() < 1e-9);
        assert_eq!(hf[ENDPOINT], 0.0);
    }

    #[test]
    fn rejects_interchange_endpoints() {
        assert!(SearchGraph::new(&net(), 2, 1).is_err());
        assert!(SearchGraph::new(&net(), 0, 0).is_err());
    }
}
