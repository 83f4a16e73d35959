use serde::{Deserialize, Serialize};

use super::{Edge, NodeId, TrafficNetwork};
use crate::allocation::AllocationMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortestPath {
    pub edges: Vec<Edge>,
    pub total_time: f64,
}

impl ShortestPath {
    pub fn nodes(&self) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self.edges.first().map(|e| e.from).into_iter().collect();
        out.extend(self.edges.iter().map(|e| e.to));
        out
    }

    pub fn flight_cost(&self) -> f64 {
        self.edges.iter().map(|e| e.flight_cost).sum()
    }
}

// Dense Dijkstra: the flight layer is complete, so a heap buys nothing.
// Ties between equal labels go to the lowest node id.
fn dijkstra<F>(n: usize, source: NodeId, mut relax: F) -> (Vec<f64>, Vec<Option<Edge>>)
where
    F: FnMut(NodeId, &mut dyn FnMut(Edge, f64)),
{
    let mut dist = vec![f64::INFINITY; n];
    let mut pred: Vec<Option<Edge>> = vec![None; n];
    let mut done = vec![false; n];
    dist[source] = 0.0;
    loop {
        let mut u = None;
        for v in 0..n {
            if !done[v] && dist[v].is_finite() && u.is_none_or(|b: usize| dist[v] < dist[b]) {
                u = Some(v);
            }
        }
        let Some(u) = u else { break };
        done[u] = true;
        let du = dist[u];
        relax(u, &mut |e: Edge, w: f64| {
            // `e.to` is the node being improved: forward searches pass the
            // real edge, reverse searches pass it flipped
            let v = e.to;
            if !done[v] && du + w < dist[v] {
                dist[v] = du + w;
                pred[v] = Some(e);
            }
        });
    }
    (dist, pred)
}

/// Minimum passage time from `from` to every node over flight and transit
/// edges, ignoring flight budgets and occupancy.
pub fn shortest_times_from(net: &TrafficNetwork, from: NodeId) -> Result<Vec<f64>> {
    net.node(from)?;
    Ok(forward(net, from).0)
}

fn forward(net: &TrafficNetwork, from: NodeId) -> (Vec<f64>, Vec<Option<Edge>>) {
    dijkstra(net.len(), from, |u, visit| {
        for e in net.edges_from(u) {
            visit(e, e.passage_time);
        }
    })
}

pub fn shortest_time_path(net: &TrafficNetwork, from: NodeId, to: NodeId) -> Result<ShortestPath> {
    net.node(from)?;
    net.node(to)?;
    if from == to {
        return Ok(ShortestPath {
            edges: Vec::new(),
            total_time: 0.0,
        });
    }
    let (dist, pred) = forward(net, from);
    if !dist[to].is_finite() {
        return Err(Error::Structural(format!("no path from {from} to {to}")));
    }
    let mut edges = Vec::new();
    let mut cur = to;
    while cur != from {
        let e = pred[cur].expect("reached node has a predecessor");
        edges.push(e);
        cur = e.from;
    }
    edges.reverse();
    Ok(ShortestPath {
        edges,
        total_time: dist[to],
    })
}

/// Least flight time any route to `goal` must spend, per starting node.
/// Transit legs are free, so this is a reverse search on flight cost.
pub fn shortest_flight_costs_to(net: &TrafficNetwork, goal: NodeId) -> Result<Vec<f64>> {
    net.node(goal)?;
    let n = net.len();
    let mut incoming: Vec<Vec<Edge>> = vec![Vec::new(); n];
    for r in net.transit_routes() {
        incoming[r.to].push(net.transit_edge(r));
    }
    let (dist, _) = dijkstra(n, goal, |v, visit| {
        for u in (0..n).filter(|&u| u != v) {
            let e = net.flight_edge(u, v);
            visit(flip(e), e.flight_cost);
        }
        for e in &incoming[v] {
            visit(flip(*e), e.flight_cost);
        }
    });
    Ok(dist)
}

fn flip(e: Edge) -> Edge {
    Edge {
        from: e.to,
        to: e.from,
        ..e
    }
}

/// Pairwise predicted passage times among depots and packages, depots
/// first, each group in id order.
pub fn allocation_subgraph(net: &TrafficNetwork) -> Result<AllocationMatrix> {
    let depots = net.depots();
    let ids: Vec<NodeId> = depots.iter().copied().chain(net.packages()).collect();
    let n = ids.len();
    let mut weights = vec![0.0; n * n];
    for (i, &u) in ids.iter().enumerate() {
        let dist = forward(net, u).0;
        for (j, &v) in ids.iter().enumerate() {
            weights[i * n + j] = if i == j { 0.0 } else { dist[v] };
        }
    }
    AllocationMatrix::new(ids, depots.len(), weights)
}
