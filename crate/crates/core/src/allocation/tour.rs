use super::{AllocationMatrix, AllocationPlan, CirculationSolution, Subtask};
use crate::{Error, Result};

/// Circulation edges plus the depot round trips that connect its components.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedMultigraph {
    pub edges: CirculationSolution,
    /// Number of merges performed (a).
    pub merges: usize,
    /// Total weight of the added round trips.
    pub added_weight: f64,
    /// Depot pairs joined, in merge order.
    pub merged_pairs: Vec<(usize, usize)>,
}

/// Closed walk through every package, as network node ids.
#[derive(Debug, Clone, PartialEq)]
pub struct GrandTour {
    /// Starts and ends at the same depot; empty when there are no packages.
    pub stops: Vec<usize>,
    /// |T|, including the merge edges.
    pub weight: f64,
    /// Tour order cut into consecutive (d, g, d') triples.
    pub subtasks: Vec<Subtask>,
    /// w_dg + w_gd' for each subtask.
    pub subtask_times: Vec<f64>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

pub fn merge_components(
    solution: &CirculationSolution,
    matrix: &AllocationMatrix,
) -> Result<MergedMultigraph> {
    let n = matrix.len();
    if solution.len() != n {
        return Err(Error::Consistency("solution and matrix sizes differ".into()));
    }
    let mut parent: Vec<usize> = (0..n).collect();
    let mut active = vec![false; n];
    for (u, v, _) in solution.edges() {
        active[u] = true;
        active[v] = true;
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        parent[a.max(b)] = a.min(b);
    }
    let mut roots: Vec<usize> = (0..n)
        .filter(|&u| active[u])
        .map(|u| find(&mut parent, u))
        .collect();
    roots.sort_unstable();
    roots.dedup();
    for &r in &roots {
        let has_depot = (0..matrix.depots()).any(|d| active[d] && find(&mut parent, d) == r);
        if !has_depot {
            return Err(Error::Structural(format!(
                "component containing node {r} has no depot"
            )));
        }
    }

    let mut edges = solution.clone();
    let mut merges = 0;
    let mut added_weight = 0.0;
    let mut merged_pairs = Vec::new();
    let depots: Vec<usize> = (0..matrix.depots()).filter(|&d| active[d]).collect();
    let mut components = roots.len();
    while components > 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for (i, &d) in depots.iter().enumerate() {
            for &e in &depots[i + 1..] {
                if find(&mut parent, d) == find(&mut parent, e) {
                    continue;
                }
                let cost = matrix.weight(d, e) + matrix.weight(e, d);
                if best.is_none_or(|(c, _, _)| cost < c) {
                    best = Some((cost, d, e));
                }
            }
        }
        let (cost, d, e) = best.expect("separate components each hold a depot");
        edges.add(d, e, 1);
        edges.add(e, d, 1);
        let (a, b) = (find(&mut parent, d), find(&mut parent, e));
        parent[a.max(b)] = a.min(b);
        merges += 1;
        added_weight += cost;
        merged_pairs.push((d, e));
        components -= 1;
    }
    Ok(MergedMultigraph {
        edges,
        merges,
        added_weight,
        merged_pairs,
    })
}

/// Eulerian circuit (Hierholzer, lowest-index neighbour first) from the
/// lowest depot that has edges, then cut into subtasks.
///
/// A package always sits between two depot runs. Its subtask starts at the
/// last depot of the run before it and ends at the last depot of the run
/// after it, so consecutive subtasks chain; skipping the intermediate depots
/// never costs more when the weights are shortest-path times.
pub fn extract_tour(merged: &MergedMultigraph, matrix: &AllocationMatrix) -> Result<GrandTour> {
    let g = &merged.edges;
    let n = g.len();
    if n != matrix.len() {
        return Err(Error::Consistency("multigraph and matrix sizes differ".into()));
    }
    let mut remaining = vec![0u32; n * n];
    let mut out_deg = vec![0u64; n];
    let mut in_deg = vec![0u64; n];
    let mut total = 0u64;
    for (u, v, c) in g.edges() {
        remaining[u * n + v] = c;
        out_deg[u] += c as u64;
        in_deg[v] += c as u64;
        total += c as u64;
    }
    if let Some(u) = (0..n).find(|&u| out_deg[u] != in_deg[u]) {
        return Err(Error::Structural(format!(
            "node {u} has in-degree {} and out-degree {}",
            in_deg[u], out_deg[u]
        )));
    }
    if total == 0 {
        return Ok(GrandTour {
            stops: Vec::new(),
            weight: 0.0,
            subtasks: Vec::new(),
            subtask_times: Vec::new(),
        });
    }
    let Some(start) = (0..matrix.depots()).find(|&d| out_deg[d] > 0) else {
        return Err(Error::Structural("no depot lies on the tour".into()));
    };

    let mut cursor = vec![0usize; n];
    let mut stack = vec![start];
    let mut circuit = Vec::with_capacity(total as usize + 1);
    while let Some(&u) = stack.last() {
        while cursor[u] < n && remaining[u * n + cursor[u]] == 0 {
            cursor[u] += 1;
        }
        if cursor[u] < n {
            let v = cursor[u];
            remaining[u * n + v] -= 1;
            stack.push(v);
        } else {
            circuit.push(u);
            stack.pop();
        }
    }
    circuit.reverse();
    if circuit.len() as u64 != total + 1 {
        return Err(Error::Structural("edge multiset is not connected".into()));
    }

    let weight = circuit.windows(2).map(|w| matrix.weight(w[0], w[1])).sum();
    let positions: Vec<usize> = (0..circuit.len())
        .filter(|&p| !matrix.is_depot(circuit[p]))
        .collect();
    let mut subtasks = Vec::with_capacity(positions.len());
    let mut subtask_times = Vec::with_capacity(positions.len());
    for (i, &p) in positions.iter().enumerate() {
        let s = circuit[p - 1];
        let e = match positions.get(i + 1) {
            Some(&q) => circuit[q - 1],
            None => *circuit.last().expect("nonempty circuit"),
        };
        let pkg = circuit[p];
        if !matrix.is_depot(s) || !matrix.is_depot(e) {
            return Err(Error::Structural(format!(
                "package {} is adjacent to another package",
                matrix.id(pkg)
            )));
        }
        subtasks.push(Subtask {
            start_depot: matrix.id(s),
            package: matrix.id(pkg),
            end_depot: matrix.id(e),
        });
        subtask_times.push(matrix.weight(s, pkg) + matrix.weight(pkg, e));
    }
    Ok(GrandTour {
        stops: circuit.iter().map(|&i| matrix.id(i)).collect(),
        weight,
        subtasks,
        subtask_times,
    })
}

/// Cuts the subtask sequence into `n_uavs` consecutive blocks. Each UAV but
/// the last keeps taking subtasks while its load is below |T|/N; the last
/// takes the rest. Every load thus stays within |T|/N plus one subtask.
pub fn split_tour(tour: &GrandTour, n_uavs: usize) -> Result<AllocationPlan> {
    if n_uavs == 0 {
        return Err(Error::Parameter("at least one UAV is required".into()));
    }
    let target = tour.weight / n_uavs as f64;
    let eps = 1e-9 * tour.weight.max(1.0);
    let mut orders = vec![Vec::new(); n_uavs];
    let mut predicted_times = vec![0.0; n_uavs];
    let mut next = 0;
    for n in 0..n_uavs {
        let last = n + 1 == n_uavs;
        while next < tour.subtasks.len() && (last || predicted_times[n] + eps < target) {
            orders[n].push(tour.subtasks[next]);
            predicted_times[n] += tour.subtask_times[next];
            next += 1;
        }
    }
    Ok(AllocationPlan {
        orders,
        predicted_times,
    })
}
