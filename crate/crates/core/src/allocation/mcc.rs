use super::AllocationMatrix;
use crate::{Error, Result};

/// Integral edge usage counts over the allocation graph, by matrix position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CirculationSolution {
    n: usize,
    counts: Vec<u32>,
}

impl CirculationSolution {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            counts: vec![0; n * n],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn x(&self, u: usize, v: usize) -> u32 {
        self.counts[u * self.n + v]
    }

    pub fn add(&mut self, u: usize, v: usize, count: u32) {
        self.counts[u * self.n + v] += count;
    }

    /// Nonzero entries as `(u, v, x_uv)`, row-major.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(move |(i, &c)| (i / self.n, i % self.n, c))
    }

    pub fn objective(&self, matrix: &AllocationMatrix) -> f64 {
        self.edges()
            .map(|(u, v, c)| c as f64 * matrix.weight(u, v))
            .sum()
    }

    /// Checks unit package degrees, depot balance, no self loops and no
    /// package-to-package or repeated depot-package usage.
    pub fn check(&self, matrix: &AllocationMatrix) -> Result<()> {
        if self.n != matrix.len() {
            return Err(Error::Consistency("solution and matrix sizes differ".into()));
        }
        let k = matrix.depots();
        for u in 0..self.n {
            if self.x(u, u) != 0 {
                return Err(Error::Structural(format!("self loop at {u}")));
            }
            let out: u32 = (0..self.n).map(|v| self.x(u, v)).sum();
            let inn: u32 = (0..self.n).map(|v| self.x(v, u)).sum();
            if u >= k {
                if out != 1 || inn != 1 {
                    return Err(Error::Structural(format!(
                        "package {u} has in {inn}, out {out}"
                    )));
                }
                if (k..self.n).any(|v| self.x(u, v) > 0) {
                    return Err(Error::Structural(format!("package {u} feeds a package")));
                }
            } else if out != inn {
                return Err(Error::Structural(format!(
                    "depot {u} unbalanced: in {inn}, out {out}"
                )));
            }
        }
        Ok(())
    }
}

struct Arc {
    to: usize,
    cap: i64,
    cost: f64,
}

struct FlowNetwork {
    arcs: Vec<Arc>,
    out: Vec<Vec<usize>>,
}

impl FlowNetwork {
    fn new(n: usize) -> Self {
        Self {
            arcs: Vec::new(),
            out: vec![Vec::new(); n],
        }
    }

    // arc id is returned; its residual twin is id ^ 1
    fn add(&mut self, from: usize, to: usize, cap: i64, cost: f64) -> usize {
        let id = self.arcs.len();
        self.arcs.push(Arc { to, cap, cost });
        self.out[from].push(id);
        self.arcs.push(Arc {
            to: from,
            cap: 0,
            cost: -cost,
        });
        self.out[to].push(id + 1);
        id
    }

    fn flow(&self, id: usize) -> i64 {
        self.arcs[id ^ 1].cap
    }

    /// Successive shortest paths with Johnson potentials. All original costs
    /// are nonnegative, so zero potentials are valid to start with.
    fn min_cost_flow(&mut self, s: usize, t: usize, demand: i64) -> Result<()> {
        let n = self.out.len();
        let mut potential = vec![0.0f64; n];
        let mut sent = 0;
        while sent < demand {
            let mut dist = vec![f64::INFINITY; n];
            let mut via: Vec<Option<usize>> = vec![None; n];
            let mut done = vec![false; n];
            dist[s] = 0.0;
            loop {
                let mut u = None;
                for v in 0..n {
                    if !done[v] && dist[v].is_finite() && u.is_none_or(|b: usize| dist[v] < dist[b])
                    {
                        u = Some(v);
                    }
                }
                let Some(u) = u else { break };
                done[u] = true;
                for &id in &self.out[u] {
                    let a = &self.arcs[id];
                    if a.cap <= 0 || done[a.to] {
                        continue;
                    }
                    // rounding can push a reduced cost a hair below zero
                    let reduced = (a.cost + potential[u] - potential[a.to]).max(0.0);
                    if dist[u] + reduced < dist[a.to] {
                        dist[a.to] = dist[u] + reduced;
                        via[a.to] = Some(id);
                    }
                }
            }
            if !dist[t].is_finite() {
                return Err(Error::Structural("circulation is infeasible".into()));
            }
            for v in 0..n {
                if dist[v].is_finite() {
                    potential[v] += dist[v];
                }
            }
            let mut push = demand - sent;
            let mut v = t;
            while v != s {
                let id = via[v].expect("path arc");
                push = push.min(self.arcs[id].cap);
                v = self.arcs[id ^ 1].to;
            }
            let mut v = t;
            while v != s {
                let id = via[v].expect("path arc");
                self.arcs[id].cap -= push;
                self.arcs[id ^ 1].cap += push;
                v = self.arcs[id ^ 1].to;
            }
            sent += push;
        }
        Ok(())
    }
}

/// Minimum-cost circulation with every package entered and left exactly once.
///
/// Each package g is split into g_in and g_out joined by an arc with lower and
/// upper bound one. The lower bound is removed the usual way: a source feeds
/// g_out and g_in drains to a sink, and a flow saturating all of them is a
/// feasible circulation. Depot arcs into g_in and out of g_out carry unit
/// capacity; depot-depot arcs are uncapacitated.
pub fn solve_mcc(matrix: &AllocationMatrix) -> Result<CirculationSolution> {
    let k = matrix.depots();
    let m = matrix.packages();
    let n = matrix.len();
    let mut sol = CirculationSolution::new(n);
    if m == 0 {
        return Ok(sol);
    }
    let g_in = |j: usize| k + 2 * j;
    let g_out = |j: usize| k + 2 * j + 1;
    let source = k + 2 * m;
    let sink = source + 1;
    let mut net = FlowNetwork::new(sink + 1);

    let mut tracked = Vec::new();
    for d in 0..k {
        for j in 0..m {
            let g = k + j;
            tracked.push((net.add(d, g_in(j), 1, matrix.weight(d, g)), d, g));
            tracked.push((net.add(g_out(j), d, 1, matrix.weight(g, d)), g, d));
        }
        for e in (0..k).filter(|&e| e != d) {
            tracked.push((net.add(d, e, m as i64, matrix.weight(d, e)), d, e));
        }
    }
    for j in 0..m {
        net.add(source, g_out(j), 1, 0.0);
        net.add(g_in(j), sink, 1, 0.0);
    }
    net.min_cost_flow(source, sink, m as i64)?;

    for (id, u, v) in tracked {
        let f = net.flow(id);
        if f > 0 {
            sol.add(u, v, f as u32);
        }
    }
    sol.check(matrix)?;
    Ok(sol)
}
