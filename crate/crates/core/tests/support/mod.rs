//! Independent oracles and instance builders shared by the integration and
//! acceptance tests. Nothing here calls the solver being checked.
#![allow(dead_code)]

use hitchplan::allocation::AllocationMatrix;
use hitchplan::network::{
    allocation_subgraph, generate_network, GeneratorConfig, Node, NodeId, NodeKind, SpeedModel,
    TrafficNetwork, TransitRoute,
};
use hitchplan::simulator::assign_response_times;
use rand::Rng;

pub fn node(id: NodeId, kind: NodeKind, x: f64, y: f64) -> Node {
    Node {
        id,
        kind,
        x,
        y,
        alpha: None,
        response_time: 0.0,
    }
}

pub fn speeds(uav: f64, vehicle: f64, max_flight: f64) -> SpeedModel {
    SpeedModel {
        uav_speed: uav,
        vehicle_speed: vehicle,
        max_flight_time: max_flight,
    }
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

/// Minimum of the circulation problem by enumeration: every package picks the
/// depot it is served from and the depot it returns to, and the depot
/// imbalance is settled along the cheaper depot-depot direction. One or two
/// depots only.
pub fn brute_mct(matrix: &AllocationMatrix) -> f64 {
    let k = matrix.depots();
    let m = matrix.packages();
    assert!((1..=2).contains(&k), "oracle handles one or two depots");
    let choices = k * k;
    let mut best = f64::INFINITY;
    let mut code = vec![0usize; m];
    loop {
        let mut cost = 0.0;
        let mut balance = [0i64; 2];
        for (j, &c) in code.iter().enumerate() {
            let g = k + j;
            let (d_in, d_out) = (c / k, c % k);
            cost += matrix.weight(d_in, g) + matrix.weight(g, d_out);
            balance[d_in] -= 1;
            balance[d_out] += 1;
        }
        if k == 2 {
            // surplus arrivals at depot 0 must be flown on to depot 1
            if balance[0] > 0 {
                cost += balance[0] as f64 * matrix.weight(0, 1);
            } else if balance[0] < 0 {
                cost += (-balance[0]) as f64 * matrix.weight(1, 0);
            }
        }
        best = best.min(cost);
        // next code in base `choices`
        let mut i = 0;
        while i < m {
            code[i] += 1;
            if code[i] < choices {
                break;
            }
            code[i] = 0;
            i += 1;
        }
        if i == m {
            break;
        }
    }
    if m == 0 {
        0.0
    } else {
        best
    }
}

/// Cheapest chained subtask sequence per package subset: `d0, g1, d1, g2, ...`
/// with free choice of every depot and of the order. Indexed by bit mask.
pub fn chain_costs(matrix: &AllocationMatrix) -> Vec<f64> {
    let k = matrix.depots();
    let m = matrix.packages();
    let full = 1usize << m;
    // f[mask * k + d]: cheapest chain covering mask and ending at depot d
    let mut f = vec![f64::INFINITY; full * k];
    for d in 0..k {
        f[d] = 0.0;
    }
    for mask in 0..full {
        for d in 0..k {
            let here = f[mask * k + d];
            if !here.is_finite() {
                continue;
            }
            for j in (0..m).filter(|j| mask & (1 << j) == 0) {
                let g = k + j;
                for e in 0..k {
                    let next = (mask | 1 << j) * k + e;
                    let c = here + matrix.weight(d, g) + matrix.weight(g, e);
                    if c < f[next] {
                        f[next] = c;
                    }
                }
            }
        }
    }
    (0..full)
        .map(|mask| (0..k).map(|d| f[mask * k + d]).fold(f64::INFINITY, f64::min))
        .collect()
}

/// Optimal makespan over every split of the packages among `n` UAVs.
pub fn brute_min_max(matrix: &AllocationMatrix, n: usize) -> f64 {
    let m = matrix.packages();
    let cost = chain_costs(matrix);
    let mut best = f64::INFINITY;
    let mut owner = vec![0usize; m];
    loop {
        let mut masks = vec![0usize; n];
        for (j, &o) in owner.iter().enumerate() {
            masks[o] |= 1 << j;
        }
        let makespan = masks.iter().map(|&s| cost[s]).fold(0.0, f64::max);
        best = best.min(makespan);
        let mut i = 0;
        while i < m {
            owner[i] += 1;
            if owner[i] < n {
                break;
            }
            owner[i] = 0;
            i += 1;
        }
        if i == m {
            break;
        }
    }
    best
}

/// Every simple path from `from` to `to` over the half-subtask graph, built
/// straight from the network: flights between any two of {from, to,
/// interchanges}, except that an interchange pair served by transit routes
/// only has those rides. Returns the fastest (time, flight) within `budget`.
pub fn brute_half(net: &TrafficNetwork, from: NodeId, to: NodeId, budget: f64) -> Option<(f64, f64)> {
    if from == to {
        return Some((0.0, 0.0));
    }
    let mut nodes = vec![from, to];
    nodes.extend(net.interchanges());
    let interchange = |id: NodeId| net.kind(id) == NodeKind::Interchange;
    // (head index, time, flight)
    let mut edges: Vec<Vec<(usize, f64, f64)>> = vec![Vec::new(); nodes.len()];
    for (a, &u) in nodes.iter().enumerate() {
        for (b, &v) in nodes.iter().enumerate() {
            if a == b || v == from || u == to {
                continue;
            }
            let rides: Vec<&TransitRoute> = net
                .transit_routes()
                .iter()
                .filter(|r| r.from == u && r.to == v)
                .collect();
            if interchange(u) && interchange(v) && !rides.is_empty() {
                for r in rides {
                    let t = net.node(u).unwrap().response_time + r.length / net.speeds().vehicle_speed;
                    edges[a].push((b, t, 0.0));
                }
            } else {
                let (p, q) = (net.node(u).unwrap(), net.node(v).unwrap());
                let f = (p.x - q.x).hypot(p.y - q.y) / net.speeds().uav_speed;
                edges[a].push((b, f, f));
            }
        }
    }
    let mut best: Option<(f64, f64)> = None;
    let mut visited = vec![false; nodes.len()];
    fn walk(
        u: usize,
        time: f64,
        flight: f64,
        budget: f64,
        edges: &[Vec<(usize, f64, f64)>],
        visited: &mut Vec<bool>,
        best: &mut Option<(f64, f64)>,
    ) {
        if u == 1 {
            if best.is_none_or(|(t, _)| time < t) {
                *best = Some((time, flight));
            }
            return;
        }
        visited[u] = true;
        for &(v, t, f) in &edges[u] {
            if !visited[v] && flight + f <= budget {
                walk(v, time + t, flight + f, budget, edges, visited, best);
            }
        }
        visited[u] = false;
    }
    walk(0, 0.0, 0.0, budget, &edges, &mut visited, &mut best);
    best
}

/// Fastest half-subtask with at most one ride and no other traffic.
pub fn scan_single_hop(net: &TrafficNetwork, from: NodeId, to: NodeId) -> Option<f64> {
    let s = net.speeds();
    let budget = s.max_flight_time / 2.0;
    let pos = |id: NodeId| {
        let n = net.node(id).unwrap();
        (n.x, n.y)
    };
    let fly = |a: NodeId, b: NodeId| {
        let (p, q) = (pos(a), pos(b));
        (p.0 - q.0).hypot(p.1 - q.1) / s.uav_speed
    };
    let mut options = Vec::new();
    if fly(from, to) <= budget {
        options.push(fly(from, to));
    }
    for r in net.transit_routes() {
        let (a, b) = (fly(from, r.from), fly(r.to, to));
        if a + b <= budget {
            let ride = net.node(r.from).unwrap().response_time + r.length / s.vehicle_speed;
            options.push(a + ride + b);
        }
    }
    options.into_iter().reduce(f64::min)
}

/// Random network small enough for `brute_half`: one depot, one package and
/// up to `max_interchanges` interchanges with random rides and response
/// times. The flight budget ranges from clearly binding to slack.
pub fn random_small_net<R: Rng>(rng: &mut R, max_interchanges: usize) -> TrafficNetwork {
    let l = rng.gen_range(0..=max_interchanges);
    let mut nodes = vec![
        node(0, NodeKind::Depot, rng.gen_range(0.0..200.0), rng.gen_range(0.0..2000.0)),
        node(1, NodeKind::Package, rng.gen_range(1800.0..2000.0), rng.gen_range(0.0..2000.0)),
    ];
    for i in 0..l {
        let mut n = node(2 + i, NodeKind::Interchange, rng.gen_range(0.0..2000.0), rng.gen_range(0.0..2000.0));
        n.response_time = rng.gen_range(0.0..60.0);
        nodes.push(n);
    }
    let mut routes = Vec::new();
    for i in 0..l {
        for j in 0..l {
            if i != j && rng.gen_bool(0.35) {
                let (a, b) = (&nodes[2 + i], &nodes[2 + j]);
                let length = ((a.x - b.x).abs() + (a.y - b.y).abs()) * rng.gen_range(0.8..1.2);
                routes.push(TransitRoute {
                    from: 2 + i,
                    to: 2 + j,
                    length,
                });
            }
        }
    }
    let direct = {
        let (a, b) = (&nodes[0], &nodes[1]);
        (a.x - b.x).hypot(a.y - b.y) / 10.0
    };
    let s = speeds(10.0, rng.gen_range(15.0..40.0), 2.0 * direct * rng.gen_range(0.2..1.3));
    TrafficNetwork::new(nodes, routes, s).unwrap()
}

/// Two to three UAVs whose fast routes all board at the same interchange.
///
/// Depots sit near x = 0 and packages near x = 3000 m; a ride corridor
/// joins an interchange by the depots to one by the packages, a slower
/// corridor runs parallel to it, and a few stray interchanges are scattered
/// around. The flight budget rules out flying the whole way.
pub fn conflict_instance<R: Rng>(rng: &mut R) -> (TrafficNetwork, Vec<hitchplan::allocation::Subtask>, Vec<f64>) {
    use hitchplan::allocation::Subtask;
    let agents = rng.gen_range(2..=3);
    let mut nodes = vec![node(0, NodeKind::Depot, rng.gen_range(-50.0..50.0), rng.gen_range(-100.0..100.0))];
    let depots = 1 + usize::from(rng.gen_bool(0.5));
    if depots == 2 {
        nodes.push(node(1, NodeKind::Depot, rng.gen_range(-50.0..50.0), rng.gen_range(-100.0..100.0)));
    }
    for _ in 0..agents {
        let id = nodes.len();
        nodes.push(node(id, NodeKind::Package, rng.gen_range(2950.0..3050.0), rng.gen_range(-150.0..150.0)));
    }
    let first = nodes.len();
    let places = [
        (150.0, 0.0),
        (2850.0, 0.0),
        (150.0, 300.0),
        (2850.0, 300.0),
    ];
    for (i, (x, y)) in places.iter().enumerate() {
        let mut n = node(first + i, NodeKind::Interchange, x + rng.gen_range(-40.0..40.0), y + rng.gen_range(-40.0..40.0));
        n.response_time = rng.gen_range(10.0..60.0);
        nodes.push(n);
    }
    for _ in 0..rng.gen_range(0..=3) {
        let id = nodes.len();
        let mut n = node(id, NodeKind::Interchange, rng.gen_range(0.0..3000.0), rng.gen_range(-500.0..500.0));
        n.response_time = rng.gen_range(10.0..60.0);
        nodes.push(n);
    }
    let (a, b, a2, b2) = (first, first + 1, first + 2, first + 3);
    let slow = rng.gen_range(1.1..1.6);
    let mut routes = vec![
        TransitRoute { from: a, to: b, length: 2700.0 },
        TransitRoute { from: b, to: a, length: 2700.0 },
        TransitRoute { from: a2, to: b2, length: 2700.0 * slow },
        TransitRoute { from: b2, to: a2, length: 2700.0 * slow },
    ];
    let strays: Vec<NodeId> = (first + 4..nodes.len()).collect();
    for &s in &strays {
        if rng.gen_bool(0.5) {
            let t = [a, b, a2, b2][rng.gen_range(0..4)];
            let (p, q) = (&nodes[s], &nodes[t]);
            let length = (p.x - q.x).abs() + (p.y - q.y).abs() + 1.0;
            routes.push(TransitRoute { from: s, to: t, length });
        }
    }
    let net = TrafficNetwork::new(nodes, routes, speeds(10.0, 20.0, 200.0)).unwrap();
    let packages = net.packages();
    let subtasks = (0..agents)
        .map(|n| Subtask {
            start_depot: n % depots,
            package: packages[n],
            end_depot: rng.gen_range(0..depots),
        })
        .collect();
    let starts = (0..agents).map(|_| rng.gen_range(0.0..30.0)).collect();
    (net, subtasks, starts)
}

// allocation instance on a small generated network, waits scaled to 20 s
pub fn allocation_instance(k: usize, m: usize, routes: usize, seed: u64) -> AllocationMatrix {
    let cfg = GeneratorConfig {
        depots: k,
        packages: m,
        interchanges: 4,
        transit_routes: routes,
        width: 1000.0,
        height: 1000.0,
        alpha_range: [0.6, 1.0],
        speeds: SpeedModel {
            uav_speed: 13.0,
            vehicle_speed: 30.0,
            max_flight_time: 600.0,
        },
    };
    let net = generate_network(&cfg, seed).unwrap();
    let net = assign_response_times(net, &Default::default(), Some(20.0)).unwrap();
    allocation_subgraph(&net).unwrap()
}

pub fn beta_gamma(matrix: &AllocationMatrix, merges: usize, n: usize) -> (f64, f64) {
    let k = matrix.depots();
    let mut round = 0.0f64;
    for d in 0..k {
        for e in 0..k {
            if d != e {
                round = round.max(matrix.weight(d, e) + matrix.weight(e, d));
            }
        }
    }
    let mut gamma = 0.0f64;
    for d in 0..k {
        for g in k..matrix.len() {
            for e in 0..k {
                gamma = gamma.max(matrix.weight(d, g) + matrix.weight(g, e));
            }
        }
    }
    (merges as f64 / n as f64 * round, gamma)
}
