//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

mod support;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use hitchplan::allocation::allocate;
use hitchplan::pathfinding::{
    plan_cbs_reference, plan_multi_hop_cabps, CbsOptions, OccupancyTable, SearchOptions,
};
use hitchplan::pricing::{
    backward_recursion, dp_oracle, optimal_schedule, policy_price, recursion_step,
    simulate_waiting, steady_state, PricingParams,
};
use hitchplan::simulator::{
    count_violations, experiment_capacity, experiment_failure_rate, experiment_scaling,
    experiment_vs_vehicle, CapacitySweep, FailureRateSweep, ScalingSweep, Trend, VsVehicleSweep,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{
    allocation_instance, beta_gamma, brute_half, brute_mct, brute_min_max, close,
    conflict_instance, random_small_net,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn run(id: usize, name: &str, limit: Duration, check: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = check();
    let elapsed = start.elapsed();
    let in_time = elapsed < limit;
    let pass = o.pass && in_time;
    println!(
        "{} {id:>2} {name}: {}; {:.2} s (limit {} s{})",
        if pass { "PASS" } else { "FAIL" },
        o.detail,
        elapsed.as_secs_f64(),
        limit.as_secs(),
        if in_time { "" } else { ", exceeded" }
    );
    pass
}

const SEED: u64 = 20240601;

fn pricing_vs_grid_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut sets = 0;
    let mut redrawn = 0;
    let mut worst = 0.0f64;
    let mut bad = 0;
    while sets < 20 {
        let p = PricingParams::new(
            rng.gen_range(0.6..=1.0),
            rng.gen_range(0.5..=5.0),
            rng.gen_range(0.5..=0.99),
            rng.gen_range(1..=10),
        )
        .unwrap();
        let c = backward_recursion(&p).unwrap();
        if optimal_schedule(&p, &c).unwrap().clamped {
            redrawn += 1;
            continue;
        }
        sets += 1;
        let o = dp_oracle(&p, 2001).unwrap();
        let s = &o.schedule;
        for t in 0..p.horizon {
            let want = policy_price(&p, c.q[t + 1], c.m[t + 1], s.expected_wait[t]).clamp(0.0, p.b);
            let gap = (s.price[t] - want).abs();
            worst = worst.max(gap / o.price_step);
            if gap > o.price_step + 1e-12 {
                bad += 1;
            }
        }
    }
    outcome(
        bad == 0,
        format!("20 sets ({redrawn} clamped draws replaced), worst gap {worst:.3} grid steps, {bad} states off by more than one step"),
    )
}

fn steady_state_values() -> Outcome {
    let p = PricingParams::new(1.0, 2.0, 0.9, 1).unwrap();
    let ss = steady_state(&p).unwrap();
    let (dq, dm) = ((ss.q_star - 1.92951).abs(), (ss.m_star - 3.58690).abs());
    let (mut q, mut m) = (1.0, 0.0);
    let mut steps = 0;
    while steps < 60 && ((q - ss.q_star).abs() >= 1e-6 || (m - ss.m_star).abs() >= 1e-6) {
        (q, m) = recursion_step(&p, q, m);
        steps += 1;
    }
    let converged = (q - ss.q_star).abs() < 1e-6 && (m - ss.m_star).abs() < 1e-6;
    outcome(
        dq < 1e-4 && dm < 1e-4 && converged,
        format!(
            "q* = {:.7} (err {dq:.1e}), m* = {:.5} (err {dm:.1e}), within 1e-6 after {steps} reverse steps",
            ss.q_star, ss.m_star
        ),
    )
}

fn schedule_shape() -> Outcome {
    let p = PricingParams::new(1.0, 2.0, 0.9, 100).unwrap();
    let s = optimal_schedule(&p, &backward_recursion(&p).unwrap()).unwrap();
    let (price, wait) = (&s.price, &s.expected_wait);
    let tol = 1e-3;
    let (p_top, w_top) = (price[50], wait[50]);
    // first slot on the plateau, and last slot still on it
    let rise = price.iter().position(|&x| (x - p_top).abs() < tol).unwrap_or(100);
    let fall = (0..100).rev().find(|&t| (price[t] - p_top).abs() < tol).unwrap_or(0);
    let mut ok = true;
    ok &= (0..rise).all(|t| price[t + 1] >= price[t]);
    ok &= (rise..=fall).all(|t| (price[t] - p_top).abs() < tol);
    ok &= price[100] == 0.0;
    let w_rise = wait.iter().position(|&w| (w - w_top).abs() < tol).unwrap_or(100);
    let w_end = (0..=100).rev().find(|&t| (wait[t] - w_top).abs() < tol).unwrap_or(0);
    ok &= (0..w_rise).all(|t| wait[t + 1] >= wait[t]);
    ok &= (w_rise..=w_end).all(|t| (wait[t] - w_top).abs() < tol);
    ok &= w_end < 100 && (w_end..100).all(|t| wait[t + 1] > wait[t]);
    ok &= !s.clamped;
    outcome(
        ok,
        format!(
            "p rises over t<{rise} to {p_top:.4}, holds to t={fall}, p(99)={:.3}, p(100)=0; W rises over t<{w_rise} to {w_top:.4}, holds to t={w_end}, W(100)={:.3}",
            price[99], wait[100]
        ),
    )
}

fn monte_carlo() -> Outcome {
    let p = PricingParams::new(1.0, 2.0, 0.9, 100).unwrap();
    let s = optimal_schedule(&p, &backward_recursion(&p).unwrap()).unwrap();
    let stats = simulate_waiting(&p, &s, 10_000, SEED).unwrap();
    let mut worst = 0.0f64;
    let mut bad = 0;
    for t in 0..=p.horizon {
        let gap = (stats.mean[t] - s.expected_wait[t]).abs();
        let se = stats.std_err[t];
        if se > 0.0 {
            worst = worst.max(gap / se);
        }
        if gap > 3.0 * se + 1e-12 {
            bad += 1;
        }
    }
    outcome(
        bad == 0,
        format!("10^4 trials, worst |mean - W| = {worst:.2} standard errors, {bad} of 101 slots outside 3 SE"),
    )
}

fn allocation_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 5);
    let mut mismatches = 0;
    let mut bound_misses = 0;
    let mut slack = f64::INFINITY;
    for _ in 0..50 {
        let (k, m, n) = (rng.gen_range(1..=2), rng.gen_range(1..=5), rng.gen_range(1..=3));
        let matrix = allocation_instance(k, m, rng.gen_range(0..=6), rng.gen());
        let a = allocate(&matrix, n).unwrap();
        if !close(a.circulation.objective(&matrix), brute_mct(&matrix), 1e-9) {
            mismatches += 1;
        }
        let (beta, gamma) = beta_gamma(&matrix, a.merged.merges, n);
        let room = brute_min_max(&matrix, n) + beta + gamma - a.plan.max_predicted_time();
        slack = slack.min(room);
        if room < -1e-9 {
            bound_misses += 1;
        }
    }
    outcome(
        mismatches == 0 && bound_misses == 0,
        format!("50 instances, {mismatches} cost mismatches (rel tol 1e-9), {bound_misses} bound violations, least slack {slack:.3} s"),
    )
}

fn cabps_vs_enumeration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 6);
    let mut wrong = 0;
    let mut feasible = 0;
    let subtask = hitchplan::allocation::Subtask {
        start_depot: 0,
        package: 1,
        end_depot: 0,
    };
    for _ in 0..100 {
        let net = random_small_net(&mut rng, 6);
        let half = net.speeds().half_budget();
        let want = brute_half(&net, 0, 1, half).zip(brute_half(&net, 1, 0, half));
        let mut occ = OccupancyTable::new(1).unwrap();
        let got = plan_multi_hop_cabps(&net, &subtask, &mut occ, 0.0, &SearchOptions::default());
        match (want, got) {
            (Some(((a, _), (b, _))), Ok(p)) => {
                feasible += 1;
                let within = p.flight_consumed.iter().all(|&f| f <= half * (1.0 + 1e-12));
                if !close(p.total_time, a + b, 1e-9) || !within {
                    wrong += 1;
                }
            }
            (None, Err(_)) => {}
            _ => wrong += 1,
        }
    }
    outcome(
        wrong == 0,
        format!("100 graphs of at most 8 nodes ({feasible} feasible), {wrong} disagreements (rel tol 1e-9)"),
    )
}

fn gap_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 7);
    let (mut used, mut tried, mut bad) = (0, 0, 0);
    let mut widest = 0.0f64;
    while used < 30 && tried < 5000 {
        tried += 1;
        let (net, tasks, starts) = conflict_instance(&mut rng);
        let mut occ = OccupancyTable::new(1).unwrap();
        let paths: Result<Vec<_>, _> = tasks
            .iter()
            .zip(&starts)
            .map(|(t, &s)| plan_multi_hop_cabps(&net, t, &mut occ, s, &SearchOptions::default()))
            .collect();
        let Ok(paths) = paths else { continue };
        let conflicts: usize = paths.iter().map(|p| p.conflicts).sum();
        if conflicts == 0 {
            continue;
        }
        let Ok(cbs) = plan_cbs_reference(&net, &tasks, &starts, &CbsOptions::default()) else {
            continue;
        };
        used += 1;
        let quasi: f64 = paths.iter().map(|p| p.total_time).sum();
        let cap = conflicts as f64 * net.max_response_time();
        widest = widest.max((quasi - cbs.sum_of_costs) / cap);
        if cbs.sum_of_costs > quasi + 1e-9 || quasi > cbs.sum_of_costs + cap + 1e-9 {
            bad += 1;
        }
    }
    outcome(
        used == 30 && bad == 0,
        format!("{used} instances with conflicts ({tried} drawn), {bad} violations (abs tol 1e-9), largest gap {:.0}% of the bound", 100.0 * widest),
    )
}

fn failure_rates() -> Outcome {
    let sweep = FailureRateSweep::default();
    let rows = experiment_failure_rate(&sweep).unwrap();
    let last = rows.last().unwrap();
    let trail = rows
        .iter()
        .map(|r| format!("L={} {:.2}/{:.2}/{:.2}", r.transit_routes, r.direct, r.single_hop, r.multi_hop))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(
        last.multi_hop <= 0.05 && last.direct >= 0.60 && last.single_hop >= 0.55,
        format!("direct/single/multi: {trail}"),
    )
}

fn monotone_trends() -> Outcome {
    let cap = CapacitySweep::default();
    let rows = experiment_capacity(&cap).unwrap();
    let per = cap.capacities.len();
    let (mut c_bad, mut c_pairs) = (0, 0);
    let (mut w_bad, mut w_pairs) = (0, 0);
    for chunk in rows.chunks(per) {
        let v: Vec<f64> = chunk.iter().map(|r| r.mean_subtask_time).collect();
        c_bad += count_violations(&v, Trend::NonIncreasing, 0.05);
        c_pairs += v.len() - 1;
    }
    for c in 0..per {
        let v: Vec<f64> = rows.iter().skip(c).step_by(per).map(|r| r.mean_subtask_time).collect();
        w_bad += count_violations(&v, Trend::NonDecreasing, 0.05);
        w_pairs += v.len() - 1;
    }

    let sc = ScalingSweep::default();
    let tables = experiment_scaling(&sc).unwrap();
    let nn = sc.fleet_uavs.len();
    let (mut n_bad, mut n_pairs, mut k_bad, mut k_pairs) = (0, 0, 0, 0);
    for chunk in tables.fleet.chunks(nn) {
        let v: Vec<f64> = chunk.iter().map(|r| r.max_delivery_time).collect();
        n_bad += count_violations(&v, Trend::StrictlyDecreasing, 0.0);
        n_pairs += v.len() - 1;
    }
    for i in 0..nn {
        let v: Vec<f64> = tables.fleet.iter().skip(i).step_by(nn).map(|r| r.max_delivery_time).collect();
        k_bad += count_violations(&v, Trend::StrictlyDecreasing, 0.0);
        k_pairs += v.len() - 1;
    }

    // allocation runtime against M at the largest K, log-log least squares
    let kmax = *sc.allocation_depots.iter().max().unwrap();
    let pts: Vec<(f64, f64)> = tables
        .allocation
        .iter()
        .filter(|r| r.depots == kmax && r.mean_secs > 0.0)
        .map(|r| ((r.packages as f64).ln(), r.mean_secs.ln()))
        .collect();
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();

    let ok = |bad: usize, pairs: usize| bad * 10 <= pairs;
    outcome(
        ok(c_bad, c_pairs) && ok(n_bad, n_pairs) && ok(k_bad, k_pairs),
        format!(
            "capacity {c_bad}/{c_pairs} violations, fleet size {n_bad}/{n_pairs}, depots {k_bad}/{k_pairs}; info: response time {w_bad}/{w_pairs}, allocation time slope vs M {slope:.2}"
        ),
    )
}

fn speedup() -> Outcome {
    let rows = experiment_vs_vehicle(&VsVehicleSweep::default()).unwrap();
    let last = rows.last().unwrap();
    outcome(
        last.ratio <= 0.6,
        format!(
            "at T = {:.0} s multimodal max {:.0} s, vehicle-only max {:.0} s, mean ratio {:.3} (limit 0.6)",
            last.max_flight_time, last.multimodal_max, last.vehicle_max, last.ratio
        ),
    )
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let results = [
        run(1, "pricing closed form vs grid oracle", secs(10), pricing_vs_grid_oracle),
        run(2, "steady-state coefficients", secs(1), steady_state_values),
        run(3, "price and wait shape", secs(1), schedule_shape),
        run(4, "Monte Carlo wait", secs(30), monte_carlo),
        run(5, "allocation vs enumeration", secs(60), allocation_oracle),
        run(6, "CABPS vs enumeration", secs(60), cabps_vs_enumeration),
        run(7, "sequential vs joint planning gap", secs(120), gap_bound),
        run(8, "failure rate vs transit routes", secs(600), failure_rates),
        run(9, "monotone trends", secs(600), monotone_trends),
        run(10, "speedup over vehicle-only delivery", secs(600), speedup),
    ];
    let failed = results.iter().filter(|&&p| !p).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
