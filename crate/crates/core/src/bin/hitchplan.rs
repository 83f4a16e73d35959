use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;

use hitchplan::network::{allocation_subgraph, TrafficNetwork};
use hitchplan::pricing::{backward_recursion, optimal_schedule, steady_state, PricingParams};
use hitchplan::simulator::{
    assign_response_times, experiment_capacity, experiment_failure_rate, experiment_scaling,
    experiment_vs_vehicle, prepare_network, trace_on_network, write_rows, CapacitySweep,
    ExperimentConfig, FailureRateSweep, ScalingSweep, VsVehicleSweep,
};
use hitchplan::{allocation::allocate, Error, Result};

#[derive(Parser)]
#[command(name = "hitchplan", version, about = "UAV delivery over traffic networks")]
struct Cli {
    /// JSON config (run config, or sweep config for `experiment`)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed from the config
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Wall-clock planning budget per subtask, seconds
    #[arg(long, global = true)]
    budget_secs: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal price schedule and steady state for one interchange
    Price {
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 2.0)]
        b: f64,
        #[arg(long, default_value_t = 0.9)]
        rho: f64,
        #[arg(long, default_value_t = 100)]
        horizon: usize,
    },
    /// Task allocation only
    Allocate {
        /// Network file; generated from the config when absent
        #[arg(long)]
        network: Option<PathBuf>,
        #[arg(long)]
        uavs: Option<usize>,
    },
    /// Allocation and path planning for every package
    Plan {
        #[arg(long)]
        network: Option<PathBuf>,
    },
    /// One of the experiment suites
    Experiment {
        name: ExperimentName,
        /// Overrides the trial count of the sweep
        #[arg(long)]
        trials: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentName {
    FailureRate,
    Capacity,
    VsVehicle,
    Scaling,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Parameter(_) | Error::Generation(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn run_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(b) = cli.budget_secs {
        cfg.budget_secs = b;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn network(cli: &Cli, cfg: &ExperimentConfig, file: &Option<PathBuf>) -> Result<TrafficNetwork> {
    match file {
        Some(p) => {
            let net = TrafficNetwork::load(p)?;
            // stored response times are kept unless the file has none
            if net.max_response_time() > 0.0 {
                Ok(net)
            } else {
                assign_response_times(net, &cfg.pricing, cfg.max_response_time)
            }
        }
        None => {
            let net = prepare_network(cfg, cfg.seed)?;
            net.save(cli.out.join("network.json"))?;
            Ok(net)
        }
    }
}

fn create_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn sweep<T: DeserializeOwned + Default>(
    cli: &Cli,
    trials: Option<usize>,
    base: impl FnOnce(&mut T) -> &mut ExperimentConfig,
) -> Result<T> {
    let mut s: T = match &cli.config {
        Some(p) => load_json(p)?,
        None => T::default(),
    };
    let b = base(&mut s);
    if let Some(seed) = cli.seed {
        b.seed = seed;
    }
    if let Some(x) = cli.budget_secs {
        b.budget_secs = x;
    }
    if let Some(t) = trials {
        b.trials = t;
    }
    Ok(s)
}

fn run(cli: Cli) -> Result<()> {
    create_out(&cli.out)?;
    match &cli.command {
        Command::Price {
            alpha,
            b,
            rho,
            horizon,
        } => {
            let params = PricingParams::new(*alpha, *b, *rho, *horizon)
                .map_err(|e| Error::Config(e.to_string()))?;
            let coeffs = backward_recursion(&params)?;
            let schedule = optimal_schedule(&params, &coeffs)?;
            let path = cli.out.join("price_schedule.csv");
            let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
            schedule.write_csv(file)?;
            let ss = steady_state(&params)?;
            println!(
                "q_star={:.6} m_star={:.6} wait_star={:.6} price_limit={:.6}{}",
                ss.q_star,
                ss.m_star,
                ss.wait_star,
                ss.price_limit,
                if schedule.clamped { " (prices clamped)" } else { "" }
            );
            println!("wrote {}", path.display());
        }
        Command::Allocate { network: file, uavs } => {
            let cfg = run_config(&cli)?;
            let net = network(&cli, &cfg, file)?;
            let matrix = allocation_subgraph(&net)?;
            let a = allocate(&matrix, uavs.unwrap_or(cfg.uavs))?;
            matrix.write_csv(cli.out.join("allocation_matrix.csv"))?;
            a.plan.save_json(cli.out.join("allocation.json"))?;
            a.plan.write_times_csv(cli.out.join("allocation_times.csv"))?;
            println!(
                "tour weight {:.1} s, {} merges, max predicted UAV time {:.1} s",
                a.tour.weight,
                a.merged.merges,
                a.plan.max_predicted_time()
            );
        }
        Command::Plan { network: file } => {
            let cfg = run_config(&cli)?;
            let net = network(&cli, &cfg, file)?;
            let trace = trace_on_network(
                &net,
                cfg.uavs,
                cfg.mode,
                cfg.capacity,
                &cfg.search_options(),
            )?;
            let m = &trace.metrics;
            let path = cli.out.join("run_metrics.json");
            std::fs::write(&path, serde_json::to_string_pretty(m)?)
                .map_err(|e| Error::io(&path, e))?;
            let path = cli.out.join("paths.json");
            let mut f = File::create(&path).map_err(|e| Error::io(&path, e))?;
            f.write_all(serde_json::to_string_pretty(&trace.paths)?.as_bytes())
                .map_err(|e| Error::io(&path, e))?;
            trace.occupancy.write_csv(cli.out.join("occupancy.csv"))?;
            println!(
                "{} delivered, {} failed ({:.1}%), max UAV time {:.1} s, extra wait {:.1} s",
                m.successes,
                m.failures,
                100.0 * m.failure_rate,
                m.max_time,
                m.extra_wait_total
            );
        }
        Command::Experiment { name, trials } => match name {
            ExperimentName::FailureRate => {
                let s: FailureRateSweep = sweep(&cli, *trials, |s: &mut FailureRateSweep| &mut s.base)?;
                let rows = experiment_failure_rate(&s)?;
                write_rows(cli.out.join("failure_rate.csv"), &rows)?;
                for r in &rows {
                    println!(
                        "L={:4}  direct {:.3}  single-hop {:.3}  multi-hop {:.3}",
                        r.transit_routes, r.direct, r.single_hop, r.multi_hop
                    );
                }
            }
            ExperimentName::Capacity => {
                let s: CapacitySweep = sweep(&cli, *trials, |s: &mut CapacitySweep| &mut s.base)?;
                let rows = experiment_capacity(&s)?;
                write_rows(cli.out.join("capacity.csv"), &rows)?;
                for r in &rows {
                    println!(
                        "C={} Wmax={:5.0}  mean subtask {:.1} s  extra wait {:.2} s",
                        r.capacity, r.max_response_time, r.mean_subtask_time, r.mean_extra_wait
                    );
                }
            }
            ExperimentName::VsVehicle => {
                let s: VsVehicleSweep = sweep(&cli, *trials, |s: &mut VsVehicleSweep| &mut s.base)?;
                let rows = experiment_vs_vehicle(&s)?;
                write_rows(cli.out.join("vs_vehicle.csv"), &rows)?;
                for r in &rows {
                    println!(
                        "T={:9.0}  multimodal {:.1} s  vehicle {:.1} s  ratio {:.3}  failures {:.3}",
                        r.max_flight_time, r.multimodal_max, r.vehicle_max, r.ratio, r.failure_rate
                    );
                }
            }
            ExperimentName::Scaling => {
                let s: ScalingSweep = sweep(&cli, *trials, |s: &mut ScalingSweep| &mut s.base)?;
                let t = experiment_scaling(&s)?;
                write_rows(cli.out.join("scaling_allocation.csv"), &t.allocation)?;
                write_rows(cli.out.join("scaling_fleet.csv"), &t.fleet)?;
                for r in &t.fleet {
                    println!(
                        "N={:2} K={:2}  calc {:.4} s  avg {:.1} s  max {:.1} s",
                        r.uavs, r.depots, r.avg_calc_secs, r.avg_delivery_time, r.max_delivery_time
                    );
                }
            }
        },
    }
    Ok(())
}
