use clap::{Parser, Subcommand, ValueEnum};
use ringcalc::baselines::{run_method, MethodTag};
use ringcalc::config::load_network;
use ringcalc::model::{NodeId, RingNetwork};
use ringcalc::pmoo::{broadcast_stability, solve_network, Policy, SubpathKey};
use ringcalc::report::{emit_report, to_csv, ReportFormat, ReportRow};
use ringcalc::scenario::{run_scenario, ScenarioConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "ringcalc",
    about = "Worst-case delay bounds for unidirectional ring networks with cyclic dependencies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Arbitrary,
    Fp,
}

impl From<PolicyArg> for Policy {
    fn from(p: PolicyArg) -> Policy {
        match p {
            PolicyArg::Arbitrary => Policy::Arbitrary,
            PolicyArg::Fp => Policy::FixedPriority,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run one analysis method on a network file and print CSV rows.
    Analyze {
        /// JSON network description.
        #[arg(long)]
        config: PathBuf,
        /// RING_PMOO, TIME_STOPPING, BACKLOG_BASED or WCD_LOWER.
        #[arg(long)]
        method: String,
        #[arg(long, value_enum, default_value = "arbitrary")]
        policy: PolicyArg,
    },
    /// Run one of the standard scenarios 1-4 and write its report.
    Scenario {
        /// Scenario id.
        id: u8,
        /// Output directory for scenario_<id>.<ext>.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        /// Emit one row per flow instead of one representative per class.
        #[arg(long)]
        all_flows: bool,
    },
    /// Report per-node utilization and the stability margin of a network.
    Stability {
        #[arg(long)]
        config: PathBuf,
    },
}

// 0 = success, 2 = analysis ran but the network is infeasible, 1 = error.
const EXIT_INFEASIBLE: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Analyze {
            config,
            method,
            policy,
        } => {
            let method = MethodTag::parse(&method)
                .ok_or_else(|| format!("unknown method {method:?} (expected one of RING_PMOO, TIME_STOPPING, BACKLOG_BASED, WCD_LOWER)"))?;
            let net = load_network(&config).map_err(|e| e.to_string())?;
            let rows = analyze_rows(&net, method, policy.into());
            print!("{}", to_csv(&rows));
            if rows.iter().any(|r| !r.stable) {
                Ok(ExitCode::from(EXIT_INFEASIBLE))
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }
        Command::Scenario {
            id,
            out,
            format,
            all_flows,
        } => {
            let mut cfg = ScenarioConfig::standard(id).map_err(|e| e.to_string())?;
            cfg.all_flows = all_flows;
            let rows = run_scenario(&cfg).map_err(|e| e.to_string())?;
            let format = match format {
                FormatArg::Csv => ReportFormat::Csv,
                FormatArg::Json => ReportFormat::Json,
            };
            std::fs::create_dir_all(&out)
                .map_err(|e| format!("cannot create {}: {e}", out.display()))?;
            let path = out.join(format!("scenario_{id}.{}", format.extension()));
            emit_report(&rows, format, &path).map_err(|e| e.to_string())?;
            println!("wrote {} rows to {}", rows.len(), path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Stability { config } => {
            let net = load_network(&config).map_err(|e| e.to_string())?;
            Ok(stability_report(&net))
        }
    }
}

fn analyze_rows(net: &RingNetwork, method: MethodTag, policy: Policy) -> Vec<ReportRow> {
    let load_pct = net.max_utilization() * 100.0;
    let (bounds, det_margin) = if method == MethodTag::RingPmoo {
        match solve_network(net, policy) {
            Ok(solution) => {
                let det = solution.det_margin();
                let map: std::collections::BTreeMap<_, _> = solution
                    .keys()
                    .map(|key| (key, solution.delay_bound(net, key)))
                    .collect();
                (Some(map), Some(det))
            }
            Err(_) => (None, None),
        }
    } else {
        (run_method(net, policy, method).ok(), None)
    };
    net.flows()
        .iter()
        .enumerate()
        .map(|(f, flow)| {
            let key = SubpathKey {
                flow: f,
                n: flow.hops,
            };
            let delay = bounds.as_ref().map(|b| b[&key]);
            ReportRow {
                method,
                scenario: 0,
                nodes: net.node_count(),
                load_pct,
                burst_bytes: flow.sigma0 / 8.0,
                traffic_class: String::new(),
                flow_id: flow.id.clone(),
                hops: flow.hops,
                delay_bound_s: delay,
                stable: delay.is_some(),
                det_margin: if method == MethodTag::RingPmoo {
                    det_margin
                } else {
                    None
                },
            }
        })
        .collect()
}

fn stability_report(net: &RingNetwork) -> ExitCode {
    println!("nodes: {}", net.node_count());
    println!("flows: {}", net.flows().len());
    for k in 1..=net.node_count() {
        println!("node {k}: utilization {:.4}%", net.utilization(NodeId(k)) * 100.0);
    }

    // The closed-form broadcast criterion applies when the instance is a
    // uniform one-flow-per-node broadcast ring.
    let uniform_broadcast = net.node_count() >= 2
        && net.flows().len() == net.node_count()
        && net.flows().iter().enumerate().all(|(i, f)| {
            f.hops == net.node_count()
                && f.source == NodeId(i + 1)
                && f.rho == net.flow(0).rho
                && f.sigma0 == net.flow(0).sigma0
        })
        && net.nodes().iter().all(|n| n.rate == net.nodes()[0].rate);
    if uniform_broadcast {
        let verdict = broadcast_stability(net.node_count(), net.nodes()[0].rate, net.flow(0).rho)
            .expect("at least two nodes");
        println!(
            "broadcast threshold: rho <= {} bps per flow ({}% load)",
            verdict.threshold_rho,
            verdict.threshold_rho * net.node_count() as f64 / net.nodes()[0].rate * 100.0
        );
        if let (Some(x), Some(det)) = (verdict.x, verdict.determinant) {
            println!("x = {x}, closed-form determinant = {det}");
        }
    }

    match solve_network(net, Policy::Arbitrary) {
        Ok(solution) => {
            println!("feasible: yes (det margin {})", solution.det_margin());
            ExitCode::SUCCESS
        }
        Err(err) => {
            println!("feasible: no ({err})");
            ExitCode::from(EXIT_INFEASIBLE)
        }
    }
}
