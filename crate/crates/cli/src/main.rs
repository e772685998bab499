use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use serde_json::json;

use qroute::anneal::{AnnealConfig, RemoteSolver, SimulatedAnnealer, Solver};
use qroute::bench::{run_bench, table2_suite, BenchCase};
use qroute::circuit::{emit_qasm, parse_qasm, BenchmarkSpec, Circuit};
use qroute::qubo::PenaltyConfig;
use qroute::route::{transpile, RouteScope, Strategy, TranspileConfig};
use qroute::topology::{CouplingGraph, TopologySpec};
use qroute::verify::{check_conformance, verify_equivalence};

#[derive(Parser)]
#[command(name = "qroute", version, about = "QUBO-based qubit placement and SWAP routing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transpile one circuit onto a device.
    Transpile(TranspileArgs),
    /// Run a benchmark sweep and write CSV / JSON reports.
    Bench(BenchArgs),
    /// Print a generated benchmark circuit as OpenQASM 2.0.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct TranspileArgs {
    /// OpenQASM 2.0 input file.
    #[arg(long, conflicts_with = "bench", required_unless_present = "bench")]
    input: Option<PathBuf>,
    /// Generated benchmark, `family:n[:seed]`.
    #[arg(long)]
    bench: Option<String>,
    #[arg(long, default_value = "grid:8x8")]
    topology: String,
    #[arg(long, default_value = "hybrid")]
    strategy: String,
    /// Seed for the annealer and randomized routing trials.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the routed circuit here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Args)]
struct BenchArgs {
    /// Named suite; `table2` runs all seven families at reference sizes.
    #[arg(long, conflicts_with = "circuits")]
    suite: Option<String>,
    /// Comma-separated `family:n[:seed]` list.
    #[arg(long, value_delimiter = ',')]
    circuits: Vec<String>,
    #[arg(long, default_value = "grid:8x8")]
    topology: String,
    #[arg(long, value_delimiter = ',', default_value = "full,hybrid,heuristic-only")]
    strategies: Vec<String>,
    /// Number of solver seeds, run as 0..k.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    /// Circuit seed for randomized families in a named suite.
    #[arg(long, default_value_t = 0)]
    circuit_seed: u64,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Args)]
struct GenerateArgs {
    /// `family:n[:seed]`
    spec: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Tuning {
    /// `sa`, or `remote:<url>` for an external annealing service.
    #[arg(long, env = "QROUTE_SOLVER", default_value = "sa")]
    solver: String,
    /// Remote solver request timeout in seconds.
    #[arg(long, default_value_t = 60)]
    solver_timeout: u64,
    /// Fail instead of annealing locally when the remote solver is unreachable.
    #[arg(long)]
    no_fallback: bool,
    #[arg(long, default_value_t = 2000)]
    sweeps: usize,
    #[arg(long, default_value_t = 16)]
    restarts: usize,
    /// Penalty weight for one-hot and transition constraints; derived from the problem when omitted.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 10.0)]
    w_max: f64,
    #[arg(long, default_value_t = 3.0)]
    w_swap: f64,
    #[arg(long, default_value_t = 2)]
    time_steps: usize,
    /// Lift the 8192-variable cap on QUBO size.
    #[arg(long)]
    no_budget: bool,
    /// `all`, `front`, or `window:N`.
    #[arg(long, default_value = "all")]
    scope: String,
    #[arg(long, default_value_t = 1)]
    route_trials: usize,
}

impl Tuning {
    fn transpile_config(&self) -> Result<TranspileConfig> {
        let scope = match self.scope.as_str() {
            "all" => RouteScope::AllResidual,
            "front" => RouteScope::FrontLayer,
            s => match s.strip_prefix("window:").and_then(|n| n.parse().ok()) {
                Some(n) if n > 0 => RouteScope::Window(n),
                _ => bail!("invalid value for --scope: `{s}` (expected all, front or window:N)"),
            },
        };
        let mut cfg = TranspileConfig {
            penalty: PenaltyConfig {
                lambda: self.lambda,
                w_swap: self.w_swap,
                w_max: self.w_max,
                time_steps: self.time_steps,
                budget: if self.no_budget { None } else { PenaltyConfig::default().budget },
                ..PenaltyConfig::default()
            },
            scope,
            ..TranspileConfig::default()
        };
        cfg.heuristic.trials = self.route_trials.max(1);
        cfg.penalty.validate().context("invalid penalty settings")?;
        Ok(cfg)
    }

    fn solver(&self, seed: u64) -> Result<Box<dyn Solver>> {
        let local = SimulatedAnnealer::new(AnnealConfig {
            num_sweeps: self.sweeps,
            num_restarts: self.restarts,
            seed,
            ..AnnealConfig::default()
        });
        if self.solver == "sa" {
            return Ok(Box::new(local));
        }
        match self.solver.strip_prefix("remote:") {
            Some(url) if !url.is_empty() => Ok(Box::new(RemoteSolver {
                endpoint: url.to_string(),
                timeout: Duration::from_secs(self.solver_timeout),
                fallback: (!self.no_fallback).then_some(local),
            })),
            _ => bail!("invalid value for --solver: `{}` (expected sa or remote:<url>)", self.solver),
        }
    }
}

fn topology(arg: &str) -> Result<CouplingGraph> {
    let spec: TopologySpec = arg.parse().context("invalid value for --topology")?;
    spec.build().context("invalid value for --topology")
}

fn strategy(arg: &str) -> Result<Strategy> {
    arg.parse::<Strategy>().map_err(anyhow::Error::msg).context("invalid value for --strategy")
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn load_circuit(args: &TranspileArgs) -> Result<Circuit> {
    if let Some(path) = &args.input {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let mut c = parse_qasm(&text).with_context(|| format!("cannot parse {}", path.display()))?;
        if let Some(stem) = path.file_stem() {
            c.name = stem.to_string_lossy().into_owned();
        }
        Ok(c)
    } else {
        let spec = args.bench.as_deref().expect("clap requires --input or --bench");
        let spec: BenchmarkSpec = spec.parse().context("invalid value for --bench")?;
        Ok(spec.generate()?)
    }
}

fn cmd_transpile(args: TranspileArgs) -> Result<()> {
    let graph = topology(&args.topology)?;
    let strategy = strategy(&args.strategy)?;
    let mut cfg = args.tuning.transpile_config()?;
    cfg.heuristic.seed = args.seed;
    let solver = args.tuning.solver(args.seed)?;
    let circuit = load_circuit(&args)?;
    info!("transpiling {} ({} qubits) with {strategy}", circuit.name, circuit.num_qubits);

    let result = transpile(&circuit, &graph, strategy, &cfg, solver.as_ref())?;
    verify_equivalence(&circuit, &result).map_err(|m| anyhow::anyhow!("equivalence check failed: {m}"))?;
    check_conformance(&result.circuit, &graph).map_err(|e| anyhow::anyhow!("conformance check failed: {e}"))?;

    if let Some(out) = &args.out {
        write(out, &emit_qasm(&result.circuit))?;
    }
    if let Some(path) = &args.report {
        let ms = |d: Duration| d.as_secs_f64() * 1e3;
        let t = &result.timings;
        let report = json!({
            "result": {
                "circuit": circuit.name,
                "qubits": circuit.num_qubits,
                "strategy": strategy.name(),
                "seed": args.seed,
                "original_cnot": result.original_cnot,
                "swap_count": result.swap_count,
                "equivalent_cnot": result.equivalent_cnot,
                "initial_layout": result.initial_layout.as_slice(),
                "final_layout": result.final_layout.as_slice(),
                "verified": true,
            },
            "timings": {
                "map_ms": ms(t.mapping_solve),
                "route_ms": ms(t.routing_solve),
                "decode_ms": ms(t.decode),
                "remote_ms": ms(t.remote_solve),
                "total_ms": ms(t.total),
            },
        });
        write(path, &serde_json::to_string_pretty(&report)?)?;
    }
    println!("original_cnot: {}", result.original_cnot);
    println!("swap_count: {}", result.swap_count);
    println!("equivalent_cnot: {}", result.equivalent_cnot);
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<bool> {
    let graph = topology(&args.topology)?;
    let strategies = args.strategies.iter().map(|s| strategy(s)).collect::<Result<Vec<_>>>()?;
    let cfg = args.tuning.transpile_config()?;
    let cases = match (&args.suite, args.circuits.is_empty()) {
        (Some(s), _) if s == "table2" => table2_suite(args.circuit_seed),
        (Some(s), _) => bail!("invalid value for --suite: `{s}` (expected table2)"),
        (None, false) => args
            .circuits
            .iter()
            .map(|s| {
                let spec: BenchmarkSpec = s.parse().context("invalid value for --circuits")?;
                Ok(BenchCase::from_spec(&spec)?)
            })
            .collect::<Result<Vec<_>>>()?,
        (None, true) => bail!("bench needs --suite or --circuits"),
    };
    // Surface solver-flag errors before the sweep starts.
    args.tuning.solver(0)?;
    let seeds: Vec<u64> = (0..args.seeds.max(1)).collect();
    let factory = |seed: u64| args.tuning.solver(seed).expect("validated above");
    let report = run_bench(&cases, &graph, &strategies, &seeds, &cfg, &factory);

    if let Some(path) = &args.csv {
        write(path, &report.to_csv()?)?;
    }
    if let Some(path) = &args.json {
        write(path, &report.to_json()?)?;
    }
    println!("{:<12} {:>6} {:<15} {:>4} {:>8} {:>6} {:>8} {:>9}", "circuit", "qubits", "strategy", "seed", "orig_cx", "swaps", "equiv_cx", "verified");
    for row in &report.rows {
        let r = &row.result;
        println!(
            "{:<12} {:>6} {:<15} {:>4} {:>8} {:>6} {:>8} {:>9}",
            r.circuit, r.qubits, r.strategy, r.seed, r.original_cnot, r.swap_count, r.equivalent_cnot, r.verified
        );
        if let Some(e) = &r.error {
            eprintln!("{} {} seed {}: {e}", r.circuit, r.strategy, r.seed);
        }
    }
    Ok(report.all_verified())
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let spec: BenchmarkSpec = args.spec.parse().context("invalid benchmark spec")?;
    let qasm = emit_qasm(&spec.generate()?);
    match &args.out {
        Some(path) => write(path, &qasm),
        None => {
            print!("{qasm}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Transpile(args) => cmd_transpile(args),
        Command::Bench(args) => cmd_bench(args).and_then(|ok| {
            if ok {
                Ok(())
            } else {
                bail!("one or more benchmark runs failed verification")
            }
        }),
        Command::Generate(args) => cmd_generate(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
