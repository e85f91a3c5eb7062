use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use tds_qaoa::harness::{run_on_instance, run_sweep, Instance, PenaltySpec, RunConfig, SweepGrid, DEFAULT_SHOTS};
use tds_qaoa::io::{self as tio, BUILTIN_EXAMPLE};
use tds_qaoa::qubo::{bits_to_string, default_penalty};
use tds_qaoa::{build_energy_table, compile_tdp_qubo, qubit_counts, qubit_upper_bound, Error, Graph};

#[derive(Parser)]
#[command(name = "tds-qaoa", version, about = "Total domination via QUBO and simulated QAOA")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the compiled QUBO as JSON.
    Compile(CompileArgs),
    /// Qubit counts and the upper bound on the encoding size.
    Bound(GraphArg),
    /// Exhaustive minimum total dominating sets.
    Oracle(GraphArg),
    /// One optimize-and-measure run.
    Run(RunArgs),
    /// Grid sweep over layers, penalties and budgets.
    Sweep(SweepArgs),
    /// Cost value after every objective evaluation of one run, as CSV.
    Trace(TraceArgs),
}

#[derive(Args)]
struct GraphArg {
    /// Graph file or `builtin:paper6`.
    #[arg(long, default_value = BUILTIN_EXAMPLE)]
    graph: String,
}

#[derive(Args)]
#[group(multiple = false)]
struct PenaltyArgs {
    /// Absolute penalty coefficient.
    #[arg(long = "P", value_name = "FLOAT")]
    p: Option<f64>,
    /// Penalty as a multiple of the vertex count.
    #[arg(long = "P-mult", value_name = "FLOAT")]
    p_mult: Option<f64>,
}

impl PenaltyArgs {
    fn spec(&self) -> Option<PenaltySpec> {
        match (self.p, self.p_mult) {
            (Some(p), _) => Some(PenaltySpec::Absolute(p)),
            (None, Some(m)) => Some(PenaltySpec::PerVertex(m)),
            (None, None) => None,
        }
    }
}

#[derive(Args)]
struct CompileArgs {
    #[command(flatten)]
    graph: GraphArg,
    #[command(flatten)]
    penalty: PenaltyArgs,
    /// Also write the full energy table (`index,bits,energy`) here.
    #[arg(long, value_name = "PATH")]
    energy_table: Option<PathBuf>,
}

#[derive(Args)]
struct RunFlags {
    #[command(flatten)]
    graph: GraphArg,
    #[arg(long, default_value_t = 5)]
    q: usize,
    #[command(flatten)]
    penalty: PenaltyArgs,
    #[arg(long, default_value_t = 500)]
    maxiter: usize,
    #[arg(long, default_value_t = DEFAULT_SHOTS)]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Score exact marginal probabilities (default).
    #[arg(long, overrides_with = "sampled")]
    exact: bool,
    /// Score shot frequencies instead of exact probabilities.
    #[arg(long, overrides_with = "exact")]
    sampled: bool,
    #[arg(long, default_value_t = 1.0)]
    gamma_scale: f64,
    #[arg(long, default_value_t = 1.0)]
    beta_scale: f64,
    /// Half-width of the seeded perturbation of the initial angles.
    #[arg(long, default_value_t = 0.1)]
    jitter: f64,
}

impl RunFlags {
    fn config(&self) -> RunConfig {
        RunConfig {
            graph_source: self.graph.graph.clone(),
            layers: self.q,
            penalty: self.penalty.spec(),
            max_iterations: self.maxiter,
            shots: self.shots,
            seed: self.seed,
            exact_metrics: !self.sampled,
            gamma_scale: self.gamma_scale,
            beta_scale: self.beta_scale,
            init_jitter: self.jitter,
            ..RunConfig::default()
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    flags: RunFlags,
    /// Directory for result.json, distribution.csv and trace.csv.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    flags: RunFlags,
    /// Write the CSV here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    graph: GraphArg,
    /// Comma-separated layer counts.
    #[arg(long, default_value = "2,5,10,20")]
    q_list: String,
    /// Comma-separated absolute penalties.
    #[arg(long = "P-list", default_value = "4.8,5.4,6.0,6.6,7.2,7.8,8.4,9.0", conflicts_with = "p_mult_list")]
    p_list: String,
    /// Comma-separated penalty multipliers of the vertex count.
    #[arg(long = "P-mult-list")]
    p_mult_list: Option<String>,
    /// Comma-separated evaluation budgets.
    #[arg(long, default_value = "50,100,200,500")]
    maxiter_list: String,
    /// Replicates per cell.
    #[arg(long, default_value_t = 1)]
    seeds: usize,
    /// Base seed from which per-run seeds are derived.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "TDS_QAOA_WORKERS")]
    workers: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SHOTS)]
    shots: u64,
    #[arg(long, overrides_with = "sampled")]
    exact: bool,
    #[arg(long, overrides_with = "exact")]
    sampled: bool,
    #[arg(long, default_value_t = 1.0)]
    gamma_scale: f64,
    #[arg(long, default_value_t = 1.0)]
    beta_scale: f64,
    #[arg(long, default_value_t = 0.1)]
    jitter: f64,
    /// Directory for sweep.csv, sweep.json and summary.csv.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

fn parse_list<T: std::str::FromStr>(flag: &str, s: &str) -> anyhow::Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|_| anyhow::Error::new(Error::Domain(format!("bad {flag} entry {t:?}")))))
        .collect()
}

fn load_graph(source: &str) -> anyhow::Result<Graph> {
    tio::load_graph(source).map_err(anyhow::Error::new)
}

fn compile(args: &CompileArgs) -> anyhow::Result<()> {
    let g = load_graph(&args.graph.graph)?;
    let p = args.penalty.spec().map_or_else(|| default_penalty(&g), |s| s.resolve(g.n_vertices()));
    let model = compile_tdp_qubo(&g, p)?;
    if let Some(path) = &args.energy_table {
        let table = build_energy_table(&model)?;
        let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        tio::write_energy_table_csv(io::BufWriter::new(file), &table)?;
    }
    println!("{}", model.to_json()?);
    Ok(())
}

fn bound(args: &GraphArg) -> anyhow::Result<()> {
    let g = load_graph(&args.graph)?;
    let counts = qubit_counts(&g);
    println!("q_tdp={}", counts.q_tdp);
    println!("q_dp={}", counts.q_dp);
    println!("gap={}", counts.gap);
    match qubit_upper_bound(&g) {
        Ok(b) => println!("qubit_upper_bound={b:.4}"),
        Err(e) => println!("qubit_upper_bound=n/a ({e})"),
    }
    Ok(())
}

fn oracle(args: &GraphArg) -> anyhow::Result<()> {
    let g = load_graph(&args.graph)?;
    let min = g.minimum_tds_bruteforce()?;
    println!("min_tds_size={}", min.size);
    println!("count={}", min.sets.len());
    for set in &min.sets {
        let mut bits = vec![false; g.n_vertices()];
        for &v in set {
            bits[v] = true;
        }
        let list: Vec<String> = set.iter().map(usize::to_string).collect();
        println!("{} {{{}}}", bits_to_string(&bits), list.join(","));
    }
    Ok(())
}

fn instance_for(config: &RunConfig) -> anyhow::Result<Instance> {
    config.validate()?;
    Ok(Instance::new(load_graph(&config.graph_source)?)?)
}

fn run(args: &RunArgs) -> anyhow::Result<()> {
    let config = args.flags.config();
    let outcome = run_on_instance(&instance_for(&config)?, &config)?;
    let r = &outcome.result;
    println!("P={} qubits={}", tio::format_penalty(r.penalty), r.n_qubits);
    println!(
        "evaluations={} termination={:?} final_cost={:.6}",
        r.trace.evaluations, r.trace.termination, r.final_cost
    );
    println!(
        "z_star={} p={:.6} tds={} min_tds={}",
        r.z_star, r.z_star_probability, r.z_star_is_tds, r.z_star_is_minimal_tds
    );
    println!("correct_probability={:.6}", r.correct_probability);
    println!("optimal_probability={:.6}", r.optimal_probability);
    if let Some(dir) = &args.out {
        create_dir(dir)?;
        tio::write_json(&dir.join("result.json"), r)?;
        let dist = fs::File::create(dir.join("distribution.csv"))?;
        tio::write_distribution_csv(io::BufWriter::new(dist), &outcome.distribution, &outcome.vertex_counts)?;
        let trace = fs::File::create(dir.join("trace.csv"))?;
        tio::write_trace_csv(io::BufWriter::new(trace), &outcome.trace)?;
    }
    Ok(())
}

fn trace(args: &TraceArgs) -> anyhow::Result<()> {
    let config = args.flags.config();
    let outcome = run_on_instance(&instance_for(&config)?, &config)?;
    match &args.out {
        Some(path) => {
            let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            tio::write_trace_csv(io::BufWriter::new(file), &outcome.trace)?;
        }
        None => tio::write_trace_csv(io::stdout().lock(), &outcome.trace)?,
    }
    Ok(())
}

fn sweep(args: &SweepArgs) -> anyhow::Result<()> {
    let penalties = match &args.p_mult_list {
        Some(list) => parse_list::<f64>("--P-mult-list", list)?
            .into_iter()
            .map(PenaltySpec::PerVertex)
            .collect(),
        None => parse_list::<f64>("--P-list", &args.p_list)?
            .into_iter()
            .map(PenaltySpec::Absolute)
            .collect(),
    };
    let grid = SweepGrid {
        layers: parse_list("--q-list", &args.q_list)?,
        penalties,
        max_iterations: parse_list("--maxiter-list", &args.maxiter_list)?,
    };
    let template = RunConfig {
        graph_source: args.graph.graph.clone(),
        shots: args.shots,
        seed: args.seed,
        exact_metrics: !args.sampled,
        gamma_scale: args.gamma_scale,
        beta_scale: args.beta_scale,
        init_jitter: args.jitter,
        ..RunConfig::default()
    };
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        bail!(Error::Domain("--workers must be positive".into()));
    }
    let instance = Instance::new(load_graph(&template.graph_source)?)?;
    let table = run_sweep(&instance, &grid, args.seeds, &template, workers)?;

    let failed = table.rows.iter().filter(|r| r.error.is_some()).count();
    println!(
        "rows={} cells={} failed={} tds={} min_tds={}",
        table.rows.len(),
        table.summaries.len(),
        failed,
        table.tds_count(),
        table.min_tds_count()
    );
    match &args.out {
        Some(dir) => {
            create_dir(dir)?;
            tio::write_sweep_csv(io::BufWriter::new(fs::File::create(dir.join("sweep.csv"))?), &table)?;
            tio::write_summary_csv(io::BufWriter::new(fs::File::create(dir.join("summary.csv"))?), &table)?;
            tio::write_json(&dir.join("sweep.json"), &table)?;
        }
        None => {
            let mut out = io::stdout().lock();
            tio::write_sweep_csv(&mut out, &table)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Infeasible { .. }) => 2,
        Some(Error::Resource(_) | Error::Csv(_) | Error::Json(_)) => 3,
        Some(_) => 1,
        None if err.downcast_ref::<io::Error>().is_some() => 1,
        None => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Compile(a) => compile(a),
        Command::Bound(a) => bound(a),
        Command::Oracle(a) => oracle(a),
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Trace(a) => trace(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
