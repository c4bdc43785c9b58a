use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use dsop_cli::csvio::parse_estimator;
use dsop_cli::report::solve_report;
use dsop_cli::{run_sweep, run_verify, sidecar_path, summary, write_csv, write_paths, SweepSpec, VerifySpec};
use dsop_core::instances::{generate_synthetic, GeneratorConfig, ScaleSetting};
use dsop_core::io::{read_instance_file, save_instance};
use dsop_core::seed::derive_seed;
use dsop_core::{Algorithm, DsopError, Estimator, SearchConfig, SolveRequest};

#[derive(Parser)]
#[command(
    name = "dsop",
    version,
    about = "Dynamic stochastic orienteering under a chance constraint"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance as JSON.
    Generate(GenerateArgs),
    /// Solve one instance and report the path and its probabilities.
    Solve(SolveArgs),
    /// Sweep deadlines, risk levels and scales; write a CSV and a summary.
    Benchmark(BenchmarkArgs),
    /// Check both estimators against exact enumeration on small instances.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 32)]
    vertices: usize,
    /// Gamma scale in [1, 4], or "random" for a per-edge draw.
    #[arg(long, default_value = "2")]
    theta: String,
    /// Random when omitted; always printed.
    #[arg(long)]
    seed: Option<u64>,
    /// Inflate some edges so the triangle inequality fails.
    #[arg(long)]
    hard: bool,
    #[arg(long, default_value_t = 3)]
    bands: usize,
    /// Write here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Tuning {
    /// Monte Carlo walks per estimate.
    #[arg(long)]
    samples: Option<usize>,
    /// Arrival-time ranges of the matrix estimator.
    #[arg(long)]
    ranges: Option<usize>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Branch-and-bound node budget.
    #[arg(long)]
    node_budget: Option<u64>,
    /// Walks used to re-score matrix solutions.
    #[arg(long, default_value_t = 10_000)]
    check_samples: usize,
    /// Report wall-clock runtimes (makes output non-reproducible).
    #[arg(long)]
    timing: bool,
}

impl Tuning {
    fn config(&self) -> SearchConfig {
        let mut c = SearchConfig::default();
        if let Some(n) = self.samples {
            c.sample_count = n;
        }
        if let Some(n) = self.ranges {
            c.range_count = n;
        }
        if let Some(n) = self.max_iterations {
            c.max_iterations = n;
        }
        if let Some(n) = self.node_budget {
            c.node_budget = n;
        }
        c
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, short = 'H')]
    deadline: f64,
    #[arg(long)]
    epsilon: f64,
    #[arg(long, default_value = "ls")]
    method: Algorithm,
    #[arg(long, default_value = "matrix", value_parser = parse_estimator)]
    estimator: Estimator,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    tuning: Tuning,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [20.0, 40.0, 60.0, 80.0, 100.0])]
    deadlines: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.2, 0.3, 0.4, 0.5])]
    epsilons: Vec<f64>,
    /// Ignored with --hard.
    #[arg(long, value_delimiter = ',', default_values_t = [2.0])]
    thetas: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    repetitions: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 32)]
    vertices: usize,
    #[arg(long)]
    hard: bool,
    #[arg(long, value_delimiter = ',', default_value = "matrix,sampling", value_parser = parse_estimator)]
    estimators: Vec<Estimator>,
    #[arg(long, value_delimiter = ',', default_value = "ch,ls")]
    methods: Vec<Algorithm>,
    #[command(flatten)]
    tuning: Tuning,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// CSV output; the paths go to `<out>.paths.jsonl`.
    #[arg(long, short, default_value = "results.csv")]
    out: PathBuf,
    /// Also write the summary here.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Number of oracle instances.
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 5)]
    paths: usize,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 100)]
    ranges: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 6)]
    max_vertices: usize,
}

const EXIT_FAILURE: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_TIMEOUT: u8 = 4;

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<DsopError>() {
        Some(DsopError::NoFeasibleSolution) => EXIT_INFEASIBLE,
        Some(DsopError::Timeout { .. }) => EXIT_TIMEOUT,
        Some(
            DsopError::Parse { .. }
            | DsopError::Invalid(_)
            | DsopError::InvalidRequest(_)
            | DsopError::Config(_)
            | DsopError::UnsupportedDistribution(_)
            | DsopError::MissingEdge { .. }
            | DsopError::InvalidPath(_),
        ) => EXIT_VALIDATION,
        _ => EXIT_FAILURE,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Solve(a) => solve(a),
        Command::Benchmark(a) => benchmark(a),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            if let Some(DsopError::Timeout { best: Some(best), .. }) = e.downcast_ref::<DsopError>() {
                eprintln!("best path found: {} (reward {})", best.path, best.reward);
            }
            ExitCode::from(exit_code(&e))
        }
    }
}

fn generate(a: GenerateArgs) -> anyhow::Result<u8> {
    let seed = a.seed.unwrap_or_else(rand::random);
    let theta = if a.theta == "random" {
        ScaleSetting::PerEdgeRandom
    } else {
        let t: f64 = a
            .theta
            .parse()
            .map_err(|_| DsopError::Config(format!("bad theta {:?}", a.theta)))?;
        ScaleSetting::Fixed(t)
    };
    let config = GeneratorConfig {
        vertex_count: a.vertices,
        theta,
        hard: a.hard,
        band_count: a.bands,
        seed: derive_seed(seed, "generate"),
        ..GeneratorConfig::default()
    };
    let text = save_instance(&generate_synthetic(&config)?);
    match a.out {
        Some(path) => {
            fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            println!("seed: {seed}");
        }
        None => {
            io::stdout().write_all(text.as_bytes())?;
            eprintln!("seed: {seed}");
        }
    }
    Ok(0)
}

fn solve(a: SolveArgs) -> anyhow::Result<u8> {
    let instance = read_instance_file(&a.instance)?;
    let request = SolveRequest::new(a.deadline, a.epsilon, 0.0)?;
    let config = a.tuning.config().with_estimator(a.estimator);
    let report = solve_report(
        &instance,
        &request,
        &config,
        a.method,
        a.seed,
        a.tuning.check_samples,
        a.tuning.timing,
    )?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        println!("{report}");
    }
    Ok(0)
}

fn benchmark(a: BenchmarkArgs) -> anyhow::Result<u8> {
    let spec = SweepSpec {
        deadlines: a.deadlines,
        epsilons: a.epsilons,
        thetas: a.thetas,
        repetitions: a.repetitions,
        seed: a.seed,
        vertex_count: a.vertices,
        hard: a.hard,
        estimators: a.estimators,
        methods: a.methods,
        config: a.tuning.config(),
        check_samples: a.tuning.check_samples,
        timing: a.tuning.timing,
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.threads).build()?;
    let result = pool.install(|| run_sweep(&spec))?;

    let csv = BufWriter::new(File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?);
    write_csv(csv, &result.rows)?;
    let sidecar = sidecar_path(&a.out);
    write_paths(BufWriter::new(File::create(&sidecar)?), &result.paths)?;

    let text = summary(&result.rows, &result.unsolved, spec.timing);
    print!("{text}");
    if let Some(path) = a.summary {
        fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(0)
}

fn verify(a: VerifyArgs) -> anyhow::Result<u8> {
    let spec = VerifySpec {
        trials: a.trials,
        paths_per_instance: a.paths,
        samples: a.samples,
        range_count: a.ranges,
        seed: a.seed,
        max_vertices: a.max_vertices,
        ..VerifySpec::default()
    };
    let report = run_verify(&spec)?;
    println!("{report}");
    Ok(if report.passes() { 0 } else { EXIT_FAILURE })
}
