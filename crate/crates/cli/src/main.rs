//! Command-line front end for the `cyclecut` library: build grid
//! instances from edge-probability maps, run mean-field inference with
//! cycle-consistency potentials, round to feasible decompositions, and
//! score partitions against a reference.
//!
//! Exit codes: `0` on success, `1` when a computation fails (for example
//! the exact solver's size guard), `2` for usage and I/O errors.

mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use cyclecut::io::{
    read_edge_map, read_graph, read_marginals, read_params, read_partition, write_graph,
    write_labeling, write_partition,
};
use cyclecut::{
    build_grid_graph, count_invalid, enumerate_triangles, greedy_contract, planted_grid_instance,
    round_and_repair, run_meanfield, solve_exact, CoolingState, EdgeMarginals, Error, GridConfig,
    MeanFieldConfig, PartitionScore, PotentialParams, Schedule, ScheduleGranularity, SolveResult,
    SynthConfig,
};

use crate::report::REPORT_VERSION;
use crate::report::{sha256_hex, ConfigBlock, FinalBlock, InputBlock, RunReport, Timings};

#[derive(Parser)]
#[command(
    name = "cyclecut",
    version,
    about = "Graph decomposition by cycle-consistent edge cutting",
    propagate_version = true
)]
struct Cli {
    /// Number of worker threads (default: one per core; results do not
    /// depend on this)
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a grid instance from an edge-probability map (PGM or CSV)
    BuildGraph {
        /// Edge map: PGM (`P2`/`P5`, maxval 255) or a CSV matrix in [0, 1]
        edge_map: PathBuf,
        /// Grid connectivity distances as MIN:MAX
        #[arg(long, value_name = "MIN:MAX", default_value = "2:8", value_parser = parse_dist)]
        dist: GridConfig,
        /// Where to write the graph file
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Run mean-field inference on a graph file
    Optimize {
        /// Input graph file
        graph: PathBuf,
        /// Cooling schedule
        #[arg(long, value_enum, default_value_t = ScheduleArg::Adaptive)]
        schedule: ScheduleArg,
        /// Number of update sweeps
        #[arg(long, default_value_t = 20)]
        iters: usize,
        /// The schedule advances only while the number of violated
        /// triangles is below this
        #[arg(long = "threshold-a", default_value_t = 100, value_name = "COUNT")]
        threshold_a: usize,
        /// Step applied to the sharpening exponent or the temperature
        #[arg(long, default_value_t = 0.05)]
        increment: f64,
        /// Rounding threshold for diagnostics and the final labeling
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        /// Potential parameters file (`key = value` lines)
        #[arg(long)]
        params: Option<PathBuf>,
        /// Write the optimized marginals back as a graph file
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Write a JSON run report
        #[arg(long)]
        report: Option<PathBuf>,
        /// Ground-truth partition file to score the result against
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Seed echoed into the report for bookkeeping
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Omit wall-clock timings so identical runs produce identical
        /// reports
        #[arg(long)]
        no_timings: bool,
    },
    /// Produce a feasible decomposition of a graph file
    Solve {
        /// Input graph file
        graph: PathBuf,
        /// Solver to use
        #[arg(long, value_enum, default_value_t = MethodArg::Round)]
        method: MethodArg,
        /// Rounding threshold (method `round` only)
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        /// Write the edge labeling (1 = cut)
        #[arg(long)]
        labeling_out: Option<PathBuf>,
        /// Write the node partition
        #[arg(long)]
        partition_out: Option<PathBuf>,
    },
    /// Count triangles that violate the cycle inequalities
    Check {
        /// Input graph file
        graph: PathBuf,
        /// Marginals file (one value per line); defaults to the graph's
        /// own probabilities
        marginals: Option<PathBuf>,
        /// Rounding threshold for the binary counts
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        /// Also write the counts as JSON
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Compare two partition files
    Metrics {
        /// First partition file
        partition_a: PathBuf,
        /// Second partition file
        partition_b: PathBuf,
        /// Append the scores as a CSV row (header written for new files)
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Generate a seeded synthetic instance with a planted partition
    Synth {
        #[arg(long, default_value_t = 32)]
        height: usize,
        #[arg(long, default_value_t = 32)]
        width: usize,
        /// Grid connectivity distances as MIN:MAX
        #[arg(long, value_name = "MIN:MAX", default_value = "2:4", value_parser = parse_dist)]
        dist: GridConfig,
        /// Amplitude of the uniform noise on edge probabilities
        #[arg(long, default_value_t = 0.3)]
        noise: f64,
        /// Fraction of edges whose evidence is flipped to the wrong side
        #[arg(long, default_value_t = 0.01)]
        flip_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Where to write the graph file
        #[arg(long, short)]
        out: PathBuf,
        /// Write the planted partition
        #[arg(long)]
        truth_out: Option<PathBuf>,
        /// Write the planted edge labeling
        #[arg(long)]
        labeling_out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScheduleArg {
    /// Keep the sharpening exponent and temperature fixed
    None,
    /// Raise the sharpening exponent once violations are rare
    #[value(alias = "adaptive_phi", alias = "adaptive-phi")]
    Adaptive,
    /// Lower the softmax temperature by a fixed step every sweep
    #[value(alias = "softmax_linear")]
    SoftmaxLinear,
    /// Lower the temperature once violations are rare
    #[value(alias = "softmax_adaptive")]
    SoftmaxAdaptive,
}

impl From<ScheduleArg> for Schedule {
    fn from(arg: ScheduleArg) -> Self {
        match arg {
            ScheduleArg::None => Schedule::None,
            ScheduleArg::Adaptive => Schedule::AdaptivePhi,
            ScheduleArg::SoftmaxLinear => Schedule::SoftmaxLinear,
            ScheduleArg::SoftmaxAdaptive => Schedule::SoftmaxAdaptive,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    /// Exhaustive search over partitions (small instances only)
    Exact,
    /// Greedy edge contraction
    Greedy,
    /// Threshold the probabilities and repair by connected components
    Round,
}

/// How a failed run is reported: usage and I/O problems exit with 2,
/// computation failures with 1.
enum Failure {
    Usage(String),
    Compute(String),
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        match err {
            Error::Io { .. } | Error::Parse { .. } | Error::InvalidConfig(_) => {
                Failure::Usage(err.to_string())
            }
            other => Failure::Compute(other.to_string()),
        }
    }
}

fn parse_dist(raw: &str) -> Result<GridConfig, String> {
    let (lo, hi) = raw
        .split_once(':')
        .ok_or_else(|| format!("expected MIN:MAX, got `{raw}`"))?;
    let min = lo
        .trim()
        .parse::<usize>()
        .map_err(|e| format!("invalid minimum distance `{lo}`: {e}"))?;
    let max = hi
        .trim()
        .parse::<usize>()
        .map_err(|e| format!("invalid maximum distance `{hi}`: {e}"))?;
    GridConfig::new(min, max).map_err(|e| e.to_string())
}

fn require_open_unit(name: &str, value: f64) -> Result<(), Failure> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Failure::Usage(format!(
            "{name} must lie strictly between 0 and 1, got {value}"
        )))
    }
}

fn read_file_for(path: &Path, what: &str) -> Result<Vec<u8>, Failure> {
    std::fs::read(path)
        .map_err(|e| Failure::Usage(format!("cannot read {what} {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents)
        .map_err(|e| Failure::Usage(format!("cannot access {}: {e}", path.display())))
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => 0,
        Err(Failure::Compute(message)) => {
            eprintln!("error: {message}");
            1
        }
        Err(Failure::Usage(message)) => {
            eprintln!("error: {message}");
            2
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Failure::Usage(format!("cannot build thread pool: {e}")))?;
            pool.install(|| dispatch(cli.command))
        }
        None => dispatch(cli.command),
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::BuildGraph {
            edge_map,
            dist,
            out,
        } => cmd_build_graph(&edge_map, &dist, &out),
        Command::Optimize {
            graph,
            schedule,
            iters,
            threshold_a,
            increment,
            threshold,
            params,
            out,
            report,
            truth,
            seed,
            no_timings,
        } => cmd_optimize(OptimizeArgs {
            graph,
            schedule,
            iters,
            threshold_a,
            increment,
            threshold,
            params,
            out,
            report,
            truth,
            seed,
            no_timings,
        }),
        Command::Solve {
            graph,
            method,
            threshold,
            labeling_out,
            partition_out,
        } => cmd_solve(&graph, method, threshold, labeling_out, partition_out),
        Command::Check {
            graph,
            marginals,
            threshold,
            json,
        } => cmd_check(&graph, marginals, threshold, json),
        Command::Metrics {
            partition_a,
            partition_b,
            csv,
        } => cmd_metrics(&partition_a, &partition_b, csv),
        Command::Synth {
            height,
            width,
            dist,
            noise,
            flip_fraction,
            seed,
            out,
            truth_out,
            labeling_out,
        } => cmd_synth(
            SynthConfig {
                height,
                width,
                grid: dist,
                noise,
                flip_fraction,
                seed,
            },
            &out,
            truth_out,
            labeling_out,
        ),
    }
}

fn cmd_build_graph(edge_map: &Path, dist: &GridConfig, out: &Path) -> Result<(), Failure> {
    let map = read_edge_map(edge_map).map_err(|e| match e {
        Error::Io { path, source } => {
            Failure::Usage(format!("cannot read edge map {path}: {source}"))
        }
        other => other.into(),
    })?;
    let graph = build_grid_graph(&map, dist)?;
    let triangles = enumerate_triangles(&graph);
    write_graph(out, &graph)?;
    println!(
        "nodes {} edges {} triangles {}",
        graph.num_nodes(),
        graph.num_edges(),
        triangles.len()
    );
    Ok(())
}

struct OptimizeArgs {
    graph: PathBuf,
    schedule: ScheduleArg,
    iters: usize,
    threshold_a: usize,
    increment: f64,
    threshold: f64,
    params: Option<PathBuf>,
    out: Option<PathBuf>,
    report: Option<PathBuf>,
    truth: Option<PathBuf>,
    seed: u64,
    no_timings: bool,
}

fn cmd_optimize(args: OptimizeArgs) -> Result<(), Failure> {
    require_open_unit("--threshold", args.threshold)?;
    if !(args.increment.is_finite() && args.increment >= 0.0) {
        return Err(Failure::Usage(format!(
            "--increment must be a nonnegative finite number, got {}",
            args.increment
        )));
    }
    let started = Instant::now();

    let raw = read_file_for(&args.graph, "graph")?;
    let graph = read_graph(&args.graph)?;
    let triangles = enumerate_triangles(&graph);
    let params = match &args.params {
        Some(path) => read_params(path)?,
        None => PotentialParams::default(),
    };
    let mut cooling = CoolingState::with_schedule(args.schedule.into());
    cooling.increment = args.increment;
    cooling.threshold_a = args.threshold_a;
    let config = MeanFieldConfig {
        iterations: args.iters,
        cooling,
        schedule_granularity: ScheduleGranularity::PerIteration,
        rounding_threshold: args.threshold,
    };

    let initial = EdgeMarginals::from_graph(&graph);
    let (marginals, trajectory) = run_meanfield(&graph, &initial, &triangles, &params, &config)?;
    let solve = round_and_repair(&marginals, &graph, args.threshold);

    let scores = match &args.truth {
        Some(path) => {
            let truth = read_partition(path)?;
            let score = PartitionScore::compute(&solve.partition, &truth)?;
            serde_json::json!({
                "rand_index": score.rand_index,
                "variation_of_information": score.variation_of_information,
            })
        }
        None => serde_json::json!({}),
    };

    if let Some(path) = &args.out {
        let mut sharpened = graph.clone();
        sharpened.replace_probs(marginals.as_slice().to_vec())?;
        write_graph(path, &sharpened)?;
    }

    let first = *trajectory.first().expect("trajectory is never empty");
    let last = *trajectory.last().expect("trajectory is never empty");
    let final_state = FinalBlock::from_solve(last.cycle_stats, &solve);

    if let Some(path) = &args.report {
        let report = RunReport {
            version: REPORT_VERSION,
            input: InputBlock {
                path: args.graph.display().to_string(),
                sha256: sha256_hex(&raw),
                nodes: graph.num_nodes(),
                edges: graph.num_edges(),
                triangles: triangles.len(),
            },
            config: ConfigBlock {
                meanfield: config,
                params,
            },
            trajectory,
            final_state,
            scores: scores.clone(),
            seed: args.seed,
            timings: (!args.no_timings).then(|| Timings {
                total_seconds: started.elapsed().as_secs_f64(),
            }),
        };
        let json = serde_json::to_string_pretty(&report)
            .map_err(|e| Failure::Compute(format!("cannot serialize report: {e}")))?;
        write_file(path, &(json + "\n"))?;
    }

    println!(
        "invalid_relaxed {} -> {}",
        first.cycle_stats.invalid_relaxed, last.cycle_stats.invalid_relaxed
    );
    println!(
        "invalid_rounded {} -> {}",
        first.cycle_stats.invalid_rounded, last.cycle_stats.invalid_rounded
    );
    print_solution(&solve);
    if let Some(rand_index) = scores.get("rand_index") {
        println!("rand_index {:.6}", rand_index.as_f64().unwrap_or(f64::NAN));
    }
    if let Some(vi) = scores.get("variation_of_information") {
        println!(
            "variation_of_information {:.6}",
            vi.as_f64().unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

fn print_solution(result: &SolveResult) {
    println!("objective_linear {:.6}", result.objective_linear);
    println!("objective_cubic {:.6}", result.objective_cubic);
    println!("components {}", result.partition.num_components());
    println!("feasible {}", result.feasible);
}

fn cmd_solve(
    graph_path: &Path,
    method: MethodArg,
    threshold: f64,
    labeling_out: Option<PathBuf>,
    partition_out: Option<PathBuf>,
) -> Result<(), Failure> {
    let graph = read_graph(graph_path)?;
    let result = match method {
        MethodArg::Exact => solve_exact(&graph)?,
        MethodArg::Greedy => greedy_contract(&graph),
        MethodArg::Round => {
            require_open_unit("--threshold", threshold)?;
            let marginals = EdgeMarginals::new(graph.probs().to_vec());
            round_and_repair(&marginals, &graph, threshold)
        }
    };
    if let Some(path) = &labeling_out {
        write_labeling(path, &result.labeling)?;
    }
    if let Some(path) = &partition_out {
        write_partition(path, &result.partition)?;
    }
    print_solution(&result);
    Ok(())
}

fn cmd_check(
    graph_path: &Path,
    marginals_path: Option<PathBuf>,
    threshold: f64,
    json: Option<PathBuf>,
) -> Result<(), Failure> {
    require_open_unit("--threshold", threshold)?;
    let graph = read_graph(graph_path)?;
    let marginals = match &marginals_path {
        Some(path) => {
            let values = read_marginals(path)?;
            if values.len() != graph.num_edges() {
                return Err(Failure::Usage(format!(
                    "marginals length {} does not match edge count {}",
                    values.len(),
                    graph.num_edges()
                )));
            }
            values
        }
        None => EdgeMarginals::new(graph.probs().to_vec()),
    };
    let triangles = enumerate_triangles(&graph);
    let stats = count_invalid(&marginals, &triangles, threshold);
    println!(
        "total_cycles {} invalid_relaxed {} invalid_rounded {}",
        stats.total_cycles, stats.invalid_relaxed, stats.invalid_rounded
    );
    if let Some(path) = &json {
        let body = serde_json::to_string_pretty(&stats)
            .map_err(|e| Failure::Compute(format!("cannot serialize counts: {e}")))?;
        write_file(path, &(body + "\n"))?;
    }
    Ok(())
}

fn cmd_metrics(
    partition_a: &Path,
    partition_b: &Path,
    csv: Option<PathBuf>,
) -> Result<(), Failure> {
    let a = read_partition(partition_a)?;
    let b = read_partition(partition_b)?;
    let score = PartitionScore::compute(&a, &b)?;
    println!("rand_index {:.6}", score.rand_index);
    println!(
        "variation_of_information {:.6}",
        score.variation_of_information
    );
    if let Some(path) = &csv {
        append_csv_row(path, partition_a, partition_b, &score)?;
    }
    Ok(())
}

fn append_csv_row(
    path: &Path,
    partition_a: &Path,
    partition_b: &Path,
    score: &PartitionScore,
) -> Result<(), Failure> {
    use std::io::Write as _;
    let fresh = std::fs::metadata(path)
        .map(|m| m.len() == 0)
        .unwrap_or(true);
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Failure::Usage(format!("cannot access {}: {e}", path.display())))?;
    let mut row = String::new();
    if fresh {
        row.push_str("partition_a,partition_b,rand_index,variation_of_information\n");
    }
    use std::fmt::Write as _;
    let _ = writeln!(
        row,
        "{},{},{:.6},{:.6}",
        partition_a.display(),
        partition_b.display(),
        score.rand_index,
        score.variation_of_information
    );
    file.write_all(row.as_bytes())
        .map_err(|e| Failure::Usage(format!("cannot access {}: {e}", path.display())))
}

fn cmd_synth(
    config: SynthConfig,
    out: &Path,
    truth_out: Option<PathBuf>,
    labeling_out: Option<PathBuf>,
) -> Result<(), Failure> {
    let instance = planted_grid_instance(&config)?;
    write_graph(out, &instance.graph)?;
    if let Some(path) = &truth_out {
        write_partition(path, &instance.truth)?;
    }
    if let Some(path) = &labeling_out {
        write_labeling(path, &instance.truth_labeling)?;
    }
    println!(
        "nodes {} edges {} components {}",
        instance.graph.num_nodes(),
        instance.graph.num_edges(),
        instance.truth.num_components()
    );
    Ok(())
}
