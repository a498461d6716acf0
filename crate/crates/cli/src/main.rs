use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use deltacon_core::affinity::SolverConfig;
use deltacon_core::bench::{self, BenchConfig};
use deltacon_core::cluster::{pairwise_similarity, ward_cluster, Merge};
use deltacon_core::deltacon::{DeltaConOptions, SimilarityResult, Variant};
use deltacon_core::generate::generate_named;
use deltacon_core::properties::{battery, render_markdown, run_battery, Comparator, BATTERY_SEED};
use deltacon_core::temporal::detect_anomalies;
use deltacon_core::{load_edge_list, Graph, Method};

#[derive(Parser)]
#[command(
    name = "deltacon",
    version,
    about = "Graph similarity with DeltaCon and baselines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare two graphs with one or more methods.
    Compare(CompareArgs),
    /// Run the edge-importance / weight-awareness / submodularity battery.
    Properties(PropertiesArgs),
    /// Score consecutive snapshots in a directory and flag drops.
    Anomaly(AnomalyArgs),
    /// Ward clustering of a graph collection.
    Cluster(ClusterArgs),
    /// Time DeltaCon on random graphs of doubling size.
    Bench(BenchArgs),
    /// Write a synthetic graph (e.g. `mmB10`) as an edge list.
    Gen(GenArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Treat graph arguments as synthetic names (K10, mB10, w5L20, ...).
    #[arg(long)]
    synthetic: bool,
    /// Seed for random edge removal in synthetic names.
    #[arg(long, default_value_t = BATTERY_SEED)]
    gen_seed: u64,
    /// Node ids in edge-list files start at 1.
    #[arg(long)]
    one_based: bool,
    /// Fix the node count instead of inferring it from the largest id.
    #[arg(long)]
    nodes: Option<usize>,
}

impl InputArgs {
    fn load(&self, arg: &str) -> Result<Graph> {
        if self.synthetic {
            generate_named(arg, self.gen_seed).with_context(|| format!("cannot build `{arg}`"))
        } else {
            load_edge_list(arg, self.nodes, self.one_based)
                .with_context(|| format!("cannot load {arg}"))
        }
    }
}

#[derive(Args)]
struct SolverArgs {
    /// Number of node groups for `dc`.
    #[arg(long = "g", default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    groups: u64,
    /// Number of partition seeds averaged by `dc` (seeds 0..N).
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    seeds: u64,
    /// Override the shared epsilon; must lie in (0, 1).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Residual tolerance of the affinity solver.
    #[arg(long, default_value_t = SolverConfig::default().tol)]
    tol: f64,
    #[arg(long, default_value_t = SolverConfig::default().max_iter)]
    max_iter: usize,
}

impl SolverArgs {
    fn options(&self) -> Result<DeltaConOptions> {
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0 && eps < 1.0) {
                bail!("--epsilon must lie in (0, 1), got {eps}");
            }
        }
        if !(self.tol > 0.0) {
            bail!("--tol must be positive, got {}", self.tol);
        }
        Ok(DeltaConOptions {
            epsilon: self.epsilon,
            solver: SolverConfig {
                tol: self.tol,
                max_iter: self.max_iter,
                ..SolverConfig::default()
            },
        })
    }

    fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds).collect()
    }

    fn comparator(&self, method: Method) -> Result<Comparator> {
        Ok(Comparator {
            method,
            groups: self.groups as usize,
            seeds: self.seed_list(),
            options: self.options()?,
        })
    }

    fn variant(&self, method: Method) -> Result<Variant> {
        match method {
            Method::Dc0 => Ok(Variant::Exact),
            Method::Dc => Ok(Variant::grouped(self.groups as usize, self.seed_list())),
            other => bail!(
                "only dc0 and dc are supported here, got {}",
                other.cli_name()
            ),
        }
    }
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: deltacon_core::Error| e.to_string())
}

#[derive(Args)]
struct CompareArgs {
    first: String,
    second: String,
    /// Repeat or comma-separate for several methods.
    #[arg(long, value_delimiter = ',', default_value = "dc0", value_parser = parse_method)]
    method: Vec<Method>,
    /// Print CSV instead of JSON lines.
    #[arg(long)]
    csv: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct PropertiesArgs {
    #[arg(long, default_value = "dc0", value_parser = parse_method)]
    method: Method,
    /// Seed for the random edge removals in the battery graphs.
    #[arg(long, default_value_t = BATTERY_SEED)]
    gen_seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct AnomalyArgs {
    /// Directory of edge-list snapshots, ordered by file name.
    #[arg(long)]
    dir: PathBuf,
    #[arg(long, default_value = "dc0", value_parser = parse_method)]
    method: Method,
    #[arg(long)]
    one_based: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long, num_args = 2.., required = true)]
    graphs: Vec<String>,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value = "dc", value_parser = parse_method)]
    method: Method,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Explicit edge counts; defaults to 2^min_exp .. 2^max_exp.
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 14)]
    min_exp: u32,
    #[arg(long, default_value_t = 20)]
    max_exp: u32,
    #[arg(long = "g", default_value_t = 5)]
    groups: usize,
    #[arg(long, default_value_t = 10.0)]
    mean_degree: f64,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    name: String,
    #[arg(long, default_value_t = BATTERY_SEED)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn compare(args: &CompareArgs) -> Result<()> {
    let g1 = args.input.load(&args.first)?;
    let g2 = args.input.load(&args.second)?;
    let results = args
        .method
        .iter()
        .map(|&m| Ok(args.solver.comparator(m)?.compare(&g1, &g2)?))
        .collect::<Result<Vec<SimilarityResult>>>()?;
    let mut out = sink(args.output.as_deref())?;
    if args.csv {
        writeln!(
            out,
            "method,distance,similarity,similarity_std,epsilon,g,seeds,runtime_ms"
        )?;
        for r in &results {
            let seeds = r.seeds.as_ref().map(|s| s.len()).or(r.seed.map(|_| 1));
            writeln!(
                out,
                "{},{},{},{},{},{},{},{:.3}",
                r.method,
                opt(r.distance),
                opt(r.similarity),
                opt(r.similarity_std),
                opt(r.epsilon),
                opt(r.g),
                opt(seeds),
                r.runtime_ms
            )?;
        }
    } else {
        for r in &results {
            writeln!(out, "{}", serde_json::to_string(r)?)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn properties(args: &PropertiesArgs) -> Result<()> {
    let cmp = args.solver.comparator(args.method)?;
    let outcomes = run_battery(&battery(args.gen_seed), &cmp)?;
    let mut out = sink(args.output.as_deref())?;
    write!(out, "{}", render_markdown(&outcomes))?;
    out.flush()?;
    Ok(())
}

fn snapshot_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("cannot read {}", dir.display()))? {
        let path = entry?.path();
        let hidden = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.starts_with('.'));
        if path.is_file() && !hidden {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

fn anomaly(args: &AnomalyArgs) -> Result<()> {
    let paths = snapshot_paths(&args.dir)?;
    if paths.len() < 4 {
        bail!(
            "{} holds {} snapshots; at least 4 are needed for 3 scores",
            args.dir.display(),
            paths.len()
        );
    }
    let snapshots = paths
        .iter()
        .map(|p| {
            load_edge_list(p, None, args.one_based)
                .with_context(|| format!("cannot load {}", p.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    let report = detect_anomalies(
        &snapshots,
        &args.solver.variant(args.method)?,
        &args.solver.options()?,
    )?;
    let mut out = sink(args.output.as_deref())?;
    report.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ClusterOutput<'a> {
    graphs: &'a [String],
    k: usize,
    labels: Vec<usize>,
    merges: &'a [Merge],
    similarity: &'a [Vec<f64>],
}

fn cluster(args: &ClusterArgs) -> Result<()> {
    let graphs = args
        .graphs
        .iter()
        .map(|g| args.input.load(g))
        .collect::<Result<Vec<_>>>()?;
    let sim = pairwise_similarity(
        &graphs,
        &args.solver.variant(args.method)?,
        &args.solver.options()?,
    )?;
    let tree = ward_cluster(&sim)?;
    let record = ClusterOutput {
        graphs: &args.graphs,
        k: args.k,
        labels: tree.cut(args.k)?,
        merges: &tree.merges,
        similarity: &sim,
    };
    let mut out = sink(args.output.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &record)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn run_bench(args: &BenchArgs) -> Result<()> {
    if args.min_exp > args.max_exp || args.max_exp >= usize::BITS - 1 {
        bail!("bad exponent range {}..={}", args.min_exp, args.max_exp);
    }
    let cfg = BenchConfig {
        edge_counts: if args.sizes.is_empty() {
            bench::doubling(args.min_exp, args.max_exp)
        } else {
            args.sizes.clone()
        },
        mean_degree: args.mean_degree,
        groups: args.groups,
        seed: args.seed,
        repeats: args.repeats,
        threads: None,
    };
    let rows = bench::run_bench(&cfg)?;
    let mut out = sink(args.output.as_deref())?;
    bench::write_csv(&rows, &mut out)?;
    out.flush()?;
    Ok(())
}

fn gen(args: &GenArgs) -> Result<()> {
    let g = generate_named(&args.name, args.seed)?;
    let mut out = sink(args.output.as_deref())?;
    deltacon_core::graph::write_edge_list(&g, &mut out)?;
    out.flush()?;
    Ok(())
}

fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var("DELTACON_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .with_context(|| format!("DELTACON_THREADS must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("cannot size the worker pool")
}

fn run(cli: Cli) -> Result<()> {
    init_threads()?;
    match &cli.command {
        Command::Compare(a) => compare(a),
        Command::Properties(a) => properties(a),
        Command::Anomaly(a) => anomaly(a),
        Command::Cluster(a) => cluster(a),
        Command::Bench(a) => run_bench(a),
        Command::Gen(a) => gen(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
