//! Command-line interface: connect, stats, generate, bench.
//!
//! Exit codes: 0 success, 1 input or I/O error, 2 usage error, 101 internal
//! contract violation (panic).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bfs::{approx_diameter, build_adjacency};
use crate::generate::{generate_arcs, generate_pairs, GeneratorSpec};
use crate::graph::{validate_edge_list, EdgeList};
use crate::hybrid::{relabel_vertices, run_hybrid, ForceMode, HybridOptions, StageReport};
use crate::io::{read_edges, write_edges, write_labels, FileFormat};
use crate::powerlaw::{classify_scale_free, degree_histogram, fit_power_law};
use crate::sv::SvVariant;
use crate::team::{run_team, TeamContext};
use crate::Result;

#[derive(Parser)]
#[command(name = "concomp", version, about = "Connected components for large undirected graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Label the connected components of a graph and write the result.
    Connect(ConnectArgs),
    /// Degree distribution, power-law fit, and classifier decision.
    Stats(StatsArgs),
    /// Generate a synthetic edge list file.
    Generate(GenerateArgs),
    /// Connect with full per-iteration instrumentation.
    Bench(BenchArgs),
}

#[derive(Copy, Clone, ValueEnum)]
enum FormatArg {
    Text,
    Bin,
}

impl From<FormatArg> for FileFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => FileFormat::Text,
            FormatArg::Bin => FileFormat::Binary,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum ForceArg {
    Dynamic,
    #[value(name = "always_bfs")]
    AlwaysBfs,
    #[value(name = "never_bfs")]
    NeverBfs,
}

impl From<ForceArg> for ForceMode {
    fn from(f: ForceArg) -> Self {
        match f {
            ForceArg::Dynamic => ForceMode::Dynamic,
            ForceArg::AlwaysBfs => ForceMode::AlwaysBfs,
            ForceArg::NeverBfs => ForceMode::NeverBfs,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum VariantArg {
    Naive,
    Exclude,
    Balanced,
}

impl From<VariantArg> for SvVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Naive => SvVariant::Naive,
            VariantArg::Exclude => SvVariant::Exclude,
            VariantArg::Balanced => SvVariant::Balanced,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum KindArg {
    Rmat,
    Grid,
    Path,
    Er,
    Forest,
}

/// Graph source: an edge-list file or a synthetic generator.
#[derive(Args, Clone)]
struct InputArgs {
    /// Edge list file to read.
    #[arg(long)]
    input: Option<PathBuf>,
    /// File format for --input and --output.
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
    /// Synthetic graph kind (alternative to --input).
    #[arg(long, value_enum)]
    kind: Option<KindArg>,
    /// rmat: log2 of the vertex count.
    #[arg(long)]
    scale: Option<u32>,
    /// rmat: edges per vertex.
    #[arg(long, default_value_t = 16)]
    edge_factor: u64,
    /// grid: width.
    #[arg(long)]
    width: Option<u64>,
    /// grid: height.
    #[arg(long)]
    height: Option<u64>,
    /// path/er: vertex count.
    #[arg(long)]
    n: Option<u64>,
    /// er: edge probability.
    #[arg(long)]
    p: Option<f64>,
    /// forest: component count.
    #[arg(long)]
    components: Option<u64>,
    /// forest: vertices per component.
    #[arg(long, default_value_t = 4)]
    component_size: u64,
}

#[derive(Clone)]
enum InputSource {
    File(PathBuf, FileFormat),
    Generated(GeneratorSpec),
}

struct Usage(String);

impl InputArgs {
    fn resolve(&self, seed: u64) -> std::result::Result<InputSource, Usage> {
        match (&self.input, self.kind) {
            (Some(_), Some(_)) => Err(Usage("pass either --input or --kind, not both".into())),
            (None, None) => Err(Usage("an input is required: --input PATH or --kind KIND".into())),
            (Some(path), None) => Ok(InputSource::File(path.clone(), self.format.into())),
            (None, Some(kind)) => {
                let need = |flag: &str, v: Option<u64>| {
                    v.ok_or_else(|| Usage(format!("--{flag} is required for this --kind")))
                };
                let spec = match kind {
                    KindArg::Rmat => GeneratorSpec::Rmat {
                        scale: self
                            .scale
                            .ok_or_else(|| Usage("--scale is required for --kind rmat".into()))?,
                        edge_factor: self.edge_factor,
                        seed,
                    },
                    KindArg::Grid => GeneratorSpec::Grid {
                        width: need("width", self.width)?,
                        height: need("height", self.height)?,
                    },
                    KindArg::Path => GeneratorSpec::Path { n: need("n", self.n)? },
                    KindArg::Er => GeneratorSpec::Er {
                        n: need("n", self.n)?,
                        p: self
                            .p
                            .ok_or_else(|| Usage("--p is required for --kind er".into()))?,
                        seed,
                    },
                    KindArg::Forest => GeneratorSpec::Forest {
                        components: need("components", self.components)?,
                        component_size: self.component_size,
                    },
                };
                Ok(InputSource::Generated(spec))
            }
        }
    }
}

fn load_input(ctx: &mut TeamContext, source: &InputSource) -> Result<EdgeList> {
    match source {
        InputSource::File(path, format) => read_edges(ctx, path, *format),
        InputSource::Generated(spec) => generate_arcs(ctx, spec),
    }
}

#[derive(Args)]
struct ConnectArgs {
    /// Worker team size.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[command(flatten)]
    input: InputArgs,
    /// Scale-free classifier threshold on the K-S statistic.
    #[arg(long, default_value_t = 0.05)]
    tau: f64,
    /// Override the dynamic BFS decision.
    #[arg(long, value_enum, default_value = "dynamic")]
    force: ForceArg,
    /// RNG seed (BFS seed vertex, generators).
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Labels output file.
    #[arg(long)]
    output: Option<PathBuf>,
    /// SV working-set strategy.
    #[arg(long, value_enum, default_value = "balanced")]
    variant: VariantArg,
    /// Print per-iteration instrumentation.
    #[arg(long)]
    instrument: bool,
    /// Drop exact duplicate arcs at ingestion.
    #[arg(long)]
    dedup: bool,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 0.05)]
    tau: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Estimate the diameter with this many BFS runs.
    #[arg(long)]
    diameter_trials: Option<u64>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Edge list output file.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    connect: ConnectArgs,
    /// Run all three SV variants and print their working-set curves.
    #[arg(long)]
    compare_variants: bool,
}

fn print_instrumentation(report: &StageReport) {
    for s in &report.sv.per_iteration {
        for (stage, seconds) in &s.stages {
            println!(
                "iter={} stage={} seconds={:.6} active_min={} active_mean={:.2} active_max={}",
                s.iteration, stage, seconds, s.active_min, s.active_mean, s.active_max
            );
        }
        println!(
            "iter={} partitions={} temporaries={}",
            s.iteration, s.partitions, s.temporaries
        );
    }
}

fn connect_options(args: &ConnectArgs) -> HybridOptions {
    HybridOptions {
        tau: args.tau,
        force_mode: args.force.into(),
        rng_seed: args.seed,
        variant: args.variant.into(),
        permute: true,
        dedup: args.dedup,
    }
}

fn cmd_connect(args: &ConnectArgs) -> Result<StageReport> {
    let source = match args.input.resolve(args.seed) {
        Ok(s) => s,
        Err(Usage(msg)) => usage_exit(&msg),
    };
    let opts = connect_options(args);
    let output = args.output.clone();
    let format: FileFormat = args.input.format.into();
    let reports = run_team(args.workers, |ctx| -> Result<StageReport> {
        let edges = load_input(ctx, &source)?;
        let (labeling, report) = run_hybrid(ctx, edges, &opts);
        if let Some(path) = &output {
            write_labels(ctx, &labeling, path, format)?;
        }
        Ok(report)
    });
    let mut first: Option<StageReport> = None;
    for r in reports {
        first.get_or_insert(r?);
    }
    Ok(first.expect("team produced no report"))
}

fn cmd_stats(args: &StatsArgs) -> Result<()> {
    let source = match args.input.resolve(args.seed) {
        Ok(s) => s,
        Err(Usage(msg)) => usage_exit(&msg),
    };
    let trials = args.diameter_trials;
    let seed = args.seed;
    let outputs = run_team(args.workers, |ctx| -> Result<String> {
        let edges = load_input(ctx, &source)?;
        let stats = validate_edge_list(ctx, &edges);
        let hist = degree_histogram(ctx, &edges);
        let fit = fit_power_law(&hist);
        let mut out = String::new();
        out.push_str(&format!(
            "arcs={} vertices={} max_degree={} self_loops={}\n",
            stats.arcs, stats.vertices, stats.max_degree, stats.self_loops
        ));
        let bins: Vec<(u64, u64)> = hist.counts.iter().map(|(&d, &c)| (d, c)).collect();
        out.push_str(&format!("degree_bins={}\n", bins.len()));
        for &(d, c) in bins.iter().take(15) {
            out.push_str(&format!("degree {d}: {c}\n"));
        }
        if bins.len() > 15 {
            out.push_str("...\n");
            let &(d, c) = bins.last().unwrap();
            out.push_str(&format!("degree {d}: {c}\n"));
        }
        out.push_str(&format!(
            "alpha={:.4} x_min={} ks_stat={:.4} tail_size={}\n",
            fit.alpha, fit.x_min, fit.ks_stat, fit.tail_size
        ));
        out.push_str(&format!(
            "scale_free={} tau={}\n",
            classify_scale_free(&fit, args.tau),
            args.tau
        ));
        if let Some(trials) = trials {
            let (dense, _, n) = relabel_vertices(ctx, &edges);
            let adj = build_adjacency(ctx, &dense, n);
            let estimate = approx_diameter(ctx, &adj, trials, seed);
            out.push_str(&format!("approx_diameter={estimate} trials={trials}\n"));
        }
        Ok(out)
    });
    let mut first: Option<String> = None;
    for o in outputs {
        first.get_or_insert(o?);
    }
    print!("{}", first.expect("team produced no output"));
    Ok(())
}

fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let source = match args.input.resolve(args.seed) {
        Ok(s) => s,
        Err(Usage(msg)) => usage_exit(&msg),
    };
    let spec = match source {
        InputSource::Generated(spec) => spec,
        InputSource::File(..) => usage_exit("generate needs --kind, not --input"),
    };
    let format: FileFormat = args.input.format.into();
    let output = args.output.clone();
    let results = run_team(args.workers, |ctx| -> Result<u64> {
        let pairs = generate_pairs(ctx, &spec)?;
        write_edges(ctx, &pairs, &output, format)?;
        Ok(pairs.len() as u64)
    });
    let mut total = 0;
    for r in results {
        total += r?;
    }
    println!("wrote {total} edges to {}", args.output.display());
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Result<()> {
    if args.compare_variants {
        for variant in [VariantArg::Naive, VariantArg::Exclude, VariantArg::Balanced] {
            let mut connect = clone_connect(&args.connect);
            connect.variant = variant;
            connect.instrument = true;
            let label = match variant {
                VariantArg::Naive => "naive",
                VariantArg::Exclude => "exclude",
                VariantArg::Balanced => "balanced",
            };
            println!("variant={label}");
            let report = cmd_connect(&connect)?;
            print_instrumentation(&report);
            print!("{}", report.key_value_lines());
        }
        return Ok(());
    }
    let mut connect = clone_connect(&args.connect);
    connect.instrument = true;
    let report = cmd_connect(&connect)?;
    print_instrumentation(&report);
    print!("{}", report.key_value_lines());
    print!("{}", report.human_table());
    Ok(())
}

fn clone_connect(a: &ConnectArgs) -> ConnectArgs {
    ConnectArgs {
        workers: a.workers,
        input: a.input.clone(),
        tau: a.tau,
        force: a.force,
        seed: a.seed,
        output: a.output.clone(),
        variant: a.variant,
        instrument: a.instrument,
        dedup: a.dedup,
    }
}

fn usage_exit(msg: &str) -> ! {
    eprintln!("error: {msg}");
    std::process::exit(2);
}

/// Entry point; returns the process exit code.
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Connect(args) => {
            if !(args.tau > 0.0 && args.tau < 1.0) {
                usage_exit("--tau must be in (0, 1)");
            }
            if args.workers < 1 {
                usage_exit("--workers must be at least 1");
            }
            cmd_connect(args).map(|report| {
                if args.instrument {
                    print_instrumentation(&report);
                }
                print!("{}", report.key_value_lines());
                print!("{}", report.human_table());
            })
        }
        Command::Stats(args) => cmd_stats(args),
        Command::Generate(args) => cmd_generate(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
