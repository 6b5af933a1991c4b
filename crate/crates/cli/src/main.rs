use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use specred::io::{load_features, load_graph, save_mapping, GraphFormat};
use specred::partition::{multilevel_partition_on, DIRECT_WARN_NODES};
use specred::tsne::{multilevel_tsne_with, plain_tsne, FeatureReduction, KnnWeights};
use specred::{
    direct_spectral_partition, reduction_report, spectral_reduce, CutType, Error, ReduceOptions, TsneParams,
};

const DEFAULT_SEED: u64 = 42;

#[derive(Parser, Debug)]
#[command(name = "specred", version, about = "Spectral graph reduction, partitioning and t-SNE")]
struct Cli {
    /// Worker threads for parallel kernels (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Reduce a graph and write the hierarchy plus report.json.
    Reduce(ReduceArgs),
    /// Spectral k-way partition, direct or on a reduced hierarchy.
    Partition(PartitionArgs),
    /// Multilevel t-SNE of a feature matrix.
    Tsne(TsneArgs),
}

#[derive(Args, Debug, Clone)]
struct GraphInput {
    /// Graph file (.mtx, .graph/.metis, or edge list).
    #[arg(long = "in")]
    input: PathBuf,
    /// Override the format guessed from the extension.
    #[arg(long)]
    format: Option<GraphFormat>,
}

impl GraphInput {
    fn load(&self) -> specred::Result<specred::Graph> {
        let fmt = self.format.unwrap_or_else(|| GraphFormat::from_path(&self.input));
        load_graph(&self.input, fmt)
    }
}

#[derive(Args, Debug, Clone)]
struct ReductionFlags {
    /// Target node-reduction ratio (>= 1).
    #[arg(long, default_value_t = 4.0)]
    ratio: f64,
    /// Spectral similarity target of the sparsifier (> 1).
    #[arg(long, default_value_t = 2.0)]
    sigma: f64,
    /// Edges-per-node threshold above which sparsification runs first.
    #[arg(long, default_value_t = 40.0)]
    gamma_max: f64,
    #[arg(long)]
    force_phase_b_first: bool,
}

impl ReductionFlags {
    fn options(&self, seed: u64) -> ReduceOptions {
        ReduceOptions {
            psi: self.ratio,
            sigma: self.sigma,
            gamma_max: self.gamma_max,
            force_phase_b_first: self.force_phase_b_first,
            seed,
            ..Default::default()
        }
    }
}

#[derive(Args, Debug)]
struct ReduceArgs {
    #[command(flatten)]
    input: GraphInput,
    #[command(flatten)]
    reduction: ReductionFlags,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Eigenvalues compared in the report (0 disables).
    #[arg(long, default_value_t = 10)]
    eigs: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args, Debug)]
struct PartitionArgs {
    #[command(flatten)]
    input: GraphInput,
    #[arg(short = 'k', long)]
    k: usize,
    #[arg(long, default_value = "normalized")]
    cut: CutType,
    /// Solve the eigenproblem on the full graph.
    #[arg(long)]
    direct: bool,
    #[command(flatten)]
    reduction: ReductionFlags,
    /// Output directory for partition.txt and metrics.json.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args, Debug)]
struct TsneArgs {
    /// CSV/TSV feature matrix, one sample per row.
    #[arg(long = "in")]
    input: PathBuf,
    /// Zero-based column holding class labels.
    #[arg(long)]
    label_column: Option<usize>,
    #[arg(long, default_value_t = 10)]
    knn: usize,
    #[arg(long, default_value_t = 8.0)]
    ratio: f64,
    #[arg(long, default_value_t = 2.0)]
    sigma: f64,
    #[arg(long, default_value_t = 30.0)]
    perplexity: f64,
    #[arg(long, default_value_t = 1000)]
    iterations: usize,
    /// Gaussian instead of unit kNN edge weights.
    #[arg(long)]
    gaussian_weights: bool,
    /// Sum cluster features instead of averaging them.
    #[arg(long)]
    feature_sum: bool,
    /// Embed the raw data without any reduction.
    #[arg(long)]
    plain: bool,
    /// Output directory for embedding.csv, mapping.txt and kl_trace.csv.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type CmdResult = Result<(), Failure>;

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

fn create_dir(dir: &Path) -> CmdResult {
    fs::create_dir_all(dir).map_err(|source| {
        Failure::Lib(Error::Io {
            path: dir.to_path_buf(),
            source,
        })
    })
}

fn write_file(path: &Path, text: &str) -> CmdResult {
    fs::write(path, text).map_err(|source| {
        Failure::Lib(Error::Io {
            path: path.to_path_buf(),
            source,
        })
    })
}

fn write_json(path: &Path, v: &Value) -> CmdResult {
    let mut text = serde_json::to_string_pretty(v).map_err(Error::from)?;
    text.push('\n');
    write_file(path, &text)
}

fn cmd_reduce(a: &ReduceArgs) -> CmdResult {
    let opts = a.reduction.options(a.seed);
    opts.validate()?;
    let g = a.input.load()?;
    let h = spectral_reduce(&g, &opts)?;
    let r = reduction_report(&h, a.eigs)?;
    create_dir(&a.out)?;
    specred::pipeline::save_hierarchy(&a.out.join("hierarchy"), &h)?;
    let report = json!({
        "seed": a.seed,
        "node_ratio": r.node_ratio,
        "edge_ratio": r.edge_ratio,
        "t_reduction_s": round3(r.t_reduction_s),
        "nodes_original": r.nodes_original,
        "nodes_reduced": r.nodes_reduced,
        "edges_original": r.edges_original,
        "edges_reduced": r.edges_reduced,
        "route": r.route,
        "trace": r.trace,
        "levels": r.levels,
        "stalled": r.stalled,
        "eig_compare": r.eig_compare,
    });
    write_json(&a.out.join("report.json"), &report)?;
    println!(
        "reduced {} -> {} nodes ({:.3}x) in {:.3} s, seed {}",
        r.nodes_original, r.nodes_reduced, r.node_ratio, r.t_reduction_s, a.seed
    );
    Ok(())
}

fn cmd_partition(a: &PartitionArgs) -> CmdResult {
    if a.k < 2 {
        return Err(Failure::Usage(format!("-k must be at least 2, got {}", a.k)));
    }
    let opts = a.reduction.options(a.seed);
    if !a.direct {
        opts.validate()?;
    }
    let g = a.input.load()?;
    if a.direct && g.n() > DIRECT_WARN_NODES {
        log::warn!(
            "--direct on {} nodes (> {DIRECT_WARN_NODES}) uses a dense eigensolver and may be slow",
            g.n()
        );
        eprintln!("warning: direct mode on {} nodes may be slow", g.n());
    }
    let sp = if a.direct {
        direct_spectral_partition(&g, a.k, a.cut, a.seed)?
    } else {
        let start = Instant::now();
        let h = spectral_reduce(&g, &opts)?;
        if h.component().is_some() {
            return Err(Failure::Lib(Error::Disconnected(g.connected_components().count)));
        }
        multilevel_partition_on(&h, &g, a.k, a.cut, a.seed, start)?
    };
    create_dir(&a.out)?;
    sp.partition.save(&a.out.join("partition.txt"))?;
    let t = &sp.timings;
    let metrics = json!({
        "seed": a.seed,
        "k": a.k,
        "cut": a.cut,
        "mode": if a.direct { "direct" } else { "multilevel" },
        "sizes": sp.partition.sizes(),
        "edge_cut": sp.report.edge_cut,
        "ratio_cut": sp.report.ratio_cut,
        "normalized_cut": sp.report.normalized_cut,
        "t_reduce_s": round3(t.t_reduce_s),
        "t_eigs_s": round3(t.t_eigs_s),
        "t_smooth_s": round3(t.t_smooth_s),
        "t_kmeans_s": round3(t.t_kmeans_s),
        "t_total_s": round3(t.t_total_s),
    });
    write_json(&a.out.join("metrics.json"), &metrics)?;
    let theta = match a.cut {
        CutType::Normalized => sp.report.normalized_cut,
        CutType::Ratio => sp.report.ratio_cut,
    };
    println!("{}-way {:?} cut {:.6} in {:.3} s, seed {}", a.k, a.cut, theta, t.t_total_s, a.seed);
    Ok(())
}

fn cmd_tsne(a: &TsneArgs) -> CmdResult {
    if a.knn == 0 {
        return Err(Failure::Usage("--knn must be at least 1".into()));
    }
    let opts = ReduceOptions {
        psi: a.ratio,
        sigma: a.sigma,
        force_phase_b_first: true,
        seed: a.seed,
        ..Default::default()
    };
    opts.validate()?;
    let params = TsneParams {
        perplexity: a.perplexity,
        iterations: a.iterations,
        ..Default::default()
    };
    let f = load_features(&a.input, a.label_column)?;
    let weights = if a.gaussian_weights {
        KnnWeights::Gaussian
    } else {
        KnnWeights::Unit
    };
    let features = if a.feature_sum {
        FeatureReduction::Sum
    } else {
        FeatureReduction::Mean
    };
    let start = Instant::now();
    let r = if a.plain {
        plain_tsne(&f, &params, a.seed)?
    } else {
        multilevel_tsne_with(&f, a.knn, weights, features, &opts, &params, a.seed)?
    };
    let elapsed = start.elapsed().as_secs_f64();
    create_dir(&a.out)?;

    let labels = r.reduced.labels();
    let names = r.reduced.label_names();
    let mut csv = String::from(if labels.is_some() { "id,x,y,label\n" } else { "id,x,y\n" });
    for i in 0..r.embedding.n() {
        let [x, y] = r.embedding.point(i);
        let _ = write!(csv, "{i},{x:.9e},{y:.9e}");
        if let Some(l) = labels {
            let _ = write!(csv, ",{}", names[l[i]]);
        }
        csv.push('\n');
    }
    write_file(&a.out.join("embedding.csv"), &csv)?;
    save_mapping(&a.out.join("mapping.txt"), &r.mapping)?;
    let mut trace = String::from("iteration,kl\n");
    for (i, kl) in r.embedding.kl_trace.iter().enumerate() {
        let _ = writeln!(trace, "{},{kl:.12e}", i + 1);
    }
    write_file(&a.out.join("kl_trace.csv"), &trace)?;
    let summary = json!({
        "seed": a.seed,
        "n_original": f.n(),
        "n_reduced": r.reduced.n(),
        "knn": a.knn,
        "perplexity": r.perplexity,
        "iterations": a.iterations,
        "final_kl": r.embedding.kl_trace.last().copied(),
        "t_total_s": round3(elapsed),
    });
    write_json(&a.out.join("summary.json"), &summary)?;
    println!(
        "embedded {} reduced points from {} in {elapsed:.3} s, seed {}",
        r.reduced.n(),
        f.n(),
        a.seed
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SC_LOG", "warn"))
        .format_timestamp(None)
        .init();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let res = match &cli.cmd {
        Command::Reduce(a) => cmd_reduce(a),
        Command::Partition(a) => cmd_partition(a),
        Command::Tsne(a) => cmd_tsne(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
