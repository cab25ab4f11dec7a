//! The `coreset` command line: `score`, `graph`, `select`, `stats`, `synth`.
//!
//! Stages talk through files so the expensive ones (JPEG encoding, O(n^2)
//! neighbour search) can be cached and re-run independently. Every file
//! written carries a parameter echo.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::bpp::{score_dataset_bpp, score_stats, BppConfig, ChromaSubsampling};
use crate::dataset::{
    load_features, load_manifest, load_mask, load_score_table, load_selection_ids,
    write_features, write_selection, DatasetManifest, FeatureMatrix, ScoreTable,
};
use crate::error::{Error, Result};
use crate::graph::{build_graph, load_graph_edges, pairwise_knn, Bandwidth, KnnGraph, Metric};
use crate::histogram::{histogram, to_feature_matrix};
use crate::prototypicality::{kmeans_fit, ps_score, KMeansConfig};
use crate::sampler::{coverage_stats, graph_select, CoverageReport};
use crate::scores::{cpx_columns, Order};
use crate::synth::{self, SynthConfig, SynthReport};

#[derive(Debug, Parser)]
#[command(name = "coreset", version, about = "Entropy-based coreset selection for image datasets")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a score column and merge it into a score CSV.
    Score(ScoreArgs),
    /// Build a K-NN graph and write its edge list.
    Graph(GraphArgs),
    /// Select a coreset from scores, optionally diversified over a graph.
    Select(SelectArgs),
    /// Summarise a score column and, optionally, a selection's coverage.
    Stats(StatsArgs),
    /// Run the synthetic coverage benchmark.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Bpp,
    Ps,
    Cpx,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GraphSource {
    None,
    Features,
    Histogram,
}

impl GraphSource {
    fn as_str(self) -> &'static str {
        match self {
            GraphSource::None => "none",
            GraphSource::Features => "features",
            GraphSource::Histogram => "histogram",
        }
    }
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_enum)]
    pub which: Which,
    /// Score CSV to create or update.
    #[arg(long)]
    pub out: PathBuf,
    /// External score CSV (e.g. an `nll` column) merged before scoring.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub quality: u8,
    /// 444 or 420.
    #[arg(long, default_value = "444")]
    pub chroma: ChromaSubsampling,
    /// Use stored JPEG file sizes instead of re-encoding.
    #[arg(long)]
    pub stored: bool,
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Cluster count for `ps`; defaults to --num-classes.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub num_classes: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 300)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Args, Clone)]
pub struct GraphBuildArgs {
    /// Neighbour count K.
    #[arg(long)]
    pub knn: Option<usize>,
    /// `median` or a fixed kernel bandwidth.
    #[arg(long, default_value = "median")]
    pub sigma: Bandwidth,
    /// Feature CSV for `--graph features`.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Class count for `--graph histogram`.
    #[arg(long)]
    pub num_classes: Option<usize>,
    /// Void label excluded from histograms, or `none`.
    #[arg(long, default_value = "255")]
    pub ignore_index: String,
    /// Use the square root of the JS divergence as the histogram distance.
    #[arg(long)]
    pub sqrt_jsd: bool,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_enum)]
    pub graph: GraphSource,
    #[command(flatten)]
    pub build: GraphBuildArgs,
    /// Edge CSV output.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the label histograms as a feature CSV.
    #[arg(long)]
    pub histograms_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("size").required(true).args(["count", "fraction"]))]
pub struct SelectArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub scores: PathBuf,
    /// Score column to rank by.
    #[arg(long)]
    pub score: String,
    #[arg(long)]
    pub order: Order,
    #[arg(long, value_enum, required_unless_present = "edges", conflicts_with = "edges")]
    pub graph: Option<GraphSource>,
    /// Reuse an edge CSV written by `coreset graph`.
    #[arg(long)]
    pub edges: Option<PathBuf>,
    #[command(flatten)]
    pub build: GraphBuildArgs,
    #[arg(long)]
    pub count: Option<usize>,
    /// Fraction of the dataset in (0, 1]; rounded up.
    #[arg(long)]
    pub fraction: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long)]
    pub score: String,
    /// Aligns the score table to manifest order; required for coverage.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, requires_all = ["edges", "manifest"])]
    pub selection: Option<PathBuf>,
    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// JSON report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 5)]
    pub clusters: usize,
    #[arg(long, default_value_t = 100)]
    pub per_cluster: usize,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    #[arg(long, default_value_t = 10)]
    pub knn: usize,
    #[arg(long, default_value = "median")]
    pub sigma: Bandwidth,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Repeat with seeds seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    pub runs: u64,
    #[arg(long, default_value_t = 10.0)]
    pub radius: f64,
    /// JSON report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            // help/version are not failures
            let _ = e.print();
            std::process::exit(0);
        }
        _ => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or_default();
            let mut msg = first.trim_start_matches("error: ").to_string();
            if let Some(arg) = text.lines().nth(1).map(str::trim).filter(|l| l.starts_with("--")) {
                msg = format!("{msg} {arg}");
            }
            Error::InvalidArgument(msg)
        }
    })?;
    execute(cli)
}

pub fn execute(cli: Cli) -> Result<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::InvalidArgument("--threads must be positive".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Score(a) => cmd_score(&a),
        Command::Graph(a) => cmd_graph(&a),
        Command::Select(a) => cmd_select(&a),
        Command::Stats(a) => cmd_stats(&a),
        Command::Synth(a) => cmd_synth(&a),
    })
}

fn d(p: &Path) -> String {
    p.display().to_string()
}

/// Adds `column` to the table at `out` (created if missing), merging any
/// external scores first.
pub fn cmd_score(a: &ScoreArgs) -> Result<()> {
    let manifest = load_manifest(&a.manifest)?;
    let ids = manifest.ids();
    let mut table = if a.out.exists() {
        load_score_table(&a.out)?.aligned_to(&ids)?
    } else {
        ScoreTable::new(ids.clone())
    };
    if let Some(ext) = &a.scores {
        table.merge(&load_score_table(ext)?)?;
    }

    match a.which {
        Which::Bpp => {
            let cfg = BppConfig::new(a.quality, a.chroma, a.stored)?;
            let scored = score_dataset_bpp(&manifest, &cfg)?;
            let values = scored.column("bpp").expect("bpp column").to_vec();
            let echo = format!("score which=bpp manifest={} {}", d(&a.manifest), cfg.echo());
            table.set_column("bpp", values, Some(echo))?;
        }
        Which::Ps => {
            let path = a
                .features
                .as_ref()
                .ok_or_else(|| Error::MissingInput("ps requires --features".into()))?;
            let k = a
                .k
                .or(a.num_classes)
                .ok_or_else(|| Error::MissingInput("ps requires --k (or --num-classes)".into()))?;
            let features = load_features(path, &ids)?;
            manifest.check_feature_rows(features.n())?;
            let cfg = KMeansConfig {
                k,
                seed: a.seed,
                max_iter: a.max_iter,
                tol: a.tol,
            };
            let model = kmeans_fit(&features, &cfg)?;
            let echo = format!(
                "score which=ps manifest={} features={} {}",
                d(&a.manifest),
                d(path),
                cfg.echo()
            );
            table.set_column("ps", ps_score(&features, &model)?, Some(echo))?;
        }
        Which::Cpx => {
            let nll = table
                .column("nll")
                .ok_or_else(|| Error::MissingInput("cpx requires nll".into()))?;
            let bpp = table
                .column("bpp")
                .ok_or_else(|| Error::MissingInput("cpx requires bpp".into()))?;
            let values = cpx_columns(nll, bpp)?;
            let echo = format!("score which=cpx manifest={} cpx=nll-bpp", d(&a.manifest));
            table.set_column("cpx", values, Some(echo))?;
        }
    }
    table.write(&a.out)
}

fn parse_ignore(s: &str) -> Result<Option<u32>> {
    match s {
        "none" => Ok(None),
        _ => s
            .parse()
            .map(Some)
            .map_err(|_| Error::InvalidArgument(format!("bad --ignore-index {s:?}"))),
    }
}

fn load_histograms(
    manifest: &DatasetManifest,
    num_classes: usize,
    ignore: Option<u32>,
) -> Result<FeatureMatrix> {
    let hists: Vec<Result<_>> = manifest
        .records
        .par_iter()
        .map(|r| {
            load_mask(r)
                .and_then(|m| histogram(&m, num_classes, ignore))
                .map_err(|e| e.for_sample(&r.id))
        })
        .collect();
    to_feature_matrix(&hists.into_iter().collect::<Result<Vec<_>>>()?)
}

/// Builds the graph selected by `source`, returning it with a description
/// for parameter echoes.
fn build_from_args(
    manifest: &DatasetManifest,
    source: GraphSource,
    b: &GraphBuildArgs,
    histograms_out: Option<&Path>,
) -> Result<(KnnGraph, String)> {
    if source == GraphSource::None {
        return Ok((KnnGraph::edgeless(manifest.len()), "none".into()));
    }
    let k = b
        .knn
        .ok_or_else(|| Error::MissingInput(format!("--graph {} requires --knn", source.as_str())))?;
    let ids = manifest.ids();
    let (points, metric, desc) = match source {
        GraphSource::Features => {
            let path = b
                .features
                .as_ref()
                .ok_or_else(|| Error::MissingInput("--graph features requires --features".into()))?;
            let f = load_features(path, &ids)?;
            manifest.check_feature_rows(f.n())?;
            (f, Metric::Euclidean, format!("features({})", d(path)))
        }
        GraphSource::Histogram => {
            let c = b.num_classes.ok_or_else(|| {
                Error::MissingInput("--graph histogram requires --num-classes".into())
            })?;
            let ignore = parse_ignore(&b.ignore_index)?;
            let h = load_histograms(manifest, c, ignore)?;
            if let Some(p) = histograms_out {
                let echo = format!(
                    "histograms num_classes={c} ignore_index={}",
                    b.ignore_index
                );
                write_features(p, &ids, &h, &[echo])?;
            }
            let metric = if b.sqrt_jsd { Metric::SqrtJsd } else { Metric::Jsd };
            (
                h,
                metric,
                format!("histogram(num_classes={c},ignore_index={})", b.ignore_index),
            )
        }
        GraphSource::None => unreachable!(),
    };
    let graph = build_graph(&pairwise_knn(&points, metric, k)?, b.sigma)?;
    Ok((graph, desc))
}

pub fn cmd_graph(a: &GraphArgs) -> Result<()> {
    let manifest = load_manifest(&a.manifest)?;
    let (graph, desc) =
        build_from_args(&manifest, a.graph, &a.build, a.histograms_out.as_deref())?;
    let extra = format!(
        "source={desc} manifest={} sigma_policy={}",
        d(&a.manifest),
        a.build.sigma
    );
    graph.write_edges(&a.out, &[extra])
}

pub fn cmd_select(a: &SelectArgs) -> Result<()> {
    let manifest = load_manifest(&a.manifest)?;
    let ids = manifest.ids();
    let n = ids.len();
    let table = load_score_table(&a.scores)?.aligned_to(&ids)?;
    let scores = table.column(&a.score).ok_or_else(|| {
        Error::MissingInput(format!("{} has no \"{}\" column", d(&a.scores), a.score))
    })?;

    let m = match (a.count, a.fraction) {
        (Some(m), _) => m,
        (None, Some(f)) if f > 0.0 && f <= 1.0 => ((f * n as f64).ceil() as usize).max(1),
        (None, Some(f)) => {
            return Err(Error::InvalidArgument(format!(
                "--fraction must be in (0, 1], got {f}"
            )))
        }
        (None, None) => unreachable!("clap enforces --count or --fraction"),
    };

    let (graph, desc) = match (&a.edges, a.graph) {
        (Some(path), _) => {
            let g = load_graph_edges(path)?;
            if g.n() != n {
                return Err(Error::DimensionMismatch(format!(
                    "{} has {} nodes, manifest has {n} samples",
                    d(path),
                    g.n()
                )));
            }
            (g, format!("edges({})", d(path)))
        }
        (None, Some(src)) => build_from_args(&manifest, src, &a.build, None)?,
        (None, None) => unreachable!("clap enforces --graph or --edges"),
    };

    let mut sel = graph_select(&graph, scores, m, a.order)?.with_ids(&ids)?;
    sel.params.score_name = a.score.clone();
    sel.params.graph = desc;
    write_selection(&sel, &a.out)
}

#[derive(Debug, Serialize)]
struct StatsReport {
    params: String,
    score: String,
    count: usize,
    min: f64,
    q1: f64,
    median: f64,
    q3: f64,
    max: f64,
    mean: f64,
    low_outliers: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coverage: Option<CoverageJson>,
}

#[derive(Debug, Serialize)]
struct CoverageJson {
    selected: usize,
    mean_pairwise_distance: Option<f64>,
    min_pairwise_distance: Option<f64>,
    disconnected_pairs: usize,
    one_hop_coverage: f64,
}

impl From<CoverageReport> for CoverageJson {
    fn from(r: CoverageReport) -> Self {
        Self {
            selected: r.selected,
            mean_pairwise_distance: r.mean_pairwise_distance,
            min_pairwise_distance: r.min_pairwise_distance,
            disconnected_pairs: r.disconnected_pairs,
            one_hop_coverage: r.one_hop_coverage,
        }
    }
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn cmd_stats(a: &StatsArgs) -> Result<()> {
    let mut table = load_score_table(&a.scores)?;
    let manifest = a.manifest.as_ref().map(load_manifest).transpose()?;
    if let Some(m) = &manifest {
        table = table.aligned_to(&m.ids())?;
    }
    let values = table.column(&a.score).ok_or_else(|| {
        Error::MissingInput(format!("{} has no \"{}\" column", d(&a.scores), a.score))
    })?;
    let s = score_stats(values)?;

    let coverage = match (&a.selection, &a.edges, &manifest) {
        (Some(sel_path), Some(edges), Some(m)) => {
            let graph = load_graph_edges(edges)?;
            let ids = m.ids();
            let sel_ids = load_selection_ids(sel_path)?;
            let index: std::collections::HashMap<&str, usize> =
                ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
            let entries = sel_ids
                .iter()
                .map(|id| {
                    index
                        .get(id.as_str())
                        .map(|&i| crate::sampler::SelectionEntry {
                            index: i,
                            id: id.clone(),
                            original_score: values[i],
                            final_score: values[i],
                        })
                        .ok_or_else(|| {
                            Error::MissingInput(format!("selected id \"{id}\" not in manifest"))
                        })
                })
                .collect::<Result<Vec<_>>>()?;
            let sel = crate::sampler::Selection {
                params: crate::sampler::SelectionParams {
                    score_name: a.score.clone(),
                    order: Order::Descending,
                    graph: d(edges),
                    knn: None,
                    sigma: None,
                    m: entries.len(),
                    seed: None,
                },
                entries,
            };
            Some(coverage_stats(&sel, &graph)?.into())
        }
        _ => None,
    };

    let mut params = format!("stats scores={} score={}", d(&a.scores), a.score);
    if let Some(p) = &a.manifest {
        params.push_str(&format!(" manifest={}", d(p)));
    }
    if let (Some(s), Some(e)) = (&a.selection, &a.edges) {
        params.push_str(&format!(" selection={} edges={}", d(s), d(e)));
    }
    let report = StatsReport {
        params,
        score: a.score.clone(),
        count: s.count,
        min: s.min,
        q1: s.q1,
        median: s.median,
        q3: s.q3,
        max: s.max,
        mean: s.mean,
        low_outliers: s
            .low_outliers
            .iter()
            .map(|&i| table.ids()[i].clone())
            .collect(),
        coverage,
    };
    emit_json(&report, a.out.as_deref())
}

#[derive(Debug, Serialize)]
struct SynthSummary {
    params: String,
    runs: Vec<SynthReport>,
    /// `clusters_covered_histogram[policy][c]` = runs covering exactly `c` clusters.
    clusters_covered_histogram: Vec<(String, Vec<usize>)>,
}

pub fn cmd_synth(a: &SynthArgs) -> Result<()> {
    if a.runs == 0 {
        return Err(Error::InvalidArgument("--runs must be positive".into()));
    }
    let base = SynthConfig {
        clusters: a.clusters,
        per_cluster: a.per_cluster,
        m: a.count,
        knn: a.knn,
        bandwidth: a.sigma,
        seed: a.seed,
        radius: a.radius,
    };
    let runs = (0..a.runs)
        .map(|r| {
            synth::run(&SynthConfig {
                seed: a.seed.wrapping_add(r),
                ..base
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let policies: Vec<String> = runs[0].policies.iter().map(|p| p.policy.clone()).collect();
    let histogram = policies
        .iter()
        .map(|name| {
            let mut h = vec![0; a.clusters + 1];
            for r in &runs {
                h[r.policy(name).expect("same policies").clusters_covered] += 1;
            }
            (name.clone(), h)
        })
        .collect();
    let summary = SynthSummary {
        params: format!("{} runs={}", base.echo(), a.runs),
        runs,
        clusters_covered_histogram: histogram,
    };
    emit_json(&summary, a.out.as_deref())
}
