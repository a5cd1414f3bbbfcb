//! `indexical` command-line interface.
//!
//! Subcommands: fetch-embeddings, polarize, audit, rerank, regress,
//! describe, retrieve. Flags may also come from a flat `key=value` config
//! file (`--config`); explicit flags override file values. Exit codes:
//! 0 success, 1 validation error, 2 I/O or protocol error.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use indexical::error::Error;
use indexical::metrics::{Normalization, VarianceMode};
use indexical::pipeline::{
    self, AuditInputs, FetchInputs, MetricSettings, PolarizeInputs, RerankInputs, RetrieveInputs,
};
use indexical::report::{Report, ReportFormat};
use indexical::rerank::Objective;
use indexical::stats::RecordFilter;
use indexical::Result;

#[derive(Parser)]
#[command(
    name = "indexical",
    version,
    about = "Measure, normalize, and mitigate indexical (positional) bias in ranked document lists"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fetch embeddings for a JSONL file of {"id","text"} records.
    FetchEmbeddings(FetchArgs),
    /// Fit per-query polarization axes and project documents to scores.
    Polarize(PolarizeArgs),
    /// Audit run files: relevance nDCG@k plus bias metrics and rollups.
    Audit(AuditArgs),
    /// Reorder a run to minimize or maximize indexical bias.
    Rerank(RerankArgs),
    /// SEME regression over a behavioral CSV.
    Regress(RegressArgs),
    /// Distribution summary of polarity scores.
    Describe(DescribeArgs),
    /// Reference BM25 retrieval to a run file.
    Retrieve(RetrieveArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum VarianceModeArg {
    PrefixMean,
    GlobalMean,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormalizationArg {
    Exact,
    Approximate,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Tsv,
    Markdown,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, ValueEnum)]
enum FilterArg {
    All,
    Clicked,
}

/// Flat key=value configuration file; keys mirror the long flag names.
struct ConfigFile {
    values: HashMap<String, String>,
}

impl ConfigFile {
    fn load(path: Option<&PathBuf>) -> Result<Self> {
        let mut values = HashMap::new();
        if let Some(path) = path {
            for (lineno, line) in fs::read_to_string(path)?.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((key, value)) = line.split_once('=') else {
                    return Err(Error::parse(
                        &path.display().to_string(),
                        lineno + 1,
                        "expected key=value",
                    ));
                };
                values.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(ConfigFile { values })
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| Error::validation(format!("config key '{key}': bad value '{raw}'"))),
        }
    }

    fn get_path(&self, key: &str) -> Option<PathBuf> {
        self.values.get(key).map(PathBuf::from)
    }

    fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .split(',')
                .map(|part| {
                    part.trim().parse().map_err(|_| {
                        Error::validation(format!("config key '{key}': bad value '{part}'"))
                    })
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }
}

/// Metric flags shared by audit and rerank.
#[derive(Args)]
struct MetricArgs {
    /// Evaluate every step-th position (positions start at 2).
    #[arg(long)]
    step: Option<usize>,
    /// Variance anchor for the DUO utility.
    #[arg(long, value_enum)]
    variance_mode: Option<VarianceModeArg>,
    /// Permutation extrema: exhaustive or seeded stochastic search.
    #[arg(long, value_enum)]
    normalization: Option<NormalizationArg>,
    /// Random restarts for the stochastic normalization.
    #[arg(long)]
    restarts: Option<usize>,
    /// Seeds, comma-separated; approximate-normalization results are
    /// averaged over them.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
}

impl MetricArgs {
    fn settings(&self, config: &ConfigFile) -> Result<MetricSettings> {
        let defaults = MetricSettings::default();
        let variance_mode = match self.variance_mode {
            Some(VarianceModeArg::PrefixMean) => VarianceMode::PrefixMean,
            Some(VarianceModeArg::GlobalMean) => VarianceMode::GlobalMean,
            None => match config.values.get("variance-mode").map(String::as_str) {
                Some("prefix_mean") => VarianceMode::PrefixMean,
                Some("global_mean") => VarianceMode::GlobalMean,
                Some(other) => {
                    return Err(Error::validation(format!("unknown variance-mode '{other}'")))
                }
                None => defaults.variance_mode,
            },
        };
        let normalization = match self.normalization {
            Some(NormalizationArg::Exact) => Normalization::Exact,
            Some(NormalizationArg::Approximate) => Normalization::Approximate,
            None => match config.values.get("normalization").map(String::as_str) {
                Some("exact") => Normalization::Exact,
                Some("approximate") => Normalization::Approximate,
                Some(other) => {
                    return Err(Error::validation(format!("unknown normalization '{other}'")))
                }
                None => defaults.normalization,
            },
        };
        Ok(MetricSettings {
            step: resolve(self.step, config.get("step")?, defaults.step),
            variance_mode,
            normalization,
            approx_restarts: resolve(
                self.restarts,
                config.get("restarts")?,
                defaults.approx_restarts,
            ),
            seeds: resolve(self.seeds.clone(), config.get_list("seeds")?, defaults.seeds),
        })
    }
}

fn resolve<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn require(value: Option<PathBuf>, name: &str) -> Result<PathBuf> {
    value.ok_or_else(|| Error::validation(format!("missing required --{name} (or config '{name}')")))
}

#[derive(Args)]
struct FetchArgs {
    /// JSONL file of {"id","text"} records (corpus or query files work).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Embedding endpoint accepting POST {"texts": [...]}.
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Base backoff in milliseconds (doubles per retry).
    #[arg(long)]
    retry_delay_ms: Option<u64>,
    /// Output embedding JSONL path.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct PolarizeArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Run files whose ranked documents are projected too (repeatable).
    #[arg(long = "run")]
    runs: Vec<PathBuf>,
    /// Remove the spurious bias direction before fitting and projecting.
    #[arg(long)]
    debias: bool,
    /// Distractor sets JSON {"d1": [...], "d2": [...]} (required by --debias).
    #[arg(long)]
    distractors: Option<PathBuf>,
    /// Axis cache JSONL output.
    #[arg(long)]
    axes_out: Option<PathBuf>,
    /// Polarity scores JSONL output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    /// Run files, one system each (repeatable).
    #[arg(long = "run")]
    runs: Vec<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long)]
    qrels: Option<PathBuf>,
    /// Polarity scores JSONL from `polarize`.
    #[arg(long)]
    polarities: Option<PathBuf>,
    /// Relevance cutoffs, comma-separated.
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    #[command(flatten)]
    metric: MetricArgs,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct RerankArgs {
    #[arg(long)]
    run: Option<PathBuf>,
    #[arg(long)]
    polarities: Option<PathBuf>,
    #[arg(long, value_enum)]
    objective: Option<ObjectiveArg>,
    /// Rerank only the top-k window, leaving the tail in place.
    #[arg(long)]
    window: Option<usize>,
    /// Replace the run tag in the output.
    #[arg(long)]
    tag: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    metric: MetricArgs,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct RegressArgs {
    /// Behavioral CSV: o_prior,o_posterior,signed_bias,clicked,corpus_tag.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Restrict to one behavior filter; default reports both.
    #[arg(long, value_enum)]
    filter: Option<FilterArg>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct DescribeArgs {
    /// Polarity scores JSONL.
    #[arg(long)]
    polarities: Option<PathBuf>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct RetrieveArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    queries: Option<PathBuf>,
    /// Results per query.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    k1: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    /// Run tag for the emitted file.
    #[arg(long)]
    tag: Option<String>,
    /// Newline-separated stopword list.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Load a previously saved index instead of building one.
    #[arg(long)]
    index_in: Option<PathBuf>,
    /// Save the built index.
    #[arg(long)]
    index_out: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn write_report(report: &Report, format: Option<FormatArg>, out: Option<&Path>) -> Result<()> {
    let format = match format {
        Some(FormatArg::Markdown) => ReportFormat::Markdown,
        Some(FormatArg::Tsv) | None => ReportFormat::Tsv,
    };
    let text = report.render(format);
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::FetchEmbeddings(args) => {
            let config = ConfigFile::load(args.config.as_ref())?;
            let inputs = FetchInputs {
                input: require(args.input.or_else(|| config.get_path("input")), "input")?,
                endpoint: args
                    .endpoint
                    .or_else(|| config.values.get("endpoint").cloned())
                    .ok_or_else(|| Error::validation("missing required --endpoint"))?,
                batch_size: resolve(args.batch_size, config.get("batch-size")?, 32),
                retry_delay_ms: resolve(args.retry_delay_ms, config.get("retry-delay-ms")?, 500),
                out: require(args.out.or_else(|| config.get_path("out")), "out")?,
            };
            let written = pipeline::fetch_embeddings_file(&inputs)?;
            eprintln!("indexical: wrote {written} embeddings to {}", inputs.out.display());
        }
        Command::Polarize(args) => {
            let config = ConfigFile::load(args.config.as_ref())?;
            let mut runs = args.runs;
            if runs.is_empty() {
                if let Some(from_config) = config.get_list::<PathBuf>("run")? {
                    runs = from_config;
                }
            }
            let inputs = PolarizeInputs {
                corpus: require(args.corpus.or_else(|| config.get_path("corpus")), "corpus")?,
                queries: require(args.queries.or_else(|| config.get_path("queries")), "queries")?,
                embeddings: require(
                    args.embeddings.or_else(|| config.get_path("embeddings")),
                    "embeddings",
                )?,
                runs,
                debias: args.debias || config.get::<bool>("debias")?.unwrap_or(false),
                distractors: args.distractors.or_else(|| config.get_path("distractors")),
                axes_out: args.axes_out.or_else(|| config.get_path("axes-out")),
                polarities_out: require(args.out.or_else(|| config.get_path("out")), "out")?,
                threads: resolve(args.threads, config.get("threads")?, 0),
            };
            let summary = pipeline::polarize(&inputs)?;
            eprintln!(
                "indexical: fitted {} axes, projected {} documents ({} ranked docs lacked embeddings)",
                summary.fitted, summary.projected, summary.missing_run_docs
            );
            for (query_id, reason) in &summary.skipped {
                eprintln!("indexical: skipped query {query_id}: {reason}");
            }
        }
        Command::Audit(args) => {
            let config = ConfigFile::load(args.config.as_ref())?;
            let mut runs = args.runs;
            if runs.is_empty() {
                if let Some(from_config) = config.get_list::<PathBuf>("run")? {
                    runs = from_config;
                }
            }
            let inputs = AuditInputs {
                runs,
                corpus: args.corpus.or_else(|| config.get_path("corpus")),
                queries: args.queries.or_else(|| config.get_path("queries")),
                qrels: args.qrels.or_else(|| config.get_path("qrels")),
                polarities: args.polarities.or_else(|| config.get_path("polarities")),
                k_values: resolve(args.k, config.get_list("k")?, vec![1, 10]),
                metric: args.metric.settings(&config)?,
                threads: resolve(args.threads, config.get("threads")?, 0),
            };
            let report = pipeline::audit(&inputs)?;
            write_report(&report, args.format, inputs_out(&config, args.out).as_deref())?;
        }
        Command::Rerank(args) => {
            let config = ConfigFile::load(args.config.as_ref())?;
            let objective = match args.objective {
                Some(ObjectiveArg::Minimize) => Objective::MinimizeBias,
                Some(ObjectiveArg::Maximize) => Objective::MaximizeBias,
                None => match config.values.get("objective").map(String::as_str) {
                    Some("minimize") => Objective::MinimizeBias,
                    Some("maximize") => Objective::MaximizeBias,
                    Some(other) => {
                        return Err(Error::validation(format!("unknown objective '{other}'")))
                    }
                    None => Objective::MinimizeBias,
                },
            };
            let inputs = RerankInputs {
                run: require(args.run.or_else(|| config.get_path("run")), "run")?,
                polarities: require(
                    args.polarities.or_else(|| config.get_path("polarities")),
                    "polarities",
                )?,
                objective,
                metric: args.metric.settings(&config)?,
                window: args.window.or(config.get("window")?),
                tag: args.tag.or_else(|| config.values.get("tag").cloned()),
                out: require(args.out.or_else(|| config.get_path("out")), "out")?,
            };
            let count = pipeline::rerank_run(&inputs)?;
            eprintln!("indexical: reranked {count} queries to {}", inputs.out.display());
        }
        Command::Regress(args) => {
            let config = ConfigFile::load(args.config.as_ref())?;
            let filter = match args.filter {
                Some(FilterArg::All) => Some(RecordFilter::All),
                Some(FilterArg::Clicked) => Some(RecordFilter::Clicked),
                None => match config.values.get("filter").map(String::as_str) {
                    Some("all") => Some(RecordFilter::All),
                    Some("clicked") => Some(RecordFilter::Clicked),
                    Some(other) => {
                        return Err(Error::validation(format!("unknown filter '{other}'")))
                    }
                    None => None,
                },
            };
            let csv = require(args.csv.or_else(|| config.get_path("csv")), "csv")?;
            let report = pipeline::regress(&csv, filter)?;
            write_report(&report, args.format, inputs_out(&config, args.out).as_deref())?;
        }
        Command::Describe(args) => {
            let config = ConfigFile::load(args.config.as_ref())?;
            let polarities = require(
                args.polarities.or_else(|| config.get_path("polarities")),
                "polarities",
            )?;
            let bins = resolve(args.bins, config.get("bins")?, 20);
            let report = pipeline::describe(&polarities, bins)?;
            write_report(&report, args.format, inputs_out(&config, args.out).as_deref())?;
        }
        Command::Retrieve(args) => {
            let config = ConfigFile::load(args.config.as_ref())?;
            let inputs = RetrieveInputs {
                corpus: args.corpus.or_else(|| config.get_path("corpus")),
                queries: require(args.queries.or_else(|| config.get_path("queries")), "queries")?,
                k: resolve(args.k, config.get("k")?, 10),
                k1: resolve(args.k1, config.get("k1")?, indexical::bm25::DEFAULT_K1),
                b: resolve(args.b, config.get("b")?, indexical::bm25::DEFAULT_B),
                tag: args
                    .tag
                    .or_else(|| config.values.get("tag").cloned())
                    .unwrap_or_else(|| "bm25".to_string()),
                stopwords: args.stopwords.or_else(|| config.get_path("stopwords")),
                index_in: args.index_in.or_else(|| config.get_path("index-in")),
                index_out: args.index_out.or_else(|| config.get_path("index-out")),
                out: require(args.out.or_else(|| config.get_path("out")), "out")?,
            };
            let (answered, skipped) = pipeline::retrieve(&inputs)?;
            eprintln!(
                "indexical: wrote {answered} rankings to {} ({skipped} queries had no match)",
                inputs.out.display()
            );
        }
    }
    Ok(())
}

fn inputs_out(config: &ConfigFile, flag: Option<PathBuf>) -> Option<PathBuf> {
    flag.or_else(|| config.get_path("out"))
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("indexical: error: {e}");
        std::process::exit(e.exit_code());
    }
}
