//! Pipelines behind the CLI subcommands: polarize, audit, rerank, regress,
//! describe, retrieve, and fetch-embeddings.
//!
//! Determinism contract: given fixed inputs and seeds, every pipeline
//! produces byte-identical output files regardless of the parallelism
//! level. Per-query work runs on a scoped thread pool and is merged in
//! input order; per-query randomness is seeded by a stable hash of
//! `(global seed, query id)` so scheduling cannot leak into results.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bm25;
use crate::corpus::{self, EmbeddingStore, Qrels, Ranking};
use crate::embed_client::{self, FetchConfig};
use crate::error::Error;
use crate::extrema::EXACT_LIMIT;
use crate::metrics::{self, MetricConfig, Normalization, PolarityList, VarianceMode};
use crate::polarization::{self, AxisRecord, DistractorSets};
use crate::rerank::{rerank, Objective, RerankRequest};
use crate::report::{cell, Report, Table};
use crate::stats::{self, RecordFilter};
use crate::Result;

/// One polarity score: the projection of `doc_id`'s embedding onto
/// `query_id`'s polarization axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarityRecord {
    pub query_id: String,
    pub doc_id: String,
    pub p: f64,
}

/// Polarity scores keyed by query then document.
#[derive(Debug, Clone, Default)]
pub struct PolarityMap {
    by_query: HashMap<String, HashMap<String, f64>>,
}

impl PolarityMap {
    pub fn get(&self, query_id: &str, doc_id: &str) -> Option<f64> {
        self.by_query.get(query_id).and_then(|m| m.get(doc_id)).copied()
    }

    pub fn for_query(&self, query_id: &str) -> Option<&HashMap<String, f64>> {
        self.by_query.get(query_id)
    }

    pub fn insert(&mut self, record: &PolarityRecord) {
        self.by_query
            .entry(record.query_id.clone())
            .or_default()
            .insert(record.doc_id.clone(), record.p);
    }
}

/// Load polarity records from `{"query_id","doc_id","p"}` JSONL.
pub fn load_polarity_records(path: &Path) -> Result<Vec<PolarityRecord>> {
    let p = path.display().to_string();
    let mut records = Vec::new();
    for (lineno, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PolarityRecord = serde_json::from_str(&line)
            .map_err(|e| Error::parse(&p, lineno + 1, e.to_string()))?;
        records.push(record);
    }
    Ok(records)
}

pub fn load_polarities(path: &Path) -> Result<PolarityMap> {
    let mut map = PolarityMap::default();
    for record in load_polarity_records(path)? {
        map.insert(&record);
    }
    Ok(map)
}

pub fn write_polarities(records: &[PolarityRecord], path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for record in records {
        serde_json::to_writer(&mut out, record).map_err(|e| Error::validation(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Metric configuration shared by the audit and rerank pipelines;
/// `seeds` holds the seeds averaged over under approximate normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSettings {
    pub step: usize,
    pub variance_mode: VarianceMode,
    pub normalization: Normalization,
    pub approx_restarts: usize,
    pub seeds: Vec<u64>,
}

impl Default for MetricSettings {
    fn default() -> Self {
        let base = MetricConfig::default();
        MetricSettings {
            step: base.step,
            variance_mode: base.variance_mode,
            normalization: base.normalization,
            approx_restarts: base.approx_restarts,
            seeds: vec![base.seed],
        }
    }
}

impl MetricSettings {
    pub fn config_for(&self, seed: u64) -> MetricConfig {
        MetricConfig {
            step: self.step,
            variance_mode: self.variance_mode,
            normalization: self.normalization,
            approx_restarts: self.approx_restarts,
            seed,
        }
    }

    /// Exact normalization ignores seeds; one pass suffices.
    fn effective_seeds(&self) -> &[u64] {
        match self.normalization {
            Normalization::Exact => &self.seeds[..1],
            Normalization::Approximate => &self.seeds,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::validation("at least one seed is required"));
        }
        self.config_for(self.seeds[0]).validate()
    }

    fn echo(&self) -> String {
        format!(
            "step={} variance_mode={} normalization={} approx_restarts={}",
            self.step,
            match self.variance_mode {
                VarianceMode::PrefixMean => "prefix_mean",
                VarianceMode::GlobalMean => "global_mean",
            },
            match self.normalization {
                Normalization::Exact => "exact",
                Normalization::Approximate => "approximate",
            },
            self.approx_restarts,
        )
    }
}

/// Stable per-query seed: FNV-1a of the query id mixed with the global seed.
/// Independent of platform, process, and scheduling.
pub fn query_seed(global: u64, query_id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in query_id.as_bytes() {
        h ^= u64::from(*byte);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h ^ global.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Run `f` on a scoped pool of `threads` workers (0 = rayon's default pool).
fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::validation(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn mean_of<'a>(values: impl Iterator<Item = &'a Option<f64>>) -> Option<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for v in values.flatten() {
        sum += v;
        count += 1;
    }
    (count > 0).then(|| sum / count as f64)
}

// ---------------------------------------------------------------------------
// polarize
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct PolarizeInputs {
    pub corpus: PathBuf,
    pub queries: PathBuf,
    pub embeddings: PathBuf,
    /// Optional run files whose ranked documents are projected in addition
    /// to each query's reference documents.
    pub runs: Vec<PathBuf>,
    pub debias: bool,
    pub distractors: Option<PathBuf>,
    pub axes_out: Option<PathBuf>,
    pub polarities_out: PathBuf,
    pub threads: usize,
}

#[derive(Debug, Clone, Default)]
pub struct PolarizeSummary {
    pub fitted: usize,
    /// (query_id, reason) for queries without a usable axis.
    pub skipped: Vec<(String, String)>,
    pub projected: usize,
    /// Ranked documents without embeddings (they stay unscored).
    pub missing_run_docs: usize,
}

/// Fit one axis per query on its labeled reference documents and project
/// every reference and run document onto it.
pub fn polarize(inputs: &PolarizeInputs) -> Result<PolarizeSummary> {
    let documents = corpus::load_corpus(&inputs.corpus)?;
    let queries = corpus::load_queries(&inputs.queries)?;
    let mut store = corpus::load_embeddings(&inputs.embeddings)?;

    if inputs.debias {
        let distractors_path = inputs
            .distractors
            .as_ref()
            .ok_or_else(|| Error::validation("--debias requires a distractor-set file"))?;
        let sets = DistractorSets::load(distractors_path)?;
        let direction = polarization::bias_direction(&store, &sets)?;
        let mut debiased = EmbeddingStore::new();
        for vector in store.iter() {
            debiased.insert(polarization::debias(vector, &direction)?)?;
        }
        store = debiased;
    }

    // Reference documents: labeled docs generated for the query.
    let mut references: HashMap<&str, Vec<&str>> = HashMap::new();
    for doc in &documents {
        if let (Some(query_id), Some(_)) = (&doc.query_id, doc.perspective) {
            references.entry(query_id).or_default().push(&doc.id);
        }
    }

    // Ranked documents per query, in run order.
    let mut ranked: HashMap<String, Vec<String>> = HashMap::new();
    for run_path in &inputs.runs {
        for ranking in corpus::load_run(run_path)? {
            let slot = ranked.entry(ranking.query_id.clone()).or_default();
            for (doc_id, _) in ranking.entries {
                slot.push(doc_id);
            }
        }
    }

    enum Outcome {
        Fitted { axis: AxisRecord, records: Vec<PolarityRecord>, missing: usize },
        Skipped { reason: String },
    }

    let outcomes: Vec<Result<Outcome>> = with_pool(inputs.threads, || {
        queries
            .par_iter()
            .map(|query| {
                let reference_ids = references.get(query.id.as_str()).cloned().unwrap_or_default();
                if reference_ids.len() < 2 {
                    return Ok(Outcome::Skipped {
                        reason: format!(
                            "{} labeled reference documents (need at least 2)",
                            reference_ids.len()
                        ),
                    });
                }
                let reference_vectors = reference_ids
                    .iter()
                    .map(|id| {
                        store.get(id).cloned().ok_or_else(|| {
                            Error::validation(format!("reference document '{id}' has no embedding"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let axis = match polarization::fit_axis(&reference_vectors) {
                    Ok(axis) => axis,
                    Err(Error::Degenerate(reason)) => return Ok(Outcome::Skipped { reason }),
                    Err(other) => return Err(other),
                };

                let mut targets: Vec<&str> = Vec::new();
                let mut seen: HashSet<&str> = HashSet::new();
                for id in &reference_ids {
                    if seen.insert(id) {
                        targets.push(id);
                    }
                }
                let mut missing = 0usize;
                if let Some(run_docs) = ranked.get(&query.id) {
                    for id in run_docs {
                        if seen.insert(id.as_str()) {
                            if store.contains(id) {
                                targets.push(id.as_str());
                            } else {
                                missing += 1;
                            }
                        }
                    }
                }
                let records = targets
                    .iter()
                    .map(|id| {
                        let vector = store.get(id).expect("targets filtered to embedded docs");
                        Ok(PolarityRecord {
                            query_id: query.id.clone(),
                            doc_id: id.to_string(),
                            p: polarization::project(&axis, vector)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Outcome::Fitted {
                    axis: AxisRecord::new(query.id.clone(), &axis),
                    records,
                    missing,
                })
            })
            .collect()
    })?;

    let mut summary = PolarizeSummary::default();
    let mut axes = Vec::new();
    let mut records = Vec::new();
    for (query, outcome) in queries.iter().zip(outcomes) {
        match outcome? {
            Outcome::Fitted { axis, records: query_records, missing } => {
                summary.fitted += 1;
                summary.projected += query_records.len();
                summary.missing_run_docs += missing;
                axes.push(axis);
                records.extend(query_records);
            }
            Outcome::Skipped { reason } => summary.skipped.push((query.id.clone(), reason)),
        }
    }

    if let Some(axes_out) = &inputs.axes_out {
        polarization::write_axes(&axes, axes_out)?;
    }
    write_polarities(&records, &inputs.polarities_out)?;
    Ok(summary)
}

// ---------------------------------------------------------------------------
// audit
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct AuditInputs {
    pub runs: Vec<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub qrels: Option<PathBuf>,
    pub polarities: Option<PathBuf>,
    pub k_values: Vec<usize>,
    pub metric: MetricSettings,
    pub threads: usize,
}

impl AuditInputs {
    pub fn new(runs: Vec<PathBuf>) -> Self {
        AuditInputs {
            runs,
            corpus: None,
            queries: None,
            qrels: None,
            polarities: None,
            k_values: vec![1, 10],
            metric: MetricSettings::default(),
            threads: 0,
        }
    }
}

#[derive(Debug, Clone)]
struct QueryRow {
    system: String,
    query_id: String,
    domain: Option<String>,
    ndcg: Vec<Option<f64>>,
    rnd: Option<f64>,
    rkl: Option<f64>,
    duo: Option<f64>,
    signed_duo: Option<f64>,
    flags: Vec<&'static str>,
    unknown_docs: Vec<String>,
}

/// Average a bias metric over the effective seeds, with per-query seed
/// derivation. Returns (mean value, any-degenerate flag).
fn seed_averaged(
    settings: &MetricSettings,
    query_id: &str,
    mut compute: impl FnMut(&MetricConfig) -> Result<(f64, bool)>,
) -> Result<(f64, bool)> {
    let seeds = settings.effective_seeds();
    let mut total = 0.0;
    let mut degenerate = false;
    for &seed in seeds {
        let config = settings.config_for(query_seed(seed, query_id));
        let (value, flag) = compute(&config)?;
        total += value;
        degenerate |= flag;
    }
    Ok((total / seeds.len() as f64, degenerate))
}

/// Audit one or more run files: relevance nDCG@k against qrels, bias metrics
/// against polarity scores and perspective labels, aggregated per system and
/// per domain, with cross-metric and cross-system Spearman blocks.
pub fn audit(inputs: &AuditInputs) -> Result<Report> {
    inputs.metric.validate()?;
    if inputs.runs.is_empty() {
        return Err(Error::validation("audit needs at least one run file"));
    }
    if inputs.k_values.is_empty() {
        return Err(Error::validation("audit needs at least one k value"));
    }

    // One system per run file, named by its (uniform) tag.
    let mut systems: Vec<(String, Vec<Ranking>)> = Vec::new();
    for path in &inputs.runs {
        let rankings = corpus::load_run(path)?;
        let Some(first) = rankings.first() else {
            return Err(Error::validation(format!(
                "run file '{}' contains no rankings",
                path.display()
            )));
        };
        let tag = first.tag.clone();
        if let Some(other) = rankings.iter().find(|r| r.tag != tag) {
            return Err(Error::validation(format!(
                "run file '{}' mixes tags '{tag}' and '{}'",
                path.display(),
                other.tag
            )));
        }
        if systems.iter().any(|(existing, _)| *existing == tag) {
            return Err(Error::validation(format!("duplicate system tag '{tag}'")));
        }
        systems.push((tag, rankings));
    }

    let corpus_docs = inputs.corpus.as_deref().map(corpus::load_corpus).transpose()?;
    let queries = inputs.queries.as_deref().map(corpus::load_queries).transpose()?;
    let qrels = inputs.qrels.as_deref().map(corpus::load_qrels).transpose()?;
    let polarities = inputs.polarities.as_deref().map(load_polarities).transpose()?;

    let perspective: Option<HashMap<&str, u8>> = corpus_docs.as_ref().map(|docs| {
        docs.iter()
            .filter_map(|d| d.perspective.map(|side| (d.id.as_str(), side)))
            .collect()
    });
    let known_docs: Option<HashSet<&str>> =
        corpus_docs.as_ref().map(|docs| docs.iter().map(|d| d.id.as_str()).collect());
    let domains: HashMap<&str, &str> = queries
        .as_ref()
        .map(|qs| qs.iter().map(|q| (q.id.as_str(), q.domain.as_str())).collect())
        .unwrap_or_default();

    let jobs: Vec<(usize, &Ranking)> = systems
        .iter()
        .enumerate()
        .flat_map(|(i, (_, rankings))| rankings.iter().map(move |r| (i, r)))
        .collect();

    let rows: Vec<Result<QueryRow>> = with_pool(inputs.threads, || {
        jobs.par_iter()
            .map(|&(system_index, ranking)| {
                audit_row(
                    &systems[system_index].0,
                    ranking,
                    inputs,
                    qrels.as_ref(),
                    polarities.as_ref(),
                    perspective.as_ref(),
                    known_docs.as_ref(),
                    &domains,
                )
            })
            .collect()
    })?;
    let rows: Vec<QueryRow> = rows.into_iter().collect::<Result<_>>()?;

    Ok(render_audit(inputs, &systems, rows))
}

#[allow(clippy::too_many_arguments)]
fn audit_row(
    system: &str,
    ranking: &Ranking,
    inputs: &AuditInputs,
    qrels: Option<&Qrels>,
    polarities: Option<&PolarityMap>,
    perspective: Option<&HashMap<&str, u8>>,
    known_docs: Option<&HashSet<&str>>,
    domains: &HashMap<&str, &str>,
) -> Result<QueryRow> {
    let query_id = ranking.query_id.as_str();
    let mut flags: Vec<&'static str> = Vec::new();

    let unknown_docs: Vec<String> = match known_docs {
        Some(known) => ranking
            .doc_ids()
            .filter(|d| !known.contains(d))
            .map(str::to_string)
            .collect(),
        None => Vec::new(),
    };
    if !unknown_docs.is_empty() {
        flags.push("unknown_docs");
    }

    let ndcg: Vec<Option<f64>> = match qrels {
        Some(qrels) if qrels.judged(query_id).is_some() => inputs
            .k_values
            .iter()
            .map(|&k| Some(metrics::relevance_ndcg_at_k(ranking, qrels, k)))
            .collect(),
        Some(_) => {
            flags.push("unjudged");
            vec![None; inputs.k_values.len()]
        }
        None => vec![None; inputs.k_values.len()],
    };

    let mut duo_value = None;
    let mut signed_value = None;
    if let Some(map) = polarities {
        let scores: Option<Vec<f64>> = ranking
            .doc_ids()
            .map(|d| map.get(query_id, d))
            .collect();
        match scores {
            Some(scores) => {
                let list = PolarityList::from_scores(scores)?;
                let (value, degenerate) =
                    seed_averaged(&inputs.metric, query_id, |config| {
                        let m = metrics::duo(&list, config)?;
                        Ok((m.value, m.degenerate))
                    })?;
                if degenerate {
                    flags.push("duo_degenerate");
                }
                duo_value = Some(value);
                let (signed, _) = seed_averaged(&inputs.metric, query_id, |config| {
                    Ok((metrics::signed_duo(&list, config)?, false))
                })?;
                signed_value = Some(signed);
            }
            None => flags.push("missing_polarity"),
        }
    }

    let mut rnd_value = None;
    let mut rkl_value = None;
    if let Some(labels) = perspective {
        let group: Option<Vec<bool>> = ranking
            .doc_ids()
            .map(|d| labels.get(d).map(|&side| side == 1))
            .collect();
        if let Some(group) = group {
            let list = PolarityList::from_groups(group)?;
            let (value, degenerate) = seed_averaged(&inputs.metric, query_id, |config| {
                let m = metrics::rnd(&list, config)?;
                Ok((m.value, m.degenerate))
            })?;
            if degenerate {
                flags.push("rnd_degenerate");
            }
            rnd_value = Some(value);
            let (value, degenerate) = seed_averaged(&inputs.metric, query_id, |config| {
                let m = metrics::rkl(&list, config)?;
                Ok((m.value, m.degenerate))
            })?;
            if degenerate {
                flags.push("rkl_degenerate");
            }
            rkl_value = Some(value);
        }
    }

    Ok(QueryRow {
        system: system.to_string(),
        query_id: query_id.to_string(),
        domain: domains.get(query_id).map(|d| d.to_string()),
        ndcg,
        rnd: rnd_value,
        rkl: rkl_value,
        duo: duo_value,
        signed_duo: signed_value,
        flags,
        unknown_docs,
    })
}

fn render_audit(
    inputs: &AuditInputs,
    systems: &[(String, Vec<Ranking>)],
    rows: Vec<QueryRow>,
) -> Report {
    let mut report = Report::new("audit");
    report.meta(
        "seeds",
        inputs
            .metric
            .seeds
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(","),
    );
    report.meta("config", inputs.metric.echo());
    report.meta(
        "k",
        inputs.k_values.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
    );
    report.meta("systems", systems.iter().map(|(t, _)| t.clone()).collect::<Vec<_>>().join(","));
    let flagged = rows.iter().filter(|r| !r.flags.is_empty()).count();
    let degenerate = rows
        .iter()
        .filter(|r| r.flags.iter().any(|f| f.ends_with("_degenerate")))
        .count();
    report.meta("flagged_rows", flagged.to_string());
    report.meta("degenerate_rows", degenerate.to_string());

    let mut columns: Vec<String> = vec!["system".into(), "query_id".into(), "domain".into()];
    for k in &inputs.k_values {
        columns.push(format!("ndcg@{k}"));
    }
    columns.extend(["rnd", "rkl", "duo", "signed_duo", "flags"].map(String::from));
    let mut per_query = Table {
        title: "per-query".into(),
        columns,
        rows: Vec::new(),
    };
    for row in &rows {
        let mut cells = vec![
            row.system.clone(),
            row.query_id.clone(),
            row.domain.clone().unwrap_or_default(),
        ];
        cells.extend(row.ndcg.iter().map(|v| cell(*v)));
        cells.push(cell(row.rnd));
        cells.push(cell(row.rkl));
        cells.push(cell(row.duo));
        cells.push(cell(row.signed_duo));
        cells.push(row.flags.join(";"));
        per_query.push(cells);
    }
    report.tables.push(per_query);

    let aggregate_cells = |rows: &[&QueryRow]| -> Vec<String> {
        let mut cells = vec![rows.len().to_string()];
        for k_index in 0..inputs.k_values.len() {
            cells.push(cell(mean_of(rows.iter().map(|r| &r.ndcg[k_index]))));
        }
        cells.push(cell(mean_of(rows.iter().map(|r| &r.rnd))));
        cells.push(cell(mean_of(rows.iter().map(|r| &r.rkl))));
        cells.push(cell(mean_of(rows.iter().map(|r| &r.duo))));
        cells.push(cell(mean_of(rows.iter().map(|r| &r.signed_duo))));
        cells
    };
    let metric_column_names = |leading: &[&str]| -> Vec<String> {
        let mut columns: Vec<String> = leading.iter().map(|c| c.to_string()).collect();
        columns.push("queries".into());
        for k in &inputs.k_values {
            columns.push(format!("ndcg@{k}"));
        }
        columns.extend(["rnd", "rkl", "duo", "signed_duo"].map(String::from));
        columns
    };

    // Domain aggregates: systems in input order, domains sorted within.
    let mut domain_table = Table {
        title: "domain-aggregates".into(),
        columns: metric_column_names(&["system", "domain"]),
        rows: Vec::new(),
    };
    for (system, _) in systems {
        let mut by_domain: BTreeMap<String, Vec<&QueryRow>> = BTreeMap::new();
        for row in rows.iter().filter(|r| &r.system == system) {
            by_domain
                .entry(row.domain.clone().unwrap_or_else(|| "(none)".into()))
                .or_default()
                .push(row);
        }
        for (domain, domain_rows) in by_domain {
            let mut cells = vec![system.clone(), domain];
            cells.extend(aggregate_cells(&domain_rows));
            domain_table.push(cells);
        }
    }
    report.tables.push(domain_table);

    // System aggregates.
    let mut system_table = Table {
        title: "system-aggregates".into(),
        columns: metric_column_names(&["system"]),
        rows: Vec::new(),
    };
    let mut system_means: Vec<(String, Option<f64>, Option<f64>, Option<f64>)> = Vec::new();
    for (system, _) in systems {
        let system_rows: Vec<&QueryRow> = rows.iter().filter(|r| &r.system == system).collect();
        let duo_mean = mean_of(system_rows.iter().map(|r| &r.duo));
        let rnd_mean = mean_of(system_rows.iter().map(|r| &r.rnd));
        let rkl_mean = mean_of(system_rows.iter().map(|r| &r.rkl));
        let mut cells = vec![system.clone()];
        cells.extend(aggregate_cells(&system_rows));
        system_table.push(cells);
        system_means.push((system.clone(), duo_mean, rnd_mean, rkl_mean));
    }
    report.tables.push(system_table);

    // Cross-metric Spearman across systems (DUO vs the supervised metrics).
    let mut metric_spearman = Table::new("spearman-metric-vs-metric", &["pair", "systems", "rho"]);
    for (label, pick) in [
        ("duo_vs_rnd", 2usize),
        ("duo_vs_rkl", 3usize),
    ] {
        let points: Vec<(f64, f64)> = system_means
            .iter()
            .filter_map(|entry| {
                let duo = entry.1?;
                let other = if pick == 2 { entry.2? } else { entry.3? };
                Some((duo, other))
            })
            .collect();
        let rho = if points.len() >= 2 {
            let (x, y): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
            stats::spearman(&x, &y).ok()
        } else {
            None
        };
        metric_spearman.push(vec![label.to_string(), points.len().to_string(), cell(rho)]);
    }
    report.tables.push(metric_spearman);

    // Cross-system Spearman over per-query DUO values.
    if systems.len() >= 2 {
        let mut table =
            Table::new("spearman-system-vs-system", &["system_a", "system_b", "queries", "rho"]);
        let duo_by_system: Vec<HashMap<&str, f64>> = systems
            .iter()
            .map(|(system, _)| {
                rows.iter()
                    .filter(|r| &r.system == system)
                    .filter_map(|r| r.duo.map(|v| (r.query_id.as_str(), v)))
                    .collect()
            })
            .collect();
        for i in 0..systems.len() {
            for j in i + 1..systems.len() {
                let mut shared: Vec<(&str, f64, f64)> = duo_by_system[i]
                    .iter()
                    .filter_map(|(q, &a)| duo_by_system[j].get(q).map(|&b| (*q, a, b)))
                    .collect();
                shared.sort_by(|a, b| a.0.cmp(b.0));
                let rho = if shared.len() >= 2 {
                    let x: Vec<f64> = shared.iter().map(|s| s.1).collect();
                    let y: Vec<f64> = shared.iter().map(|s| s.2).collect();
                    stats::spearman(&x, &y).ok()
                } else {
                    None
                };
                table.push(vec![
                    systems[i].0.clone(),
                    systems[j].0.clone(),
                    shared.len().to_string(),
                    cell(rho),
                ]);
            }
        }
        report.tables.push(table);
    }

    // Unknown documents, if any.
    let mut unknown = Table::new("unknown-documents", &["system", "query_id", "doc_ids"]);
    for row in &rows {
        if !row.unknown_docs.is_empty() {
            unknown.push(vec![
                row.system.clone(),
                row.query_id.clone(),
                row.unknown_docs.join(","),
            ]);
        }
    }
    if !unknown.rows.is_empty() {
        report.tables.push(unknown);
    }

    report
}

// ---------------------------------------------------------------------------
// rerank
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct RerankInputs {
    pub run: PathBuf,
    pub polarities: PathBuf,
    pub objective: Objective,
    pub metric: MetricSettings,
    /// Rerank only the top-k window of each ranking.
    pub window: Option<usize>,
    /// Replace the run tag in the output.
    pub tag: Option<String>,
    pub out: PathBuf,
}

/// Rerank every ranking of a run to the bias extremum and write a run file.
pub fn rerank_run(inputs: &RerankInputs) -> Result<usize> {
    inputs.metric.validate()?;
    let rankings = corpus::load_run(&inputs.run)?;
    let polarities = load_polarities(&inputs.polarities)?;
    let seed = inputs.metric.seeds[0];

    let mut reranked = Vec::with_capacity(rankings.len());
    for ranking in &rankings {
        let scores = polarities
            .for_query(&ranking.query_id)
            .cloned()
            .unwrap_or_default();
        let mut request = RerankRequest::new(
            ranking,
            &scores,
            inputs.objective,
            inputs.metric.config_for(query_seed(seed, &ranking.query_id)),
        );
        request.window = inputs.window;
        let mut output = rerank(&request)?;
        if let Some(tag) = &inputs.tag {
            output.tag = tag.clone();
        }
        reranked.push(output);
    }
    corpus::write_run(&reranked, &inputs.out)?;
    Ok(reranked.len())
}

// ---------------------------------------------------------------------------
// regress
// ---------------------------------------------------------------------------

/// SEME regression table: one row per (corpus, behavior filter), echoing
/// n, the bias coefficient, its p-value, and R^2.
pub fn regress(csv: &Path, filter: Option<RecordFilter>) -> Result<Report> {
    let records = stats::load_behavioral_csv(csv)?;
    if records.is_empty() {
        return Err(Error::validation("behavioral CSV contains no records"));
    }

    let mut tags: Vec<String> = records
        .iter()
        .map(|r| r.corpus_tag.clone())
        .collect::<HashSet<_>>()
        .into_iter()
        .collect();
    tags.sort();
    let multiple_tags = tags.len() > 1;
    if multiple_tags {
        tags.push("combined".into());
    }

    let filters: Vec<RecordFilter> = match filter {
        Some(f) => vec![f],
        None => vec![RecordFilter::All, RecordFilter::Clicked],
    };

    let mut report = Report::new("regress");
    report.meta("model", "o_posterior ~ 1 + o_prior + signed_bias");
    let mut table = Table::new(
        "regression",
        &["corpus", "behavior", "n", "beta2", "p_beta2", "r_squared", "note"],
    );
    for tag in &tags {
        let subset: Vec<stats::BehavioralRecord> = records
            .iter()
            .filter(|r| tag == "combined" || &r.corpus_tag == tag)
            .cloned()
            .collect();
        for f in &filters {
            let n = subset.iter().filter(|r| f.keeps(r)).count();
            match stats::ols_fit(&subset, *f) {
                Ok(fit) => table.push(vec![
                    tag.clone(),
                    f.label().to_string(),
                    n.to_string(),
                    cell(Some(fit.coefficients[2])),
                    cell(Some(fit.p_values[2])),
                    cell(Some(fit.r_squared)),
                    String::new(),
                ]),
                Err(e) => table.push(vec![
                    tag.clone(),
                    f.label().to_string(),
                    n.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    e.to_string(),
                ]),
            }
        }
    }
    report.tables.push(table);
    Ok(report)
}

// ---------------------------------------------------------------------------
// describe
// ---------------------------------------------------------------------------

/// Distribution summary of polarity scores: moments, bimodality coefficient,
/// and a binned histogram.
pub fn describe(polarities: &Path, bins: usize) -> Result<Report> {
    if bins == 0 {
        return Err(Error::validation("bins must be >= 1"));
    }
    let records = load_polarity_records(polarities)?;
    if records.is_empty() {
        return Err(Error::validation("polarity file contains no records"));
    }
    let values: Vec<f64> = records.iter().map(|r| r.p).collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let central = |k: u32| values.iter().map(|v| (v - mean).powi(k as i32)).sum::<f64>() / n;
    let m2 = central(2);
    let m3 = central(3);
    let m4 = central(4);

    let mut report = Report::new("describe");
    report.meta("records", records.len().to_string());

    let mut summary = Table::new("summary", &["statistic", "value"]);
    summary.push(vec!["n".into(), records.len().to_string()]);
    summary.push(vec!["mean".into(), cell(Some(mean))]);
    summary.push(vec!["variance".into(), cell(Some(m2))]);
    let bimodality = if values.len() > 3 && m2 > 0.0 {
        let g1 = m3 / m2.powf(1.5);
        let g2 = m4 / (m2 * m2) - 3.0;
        let nn = n;
        let correction = 3.0 * (nn - 1.0) * (nn - 1.0) / ((nn - 2.0) * (nn - 3.0));
        Some((g1 * g1 + 1.0) / (g2 + correction))
    } else {
        None
    };
    summary.push(vec!["bimodality_coefficient".into(), cell(bimodality)]);
    report.tables.push(summary);

    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut histogram = Table::new("histogram", &["bin_lo", "bin_hi", "count"]);
    if min == max {
        histogram.push(vec![cell(Some(min)), cell(Some(max)), values.len().to_string()]);
    } else {
        let width = (max - min) / bins as f64;
        let mut counts = vec![0usize; bins];
        for v in &values {
            let mut bin = ((v - min) / width) as usize;
            if bin >= bins {
                bin = bins - 1;
            }
            counts[bin] += 1;
        }
        for (i, count) in counts.iter().enumerate() {
            let lo = min + width * i as f64;
            let hi = if i + 1 == bins { max } else { min + width * (i + 1) as f64 };
            histogram.push(vec![cell(Some(lo)), cell(Some(hi)), count.to_string()]);
        }
    }
    report.tables.push(histogram);
    Ok(report)
}

// ---------------------------------------------------------------------------
// retrieve (BM25)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct RetrieveInputs {
    pub corpus: Option<PathBuf>,
    pub queries: PathBuf,
    pub k: usize,
    pub k1: f64,
    pub b: f64,
    pub tag: String,
    /// Newline-separated stopword list.
    pub stopwords: Option<PathBuf>,
    pub index_in: Option<PathBuf>,
    pub index_out: Option<PathBuf>,
    pub out: PathBuf,
}

/// Run the reference BM25 retriever over a query file and emit a run file.
/// Queries with no positive-score document are skipped (standard run-file
/// behavior). Returns (answered, skipped).
pub fn retrieve(inputs: &RetrieveInputs) -> Result<(usize, usize)> {
    if inputs.k == 0 {
        return Err(Error::validation("k must be >= 1"));
    }
    let queries = corpus::load_queries(&inputs.queries)?;
    let index = match (&inputs.index_in, &inputs.corpus) {
        (Some(index_path), _) => bm25::InvertedIndex::load(index_path)?,
        (None, Some(corpus_path)) => {
            let documents = corpus::load_corpus(corpus_path)?;
            let stopwords = match &inputs.stopwords {
                Some(path) => std::fs::read_to_string(path)?
                    .lines()
                    .map(|w| w.trim().to_lowercase())
                    .filter(|w| !w.is_empty())
                    .collect(),
                None => HashSet::new(),
            };
            bm25::build_index_with_stopwords(&documents, inputs.k1, inputs.b, stopwords)?
        }
        (None, None) => {
            return Err(Error::validation("retrieve needs a corpus or a saved index"));
        }
    };
    if let Some(index_out) = &inputs.index_out {
        index.save(index_out)?;
    }

    let mut rankings = Vec::new();
    let mut skipped = 0usize;
    for query in &queries {
        let hits = index.search(&query.text, inputs.k);
        if hits.is_empty() {
            skipped += 1;
            continue;
        }
        rankings.push(Ranking::new(query.id.clone(), hits, inputs.tag.clone())?);
    }
    corpus::write_run(&rankings, &inputs.out)?;
    Ok((rankings.len(), skipped))
}

// ---------------------------------------------------------------------------
// fetch-embeddings
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct FetchInputs {
    pub input: PathBuf,
    pub endpoint: String,
    pub batch_size: usize,
    pub retry_delay_ms: u64,
    pub out: PathBuf,
}

/// Fetch embeddings for every `{"id","text"}` record of a JSONL file
/// (corpus and query files both qualify) and write an embedding JSONL
/// aligned with the input order.
pub fn fetch_embeddings_file(inputs: &FetchInputs) -> Result<usize> {
    let path = inputs.input.display().to_string();
    let mut texts: Vec<(String, String)> = Vec::new();
    for (lineno, line) in BufReader::new(File::open(&inputs.input)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line)
            .map_err(|e| Error::parse(&path, lineno + 1, e.to_string()))?;
        let id = value
            .get("id")
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::parse(&path, lineno + 1, "record lacks a string 'id'"))?;
        let text = value
            .get("text")
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::parse(&path, lineno + 1, "record lacks a string 'text'"))?;
        texts.push((id.to_string(), text.to_string()));
    }
    let mut config = FetchConfig::new(inputs.endpoint.clone(), inputs.batch_size);
    config.retry_delay = std::time::Duration::from_millis(inputs.retry_delay_ms);
    let store = embed_client::fetch_embeddings(&texts, &config)?;
    corpus::write_embeddings(&store, &inputs.out)?;
    Ok(store.len())
}

// ---------------------------------------------------------------------------

/// Guard rail shared by CLI validation: exact normalization cannot handle
/// rankings longer than the enumeration limit.
pub fn check_ranking_lengths(rankings: &[Ranking], settings: &MetricSettings) -> Result<()> {
    if settings.normalization == Normalization::Exact {
        if let Some(long) = rankings.iter().find(|r| r.len() > EXACT_LIMIT) {
            return Err(Error::validation(format!(
                "query '{}' ranks {} documents; exact normalization enumerates at most {EXACT_LIMIT} \
                 (pass --normalization approximate)",
                long.query_id,
                long.len()
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn query_seed_is_stable() {
        assert_eq!(query_seed(42, "q1"), query_seed(42, "q1"));
        assert_ne!(query_seed(42, "q1"), query_seed(42, "q2"));
        assert_ne!(query_seed(42, "q1"), query_seed(43, "q1"));
        // Frozen value: the hash must never drift between releases, or
        // seeded audits stop reproducing.
        assert_eq!(query_seed(0, ""), 0xcbf2_9ce4_8422_2325);
    }

    #[test]
    fn polarity_round_trip() {
        let records = vec![
            PolarityRecord { query_id: "q1".into(), doc_id: "d1".into(), p: 0.5 },
            PolarityRecord { query_id: "q1".into(), doc_id: "d2".into(), p: -0.25 },
            PolarityRecord { query_id: "q2".into(), doc_id: "d1".into(), p: 1.75 },
        ];
        let f = tempfile::NamedTempFile::new().unwrap();
        write_polarities(&records, f.path()).unwrap();
        assert_eq!(load_polarity_records(f.path()).unwrap(), records);
        let map = load_polarities(f.path()).unwrap();
        assert_eq!(map.get("q1", "d2"), Some(-0.25));
        assert_eq!(map.get("q2", "d2"), None);
    }

    #[test]
    fn mean_of_skips_missing() {
        let values = [Some(1.0), None, Some(3.0)];
        assert_eq!(mean_of(values.iter()), Some(2.0));
        let empty: [Option<f64>; 2] = [None, None];
        assert_eq!(mean_of(empty.iter()), None);
    }
}
