//! Corpus data model and validated ingestion.
//!
//! File formats, chosen to interoperate with existing IR tooling:
//!
//! - corpus JSONL: `{"id","text","query_id"?,"perspective"?,"domain"?,"topic"?}`
//! - query JSONL: `{"id","text","topic","domain","perspectives"?:[s1,s2]}`
//! - embedding JSONL: `{"id","vector":[f,...]}`
//! - run file (TREC, 6 columns): `qid Q0 docid rank score tag`
//! - qrels (TREC, 4 columns): `qid 0 docid grade`
//!
//! Loaders are total: any file they accept satisfies the type invariants.
//! Loaded collections are immutable and safe to share across threads.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// A corpus document, optionally carrying a gold perspective label (1 or 2),
/// the query it was generated for, and domain/topic metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perspective: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic: Option<String>,
}

/// A debate-style query with its topic/domain and, when generated
/// synthetically, the two opposing perspective statements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub id: String,
    pub text: String,
    pub topic: String,
    pub domain: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perspectives: Option<Vec<String>>,
}

/// Relevance judgments: (query, document) -> non-negative grade.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Qrels {
    by_query: HashMap<String, HashMap<String, u32>>,
}

impl Qrels {
    pub fn grade(&self, query_id: &str, doc_id: &str) -> Option<u32> {
        self.by_query.get(query_id).and_then(|m| m.get(doc_id)).copied()
    }

    /// Judgments for one query, if any exist.
    pub fn judged(&self, query_id: &str) -> Option<&HashMap<String, u32>> {
        self.by_query.get(query_id)
    }

    pub fn insert(&mut self, query_id: String, doc_id: String, grade: u32) {
        self.by_query.entry(query_id).or_default().insert(doc_id, grade);
    }

    pub fn query_count(&self) -> usize {
        self.by_query.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_query.is_empty()
    }

    /// Check that every referenced id resolves against the given corpora.
    pub fn validate_against(
        &self,
        query_ids: &HashSet<&str>,
        doc_ids: &HashSet<&str>,
    ) -> Result<()> {
        for (qid, docs) in &self.by_query {
            if !query_ids.contains(qid.as_str()) {
                return Err(Error::validation(format!("qrels references unknown query '{qid}'")));
            }
            for did in docs.keys() {
                if !doc_ids.contains(did.as_str()) {
                    return Err(Error::validation(format!(
                        "qrels references unknown document '{did}' (query '{qid}')"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One id-keyed dense embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub id: String,
    #[serde(rename = "vector")]
    pub values: Vec<f64>,
}

/// A set of embeddings sharing one dimension d >= 2, with all components
/// finite. Insertion order is preserved.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingStore {
    vectors: Vec<EmbeddingVector>,
    index: HashMap<String, usize>,
}

impl EmbeddingStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Shared dimension, or `None` for an empty store.
    pub fn dim(&self) -> Option<usize> {
        self.vectors.first().map(|v| v.values.len())
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&EmbeddingVector> {
        self.index.get(id).map(|&i| &self.vectors[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &EmbeddingVector> {
        self.vectors.iter()
    }

    /// Insert, enforcing the store invariants. A dimension mismatch names
    /// both the id that established the dimension and the offending id.
    pub fn insert(&mut self, vector: EmbeddingVector) -> Result<()> {
        if vector.id.is_empty() {
            return Err(Error::validation("embedding with empty id"));
        }
        if self.index.contains_key(&vector.id) {
            return Err(Error::validation(format!("duplicate embedding id '{}'", vector.id)));
        }
        if vector.values.len() < 2 {
            return Err(Error::validation(format!(
                "embedding '{}' has dimension {} (need >= 2)",
                vector.id,
                vector.values.len()
            )));
        }
        if let Some(bad) = vector.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::validation(format!(
                "embedding '{}' contains non-finite component {bad}",
                vector.id
            )));
        }
        if let Some(first) = self.vectors.first() {
            if first.values.len() != vector.values.len() {
                return Err(Error::DimensionMismatch {
                    expected: first.values.len(),
                    found: vector.values.len(),
                    context: format!("embedding '{}' vs '{}'", vector.id, first.id),
                });
            }
        }
        self.index.insert(vector.id.clone(), self.vectors.len());
        self.vectors.push(vector);
        Ok(())
    }
}

/// A query-scoped ordered document list. The order of `entries` is the
/// authoritative rank; scores are informative only (ties permitted).
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub query_id: String,
    pub entries: Vec<(String, f64)>,
    pub tag: String,
}

impl Ranking {
    /// Build a ranking, enforcing distinct doc ids and length >= 1.
    pub fn new(query_id: String, entries: Vec<(String, f64)>, tag: String) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::validation(format!("ranking for query '{query_id}' is empty")));
        }
        let mut seen = HashSet::new();
        for (doc_id, _) in &entries {
            if !seen.insert(doc_id.as_str()) {
                return Err(Error::validation(format!(
                    "ranking for query '{query_id}' repeats document '{doc_id}'"
                )));
            }
        }
        Ok(Ranking { query_id, entries, tag })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(id, _)| id.as_str())
    }
}

fn open_lines(path: &Path) -> Result<impl Iterator<Item = std::io::Result<String>>> {
    let file = File::open(path)?;
    Ok(BufReader::new(file).lines())
}

fn path_str(path: &Path) -> String {
    path.display().to_string()
}

/// Load a JSONL corpus. Empty lines are skipped; any other malformed line
/// is a parse error carrying its line number.
pub fn load_corpus(path: &Path) -> Result<Vec<Document>> {
    let p = path_str(path);
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (lineno, line) in open_lines(path)?.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(&line)
            .map_err(|e| Error::parse(&p, lineno + 1, e.to_string()))?;
        if doc.id.is_empty() {
            return Err(Error::parse(&p, lineno + 1, "document with empty id"));
        }
        if let Some(side) = doc.perspective {
            if side != 1 && side != 2 {
                return Err(Error::parse(
                    &p,
                    lineno + 1,
                    format!("perspective must be 1 or 2, got {side}"),
                ));
            }
        }
        if !seen.insert(doc.id.clone()) {
            return Err(Error::parse(&p, lineno + 1, format!("duplicate document id '{}'", doc.id)));
        }
        docs.push(doc);
    }
    Ok(docs)
}

/// Write a corpus as JSONL, one document per line.
pub fn write_corpus(docs: &[Document], path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for doc in docs {
        serde_json::to_writer(&mut out, doc).map_err(|e| Error::validation(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Load a JSONL query file.
pub fn load_queries(path: &Path) -> Result<Vec<Query>> {
    let p = path_str(path);
    let mut queries = Vec::new();
    let mut seen = HashSet::new();
    for (lineno, line) in open_lines(path)?.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let query: Query = serde_json::from_str(&line)
            .map_err(|e| Error::parse(&p, lineno + 1, e.to_string()))?;
        if query.id.is_empty() {
            return Err(Error::parse(&p, lineno + 1, "query with empty id"));
        }
        if let Some(sides) = &query.perspectives {
            if sides.len() != 2 {
                return Err(Error::parse(
                    &p,
                    lineno + 1,
                    format!("perspectives must have exactly 2 entries, got {}", sides.len()),
                ));
            }
        }
        if !seen.insert(query.id.clone()) {
            return Err(Error::parse(&p, lineno + 1, format!("duplicate query id '{}'", query.id)));
        }
        queries.push(query);
    }
    Ok(queries)
}

/// Load TREC 4-column qrels: `qid 0 docid grade`.
pub fn load_qrels(path: &Path) -> Result<Qrels> {
    let p = path_str(path);
    let mut qrels = Qrels::default();
    for (lineno, line) in open_lines(path)?.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 4 {
            return Err(Error::parse(
                &p,
                lineno + 1,
                format!("expected 4 columns, found {}", cols.len()),
            ));
        }
        let grade: u32 = cols[3]
            .parse()
            .map_err(|_| Error::parse(&p, lineno + 1, format!("bad grade '{}'", cols[3])))?;
        qrels.insert(cols[0].to_string(), cols[2].to_string(), grade);
    }
    Ok(qrels)
}

/// Load JSONL embeddings, rejecting mixed dimensions.
pub fn load_embeddings(path: &Path) -> Result<EmbeddingStore> {
    let p = path_str(path);
    let mut store = EmbeddingStore::new();
    for (lineno, line) in open_lines(path)?.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let vector: EmbeddingVector = serde_json::from_str(&line)
            .map_err(|e| Error::parse(&p, lineno + 1, e.to_string()))?;
        store.insert(vector)?;
    }
    Ok(store)
}

/// Write embeddings as JSONL, one `{"id","vector":[...]}` object per line.
pub fn write_embeddings(store: &EmbeddingStore, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for v in store.iter() {
        serde_json::to_writer(&mut out, v).map_err(|e| Error::validation(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Load a TREC run file: `qid Q0 docid rank score tag`.
///
/// Rankings are grouped by query (in order of first appearance) and sorted
/// by rank. Ranks within a query must be exactly 1..=n; the rank column is
/// authoritative and the score informative.
pub fn load_run(path: &Path) -> Result<Vec<Ranking>> {
    let p = path_str(path);
    struct Pending {
        tag: String,
        entries: Vec<(usize, String, f64)>,
    }
    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Pending> = HashMap::new();

    for (lineno, line) in open_lines(path)?.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 6 {
            return Err(Error::parse(
                &p,
                lineno + 1,
                format!("expected 6 columns, found {}", cols.len()),
            ));
        }
        let rank: usize = cols[3]
            .parse()
            .map_err(|_| Error::parse(&p, lineno + 1, format!("bad rank '{}'", cols[3])))?;
        let score: f64 = cols[4]
            .parse()
            .map_err(|_| Error::parse(&p, lineno + 1, format!("bad score '{}'", cols[4])))?;
        let query_id = cols[0].to_string();
        let group = groups.entry(query_id.clone()).or_insert_with(|| {
            order.push(query_id);
            Pending { tag: cols[5].to_string(), entries: Vec::new() }
        });
        if group.tag != cols[5] {
            return Err(Error::parse(
                &p,
                lineno + 1,
                format!("mixed run tags '{}' and '{}' within query '{}'", group.tag, cols[5], cols[0]),
            ));
        }
        group.entries.push((rank, cols[2].to_string(), score));
    }

    let mut rankings = Vec::with_capacity(order.len());
    for query_id in order {
        let mut group = groups.remove(&query_id).expect("grouped above");
        group.entries.sort_by_key(|(rank, _, _)| *rank);
        for (i, (rank, _, _)) in group.entries.iter().enumerate() {
            if *rank != i + 1 {
                return Err(Error::validation(format!(
                    "query '{query_id}': ranks must be contiguous from 1, found rank {rank} at position {}",
                    i + 1
                )));
            }
        }
        let entries = group.entries.into_iter().map(|(_, id, score)| (id, score)).collect();
        rankings.push(Ranking::new(query_id, entries, group.tag)?);
    }
    Ok(rankings)
}

/// Write rankings in the 6-column run format. `load_run(write_run(x)) == x`.
pub fn write_run(rankings: &[Ranking], path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for ranking in rankings {
        for (i, (doc_id, score)) in ranking.entries.iter().enumerate() {
            writeln!(
                out,
                "{} Q0 {} {} {} {}",
                ranking.query_id,
                doc_id,
                i + 1,
                score,
                ranking.tag
            )?;
        }
    }
    out.flush()?;
    Ok(())
}
