//! Reference BM25 lexical retriever.
//!
//! Robertson BM25 with Lucene-style smoothed idf, k1 = 1.2 and b = 0.75 by
//! default. Tokens are lowercased maximal runs of Unicode alphanumerics; no
//! stemming, and no stopword removal unless a list is supplied. The built
//! index is immutable and safe to share across concurrent searches.
//!
//! Persistence format (JSONL, one object per line): a `meta` line with the
//! parameters, one `doc` line per document in indexing order, then one
//! `post` line per term in lexicographic order with postings sorted by
//! doc id.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::Error;
use crate::Result;

pub const DEFAULT_K1: f64 = 1.2;
pub const DEFAULT_B: f64 = 0.75;

/// Lowercased maximal alphanumeric runs.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            for lower in ch.to_lowercase() {
                current.push(lower);
            }
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// BM25 inverted index.
#[derive(Debug, Clone)]
pub struct InvertedIndex {
    /// term -> postings sorted by doc id, as (doc index, term frequency).
    postings: BTreeMap<String, Vec<(usize, u32)>>,
    doc_ids: Vec<String>,
    doc_index: HashMap<String, usize>,
    doc_lengths: Vec<usize>,
    avgdl: f64,
    k1: f64,
    b: f64,
    stopwords: HashSet<String>,
}

impl InvertedIndex {
    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn avgdl(&self) -> f64 {
        self.avgdl
    }

    pub fn k1(&self) -> f64 {
        self.k1
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn doc_length(&self, doc_id: &str) -> Option<usize> {
        self.doc_index.get(doc_id).map(|&i| self.doc_lengths[i])
    }

    pub fn postings(&self, term: &str) -> Option<&[(usize, u32)]> {
        self.postings.get(term).map(Vec::as_slice)
    }

    pub fn doc_id(&self, index: usize) -> &str {
        &self.doc_ids[index]
    }

    /// Smoothed idf; strictly positive for every indexed term.
    pub fn idf(&self, term: &str) -> f64 {
        let df = self.postings.get(term).map_or(0, Vec::len) as f64;
        let n = self.doc_count() as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    fn term_score(&self, tf: u32, doc_len: usize, idf: f64) -> f64 {
        let tf = tf as f64;
        let length_norm = if self.avgdl > 0.0 {
            1.0 - self.b + self.b * doc_len as f64 / self.avgdl
        } else {
            1.0
        };
        idf * tf * (self.k1 + 1.0) / (tf + self.k1 * length_norm)
    }

    /// BM25 score of one document for the given query tokens.
    pub fn score(&self, query_tokens: &[String], doc_id: &str) -> Result<f64> {
        let &doc = self
            .doc_index
            .get(doc_id)
            .ok_or_else(|| Error::validation(format!("document '{doc_id}' is not indexed")))?;
        let doc_len = self.doc_lengths[doc];
        let mut total = 0.0;
        for term in query_tokens {
            if self.stopwords.contains(term) {
                continue;
            }
            let Some(postings) = self.postings.get(term) else { continue };
            if let Ok(pos) = postings.binary_search_by_key(&doc, |(d, _)| *d) {
                total += self.term_score(postings[pos].1, doc_len, self.idf(term));
            }
        }
        Ok(total)
    }

    /// Top-k documents by score descending, ties broken by doc id ascending;
    /// zero-score documents are excluded. An empty result is permitted.
    pub fn search(&self, query_text: &str, k: usize) -> Vec<(String, f64)> {
        let tokens = tokenize(query_text);
        let mut accumulator: HashMap<usize, f64> = HashMap::new();
        for term in &tokens {
            if self.stopwords.contains(term) {
                continue;
            }
            let Some(postings) = self.postings.get(term) else { continue };
            let idf = self.idf(term);
            for &(doc, tf) in postings {
                *accumulator.entry(doc).or_insert(0.0) +=
                    self.term_score(tf, self.doc_lengths[doc], idf);
            }
        }
        let mut scored: Vec<(String, f64)> = accumulator
            .into_iter()
            .filter(|(_, score)| *score > 0.0)
            .map(|(doc, score)| (self.doc_ids[doc].clone(), score))
            .collect();
        scored.sort_by(|(id_a, score_a), (id_b, score_b)| {
            score_b.total_cmp(score_a).then_with(|| id_a.cmp(id_b))
        });
        scored.truncate(k);
        scored
    }

    /// Persist as JSONL (see module docs).
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        let write_line = |out: &mut BufWriter<File>, line: &IndexLine| -> Result<()> {
            serde_json::to_writer(&mut *out, line).map_err(|e| Error::validation(e.to_string()))?;
            out.write_all(b"\n")?;
            Ok(())
        };
        let mut stopwords: Vec<String> = self.stopwords.iter().cloned().collect();
        stopwords.sort();
        write_line(
            &mut out,
            &IndexLine::Meta { k1: self.k1, b: self.b, stopwords },
        )?;
        for (i, id) in self.doc_ids.iter().enumerate() {
            write_line(&mut out, &IndexLine::Doc { id: id.clone(), len: self.doc_lengths[i] })?;
        }
        for (term, postings) in &self.postings {
            write_line(
                &mut out,
                &IndexLine::Post {
                    term: term.clone(),
                    postings: postings
                        .iter()
                        .map(|&(doc, tf)| (self.doc_ids[doc].clone(), tf))
                        .collect(),
                },
            )?;
        }
        out.flush()?;
        Ok(())
    }

    /// Load an index persisted by [`InvertedIndex::save`].
    pub fn load(path: &Path) -> Result<Self> {
        let p = path.display().to_string();
        let mut lines = BufReader::new(File::open(path)?).lines().enumerate();
        let Some((_, first)) = lines.next() else {
            return Err(Error::parse(&p, 1, "empty index file"));
        };
        let meta: IndexLine = serde_json::from_str(&first?)
            .map_err(|e| Error::parse(&p, 1, e.to_string()))?;
        let IndexLine::Meta { k1, b, stopwords } = meta else {
            return Err(Error::parse(&p, 1, "first line must be the meta record"));
        };
        let mut index = InvertedIndex {
            postings: BTreeMap::new(),
            doc_ids: Vec::new(),
            doc_index: HashMap::new(),
            doc_lengths: Vec::new(),
            avgdl: 0.0,
            k1,
            b,
            stopwords: stopwords.into_iter().collect(),
        };
        for (lineno, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: IndexLine = serde_json::from_str(&line)
                .map_err(|e| Error::parse(&p, lineno + 1, e.to_string()))?;
            match record {
                IndexLine::Meta { .. } => {
                    return Err(Error::parse(&p, lineno + 1, "duplicate meta record"));
                }
                IndexLine::Doc { id, len } => {
                    if index.doc_index.contains_key(&id) {
                        return Err(Error::parse(&p, lineno + 1, format!("duplicate doc id '{id}'")));
                    }
                    index.doc_index.insert(id.clone(), index.doc_ids.len());
                    index.doc_ids.push(id);
                    index.doc_lengths.push(len);
                }
                IndexLine::Post { term, postings } => {
                    let resolved: Vec<(usize, u32)> = postings
                        .into_iter()
                        .map(|(id, tf)| {
                            index
                                .doc_index
                                .get(&id)
                                .map(|&doc| (doc, tf))
                                .ok_or_else(|| {
                                    Error::parse(&p, lineno + 1, format!("posting for unknown doc '{id}'"))
                                })
                        })
                        .collect::<Result<_>>()?;
                    index.postings.insert(term, resolved);
                }
            }
        }
        if index.doc_ids.is_empty() {
            return Err(Error::validation("index contains no documents"));
        }
        index.avgdl =
            index.doc_lengths.iter().sum::<usize>() as f64 / index.doc_lengths.len() as f64;
        Ok(index)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum IndexLine {
    Meta { k1: f64, b: f64, stopwords: Vec<String> },
    Doc { id: String, len: usize },
    Post { term: String, postings: Vec<(String, u32)> },
}

/// Build an index over a corpus. Duplicate ids and empty corpora are
/// rejected; a document whose text holds no alphanumeric runs is indexed
/// with length 0 and no postings.
pub fn build_index(documents: &[Document], k1: f64, b: f64) -> Result<InvertedIndex> {
    build_index_with_stopwords(documents, k1, b, HashSet::new())
}

/// [`build_index`] with a stopword list applied at both index and query time.
pub fn build_index_with_stopwords(
    documents: &[Document],
    k1: f64,
    b: f64,
    stopwords: HashSet<String>,
) -> Result<InvertedIndex> {
    if documents.is_empty() {
        return Err(Error::validation("cannot index an empty corpus"));
    }
    if k1 <= 0.0 {
        return Err(Error::validation("k1 must be positive"));
    }
    if !(0.0..=1.0).contains(&b) {
        return Err(Error::validation("b must lie in [0, 1]"));
    }

    let mut doc_ids = Vec::with_capacity(documents.len());
    let mut doc_index = HashMap::with_capacity(documents.len());
    let mut doc_lengths = Vec::with_capacity(documents.len());
    let mut postings: BTreeMap<String, Vec<(usize, u32)>> = BTreeMap::new();

    for doc in documents {
        if doc_index.contains_key(&doc.id) {
            return Err(Error::validation(format!("duplicate document id '{}'", doc.id)));
        }
        let idx = doc_ids.len();
        doc_index.insert(doc.id.clone(), idx);
        doc_ids.push(doc.id.clone());

        let tokens = tokenize(&doc.text);
        let kept: Vec<&String> = tokens.iter().filter(|t| !stopwords.contains(*t)).collect();
        doc_lengths.push(kept.len());
        let mut counts: HashMap<&String, u32> = HashMap::new();
        for token in kept {
            *counts.entry(token).or_insert(0) += 1;
        }
        for (term, tf) in counts {
            postings.entry(term.clone()).or_default().push((idx, tf));
        }
    }

    // Doc indices follow corpus order; re-sort postings by the doc id string.
    for plist in postings.values_mut() {
        plist.sort_by(|(a, _), (b, _)| doc_ids[*a].cmp(&doc_ids[*b]));
    }

    let avgdl = doc_lengths.iter().sum::<usize>() as f64 / doc_lengths.len() as f64;
    Ok(InvertedIndex {
        postings,
        doc_ids,
        doc_index,
        doc_lengths,
        avgdl,
        k1,
        b,
        stopwords,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, text: &str) -> Document {
        Document {
            id: id.to_string(),
            text: text.to_string(),
            query_id: None,
            perspective: None,
            domain: None,
            topic: None,
        }
    }

    fn toy_index() -> InvertedIndex {
        build_index(&[doc("d1", "a a b"), doc("d2", "b c")], DEFAULT_K1, DEFAULT_B).unwrap()
    }

    #[test]
    fn tokenization_and_postings() {
        let index = toy_index();
        assert_eq!(index.postings("a").unwrap(), &[(0, 2)]);
        assert_eq!(index.postings("b").unwrap(), &[(0, 1), (1, 1)]);
        assert_eq!(index.postings("c").unwrap(), &[(1, 1)]);
        assert_eq!(index.avgdl(), 2.5);
        assert_eq!(index.doc_count(), 2);
    }

    #[test]
    fn unicode_tokenization() {
        assert_eq!(tokenize("Héllo, WÖRLD-42!"), vec!["héllo", "wörld", "42"]);
        assert_eq!(tokenize("..."), Vec::<String>::new());
    }

    #[test]
    fn punctuation_only_document_indexed_empty() {
        let index = build_index(&[doc("d1", "?!*"), doc("d2", "a")], DEFAULT_K1, DEFAULT_B).unwrap();
        assert_eq!(index.doc_length("d1"), Some(0));
        assert_eq!(index.search("a", 10), vec![("d2".to_string(), index.score(&tokenize("a"), "d2").unwrap())]);
    }

    #[test]
    fn duplicate_doc_ids_rejected() {
        assert!(build_index(&[doc("d1", "a"), doc("d1", "b")], DEFAULT_K1, DEFAULT_B).is_err());
    }

    #[test]
    fn empty_corpus_rejected() {
        assert!(build_index(&[], DEFAULT_K1, DEFAULT_B).is_err());
    }

    #[test]
    fn hand_computed_score() {
        // idf("a") = ln(1 + (2 - 1 + 0.5)/(1 + 0.5)) = ln 2; tf = 2, dl = 3,
        // avgdl = 2.5: ln(2) * (2 * 2.2) / (2 + 1.2 * (0.25 + 0.75 * 3/2.5)).
        let index = toy_index();
        let score = index.score(&tokenize("a"), "d1").unwrap();
        assert!((score - 0.90229).abs() < 1e-4, "score = {score}");
        let exact = 2.0f64.ln() * (2.0 * 2.2) / (2.0 + 1.2 * (0.25 + 0.75 * 3.0 / 2.5));
        assert!((score - exact).abs() < 1e-12);
    }

    #[test]
    fn disjoint_document_scores_zero() {
        let index = toy_index();
        assert_eq!(index.score(&tokenize("a"), "d2").unwrap(), 0.0);
    }

    #[test]
    fn unknown_document_rejected() {
        let index = toy_index();
        assert!(index.score(&tokenize("a"), "nope").is_err());
    }

    #[test]
    fn score_monotone_in_tf() {
        // Equal-length docs in one index: only the query term's tf varies.
        let docs = vec![
            doc("d1", "a x1 x2 x3"),
            doc("d2", "a a x4 x5"),
            doc("d3", "a a a x6"),
        ];
        let index = build_index(&docs, DEFAULT_K1, DEFAULT_B).unwrap();
        let q = tokenize("a");
        let s1 = index.score(&q, "d1").unwrap();
        let s2 = index.score(&q, "d2").unwrap();
        let s3 = index.score(&q, "d3").unwrap();
        assert!(s1 < s2 && s2 < s3, "{s1} {s2} {s3}");
    }

    #[test]
    fn search_order_and_ties() {
        let index = toy_index();
        // "a" only matches d1.
        assert_eq!(index.search("a", 10).len(), 1);
        assert_eq!(index.search("a", 10)[0].0, "d1");
        // "b" matches both; shorter d2 scores higher under length norm.
        let hits = index.search("b", 10);
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[0].0, "d2");
        assert!(hits[0].1 > hits[1].1);
        // Equal-length identical docs tie; doc id breaks the tie.
        let index =
            build_index(&[doc("z", "x y"), doc("a", "x y")], DEFAULT_K1, DEFAULT_B).unwrap();
        let hits = index.search("x", 10);
        assert_eq!(hits[0].0, "a");
        assert_eq!(hits[1].0, "z");
        assert_eq!(hits[0].1, hits[1].1);
    }

    #[test]
    fn k_larger_than_corpus() {
        let index = toy_index();
        let hits = index.search("b c", 100);
        assert_eq!(hits.len(), 2);
    }

    #[test]
    fn own_text_ranks_first_on_uniform_corpus() {
        let docs = vec![
            doc("d1", "apples grow on trees"),
            doc("d2", "rivers carve deep canyons"),
            doc("d3", "engines burn refined fuel"),
        ];
        let index = build_index(&docs, DEFAULT_K1, DEFAULT_B).unwrap();
        for d in &docs {
            let hits = index.search(&d.text, 3);
            assert_eq!(hits[0].0, d.id, "query '{}'", d.text);
        }
    }

    #[test]
    fn idf_positive_for_indexed_terms() {
        let index = build_index(
            &[doc("d1", "common term"), doc("d2", "common term"), doc("d3", "common other")],
            DEFAULT_K1,
            DEFAULT_B,
        )
        .unwrap();
        assert!(index.idf("common") > 0.0);
        assert!(index.idf("term") > 0.0);
    }

    #[test]
    fn stopwords_are_dropped() {
        let stop: HashSet<String> = ["the".to_string()].into_iter().collect();
        let index = build_index_with_stopwords(
            &[doc("d1", "the cat"), doc("d2", "a dog")],
            DEFAULT_K1,
            DEFAULT_B,
            stop,
        )
        .unwrap();
        assert!(index.search("the", 10).is_empty());
        assert_eq!(index.doc_length("d1"), Some(1));
    }

    #[test]
    fn save_load_round_trip() {
        let index = toy_index();
        let f = tempfile::NamedTempFile::new().unwrap();
        index.save(f.path()).unwrap();
        let loaded = InvertedIndex::load(f.path()).unwrap();
        assert_eq!(loaded.doc_count(), index.doc_count());
        assert_eq!(loaded.avgdl(), index.avgdl());
        assert_eq!(
            loaded.score(&tokenize("a"), "d1").unwrap(),
            index.score(&tokenize("a"), "d1").unwrap()
        );
        assert_eq!(loaded.search("b", 10), index.search("b", 10));
    }
}
