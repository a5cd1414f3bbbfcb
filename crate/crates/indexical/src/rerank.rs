//! Bias-extremizing reranking: reorder a ranking's documents to minimize
//! indexical bias (mitigation) or maximize it (adversarial stimuli).
//!
//! Relevance is ignored during extremization; an optional window caps the
//! reordering to the top-k prefix so the tail keeps its original order.

use std::collections::HashMap;

use crate::corpus::Ranking;
use crate::error::Error;
use crate::extrema::{self, UtilityKind, EXACT_LIMIT};
use crate::metrics::MetricConfig;
use crate::Result;

/// Extremization objective. Minimizing bias seeks the permutation with the
/// *largest* discounted variance sum (DUO 0); maximizing bias seeks the
/// smallest (DUO 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    MinimizeBias,
    MaximizeBias,
}

/// A reranking request: the ranking, a polarity score per ranked document,
/// the objective, and the metric configuration (step, variance mode, and
/// the seed/restarts used when the ranking is too long for exact search).
#[derive(Debug, Clone)]
pub struct RerankRequest<'a> {
    pub ranking: &'a Ranking,
    pub polarities: &'a HashMap<String, f64>,
    pub objective: Objective,
    pub config: MetricConfig,
    /// Rerank only the top-k window, leaving the tail untouched.
    pub window: Option<usize>,
}

impl<'a> RerankRequest<'a> {
    pub fn new(
        ranking: &'a Ranking,
        polarities: &'a HashMap<String, f64>,
        objective: Objective,
        config: MetricConfig,
    ) -> Self {
        RerankRequest { ranking, polarities, objective, config, window: None }
    }
}

/// Produce the extremizing reordering.
///
/// Exact for windows of up to [`EXACT_LIMIT`] documents, seeded local search
/// beyond that; deterministic given `(ranking, config.seed)`. Ties are broken
/// stably: an input that already attains the extremum is returned unchanged,
/// and duplicate polarity values keep their original relative order.
pub fn rerank(request: &RerankRequest<'_>) -> Result<Ranking> {
    let entries = &request.ranking.entries;
    let window = request.window.unwrap_or(entries.len()).min(entries.len());
    if window < 1 {
        return Err(Error::validation("rerank window must be at least 1"));
    }

    let head = &entries[..window];
    let values: Vec<f64> = head
        .iter()
        .map(|(doc_id, _)| {
            request
                .polarities
                .get(doc_id)
                .copied()
                .ok_or_else(|| Error::validation(format!("no polarity score for document '{doc_id}'")))
        })
        .collect::<Result<_>>()?;

    let kind = UtilityKind::Variance(request.config.variance_mode);
    let result = if window <= EXACT_LIMIT {
        extrema::exact_extrema(&values, kind, &request.config)?
    } else {
        extrema::approx_extrema(&values, kind, &request.config)?
    };
    // High discounted variance = balanced prefixes = low bias.
    let order = match request.objective {
        Objective::MinimizeBias => &result.argmax,
        Objective::MaximizeBias => &result.argmin,
    };

    let mut reordered: Vec<(String, f64)> =
        order.iter().map(|&i| head[i].clone()).collect();
    reordered.extend(entries[window..].iter().cloned());
    Ranking::new(request.ranking.query_id.clone(), reordered, request.ranking.tag.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{duo, PolarityList};

    fn ranking_with(polarities: &[f64]) -> (Ranking, HashMap<String, f64>) {
        let entries: Vec<(String, f64)> = polarities
            .iter()
            .enumerate()
            .map(|(i, _)| (format!("d{i}"), (polarities.len() - i) as f64))
            .collect();
        let map: HashMap<String, f64> = polarities
            .iter()
            .enumerate()
            .map(|(i, &p)| (format!("d{i}"), p))
            .collect();
        (Ranking::new("q1".into(), entries, "sys".into()).unwrap(), map)
    }

    fn duo_of(ranking: &Ranking, map: &HashMap<String, f64>) -> f64 {
        let values: Vec<f64> = ranking.doc_ids().map(|d| map[d]).collect();
        duo(&PolarityList::from_scores(values).unwrap(), &MetricConfig::default())
            .unwrap()
            .value
    }

    #[test]
    fn grouped_input_extremes() {
        let (ranking, map) = ranking_with(&[1.0, 1.0, 1.0, -1.0, -1.0, -1.0]);
        let min = rerank(&RerankRequest::new(
            &ranking,
            &map,
            Objective::MinimizeBias,
            MetricConfig::default(),
        ))
        .unwrap();
        assert!((duo_of(&min, &map) - 0.0).abs() < 1e-9, "minimized DUO = {}", duo_of(&min, &map));
        // Alternating polarity pattern.
        let signs: Vec<f64> = min.doc_ids().map(|d| map[d].signum()).collect();
        for pair in signs.windows(2) {
            assert_ne!(pair[0], pair[1], "expected alternation, got {signs:?}");
        }

        let max = rerank(&RerankRequest::new(
            &ranking,
            &map,
            Objective::MaximizeBias,
            MetricConfig::default(),
        ))
        .unwrap();
        assert!((duo_of(&max, &map) - 1.0).abs() < 1e-9);
        // Already grouped: the stable search returns the input unchanged.
        assert_eq!(max.entries, ranking.entries);
    }

    #[test]
    fn rerank_is_a_permutation() {
        let (ranking, map) = ranking_with(&[0.3, -0.7, 1.2, -0.1, 0.4, 0.9, -1.5]);
        let out = rerank(&RerankRequest::new(
            &ranking,
            &map,
            Objective::MinimizeBias,
            MetricConfig::default(),
        ))
        .unwrap();
        let mut a: Vec<&str> = ranking.doc_ids().collect();
        let mut b: Vec<&str> = out.doc_ids().collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
        // Scores travel with their documents.
        for (doc_id, score) in &out.entries {
            let original = ranking.entries.iter().find(|(d, _)| d == doc_id).unwrap();
            assert_eq!(*score, original.1);
        }
    }

    #[test]
    fn missing_polarity_names_document() {
        let (ranking, mut map) = ranking_with(&[1.0, -1.0, 0.5]);
        map.remove("d1");
        let err = rerank(&RerankRequest::new(
            &ranking,
            &map,
            Objective::MinimizeBias,
            MetricConfig::default(),
        ))
        .unwrap_err();
        assert!(err.to_string().contains("'d1'"), "{err}");
    }

    #[test]
    fn window_preserves_tail() {
        let (ranking, map) = ranking_with(&[1.0, 1.0, -1.0, -1.0, 0.25, -0.75]);
        let mut request =
            RerankRequest::new(&ranking, &map, Objective::MinimizeBias, MetricConfig::default());
        request.window = Some(4);
        let out = rerank(&request).unwrap();
        assert_eq!(out.entries[4..], ranking.entries[4..]);
        let mut head: Vec<&str> = out.entries[..4].iter().map(|(d, _)| d.as_str()).collect();
        head.sort();
        assert_eq!(head, vec!["d0", "d1", "d2", "d3"]);
    }

    #[test]
    fn sandwich_property_small_instances() {
        let cases: Vec<Vec<f64>> = vec![
            vec![0.1, 0.9, -0.4, 0.4, -0.9],
            vec![1.0, 1.0, -1.0],
            vec![-0.2, -0.6, -0.9, 0.8, 0.1, 0.3],
        ];
        for polarities in cases {
            let (ranking, map) = ranking_with(&polarities);
            let cfg = MetricConfig::default();
            let min =
                rerank(&RerankRequest::new(&ranking, &map, Objective::MinimizeBias, cfg.clone()))
                    .unwrap();
            let max =
                rerank(&RerankRequest::new(&ranking, &map, Objective::MaximizeBias, cfg.clone()))
                    .unwrap();
            let input_duo = duo_of(&ranking, &map);
            assert!(duo_of(&min, &map) <= input_duo + 1e-12);
            assert!(duo_of(&max, &map) + 1e-12 >= input_duo);
        }
    }
}
