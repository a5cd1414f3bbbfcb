//! Discounted-sum bias metrics (rND, rKL, DUO, signed DUO, multi-axis DUO)
//! and standard relevance nDCG@k.
//!
//! The bias metrics share one construction: a per-prefix utility is summed
//! with 1/log2(i) discounts over positions i >= 2 (the i = 1 discount is
//! undefined), then min/max-normalized over permutations of the ranking's
//! own labels. 0 is always the fairest value and 1 the most biased.
//! Relevance nDCG@k instead uses the conventional log2(i+1) discount with
//! ideal-DCG normalization.

use serde::{Deserialize, Serialize};

use crate::corpus::{Qrels, Ranking};
use crate::error::Error;
use crate::extrema::{self, UtilityKind};
use crate::Result;

/// Relative span below which min/max normalization is considered degenerate:
/// all permutations score the same and the ranking carries no indexical bias.
const DEGENERATE_SPAN: f64 = 1e-12;

/// Which mean anchors the prefix variance u_V.
///
/// `PrefixMean` (the default) measures the spread among the top-i documents
/// themselves; `GlobalMean` measures their spread around the full ranking's
/// mean polarity. The two differ: three same-side documents have zero
/// prefix-mean variance but positive global-mean variance whenever the rest
/// of the ranking leans the other way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceMode {
    PrefixMean,
    GlobalMean,
}

/// How permutation extrema are obtained: exhaustive enumeration (rankings of
/// up to [`extrema::EXACT_LIMIT`] documents) or seeded stochastic search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Exact,
    Approximate,
}

/// Shared configuration for all discounted bias metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    /// Positions i = step, 2*step, ... are evaluated (position 1 never is).
    pub step: usize,
    pub variance_mode: VarianceMode,
    pub normalization: Normalization,
    /// Random restarts for the stochastic normalization.
    pub approx_restarts: usize,
    pub seed: u64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            step: 1,
            variance_mode: VarianceMode::PrefixMean,
            normalization: Normalization::Exact,
            approx_restarts: 512,
            seed: 42,
        }
    }
}

impl MetricConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.step < 1 {
            return Err(Error::validation("step must be >= 1"));
        }
        if self.approx_restarts < 1 {
            return Err(Error::validation("approx_restarts must be >= 1"));
        }
        Ok(())
    }
}

/// Ordered polarity scores for one ranking, optionally with protected-group
/// membership labels for the supervised metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarityList {
    values: Vec<f64>,
    group: Option<Vec<bool>>,
}

impl PolarityList {
    /// Polarity scores only (enough for DUO).
    pub fn from_scores(values: Vec<f64>) -> Result<Self> {
        Self::build(values, None)
    }

    /// Group labels only; scores become 1.0/0.0 indicators.
    pub fn from_groups(group: Vec<bool>) -> Result<Self> {
        let values = group.iter().map(|&g| if g { 1.0 } else { 0.0 }).collect();
        Self::build(values, Some(group))
    }

    /// Scores plus group labels of equal length.
    pub fn with_group(values: Vec<f64>, group: Vec<bool>) -> Result<Self> {
        if values.len() != group.len() {
            return Err(Error::validation(format!(
                "polarity/group length mismatch: {} vs {}",
                values.len(),
                group.len()
            )));
        }
        Self::build(values, Some(group))
    }

    fn build(values: Vec<f64>, group: Option<Vec<bool>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::validation("polarity list must be non-empty"));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::validation(format!("non-finite polarity score {bad}")));
        }
        Ok(PolarityList { values, group })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn group(&self) -> Option<&[bool]> {
        self.group.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn require_group(&self) -> Result<&[bool]> {
        self.group
            .as_deref()
            .ok_or_else(|| Error::validation("metric requires protected-group labels"))
    }

    fn group_indicators(&self) -> Result<Vec<f64>> {
        Ok(self
            .require_group()?
            .iter()
            .map(|&g| if g { 1.0 } else { 0.0 })
            .collect())
    }
}

/// A normalized metric value with its normalization context.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricValue {
    /// In [0, 1]; 0 when degenerate.
    pub value: f64,
    /// All permutations of the labels score identically, so the ranking
    /// carries no measurable indexical bias.
    pub degenerate: bool,
    /// Discounted sum of the input ordering.
    pub raw_dcg: f64,
    /// (min, max) of the discounted sum over permutations.
    pub extrema: (f64, f64),
}

impl MetricValue {
    fn degenerate_zero(raw_dcg: f64, extrema: (f64, f64)) -> Self {
        MetricValue { value: 0.0, degenerate: true, raw_dcg, extrema }
    }
}

/// Discounted sum of a position utility: sum of u(i)/log2(i) over the
/// evaluated positions {step, 2*step, ...} intersected with [2, n].
pub fn discounted_sum(mut utility: impl FnMut(usize) -> f64, n: usize, step: usize) -> f64 {
    debug_assert!(step >= 1);
    let mut total = 0.0;
    // Multiples of step, skipping position 1 (its log2 discount is zero).
    let mut i = if step == 1 { 2 } else { step };
    while i <= n {
        total += utility(i) / (i as f64).log2();
        i += step;
    }
    total
}

/// Proportion of group members among the top i.
fn group_frac(group: &[bool], i: usize) -> f64 {
    group[..i].iter().filter(|&&g| g).count() as f64 / i as f64
}

/// u_ND(i): absolute difference between the prefix and population
/// proportions of the protected group.
pub fn u_nd(list: &PolarityList, i: usize) -> Result<f64> {
    let group = list.require_group()?;
    check_position(i, group.len())?;
    Ok((group_frac(group, i) - group_frac(group, group.len())).abs())
}

/// u_KL(i): KL divergence (nats) between prefix and population group
/// membership. A population proportion of exactly 0 or 1 is degenerate.
pub fn u_kl(list: &PolarityList, i: usize) -> Result<f64> {
    let group = list.require_group()?;
    check_position(i, group.len())?;
    let population = group_frac(group, group.len());
    if population <= 0.0 || population >= 1.0 {
        return Err(Error::Degenerate(
            "population group proportion is 0 or 1; rKL undefined".into(),
        ));
    }
    Ok(extrema::bernoulli_kl(group_frac(group, i), population))
}

/// u_V(i): variance of the top-i polarization scores (see [`VarianceMode`]).
pub fn u_v(list: &PolarityList, i: usize, mode: VarianceMode) -> Result<f64> {
    let values = list.values();
    check_position(i, values.len())?;
    let prefix = &values[..i];
    let mean = match mode {
        VarianceMode::PrefixMean => prefix.iter().sum::<f64>() / i as f64,
        VarianceMode::GlobalMean => values.iter().sum::<f64>() / values.len() as f64,
    };
    Ok(prefix.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / i as f64)
}

fn check_position(i: usize, n: usize) -> Result<()> {
    if i < 1 || i > n {
        return Err(Error::validation(format!("position {i} outside 1..={n}")));
    }
    Ok(())
}

/// Min/max-normalize a raw discounted sum against permutation extrema.
fn normalize(values: &[f64], kind: UtilityKind, config: &MetricConfig) -> Result<MetricValue> {
    let raw_dcg = extrema::dcg_of(values, kind, config.step);
    let ex = extrema::extrema(values, kind, config)?;
    let span = ex.max_dcg - ex.min_dcg;
    let scale = 1.0f64.max(ex.max_dcg.abs()).max(ex.min_dcg.abs());
    if span <= DEGENERATE_SPAN * scale {
        return Ok(MetricValue::degenerate_zero(raw_dcg, (ex.min_dcg, ex.max_dcg)));
    }
    Ok(MetricValue {
        value: (raw_dcg - ex.min_dcg) / span,
        degenerate: false,
        raw_dcg,
        extrema: (ex.min_dcg, ex.max_dcg),
    })
}

/// rND: normalized discounted difference in group proportions.
/// 0 = the group is mixed in as evenly as this label multiset allows,
/// 1 = maximal segregation by rank.
pub fn rnd(list: &PolarityList, config: &MetricConfig) -> Result<MetricValue> {
    config.validate()?;
    let indicators = list.group_indicators()?;
    normalize(&indicators, UtilityKind::GroupDifference, config)
}

/// rKL: normalized discounted Bernoulli KL divergence of group proportions.
pub fn rkl(list: &PolarityList, config: &MetricConfig) -> Result<MetricValue> {
    config.validate()?;
    let group = list.require_group()?;
    let population = group_frac(group, group.len());
    let indicators = list.group_indicators()?;
    if population <= 0.0 || population >= 1.0 {
        // Single-group population: every ordering is equivalent.
        return Ok(MetricValue::degenerate_zero(0.0, (0.0, 0.0)));
    }
    normalize(&indicators, UtilityKind::GroupDivergence, config)
}

/// DUO: 1 minus the min/max-normalized discounted sum of prefix polarization
/// variances. 0 = perspectives as uniformly interleaved as possible,
/// 1 = maximal indexical bias.
pub fn duo(list: &PolarityList, config: &MetricConfig) -> Result<MetricValue> {
    config.validate()?;
    let nv = normalize(list.values(), UtilityKind::Variance(config.variance_mode), config)?;
    if nv.degenerate {
        return Ok(nv);
    }
    Ok(MetricValue { value: 1.0 - nv.value, ..nv })
}

/// Sign of a score prefix: -1 when strictly more scores are negative than
/// non-negative, +1 otherwise.
fn prefix_sign(values: &[f64], i: usize) -> f64 {
    let negatives = values[..i].iter().filter(|v| **v < 0.0).count();
    if 2 * negatives > i {
        -1.0
    } else {
        1.0
    }
}

/// Signed DUO: the DUO magnitude carrying the favored perspective's sign.
///
/// The sign comes from the raw discounted sum of the sign-weighted variance
/// utility u+_V(i) = sgn({p_j}_{j<=i}) * u_V(i); a zero sum maps to +1.
pub fn signed_duo(list: &PolarityList, config: &MetricConfig) -> Result<f64> {
    config.validate()?;
    let magnitude = duo(list, config)?;
    let values = list.values();
    let sign_dcg = discounted_sum(
        |i| {
            let var = u_v(list, i, config.variance_mode).expect("position in range");
            prefix_sign(values, i) * var
        },
        values.len(),
        config.step,
    );
    let sign = if sign_dcg < 0.0 { -1.0 } else { 1.0 };
    Ok(sign * magnitude.value)
}

/// How to combine per-axis DUO scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultiAxisAggregate {
    /// Largest per-axis bias.
    Max,
    /// All per-axis values.
    PerAxis,
}

/// Result of [`multi_axis_duo`].
#[derive(Debug, Clone, PartialEq)]
pub enum MultiAxisDuo {
    Max(MetricValue),
    PerAxis(Vec<MetricValue>),
}

/// DUO computed independently per polarization axis of m-dimensional
/// polarity vectors, optionally aggregated by maximum.
pub fn multi_axis_duo(
    vectors: &[Vec<f64>],
    config: &MetricConfig,
    aggregate: MultiAxisAggregate,
) -> Result<MultiAxisDuo> {
    config.validate()?;
    if vectors.is_empty() {
        return Err(Error::validation("multi-axis polarity list must be non-empty"));
    }
    let m = vectors[0].len();
    if m == 0 {
        return Err(Error::validation("polarity vectors must have at least one axis"));
    }
    if let Some(bad) = vectors.iter().find(|v| v.len() != m) {
        return Err(Error::validation(format!(
            "ragged polarity vectors: expected {m} axes, found {}",
            bad.len()
        )));
    }
    let per_axis: Vec<MetricValue> = (0..m)
        .map(|axis| {
            let column: Vec<f64> = vectors.iter().map(|v| v[axis]).collect();
            duo(&PolarityList::from_scores(column)?, config)
        })
        .collect::<Result<_>>()?;
    Ok(match aggregate {
        MultiAxisAggregate::PerAxis => MultiAxisDuo::PerAxis(per_axis),
        MultiAxisAggregate::Max => {
            let best = per_axis
                .into_iter()
                .max_by(|a, b| a.value.total_cmp(&b.value))
                .expect("at least one axis");
            MultiAxisDuo::Max(best)
        }
    })
}

/// Relevance nDCG@k with the conventional log2(i+1) discount and ideal-DCG
/// normalization. Unjudged documents count as grade 0; a query with no
/// positively judged documents scores 0.
pub fn relevance_ndcg_at_k(ranking: &Ranking, qrels: &Qrels, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let Some(judged) = qrels.judged(&ranking.query_id) else {
        return 0.0;
    };
    let mut ideal: Vec<u32> = judged.values().copied().collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg: f64 = ideal
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &g)| g as f64 / ((i + 2) as f64).log2())
        .sum();
    if idcg == 0.0 {
        return 0.0;
    }
    let dcg: f64 = ranking
        .entries
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, (doc_id, _))| {
            let grade = judged.get(doc_id).copied().unwrap_or(0);
            grade as f64 / ((i + 2) as f64).log2()
        })
        .sum();
    dcg / idcg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(values: &[f64]) -> PolarityList {
        PolarityList::from_scores(values.to_vec()).unwrap()
    }

    fn groups(labels: &[bool]) -> PolarityList {
        PolarityList::from_groups(labels.to_vec()).unwrap()
    }

    const GROUPED: [f64; 6] = [1.0, 1.0, 1.0, -1.0, -1.0, -1.0];
    const ALTERNATING: [f64; 6] = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0];

    #[test]
    fn discounted_sum_unit_utility() {
        // 1/log2(2) + 1/log2(3) + 1/log2(4)
        let expected = 1.0 + 1.0 / 3f64.log2() + 0.5;
        let got = discounted_sum(|_| 1.0, 4, 1);
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 2.13093).abs() < 1e-5);
    }

    #[test]
    fn discounted_sum_zero_utility() {
        assert_eq!(discounted_sum(|_| 0.0, 4, 1), 0.0);
    }

    #[test]
    fn discounted_sum_step_two_positions() {
        // Positions {2, 4}: u(2)/1 + u(4)/2.
        let got = discounted_sum(|i| i as f64, 4, 2);
        assert!((got - (2.0 / 1.0 + 4.0 / 2.0)).abs() < 1e-12);
        // Position 1 is never evaluated even at step 1.
        let got1 = discounted_sum(|i| if i == 1 { 100.0 } else { 0.0 }, 4, 1);
        assert_eq!(got1, 0.0);
    }

    #[test]
    fn u_nd_examples() {
        let list = groups(&[true, true, false, false]);
        assert!((u_nd(&list, 2).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(u_nd(&list, 4).unwrap(), 0.0);
        let all = groups(&[true, true, true]);
        assert_eq!(u_nd(&all, 2).unwrap(), 0.0);
    }

    #[test]
    fn u_nd_requires_group_labels() {
        let list = scores(&[1.0, -1.0]);
        assert!(u_nd(&list, 1).is_err());
    }

    #[test]
    fn u_kl_examples() {
        let list = groups(&[true, true, false, false]);
        assert!((u_kl(&list, 2).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert_eq!(u_kl(&list, 4).unwrap(), 0.0);
        let expected = (2.0 / 3.0) * (4.0f64 / 3.0).ln() + (1.0 / 3.0) * (2.0f64 / 3.0).ln();
        assert!((u_kl(&list, 3).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.056633).abs() < 1e-6);
    }

    #[test]
    fn u_kl_degenerate_population() {
        let list = groups(&[true, true]);
        assert!(matches!(u_kl(&list, 1), Err(crate::Error::Degenerate(_))));
    }

    #[test]
    fn u_v_figure_values() {
        let list = scores(&GROUPED);
        assert_eq!(u_v(&list, 3, VarianceMode::PrefixMean).unwrap(), 0.0);
        assert!((u_v(&list, 6, VarianceMode::PrefixMean).unwrap() - 1.0).abs() < 1e-12);
        assert!((u_v(&list, 6, VarianceMode::GlobalMean).unwrap() - 1.0).abs() < 1e-12);
        // The two modes differ on the same prefix.
        assert!((u_v(&list, 3, VarianceMode::GlobalMean).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rnd_brute_force_anchors() {
        let cfg = MetricConfig::default();
        let grouped = rnd(&groups(&[true, true, false, false]), &cfg).unwrap();
        assert!(!grouped.degenerate);
        assert!((grouped.value - 1.0).abs() < 1e-12);
        let mixed = rnd(&groups(&[true, false, true, false]), &cfg).unwrap();
        assert!((mixed.value - 0.0).abs() < 1e-12);
    }

    #[test]
    fn rnd_single_group_degenerate() {
        let cfg = MetricConfig::default();
        let v = rnd(&groups(&[true, true, true, true]), &cfg).unwrap();
        assert!(v.degenerate);
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn rkl_single_group_degenerate() {
        let cfg = MetricConfig::default();
        let v = rkl(&groups(&[false, false, false]), &cfg).unwrap();
        assert!(v.degenerate);
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn duo_figure_anchors() {
        let cfg = MetricConfig::default();
        let biased = duo(&scores(&GROUPED), &cfg).unwrap();
        assert!((biased.value - 1.0).abs() < 1e-9, "grouped DUO = {}", biased.value);
        let balanced = duo(&scores(&ALTERNATING), &cfg).unwrap();
        assert!((balanced.value - 0.0).abs() < 1e-9, "alternating DUO = {}", balanced.value);
    }

    #[test]
    fn duo_two_docs_degenerate() {
        let cfg = MetricConfig::default();
        let v = duo(&scores(&[1.0, -1.0]), &cfg).unwrap();
        assert!(v.degenerate);
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn signed_duo_direction() {
        let cfg = MetricConfig::default();
        assert!((signed_duo(&scores(&GROUPED), &cfg).unwrap() - 1.0).abs() < 1e-9);
        let mirrored: Vec<f64> = GROUPED.iter().map(|v| -v).collect();
        assert!((signed_duo(&scores(&mirrored), &cfg).unwrap() + 1.0).abs() < 1e-9);
        let balanced = signed_duo(&scores(&ALTERNATING), &cfg).unwrap();
        assert_eq!(balanced.abs(), 0.0);
    }

    #[test]
    fn signed_duo_magnitude_matches_duo() {
        let cfg = MetricConfig::default();
        for values in [
            vec![0.3, -0.7, 1.2, -0.1, 0.4],
            vec![-2.0, -1.0, -3.0, 1.0],
            vec![0.5, 0.25, -0.125, 0.75, -1.5, 1.0],
        ] {
            let list = scores(&values);
            let m = duo(&list, &cfg).unwrap().value;
            let s = signed_duo(&list, &cfg).unwrap();
            assert!((s.abs() - m).abs() < 1e-12);
        }
    }

    #[test]
    fn multi_axis_matches_scalar_duo_for_m1() {
        let cfg = MetricConfig::default();
        let vectors: Vec<Vec<f64>> = GROUPED.iter().map(|&v| vec![v]).collect();
        let MultiAxisDuo::Max(max) = multi_axis_duo(&vectors, &cfg, MultiAxisAggregate::Max).unwrap()
        else {
            panic!("requested max");
        };
        let scalar = duo(&scores(&GROUPED), &cfg).unwrap();
        assert_eq!(max, scalar);
    }

    #[test]
    fn multi_axis_per_axis_and_max() {
        let cfg = MetricConfig::default();
        // axis 1 grouped, axis 2 alternating
        let vectors = vec![
            vec![1.0, 1.0],
            vec![1.0, -1.0],
            vec![-1.0, 1.0],
            vec![-1.0, -1.0],
        ];
        let MultiAxisDuo::PerAxis(per) =
            multi_axis_duo(&vectors, &cfg, MultiAxisAggregate::PerAxis).unwrap()
        else {
            panic!("requested per-axis");
        };
        assert!((per[0].value - 1.0).abs() < 1e-9);
        assert!((per[1].value - 0.0).abs() < 1e-9);
        let MultiAxisDuo::Max(max) = multi_axis_duo(&vectors, &cfg, MultiAxisAggregate::Max).unwrap()
        else {
            panic!("requested max");
        };
        assert!((max.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn multi_axis_degenerate_axis_scores_zero() {
        let cfg = MetricConfig::default();
        let vectors = vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![-1.0, 0.0], vec![-1.0, 0.0]];
        let MultiAxisDuo::PerAxis(per) =
            multi_axis_duo(&vectors, &cfg, MultiAxisAggregate::PerAxis).unwrap()
        else {
            panic!("requested per-axis");
        };
        assert!(per[1].degenerate);
        assert_eq!(per[1].value, 0.0);
    }

    #[test]
    fn multi_axis_ragged_rejected() {
        let cfg = MetricConfig::default();
        let vectors = vec![vec![1.0, 2.0], vec![1.0]];
        assert!(multi_axis_duo(&vectors, &cfg, MultiAxisAggregate::Max).is_err());
    }

    fn toy_ranking(doc_ids: &[&str]) -> Ranking {
        Ranking::new(
            "q1".into(),
            doc_ids.iter().map(|d| (d.to_string(), 1.0)).collect(),
            "sys".into(),
        )
        .unwrap()
    }

    #[test]
    fn ndcg_single_relevant_doc() {
        let mut qrels = Qrels::default();
        qrels.insert("q1".into(), "rel".into(), 1);
        // Relevant doc first: perfect.
        let r = toy_ranking(&["rel", "x", "y"]);
        assert!((relevance_ndcg_at_k(&r, &qrels, 10) - 1.0).abs() < 1e-12);
        // Relevant doc second: 1/log2(3).
        let r = toy_ranking(&["x", "rel", "y"]);
        let got = relevance_ndcg_at_k(&r, &qrels, 10);
        assert!((got - 1.0 / 3f64.log2()).abs() < 1e-12);
        assert!((got - 0.63093).abs() < 1e-5);
        // No relevant docs retrieved.
        let r = toy_ranking(&["x", "y"]);
        assert_eq!(relevance_ndcg_at_k(&r, &qrels, 10), 0.0);
    }

    #[test]
    fn ndcg_unjudged_query_scores_zero() {
        let qrels = Qrels::default();
        let r = toy_ranking(&["a"]);
        assert_eq!(relevance_ndcg_at_k(&r, &qrels, 10), 0.0);
    }

    #[test]
    fn ndcg_perfect_iff_grade_sorted_prefix() {
        let mut qrels = Qrels::default();
        qrels.insert("q1".into(), "a".into(), 2);
        qrels.insert("q1".into(), "b".into(), 1);
        qrels.insert("q1".into(), "c".into(), 0);
        assert!((relevance_ndcg_at_k(&toy_ranking(&["a", "b", "c"]), &qrels, 3) - 1.0).abs() < 1e-12);
        assert!(relevance_ndcg_at_k(&toy_ranking(&["b", "a", "c"]), &qrels, 3) < 1.0);
    }
}
