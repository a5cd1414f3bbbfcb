//! Min/max of the discounted utility sum over permutations of a ranking's
//! labels: exact by enumeration for short rankings, seeded local search
//! otherwise.
//!
//! Every search starts from the input ordering and only ever improves on it
//! strictly, so the input's own discounted sum always lies inside
//! `[min_dcg, max_dcg]` and normalized metric values stay in `[0, 1]`.

use std::cmp::Ordering;
use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::metrics::{MetricConfig, VarianceMode};
use crate::Result;

/// Largest ranking length enumerated exhaustively (8! = 40,320 orderings).
pub const EXACT_LIMIT: usize = 8;

/// Which prefix utility the discounted sum aggregates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UtilityKind {
    /// Prefix variance of polarity scores.
    Variance(VarianceMode),
    /// Absolute difference between prefix and population group proportions.
    GroupDifference,
    /// Bernoulli KL divergence between prefix and population proportions.
    /// The population proportion must lie strictly inside (0, 1); callers
    /// flag the boundary cases as degenerate before searching.
    GroupDivergence,
}

/// Extrema of the discounted sum over label permutations.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremaResult {
    pub min_dcg: f64,
    pub max_dcg: f64,
    /// True when produced by full enumeration.
    pub exact: bool,
    /// Ordering attaining `min_dcg`: `argmin[k]` is the input position of
    /// the label placed at rank k+1.
    pub argmin: Vec<usize>,
    /// Ordering attaining `max_dcg`.
    pub argmax: Vec<usize>,
}

/// Evaluates the discounted sum for reorderings of one label multiset.
///
/// Population statistics (global mean, group proportion) are computed once
/// from the input, so every permutation is scored against identical
/// constants regardless of float summation order.
#[derive(Debug, Clone)]
pub(crate) struct DcgEvaluator {
    kind: UtilityKind,
    /// 1/log2(i) at evaluated positions, 0.0 elsewhere; index 0 = rank 1.
    weights: Vec<f64>,
    global_mean: f64,
    population_frac: f64,
}

impl DcgEvaluator {
    pub fn new(values: &[f64], kind: UtilityKind, step: usize) -> Self {
        let n = values.len();
        debug_assert!(step >= 1);
        let weights = (1..=n)
            .map(|i| {
                if i >= 2 && i % step == 0 {
                    1.0 / (i as f64).log2()
                } else {
                    0.0
                }
            })
            .collect();
        let global_mean = if n == 0 { 0.0 } else { values.iter().sum::<f64>() / n as f64 };
        let population_frac = if n == 0 {
            0.0
        } else {
            values.iter().filter(|v| **v != 0.0).count() as f64 / n as f64
        };
        DcgEvaluator { kind, weights, global_mean, population_frac }
    }

    /// Discounted sum of the sequence in the given order.
    pub fn dcg(&self, seq: &[f64]) -> f64 {
        debug_assert_eq!(seq.len(), self.weights.len());
        let mut total = 0.0;
        match self.kind {
            UtilityKind::Variance(VarianceMode::PrefixMean) => {
                // Welford: numerically stable prefix variances in one pass.
                let mut mean = 0.0;
                let mut m2 = 0.0;
                for (i, &x) in seq.iter().enumerate() {
                    let delta = x - mean;
                    mean += delta / (i + 1) as f64;
                    m2 += delta * (x - mean);
                    let w = self.weights[i];
                    if w != 0.0 {
                        total += w * (m2 / (i + 1) as f64);
                    }
                }
            }
            UtilityKind::Variance(VarianceMode::GlobalMean) => {
                let mut sq = 0.0;
                for (i, &x) in seq.iter().enumerate() {
                    let d = x - self.global_mean;
                    sq += d * d;
                    let w = self.weights[i];
                    if w != 0.0 {
                        total += w * (sq / (i + 1) as f64);
                    }
                }
            }
            UtilityKind::GroupDifference => {
                let mut members = 0usize;
                for (i, &x) in seq.iter().enumerate() {
                    if x != 0.0 {
                        members += 1;
                    }
                    let w = self.weights[i];
                    if w != 0.0 {
                        let frac = members as f64 / (i + 1) as f64;
                        total += w * (frac - self.population_frac).abs();
                    }
                }
            }
            UtilityKind::GroupDivergence => {
                let mut members = 0usize;
                for (i, &x) in seq.iter().enumerate() {
                    if x != 0.0 {
                        members += 1;
                    }
                    let w = self.weights[i];
                    if w != 0.0 {
                        let frac = members as f64 / (i + 1) as f64;
                        total += w * bernoulli_kl(frac, self.population_frac);
                    }
                }
            }
        }
        total
    }

    fn dcg_perm(&self, values: &[f64], perm: &[usize], buf: &mut Vec<f64>) -> f64 {
        buf.clear();
        buf.extend(perm.iter().map(|&p| values[p]));
        self.dcg(buf)
    }
}

/// KL(Bernoulli(p) || Bernoulli(q)) in nats, with the 0*ln(0) = 0 convention.
/// Requires q in (0, 1).
pub(crate) fn bernoulli_kl(p: f64, q: f64) -> f64 {
    debug_assert!(q > 0.0 && q < 1.0);
    let mut kl = 0.0;
    if p > 0.0 {
        kl += p * (p / q).ln();
    }
    if p < 1.0 {
        kl += (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln();
    }
    kl
}

/// Discounted sum of the input in its given order.
pub fn dcg_of(values: &[f64], kind: UtilityKind, step: usize) -> f64 {
    DcgEvaluator::new(values, kind, step).dcg(values)
}

/// Lexicographic next permutation under total f64 ordering. Enumerates each
/// distinct ordering of a multiset exactly once when started from sorted
/// ascending order.
fn next_permutation(arr: &mut [f64]) -> bool {
    let n = arr.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && arr[i - 1].total_cmp(&arr[i]) != Ordering::Less {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while arr[j].total_cmp(&arr[i - 1]) != Ordering::Greater {
        j -= 1;
    }
    arr.swap(i - 1, j);
    arr[i..].reverse();
    true
}

/// Map a value sequence back to input positions, assigning duplicate values
/// in ascending input order (the stable tie-break).
fn stable_assignment(values: &[f64], seq: &[f64]) -> Vec<usize> {
    let mut pool: HashMap<u64, Vec<usize>> = HashMap::new();
    for (i, v) in values.iter().enumerate().rev() {
        pool.entry(v.to_bits()).or_default().push(i);
    }
    seq.iter()
        .map(|v| {
            pool.get_mut(&v.to_bits())
                .and_then(|idxs| idxs.pop())
                .expect("sequence is a permutation of the input values")
        })
        .collect()
}

fn identity(n: usize) -> Vec<usize> {
    (0..n).collect()
}

fn validate_finite(values: &[f64]) -> Result<()> {
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::validation(format!("non-finite label {v}")));
    }
    Ok(())
}

/// Exact extrema by enumeration of all distinct orderings of the multiset.
///
/// Refuses inputs longer than [`EXACT_LIMIT`]; use [`approx_extrema`] there.
pub fn exact_extrema(
    values: &[f64],
    kind: UtilityKind,
    config: &MetricConfig,
) -> Result<ExtremaResult> {
    config.validate()?;
    validate_finite(values)?;
    let n = values.len();
    if n == 0 {
        return Err(Error::validation("extrema of an empty label list"));
    }
    if n > EXACT_LIMIT {
        return Err(Error::ExactLimitExceeded { n, limit: EXACT_LIMIT });
    }

    let evaluator = DcgEvaluator::new(values, kind, config.step);
    let input_dcg = evaluator.dcg(values);
    let mut min_dcg = input_dcg;
    let mut max_dcg = input_dcg;
    let mut min_seq: Option<Vec<f64>> = None;
    let mut max_seq: Option<Vec<f64>> = None;

    let mut seq: Vec<f64> = values.to_vec();
    seq.sort_by(|a, b| a.total_cmp(b));
    loop {
        let dcg = evaluator.dcg(&seq);
        if dcg < min_dcg {
            min_dcg = dcg;
            min_seq = Some(seq.clone());
        }
        if dcg > max_dcg {
            max_dcg = dcg;
            max_seq = Some(seq.clone());
        }
        if !next_permutation(&mut seq) {
            break;
        }
    }

    Ok(ExtremaResult {
        min_dcg,
        max_dcg,
        exact: true,
        argmin: min_seq.map_or_else(|| identity(n), |s| stable_assignment(values, &s)),
        argmax: max_seq.map_or_else(|| identity(n), |s| stable_assignment(values, &s)),
    })
}

/// Seeded stochastic search for the extrema of longer rankings.
///
/// The candidate pool holds the input order, its reverse, both polarity
/// sorts, the two perfect-alternation interleavings, and
/// `config.approx_restarts` seeded shuffles. Each candidate is refined by
/// first-improvement pairwise-swap hill climbing toward both objectives;
/// the reported extrema cover every ordering visited along the way. The
/// result is a deterministic function of `(values, config.seed)`.
pub fn approx_extrema(
    values: &[f64],
    kind: UtilityKind,
    config: &MetricConfig,
) -> Result<ExtremaResult> {
    config.validate()?;
    validate_finite(values)?;
    let n = values.len();
    if n < 2 {
        return Err(Error::validation("approximate extrema need at least 2 labels"));
    }

    let evaluator = DcgEvaluator::new(values, kind, config.step);
    let input_dcg = evaluator.dcg(values);
    let mut search = Search {
        evaluator: &evaluator,
        values,
        min_dcg: input_dcg,
        max_dcg: input_dcg,
        argmin: identity(n),
        argmax: identity(n),
        buf: Vec::with_capacity(n),
    };

    let mut by_value = identity(n);
    by_value.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));

    let mut candidates: Vec<Vec<usize>> = Vec::with_capacity(6 + config.approx_restarts);
    candidates.push(identity(n));
    candidates.push((0..n).rev().collect());
    candidates.push(by_value.clone());
    candidates.push(by_value.iter().rev().copied().collect());
    candidates.push(alternation(&by_value, true));
    candidates.push(alternation(&by_value, false));

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for _ in 0..config.approx_restarts {
        let mut perm = identity(n);
        // Fisher-Yates on the seeded stream.
        for i in (1..n).rev() {
            let j = rng.gen_range(0..=i);
            perm.swap(i, j);
        }
        candidates.push(perm);
    }

    for candidate in candidates {
        search.climb(candidate.clone(), Direction::Min);
        search.climb(candidate, Direction::Max);
    }

    Ok(ExtremaResult {
        min_dcg: search.min_dcg,
        max_dcg: search.max_dcg,
        exact: false,
        argmin: search.argmin,
        argmax: search.argmax,
    })
}

/// Dispatch on the configured normalization mode.
pub fn extrema(values: &[f64], kind: UtilityKind, config: &MetricConfig) -> Result<ExtremaResult> {
    match config.normalization {
        crate::metrics::Normalization::Exact => exact_extrema(values, kind, config),
        crate::metrics::Normalization::Approximate => approx_extrema(values, kind, config),
    }
}

/// Interleave the sorted-by-value positions from the two ends:
/// high, low, next-high, next-low, ... (or starting low).
fn alternation(by_value: &[usize], high_first: bool) -> Vec<usize> {
    let n = by_value.len();
    let mut out = Vec::with_capacity(n);
    let mut lo = 0usize;
    let mut hi = n;
    let mut take_high = high_first;
    while lo < hi {
        if take_high {
            hi -= 1;
            out.push(by_value[hi]);
        } else {
            out.push(by_value[lo]);
            lo += 1;
        }
        take_high = !take_high;
    }
    out
}

#[derive(Clone, Copy)]
enum Direction {
    Min,
    Max,
}

struct Search<'a> {
    evaluator: &'a DcgEvaluator,
    values: &'a [f64],
    min_dcg: f64,
    max_dcg: f64,
    argmin: Vec<usize>,
    argmax: Vec<usize>,
    buf: Vec<f64>,
}

impl Search<'_> {
    fn observe(&mut self, dcg: f64, perm: &[usize]) {
        if dcg < self.min_dcg {
            self.min_dcg = dcg;
            self.argmin = perm.to_vec();
        }
        if dcg > self.max_dcg {
            self.max_dcg = dcg;
            self.argmax = perm.to_vec();
        }
    }

    /// First-improvement pairwise-swap hill climbing; every evaluated
    /// ordering feeds the global extrema.
    fn climb(&mut self, mut perm: Vec<usize>, direction: Direction) {
        let n = perm.len();
        let mut current = self.evaluator.dcg_perm(self.values, &perm, &mut self.buf);
        self.observe(current, &perm);
        loop {
            let mut improved = false;
            'scan: for i in 0..n - 1 {
                for j in i + 1..n {
                    perm.swap(i, j);
                    let dcg = self.evaluator.dcg_perm(self.values, &perm, &mut self.buf);
                    self.observe(dcg, &perm);
                    let better = match direction {
                        Direction::Min => dcg < current,
                        Direction::Max => dcg > current,
                    };
                    if better {
                        current = dcg;
                        improved = true;
                        break 'scan;
                    }
                    perm.swap(i, j);
                }
            }
            if !improved {
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{MetricConfig, Normalization};
    use proptest::prelude::*;

    fn cfg() -> MetricConfig {
        MetricConfig::default()
    }

    fn apply(values: &[f64], perm: &[usize]) -> Vec<f64> {
        perm.iter().map(|&p| values[p]).collect()
    }

    #[test]
    fn two_opposed_scores_have_equal_extrema() {
        let res = exact_extrema(&[1.0, -1.0], UtilityKind::Variance(VarianceMode::PrefixMean), &cfg())
            .unwrap();
        assert_eq!(res.min_dcg, res.max_dcg);
        assert!(res.exact);
    }

    #[test]
    fn grouped_scores_min_at_input_max_at_alternation() {
        let grouped = [1.0, 1.0, 1.0, -1.0, -1.0, -1.0];
        let kind = UtilityKind::Variance(VarianceMode::PrefixMean);
        let res = exact_extrema(&grouped, kind, &cfg()).unwrap();
        // Grouped input already attains the minimum, so the stable search
        // keeps the identity ordering.
        assert_eq!(res.min_dcg, dcg_of(&grouped, kind, 1));
        assert_eq!(res.argmin, vec![0, 1, 2, 3, 4, 5]);
        // The alternating order attains the maximum.
        let alternating = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        assert!((res.max_dcg - dcg_of(&alternating, kind, 1)).abs() < 1e-12);
        let attained = apply(&grouped, &res.argmax);
        assert_eq!(dcg_of(&attained, kind, 1), res.max_dcg);
    }

    #[test]
    fn refuses_above_exact_limit() {
        let values = vec![0.0; 9];
        let err = exact_extrema(&values, UtilityKind::GroupDifference, &cfg()).unwrap_err();
        assert!(matches!(err, crate::Error::ExactLimitExceeded { n: 9, limit: 8 }));
    }

    #[test]
    fn constant_utilities_collapse() {
        let values = vec![0.7; 12];
        let res =
            approx_extrema(&values, UtilityKind::Variance(VarianceMode::PrefixMean), &cfg()).unwrap();
        assert_eq!(res.min_dcg, 0.0);
        assert_eq!(res.max_dcg, 0.0);
        assert!(!res.exact);
    }

    #[test]
    fn step_two_discounts_even_positions_only() {
        // u == 1 at every position: n=4, step=2 -> 1/log2(2) + 1/log2(4).
        let ev = DcgEvaluator::new(&[1.0, 1.0, 1.0, 1.0], UtilityKind::GroupDifference, 2);
        assert_eq!(ev.weights, vec![0.0, 1.0, 0.0, 0.5]);
    }

    #[test]
    fn deterministic_given_seed() {
        let values: Vec<f64> = (0..12).map(|i| ((i * 37 % 11) as f64) - 5.0).collect();
        let kind = UtilityKind::Variance(VarianceMode::PrefixMean);
        let a = approx_extrema(&values, kind, &cfg()).unwrap();
        let b = approx_extrema(&values, kind, &cfg()).unwrap();
        assert_eq!(a, b);
        let mut other = cfg();
        other.seed = 7;
        let c = approx_extrema(&values, kind, &other).unwrap();
        // Same search quality is not guaranteed, but bounds still bracket input.
        assert!(c.min_dcg <= dcg_of(&values, kind, 1));
    }

    proptest! {
        #[test]
        fn input_always_bracketed(values in proptest::collection::vec(-3.0f64..3.0, 2..8)) {
            for kind in [
                UtilityKind::Variance(VarianceMode::PrefixMean),
                UtilityKind::Variance(VarianceMode::GlobalMean),
            ] {
                let input = dcg_of(&values, kind, 1);
                let exact = exact_extrema(&values, kind, &cfg()).unwrap();
                prop_assert!(exact.min_dcg <= input && input <= exact.max_dcg);
                let approx = approx_extrema(&values, kind, &cfg()).unwrap();
                prop_assert!(approx.min_dcg <= input && input <= approx.max_dcg);
                // Approximate extrema range over a subset of permutations.
                prop_assert!(approx.min_dcg >= exact.min_dcg - 1e-12);
                prop_assert!(approx.max_dcg <= exact.max_dcg + 1e-12);
                // The reported argmin/argmax reproduce the reported bounds.
                let min_seq = apply(&values, &exact.argmin);
                prop_assert!((dcg_of(&min_seq, kind, 1) - exact.min_dcg).abs() < 1e-12);
                let max_seq = apply(&values, &exact.argmax);
                prop_assert!((dcg_of(&max_seq, kind, 1) - exact.max_dcg).abs() < 1e-12);
            }
        }

        #[test]
        fn exact_extrema_are_permutation_symmetric(
            mut values in proptest::collection::vec(-2.0f64..2.0, 2..7),
            rot in 0usize..6,
        ) {
            let kind = UtilityKind::Variance(VarianceMode::PrefixMean);
            let a = exact_extrema(&values, kind, &cfg()).unwrap();
            let rot = rot % values.len();
            values.rotate_left(rot);
            let b = exact_extrema(&values, kind, &cfg()).unwrap();
            prop_assert!((a.min_dcg - b.min_dcg).abs() < 1e-12);
            prop_assert!((a.max_dcg - b.max_dcg).abs() < 1e-12);
        }
    }
}
