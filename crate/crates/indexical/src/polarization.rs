//! Per-query polarization axes: PCA over reference embeddings, projection to
//! scalar (or vector) polarity scores, spurious-direction removal, and
//! partition accuracy against gold perspective labels.
//!
//! Axes are fitted on a query's labeled reference documents and then reused
//! to project any document, so natural and synthetic rankings are scored on
//! the same scale. All fitting is deterministic: power iteration with a
//! fixed start vector and a fixed sign convention, so repeated audits and
//! concurrent per-query fits produce identical axes.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{EmbeddingStore, EmbeddingVector};
use crate::error::Error;
use crate::Result;

/// Power-iteration convergence tolerance on the direction change.
const POWER_TOL: f64 = 1e-10;
/// Power-iteration cap.
const POWER_MAX_ITERS: usize = 10_000;
/// Relative variance below which a covariance is treated as zero.
const VARIANCE_FLOOR: f64 = 1e-24;

/// A fitted polarization axis: reference mean plus the unit principal
/// direction of the centered reference embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarizationAxis {
    pub mean: Vec<f64>,
    /// Unit vector; its first nonzero component is positive.
    pub direction: Vec<f64>,
    /// Variance of the reference projections along `direction`.
    pub eigenvalue: f64,
    /// Ids of the reference embeddings the axis was fitted on.
    pub fitted_on: Vec<String>,
}

impl PolarizationAxis {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Top-m orthonormal principal directions with non-increasing eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiAxis {
    pub mean: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
}

impl MultiAxis {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn axes(&self) -> usize {
        self.directions.len()
    }
}

/// Distractor embeddings partitioned by the perspective whose style they
/// emulate (without endorsing it); the seed for the spurious bias direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistractorSets {
    pub d1: Vec<String>,
    pub d2: Vec<String>,
}

impl DistractorSets {
    pub fn new(d1: Vec<String>, d2: Vec<String>) -> Result<Self> {
        if d1.is_empty() || d2.is_empty() {
            return Err(Error::validation("both distractor sets must be non-empty"));
        }
        for id in &d1 {
            if d2.contains(id) {
                return Err(Error::validation(format!("distractor sets overlap on '{id}'")));
            }
        }
        Ok(DistractorSets { d1, d2 })
    }

    /// Load from a JSON file `{"d1": [ids], "d2": [ids]}`.
    pub fn load(path: &Path) -> Result<Self> {
        let raw: DistractorSets = serde_json::from_reader(File::open(path)?)
            .map_err(|e| Error::validation(format!("{}: {e}", path.display())))?;
        Self::new(raw.d1, raw.d2)
    }
}

fn dims_of(reference: &[EmbeddingVector]) -> Result<usize> {
    let d = reference[0].values.len();
    for v in reference {
        if v.values.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: v.values.len(),
                context: format!("embedding '{}' vs '{}'", v.id, reference[0].id),
            });
        }
    }
    Ok(d)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Fix the sign so the first nonzero component is positive.
fn canonical_sign(direction: &mut [f64]) {
    if let Some(first) = direction.iter().find(|c| **c != 0.0) {
        if *first < 0.0 {
            for c in direction.iter_mut() {
                *c = -*c;
            }
        }
    }
}

/// Deterministic deflated power iteration for the top-m eigenpairs of the
/// population covariance (1/n sum of outer products) of `centered`.
///
/// The operator is applied matrix-free. Each stage starts from the first
/// centered input with a nonzero residual outside the span of the directions
/// found so far; exhausting the inputs means the residual covariance is
/// degenerate.
fn top_eigenpairs(
    centered: &[Vec<f64>],
    scale_sq: f64,
    m: usize,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let n = centered.len();
    let floor = VARIANCE_FLOOR * scale_sq.max(1.0);
    let mut directions: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut eigenvalues: Vec<f64> = Vec::with_capacity(m);

    let orthogonalize = |v: &mut Vec<f64>, dirs: &[Vec<f64>]| {
        for dir in dirs {
            let proj = dot(v, dir);
            for (c, d) in v.iter_mut().zip(dir) {
                *c -= proj * d;
            }
        }
    };

    for stage in 0..m {
        // Fixed deterministic start: first centered input with mass outside
        // the already-found subspace.
        let mut start = None;
        for c in centered {
            let mut candidate = c.clone();
            orthogonalize(&mut candidate, &directions);
            if dot(&candidate, &candidate) > floor {
                start = Some(candidate);
                break;
            }
        }
        let Some(mut v) = start else {
            return Err(Error::Degenerate(format!(
                "residual covariance is zero before axis {} of {m}",
                stage + 1
            )));
        };
        let v_norm = norm(&v);
        for c in v.iter_mut() {
            *c /= v_norm;
        }

        for _ in 0..POWER_MAX_ITERS {
            // w = C v, deflated against found directions.
            let mut w = vec![0.0; v.len()];
            for c in centered {
                let coeff = dot(c, &v) / n as f64;
                for (wi, ci) in w.iter_mut().zip(c) {
                    *wi += coeff * ci;
                }
            }
            orthogonalize(&mut w, &directions);
            let w_norm = norm(&w);
            if w_norm * w_norm <= floor {
                return Err(Error::Degenerate(format!(
                    "residual covariance is zero before axis {} of {m}",
                    stage + 1
                )));
            }
            for c in w.iter_mut() {
                *c /= w_norm;
            }
            let delta: f64 = w.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            v = w;
            if delta < POWER_TOL {
                break;
            }
        }
        // Variance of projections along the converged unit direction; this
        // is the eigenvalue estimate reported to callers.
        let projected_variance = centered.iter().map(|c| dot(c, &v).powi(2)).sum::<f64>() / n as f64;
        canonical_sign(&mut v);
        directions.push(v);
        eigenvalues.push(projected_variance);
    }
    Ok((directions, eigenvalues))
}

struct Centered {
    mean: Vec<f64>,
    centered: Vec<Vec<f64>>,
    scale_sq: f64,
}

fn center(reference: &[EmbeddingVector]) -> Result<Centered> {
    if reference.len() < 2 {
        return Err(Error::validation(format!(
            "axis fitting needs at least 2 reference vectors, got {}",
            reference.len()
        )));
    }
    let d = dims_of(reference)?;
    let n = reference.len() as f64;
    let mut mean = vec![0.0; d];
    for v in reference {
        for (m, x) in mean.iter_mut().zip(&v.values) {
            *m += x / n;
        }
    }
    let centered: Vec<Vec<f64>> = reference
        .iter()
        .map(|v| v.values.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();
    let scale_sq =
        reference.iter().map(|v| dot(&v.values, &v.values)).sum::<f64>() / n;
    let total_variance = centered.iter().map(|c| dot(c, c)).sum::<f64>() / n;
    if total_variance <= VARIANCE_FLOOR * scale_sq.max(1.0) {
        return Err(Error::Degenerate(
            "all reference vectors are identical; covariance is zero".into(),
        ));
    }
    Ok(Centered { mean, centered, scale_sq })
}

/// Fit the principal polarization axis of a reference set.
pub fn fit_axis(reference: &[EmbeddingVector]) -> Result<PolarizationAxis> {
    let c = center(reference)?;
    let (mut directions, eigenvalues) = top_eigenpairs(&c.centered, c.scale_sq, 1)?;
    Ok(PolarizationAxis {
        mean: c.mean,
        direction: directions.remove(0),
        eigenvalue: eigenvalues[0],
        fitted_on: reference.iter().map(|v| v.id.clone()).collect(),
    })
}

/// Fit the top-m orthonormal polarization axes; m = 1 agrees with
/// [`fit_axis`].
pub fn fit_multi_axis(reference: &[EmbeddingVector], m: usize) -> Result<MultiAxis> {
    if m < 1 {
        return Err(Error::validation("m must be >= 1"));
    }
    if m >= reference.len() {
        return Err(Error::validation(format!(
            "m = {m} must be less than the number of reference vectors ({})",
            reference.len()
        )));
    }
    let c = center(reference)?;
    let (directions, eigenvalues) = top_eigenpairs(&c.centered, c.scale_sq, m)?;
    Ok(MultiAxis { mean: c.mean, directions, eigenvalues })
}

/// Scalar polarization score: signed displacement from the reference mean
/// along the axis direction.
pub fn project(axis: &PolarizationAxis, x: &EmbeddingVector) -> Result<f64> {
    if x.values.len() != axis.dim() {
        return Err(Error::DimensionMismatch {
            expected: axis.dim(),
            found: x.values.len(),
            context: format!("projecting embedding '{}'", x.id),
        });
    }
    Ok(x.values
        .iter()
        .zip(&axis.mean)
        .zip(&axis.direction)
        .map(|((x, m), d)| (x - m) * d)
        .sum())
}

/// Vector polarization score along each axis of a [`MultiAxis`].
pub fn project_multi(axes: &MultiAxis, x: &EmbeddingVector) -> Result<Vec<f64>> {
    if x.values.len() != axes.dim() {
        return Err(Error::DimensionMismatch {
            expected: axes.dim(),
            found: x.values.len(),
            context: format!("projecting embedding '{}'", x.id),
        });
    }
    let centered: Vec<f64> = x.values.iter().zip(&axes.mean).map(|(x, m)| x - m).collect();
    Ok(axes.directions.iter().map(|dir| dot(&centered, dir)).collect())
}

/// Unit direction from the perspective-2 distractor mean to the
/// perspective-1 distractor mean.
pub fn bias_direction(store: &EmbeddingStore, sets: &DistractorSets) -> Result<Vec<f64>> {
    let mean_of = |ids: &[String]| -> Result<Vec<f64>> {
        let mut sum: Option<Vec<f64>> = None;
        for id in ids {
            let v = store
                .get(id)
                .ok_or_else(|| Error::validation(format!("distractor id '{id}' has no embedding")))?;
            match &mut sum {
                None => sum = Some(v.values.clone()),
                Some(acc) => {
                    if acc.len() != v.values.len() {
                        return Err(Error::DimensionMismatch {
                            expected: acc.len(),
                            found: v.values.len(),
                            context: format!("distractor '{id}'"),
                        });
                    }
                    for (a, x) in acc.iter_mut().zip(&v.values) {
                        *a += x;
                    }
                }
            }
        }
        let mut mean = sum.expect("sets validated non-empty");
        for a in mean.iter_mut() {
            *a /= ids.len() as f64;
        }
        Ok(mean)
    };

    let mu1 = mean_of(&sets.d1)?;
    let mu2 = mean_of(&sets.d2)?;
    let mut b: Vec<f64> = mu1.iter().zip(&mu2).map(|(a, c)| a - c).collect();
    let scale = norm(&mu1).max(norm(&mu2)).max(1.0);
    let b_norm = norm(&b);
    if b_norm <= 1e-12 * scale {
        return Err(Error::Degenerate("distractor set means are equal".into()));
    }
    for c in b.iter_mut() {
        *c /= b_norm;
    }
    Ok(b)
}

/// Remove the component of `x` along the unit bias direction `b`.
pub fn debias(x: &EmbeddingVector, b: &[f64]) -> Result<EmbeddingVector> {
    if x.values.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: b.len(),
            found: x.values.len(),
            context: format!("debiasing embedding '{}'", x.id),
        });
    }
    if (norm(b) - 1.0).abs() > 1e-9 {
        return Err(Error::validation("bias direction must be unit length"));
    }
    let coeff = dot(&x.values, b);
    Ok(EmbeddingVector {
        id: x.id.clone(),
        values: x.values.iter().zip(b).map(|(xi, bi)| xi - coeff * bi).collect(),
    })
}

/// Best accuracy of sign-of-score classification over the two assignments of
/// sign to perspective; always at least 0.5. A score of exactly 0 counts as
/// the non-negative class.
pub fn partition_accuracy(scores: &[f64], gold: &[u8]) -> Result<f64> {
    if scores.len() != gold.len() {
        return Err(Error::validation(format!(
            "scores/gold length mismatch: {} vs {}",
            scores.len(),
            gold.len()
        )));
    }
    if scores.is_empty() {
        return Err(Error::validation("partition accuracy of empty input"));
    }
    if let Some(bad) = gold.iter().find(|g| **g != 1 && **g != 2) {
        return Err(Error::validation(format!("gold label must be 1 or 2, got {bad}")));
    }
    let agree = scores
        .iter()
        .zip(gold)
        .filter(|(s, g)| (**s >= 0.0) == (**g == 1))
        .count() as f64
        / scores.len() as f64;
    Ok(agree.max(1.0 - agree))
}

/// Serialized axis cache record: `{"query_id","mean","direction","eigenvalue"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisRecord {
    pub query_id: String,
    pub mean: Vec<f64>,
    pub direction: Vec<f64>,
    pub eigenvalue: f64,
}

impl AxisRecord {
    pub fn new(query_id: String, axis: &PolarizationAxis) -> Self {
        AxisRecord {
            query_id,
            mean: axis.mean.clone(),
            direction: axis.direction.clone(),
            eigenvalue: axis.eigenvalue,
        }
    }
}

/// Write axis records as JSONL.
pub fn write_axes(records: &[AxisRecord], path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for record in records {
        serde_json::to_writer(&mut out, record).map_err(|e| Error::validation(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Load axis records from JSONL.
pub fn load_axes(path: &Path) -> Result<Vec<AxisRecord>> {
    let p = path.display().to_string();
    let mut records = Vec::new();
    for (lineno, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: AxisRecord = serde_json::from_str(&line)
            .map_err(|e| Error::parse(&p, lineno + 1, e.to_string()))?;
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(id: &str, values: &[f64]) -> EmbeddingVector {
        EmbeddingVector { id: id.to_string(), values: values.to_vec() }
    }

    #[test]
    fn symmetric_pair_axis() {
        let refs = vec![ev("a", &[1.0, 0.0]), ev("b", &[-1.0, 0.0])];
        let axis = fit_axis(&refs).unwrap();
        assert_eq!(axis.mean, vec![0.0, 0.0]);
        assert!((axis.direction[0] - 1.0).abs() < 1e-9);
        assert!(axis.direction[1].abs() < 1e-9);
        assert!((axis.eigenvalue - 1.0).abs() < 1e-9);
        assert_eq!(axis.fitted_on, vec!["a", "b"]);
    }

    #[test]
    fn diagonal_points_axis() {
        // Covariance [[2.5, 2.5], [2.5, 2.5]] * 2 -> top eigenvector (1,1)/sqrt(2),
        // eigenvalue 5 (closed-form 2x2 eigendecomposition).
        let refs = vec![
            ev("a", &[1.0, 1.0]),
            ev("b", &[-1.0, -1.0]),
            ev("c", &[2.0, 2.0]),
            ev("d", &[-2.0, -2.0]),
        ];
        let axis = fit_axis(&refs).unwrap();
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        assert!((axis.direction[0] - inv_sqrt2).abs() < 1e-8, "{:?}", axis.direction);
        assert!((axis.direction[1] - inv_sqrt2).abs() < 1e-8);
        assert!((axis.eigenvalue - 5.0).abs() < 1e-8);
    }

    #[test]
    fn identical_inputs_degenerate() {
        let refs = vec![ev("a", &[3.0, 3.0]), ev("b", &[3.0, 3.0])];
        assert!(matches!(fit_axis(&refs), Err(Error::Degenerate(_))));
    }

    #[test]
    fn fewer_than_two_inputs_rejected() {
        assert!(fit_axis(&[ev("a", &[1.0, 2.0])]).is_err());
    }

    #[test]
    fn eigenvalue_matches_projection_variance() {
        let refs: Vec<EmbeddingVector> = (0..7)
            .map(|i| {
                let t = i as f64;
                ev(&format!("r{i}"), &[t.sin() * 3.0, t.cos(), 0.25 * t, -t * t * 0.1])
            })
            .collect();
        let axis = fit_axis(&refs).unwrap();
        let projections: Vec<f64> = refs.iter().map(|v| project(&axis, v).unwrap()).collect();
        let mean = projections.iter().sum::<f64>() / projections.len() as f64;
        assert!(mean.abs() < 1e-9, "reference projections must center at 0, got {mean}");
        let variance =
            projections.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / projections.len() as f64;
        assert!(
            ((variance - axis.eigenvalue) / axis.eigenvalue).abs() < 1e-6,
            "variance {variance} vs eigenvalue {}",
            axis.eigenvalue
        );
        let unit = norm(&axis.direction);
        assert!((unit - 1.0).abs() < 1e-9);
    }

    #[test]
    fn projection_readoffs() {
        let axis = PolarizationAxis {
            mean: vec![0.0, 0.0],
            direction: vec![1.0, 0.0],
            eigenvalue: 1.0,
            fitted_on: vec![],
        };
        assert_eq!(project(&axis, &ev("x", &[2.0, 5.0])).unwrap(), 2.0);
        assert_eq!(project(&axis, &ev("m", &[0.0, 0.0])).unwrap(), 0.0);
        assert!(project(&axis, &ev("bad", &[1.0, 2.0, 3.0])).is_err());
    }

    #[test]
    fn projection_is_translation_equivariant() {
        let base: Vec<EmbeddingVector> = vec![
            ev("a", &[0.5, -1.0, 2.0]),
            ev("b", &[-0.25, 0.75, 1.0]),
            ev("c", &[1.5, 0.0, -2.0]),
            ev("d", &[-1.0, 0.5, 0.25]),
        ];
        let shift = [10.0, -3.0, 7.5];
        let shifted: Vec<EmbeddingVector> = base
            .iter()
            .map(|v| ev(&v.id, &v.values.iter().zip(&shift).map(|(x, s)| x + s).collect::<Vec<_>>()))
            .collect();
        let axis_a = fit_axis(&base).unwrap();
        let axis_b = fit_axis(&shifted).unwrap();
        for (v, w) in base.iter().zip(&shifted) {
            let pa = project(&axis_a, v).unwrap();
            let pb = project(&axis_b, w).unwrap();
            assert!((pa - pb).abs() < 1e-9, "{pa} vs {pb}");
        }
    }

    #[test]
    fn multi_axis_m1_matches_fit_axis() {
        let refs = vec![ev("a", &[1.0, 0.0]), ev("b", &[-1.0, 0.0]), ev("c", &[0.5, 0.1])];
        let single = fit_axis(&refs).unwrap();
        let multi = fit_multi_axis(&refs, 1).unwrap();
        assert_eq!(multi.directions[0], single.direction);
        assert_eq!(multi.eigenvalues[0], single.eigenvalue);
        assert_eq!(multi.mean, single.mean);
    }

    #[test]
    fn multi_axis_spans_high_variance_coordinates() {
        // Three axis-aligned clusters in 3-D: variance concentrated on x
        // (largest) then y; z is constant.
        let mut refs = Vec::new();
        for (i, offset) in [(-4.0, 0.0), (4.0, 1.5), (0.0, -1.5)].iter().enumerate() {
            for j in 0..3 {
                let jitter = 0.01 * j as f64;
                refs.push(ev(
                    &format!("c{i}_{j}"),
                    &[offset.0 + jitter, offset.1 - jitter, 2.0],
                ));
            }
        }
        let multi = fit_multi_axis(&refs, 2).unwrap();
        // Orthonormal.
        assert!((norm(&multi.directions[0]) - 1.0).abs() < 1e-9);
        assert!((norm(&multi.directions[1]) - 1.0).abs() < 1e-9);
        assert!(dot(&multi.directions[0], &multi.directions[1]).abs() < 1e-8);
        // Non-increasing eigenvalues, dominated by x then y.
        assert!(multi.eigenvalues[0] >= multi.eigenvalues[1]);
        assert!(multi.directions[0][0].abs() > 0.99, "{:?}", multi.directions[0]);
        assert!(multi.directions[1][1].abs() > 0.99, "{:?}", multi.directions[1]);
        // z never varies.
        assert!(multi.directions[0][2].abs() < 1e-6);
    }

    #[test]
    fn multi_axis_m_out_of_range() {
        let refs = vec![ev("a", &[1.0, 0.0]), ev("b", &[-1.0, 0.0])];
        assert!(fit_multi_axis(&refs, 2).is_err());
        assert!(fit_multi_axis(&refs, 0).is_err());
    }

    #[test]
    fn multi_axis_degenerate_residual_names_index() {
        // Rank-1 data: a second axis does not exist.
        let refs = vec![
            ev("a", &[1.0, 1.0, 0.0]),
            ev("b", &[2.0, 2.0, 0.0]),
            ev("c", &[3.0, 3.0, 0.0]),
            ev("d", &[4.0, 4.0, 0.0]),
        ];
        let err = fit_multi_axis(&refs, 2).unwrap_err();
        assert!(err.to_string().contains("axis 2"), "{err}");
    }

    #[test]
    fn bias_direction_examples() {
        let mut store = EmbeddingStore::new();
        store.insert(ev("a", &[2.0, 0.0])).unwrap();
        store.insert(ev("b", &[0.0, 0.0])).unwrap();
        let sets = DistractorSets::new(vec!["a".into()], vec!["b".into()]).unwrap();
        let b = bias_direction(&store, &sets).unwrap();
        assert!((b[0] - 1.0).abs() < 1e-12 && b[1].abs() < 1e-12);
        // Swapping the sets negates the direction.
        let swapped = DistractorSets::new(vec!["b".into()], vec!["a".into()]).unwrap();
        let nb = bias_direction(&store, &swapped).unwrap();
        assert!((nb[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn bias_direction_diagonal() {
        let mut store = EmbeddingStore::new();
        store.insert(ev("a", &[1.0, 1.0])).unwrap();
        store.insert(ev("b", &[0.0, 0.0])).unwrap();
        let sets = DistractorSets::new(vec!["a".into()], vec!["b".into()]).unwrap();
        let b = bias_direction(&store, &sets).unwrap();
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        assert!((b[0] - inv_sqrt2).abs() < 1e-9 && (b[1] - inv_sqrt2).abs() < 1e-9);
    }

    #[test]
    fn bias_direction_equal_means_degenerate() {
        let mut store = EmbeddingStore::new();
        store.insert(ev("a", &[1.0, 2.0])).unwrap();
        store.insert(ev("b", &[1.0, 2.0])).unwrap();
        let sets = DistractorSets::new(vec!["a".into()], vec!["b".into()]).unwrap();
        assert!(matches!(bias_direction(&store, &sets), Err(Error::Degenerate(_))));
    }

    #[test]
    fn debias_examples() {
        let b = [1.0, 0.0];
        let out = debias(&ev("x", &[1.0, 1.0]), &b).unwrap();
        assert_eq!(out.values, vec![0.0, 1.0]);
        // Orthogonal input is a fixed point.
        let out = debias(&ev("y", &[0.0, 3.0]), &b).unwrap();
        assert_eq!(out.values, vec![0.0, 3.0]);
        // Idempotence.
        let once = debias(&ev("z", &[0.3, -0.9]), &b).unwrap();
        let twice = debias(&once, &b).unwrap();
        assert_eq!(once.values, twice.values);
        // Non-unit b rejected.
        assert!(debias(&ev("w", &[1.0, 1.0]), &[2.0, 0.0]).is_err());
    }

    #[test]
    fn debias_zeroes_bias_component() {
        let b = {
            let raw = [0.6, 0.8];
            let n = norm(&raw);
            [raw[0] / n, raw[1] / n]
        };
        for values in [[1.0, 2.0], [-0.5, 0.25], [3.0, -4.0]] {
            let out = debias(&ev("x", &values), &b).unwrap();
            assert!(dot(&out.values, &b).abs() < 1e-9);
        }
    }

    #[test]
    fn partition_accuracy_examples() {
        let acc = partition_accuracy(&[0.5, 0.3, -0.2, -0.7], &[1, 1, 2, 2]).unwrap();
        assert_eq!(acc, 1.0);
        // Both assignments give 1/2.
        let acc = partition_accuracy(&[0.5, 0.3], &[1, 2]).unwrap();
        assert_eq!(acc, 0.5);
        // Sign flip leaves the result unchanged (ties at exactly 0 are the
        // documented measure-zero exception).
        let scores = [0.4, -0.1, 0.2, -0.9, 0.05];
        let gold = [1, 2, 2, 2, 1];
        let a = partition_accuracy(&scores, &gold).unwrap();
        let flipped: Vec<f64> = scores.iter().map(|s| -s).collect();
        let b = partition_accuracy(&flipped, &gold).unwrap();
        assert_eq!(a, b);
        assert!(a >= 0.5);
    }

    #[test]
    fn partition_accuracy_validates_input() {
        assert!(partition_accuracy(&[1.0], &[1, 2]).is_err());
        assert!(partition_accuracy(&[], &[]).is_err());
        assert!(partition_accuracy(&[1.0], &[3]).is_err());
    }

    #[test]
    fn axis_records_round_trip() {
        let records = vec![
            AxisRecord {
                query_id: "q1".into(),
                mean: vec![0.0, 0.5],
                direction: vec![1.0, 0.0],
                eigenvalue: 2.0,
            },
            AxisRecord {
                query_id: "q2".into(),
                mean: vec![-1.0, 0.25],
                direction: vec![0.0, 1.0],
                eigenvalue: 0.125,
            },
        ];
        let f = tempfile::NamedTempFile::new().unwrap();
        write_axes(&records, f.path()).unwrap();
        assert_eq!(load_axes(f.path()).unwrap(), records);
    }
}
