//! Statistical validation machinery: Spearman rank correlation and the
//! two-predictor OLS regression (posterior opinion on prior opinion and
//! signed bias) with Student-t significance tests.
//!
//! The regression is deliberately restricted to the exact form
//! `y = b0 + b1*x1 + b2*x2 + e`; this is not a general linear-model engine.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// One trial of the opinion-shift behavioral protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehavioralRecord {
    /// Likert opinion before reading results, in [-3, 3].
    pub o_prior: i8,
    /// Likert opinion after reading results, in [-3, 3].
    pub o_posterior: i8,
    /// Signed DUO of the presented ranking, in [-1, 1].
    pub signed_bias: f64,
    /// Whether the participant clicked at least one result.
    pub clicked: bool,
    pub corpus_tag: String,
}

impl BehavioralRecord {
    fn validate(&self) -> Result<()> {
        if !(-3..=3).contains(&self.o_prior) || !(-3..=3).contains(&self.o_posterior) {
            return Err(Error::validation(format!(
                "opinions must lie in [-3, 3], got prior {} posterior {}",
                self.o_prior, self.o_posterior
            )));
        }
        if !self.signed_bias.is_finite() || self.signed_bias.abs() > 1.0 {
            return Err(Error::validation(format!(
                "signed_bias must lie in [-1, 1], got {}",
                self.signed_bias
            )));
        }
        Ok(())
    }
}

/// Load behavioral records from CSV with the header
/// `o_prior,o_posterior,signed_bias,clicked,corpus_tag`.
pub fn load_behavioral_csv(path: &Path) -> Result<Vec<BehavioralRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::validation(format!("{}: {e}", path.display())))?;
    let mut records = Vec::new();
    for (i, row) in reader.deserialize::<BehavioralRecord>().enumerate() {
        let record: BehavioralRecord =
            row.map_err(|e| Error::parse(&path.display().to_string(), i + 2, e.to_string()))?;
        record.validate()?;
        records.push(record);
    }
    Ok(records)
}

/// Which behavioral records enter the regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordFilter {
    All,
    Clicked,
}

impl RecordFilter {
    pub fn keeps(&self, record: &BehavioralRecord) -> bool {
        match self {
            RecordFilter::All => true,
            RecordFilter::Clicked => record.clicked,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            RecordFilter::All => "all",
            RecordFilter::Clicked => "clicked",
        }
    }
}

/// OLS fit of `o_posterior = b0 + b1*o_prior + b2*signed_bias + e`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    /// (b0, b1, b2).
    pub coefficients: [f64; 3],
    pub std_errors: [f64; 3],
    pub t_stats: [f64; 3],
    /// Two-sided p-values from Student-t with n-3 degrees of freedom.
    pub p_values: [f64; 3],
    pub r_squared: f64,
    pub n: usize,
    pub residuals: Vec<f64>,
}

/// Fit the regression by normal equations on the filtered records.
pub fn ols_fit(records: &[BehavioralRecord], filter: RecordFilter) -> Result<RegressionFit> {
    let rows: Vec<&BehavioralRecord> = records.iter().filter(|r| filter.keeps(r)).collect();
    let design: Vec<[f64; 3]> =
        rows.iter().map(|r| [1.0, r.o_prior as f64, r.signed_bias]).collect();
    let response: Vec<f64> = rows.iter().map(|r| r.o_posterior as f64).collect();
    ols_xy(&design, &response)
}

/// Core solver shared by [`ols_fit`] and tests with planted data.
pub fn ols_xy(design: &[[f64; 3]], response: &[f64]) -> Result<RegressionFit> {
    let n = design.len();
    if n != response.len() {
        return Err(Error::validation("design/response length mismatch"));
    }
    if n < 4 {
        return Err(Error::validation(format!(
            "regression needs at least 4 observations, got {n}"
        )));
    }

    // Normal equations: (X'X) beta = X'y.
    let mut xtx = [[0.0f64; 3]; 3];
    let mut xty = [0.0f64; 3];
    for (x, &y) in design.iter().zip(response) {
        for i in 0..3 {
            for j in 0..3 {
                xtx[i][j] += x[i] * x[j];
            }
            xty[i] += x[i] * y;
        }
    }

    let xtx_inv = invert3(&xtx).ok_or_else(|| {
        Error::validation("design matrix is rank-deficient; predictors are collinear or constant")
    })?;
    let mut beta = [0.0f64; 3];
    for i in 0..3 {
        for j in 0..3 {
            beta[i] += xtx_inv[i][j] * xty[j];
        }
    }

    let residuals: Vec<f64> = design
        .iter()
        .zip(response)
        .map(|(x, &y)| y - (beta[0] * x[0] + beta[1] * x[1] + beta[2] * x[2]))
        .collect();
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let mean_y = response.iter().sum::<f64>() / n as f64;
    let tss: f64 = response.iter().map(|y| (y - mean_y) * (y - mean_y)).sum();
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else if rss == 0.0 { 1.0 } else { 0.0 };

    let df = n - 3;
    let sigma_sq = rss / df as f64;
    let mut std_errors = [0.0f64; 3];
    let mut t_stats = [0.0f64; 3];
    let mut p_values = [0.0f64; 3];
    for i in 0..3 {
        std_errors[i] = (sigma_sq * xtx_inv[i][i]).sqrt();
        t_stats[i] = if std_errors[i] > 0.0 { beta[i] / std_errors[i] } else { f64::INFINITY };
        p_values[i] = 2.0 * (1.0 - student_t_cdf(t_stats[i].abs(), df as u64));
    }

    Ok(RegressionFit {
        coefficients: beta,
        std_errors,
        t_stats,
        p_values,
        r_squared: r_squared.clamp(0.0, 1.0),
        n,
        residuals,
    })
}

/// Invert a symmetric 3x3 matrix by Gauss-Jordan with partial pivoting;
/// `None` when (numerically) singular.
fn invert3(m: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let scale = m
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(1.0);
    let mut a = *m;
    let mut inv = [[0.0f64; 3]; 3];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for col in 0..3 {
        let pivot_row = (col..3).max_by(|&a_row, &b_row| {
            a[a_row][col].abs().total_cmp(&a[b_row][col].abs())
        })?;
        if a[pivot_row][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, pivot_row);
        inv.swap(col, pivot_row);
        let pivot = a[col][col];
        for j in 0..3 {
            a[col][j] /= pivot;
            inv[col][j] /= pivot;
        }
        for row in 0..3 {
            if row == col {
                continue;
            }
            let factor = a[row][col];
            if factor == 0.0 {
                continue;
            }
            for j in 0..3 {
                a[row][j] -= factor * a[col][j];
                inv[row][j] -= factor * inv[col][j];
            }
        }
    }
    Some(inv)
}

/// Spearman rank correlation with average-fractional-rank tie handling.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::validation("spearman inputs must have equal length"));
    }
    if x.len() < 2 {
        return Err(Error::validation("spearman needs at least 2 observations"));
    }
    let rx = fractional_ranks(x)?;
    let ry = fractional_ranks(y)?;
    pearson(&rx, &ry)
}

/// Average fractional ranks: tied values share the mean of their rank span.
fn fractional_ranks(values: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::validation(format!("non-finite value {bad}")));
    }
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Positions i..=j (0-based) share the mean of ranks i+1..=j+1.
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    Ok(ranks)
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in x.iter().zip(y) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::Degenerate(
            "correlation undefined: an input is constant".into(),
        ));
    }
    Ok(cov / (vx * vy).sqrt())
}

/// Student-t CDF via the regularized incomplete beta function. Symmetric by
/// construction: `cdf(t) + cdf(-t) = 1`.
pub fn student_t_cdf(t: f64, df: u64) -> f64 {
    assert!(df >= 1, "degrees of freedom must be >= 1");
    let v = df as f64;
    let x = v / (v + t * t);
    let half_tail = 0.5 * statrs::function::beta::beta_reg(v / 2.0, 0.5, x);
    if t >= 0.0 {
        1.0 - half_tail
    } else {
        half_tail
    }
}
