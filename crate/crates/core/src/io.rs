//! Text serialization of the crate's data types.
//!
//! All floats are written in Rust's shortest round-trip form, so parsing a
//! written file reproduces the original values bit-for-bit and repeated
//! writes of the same data are byte-identical.

use nalgebra::{DMatrix, DVector};

use crate::candidates::CandidateSet;
use crate::error::{Error, Result};
use crate::estimators::{FitResult, FitWeights};
use crate::qp::TraceRow;
use crate::spectral::OrthoBasis;

/// Basis as CSV: one column per direction, one row per observation.
pub fn basis_to_csv(basis: &OrthoBasis) -> String {
    let dense = basis.to_dense();
    let mut out = String::new();
    for i in 0..dense.nrows() {
        let row: Vec<String> = (0..dense.ncols()).map(|j| dense[(i, j)].to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Parse a headerless numeric CSV into a dense matrix.
pub fn matrix_from_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|tok| {
                tok.trim().parse::<f64>().map_err(|_| {
                    Error::InvalidArgument(format!("line {}: bad number '{tok}'", lineno + 1))
                })
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::DimensionMismatch(format!(
                    "line {}: {} fields, expected {}",
                    lineno + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidArgument("empty CSV".into()));
    }
    let (n, d) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(n, d, |i, j| rows[i][j]))
}

/// Coefficients as CSV: one value per row.
pub fn coefficients_to_csv(coefs: &[f64]) -> String {
    let mut out = String::new();
    for c in coefs {
        out.push_str(&c.to_string());
        out.push('\n');
    }
    out
}

/// Parse a one-column CSV of reals.
pub fn vector_from_csv(text: &str) -> Result<DVector<f64>> {
    let m = matrix_from_csv(text)?;
    if m.ncols() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "expected one column, found {}",
            m.ncols()
        )));
    }
    Ok(m.column(0).into_owned())
}

/// Candidate set text format: one line per model, comma-separated 1-based
/// indices.
pub fn candidates_to_text(set: &CandidateSet) -> String {
    let mut out = String::new();
    for model in set.models() {
        let idx: Vec<String> = model.iter().map(|j| (j + 1).to_string()).collect();
        out.push_str(&idx.join(","));
        out.push('\n');
    }
    out
}

/// Parse the candidate text format back into a custom set over `p`
/// coordinates.
pub fn candidates_from_text(text: &str, p: usize) -> Result<CandidateSet> {
    let mut models = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        let mut idx = Vec::new();
        if !line.is_empty() {
            for tok in line.split(',') {
                let one_based: usize = tok.trim().parse().map_err(|_| {
                    Error::InvalidArgument(format!("line {}: bad index '{tok}'", lineno + 1))
                })?;
                if one_based == 0 {
                    return Err(Error::InvalidArgument(format!(
                        "line {}: indices are 1-based",
                        lineno + 1
                    )));
                }
                idx.push(one_based - 1);
            }
        }
        idx.sort_unstable();
        idx.dedup();
        models.push(idx);
    }
    CandidateSet::custom(models, p)
}

/// FNV-1a over the little-endian bytes of the fitted values; a stable
/// checksum for quick cross-run comparison of fit outputs.
pub fn fitted_checksum(fitted: &[f64]) -> u64 {
    let mut bytes = Vec::with_capacity(fitted.len() * 8);
    for v in fitted {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    crate::rng::fnv1a(&bytes)
}

/// Fit metadata CSV: method, penalty, noise variance, checksum, then one
/// row per coordinate with its shrinkage factor (empty when the method
/// carries none).
pub fn fit_meta_to_csv(fit: &FitResult) -> String {
    let mut out = String::from("field,value\n");
    out.push_str(&format!("method,{}\n", fit.method.as_str()));
    out.push_str(&format!("penalty_lambda,{}\n", fit.penalty_lambda));
    out.push_str(&format!("sigma2_used,{}\n", fit.sigma2_used));
    out.push_str(&format!(
        "fitted_checksum,{:016x}\n",
        fitted_checksum(fit.fitted.as_slice())
    ));
    if let Some(FitWeights::Simplex(w)) = &fit.weights {
        for (m, v) in w.as_slice().iter().enumerate() {
            out.push_str(&format!("weight_{},{v}\n", m + 1));
        }
    }
    if let Some(gamma) = &fit.shrinkage {
        for (j, g) in gamma.factors().iter().enumerate() {
            out.push_str(&format!("shrinkage_{},{g}\n", j + 1));
        }
    }
    out
}

/// Fitted values CSV with a header row.
pub fn fitted_to_csv(fit: &FitResult) -> String {
    let mut out = String::from("index,fitted\n");
    for (i, v) in fit.fitted.iter().enumerate() {
        out.push_str(&format!("{},{v}\n", i + 1));
    }
    out
}

/// Solver trace CSV: per-iteration objective and duality gap.
pub fn trace_to_csv(trace: &[TraceRow]) -> String {
    let mut out = String::from("iteration,objective,gap\n");
    for row in trace {
        out.push_str(&format!("{},{},{}\n", row.iteration, row.objective, row.gap));
    }
    out
}
