//! Exact losses, risks, and optimal model-averaging risk oracles.
//!
//! For subset candidates over a validated basis, the risk of weights `w`
//! has the per-coordinate form
//! `R = sum_j [(1 - gamma_j)^2 theta_j^2 + gamma_j^2 sigma2 / n]`
//! with `gamma` the shrinkage profile of `w`. A general-projector route
//! (`R = ||(I - P(w)) mu||^2 / n + sigma2 tr P(w)^2 / n`) is kept alongside
//! as an independent cross-check.
//!
//! Optimal risks:
//! - all-subset candidates separate per coordinate and have the closed form
//!   `R* = sum_j theta_j^2 (sigma2/n) / (theta_j^2 + sigma2/n)` attained at
//!   `gamma_j* = theta_j^2 / (theta_j^2 + sigma2/n)`;
//! - all-nested candidates reduce to a weighted antitonic fit of the
//!   unconstrained profile (first factor pinned at 1), solved by
//!   pool-adjacent-violators, which avoids assembling an `M x M` QP when
//!   `M = p` is in the thousands;
//! - any other candidate set goes through the risk QP and the simplex
//!   solver.

use nalgebra::DMatrix;

use crate::candidates::{shrinkage_profile, CandidateKind, CandidateSet, ShrinkageProfile};
use crate::error::{Error, Result};
use crate::estimators::FitResult;
use crate::qp::{
    assemble_risk_qp, default_max_iter, solve_simplex_qp, SimplexWeights, DEFAULT_TOL,
};
use crate::spectral::{MeanSpec, OrthoBasis};

/// Optimal weights reported by a risk oracle: simplex weights over models,
/// or a per-coordinate shrinkage profile when the optimum is expressed
/// coordinate-wise.
#[derive(Debug, Clone)]
pub enum OptimalWeights {
    Simplex(SimplexWeights),
    Profile(ShrinkageProfile),
}

/// A risk value with optional attained weights and the additive offset used
/// when the value serves as a risk-ratio denominator.
#[derive(Debug, Clone)]
pub struct RiskReport {
    pub risk: f64,
    pub optimal_weights: Option<OptimalWeights>,
    pub denominator_offset: f64,
}

impl RiskReport {
    /// `offset + risk`, the denominator form.
    pub fn denominator(&self) -> f64 {
        self.denominator_offset + self.risk
    }
}

/// Normalized squared loss `||fitted - mu||^2 / n` of a fit against the
/// true mean.
pub fn loss_of_fit(fit: &FitResult, mean: &MeanSpec, basis: &OrthoBasis) -> Result<f64> {
    loss_of_vector(fit.fitted.as_slice(), mean, basis)
}

/// Same as [`loss_of_fit`] for a raw fitted vector.
pub fn loss_of_vector(fitted: &[f64], mean: &MeanSpec, basis: &OrthoBasis) -> Result<f64> {
    if fitted.len() != mean.n {
        return Err(Error::DimensionMismatch(format!(
            "fitted vector has length {}, mean has n = {}",
            fitted.len(),
            mean.n
        )));
    }
    let mu = mean.mean_vector(basis)?;
    let n = mean.n as f64;
    Ok(fitted
        .iter()
        .zip(mu.iter())
        .map(|(f, m)| (f - m) * (f - m))
        .sum::<f64>()
        / n)
}

/// Risk of a fixed shrinkage profile:
/// `sum_j [(1 - gamma_j)^2 theta_j^2 + gamma_j^2 sigma2 / n]`.
pub fn risk_of_shrinkage(theta: &[f64], sigma2: f64, n: usize, gamma: &[f64]) -> Result<f64> {
    if theta.len() != gamma.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficients vs {} shrinkage factors",
            theta.len(),
            gamma.len()
        )));
    }
    if sigma2 < 0.0 {
        return Err(Error::InvalidArgument("sigma2 must be >= 0".into()));
    }
    let var = sigma2 / n as f64;
    Ok(theta
        .iter()
        .zip(gamma)
        .map(|(t, g)| (1.0 - g) * (1.0 - g) * t * t + g * g * var)
        .sum())
}

/// Exact risk of the averaged estimator with weights `w` over `set`.
/// `w` may be simplex weights or, for univariate sets, hypercube weights;
/// anything nonnegative with a valid induced profile is accepted.
pub fn risk_of_weights(
    mean: &MeanSpec,
    sigma2: f64,
    set: &CandidateSet,
    w: &[f64],
) -> Result<f64> {
    if set.p() != mean.p() {
        return Err(Error::DimensionMismatch(format!(
            "candidate set has p = {}, mean has p = {}",
            set.p(),
            mean.p()
        )));
    }
    let gamma = shrinkage_profile(set, w)?;
    risk_of_shrinkage(mean.theta.as_slice(), sigma2, mean.n, gamma.factors())
}

/// General-projector route for the same risk:
/// `||(I - P(w)) mu||^2 / n + sigma2 tr(P(w)^2) / n` with explicit
/// projector matrices built from the basis columns. Quadratic in `n`; used
/// as an independent cross-check and for non-subset projector candidates.
pub fn risk_of_weights_general(
    basis: &OrthoBasis,
    mean: &MeanSpec,
    sigma2: f64,
    set: &CandidateSet,
    w: &[f64],
) -> Result<f64> {
    if w.len() != set.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} models",
            w.len(),
            set.len()
        )));
    }
    let n = basis.n();
    let dense = basis.to_dense();
    let mu = mean.mean_vector(basis)?;
    let mut pw = DMatrix::zeros(n, n);
    for (m, idx) in set.models().iter().enumerate() {
        if w[m] == 0.0 {
            continue;
        }
        for &j in idx {
            let col = dense.column(j);
            pw += col * col.transpose() * (w[m] / n as f64);
        }
    }
    let resid = &mu - &pw * &mu;
    Ok(resid.dot(&resid) / n as f64 + sigma2 * (&pw * &pw).trace() / n as f64)
}

/// Weighted antitonic (non-increasing) least squares by
/// pool-adjacent-violators: minimizes `sum_j weights[j] (fit_j - targets[j])^2`
/// over non-increasing `fit`.
fn antitonic_fit(targets: &[f64], weights: &[f64]) -> Vec<f64> {
    // PAV for non-decreasing fits on the reversed sequence.
    let m = targets.len();
    let mut level_value: Vec<f64> = Vec::with_capacity(m);
    let mut level_weight: Vec<f64> = Vec::with_capacity(m);
    let mut level_count: Vec<usize> = Vec::with_capacity(m);
    for i in (0..m).rev() {
        level_value.push(targets[i]);
        level_weight.push(weights[i]);
        level_count.push(1);
        while level_value.len() > 1 {
            let k = level_value.len();
            if level_value[k - 2] <= level_value[k - 1] {
                break;
            }
            let w = level_weight[k - 2] + level_weight[k - 1];
            let v = if w > 0.0 {
                (level_weight[k - 2] * level_value[k - 2]
                    + level_weight[k - 1] * level_value[k - 1])
                    / w
            } else {
                0.5 * (level_value[k - 2] + level_value[k - 1])
            };
            level_value[k - 2] = v;
            level_weight[k - 2] = w;
            level_count[k - 2] += level_count[k - 1];
            level_value.pop();
            level_weight.pop();
            level_count.pop();
        }
    }
    let mut fit = Vec::with_capacity(m);
    for (v, c) in level_value.iter().zip(&level_count) {
        for _ in 0..*c {
            fit.push(*v);
        }
    }
    fit.reverse();
    fit
}

/// Closed-form optimal risk over all-nested candidates.
///
/// With weights on the simplex, the induced profile satisfies
/// `lambda_1 = 1 >= lambda_2 >= ... >= lambda_p >= 0` and every such profile
/// is attainable, so the optimum is the weighted antitonic fit of the
/// per-coordinate targets `gamma_j* = theta_j^2 / (theta_j^2 + sigma2/n)`
/// with weights `theta_j^2 + sigma2/n`, first entry pinned at 1.
fn optimal_nested_by_profile(mean: &MeanSpec, sigma2: f64) -> Result<RiskReport> {
    let p = mean.p();
    let n = mean.n;
    let var = sigma2 / n as f64;
    if var == 0.0 {
        // Noiseless: full weight on the largest model is exact.
        let weights = SimplexWeights::vertex(p, p - 1);
        return Ok(RiskReport {
            risk: 0.0,
            optimal_weights: Some(OptimalWeights::Simplex(weights)),
            denominator_offset: 0.0,
        });
    }
    let omega: Vec<f64> = mean.theta.iter().map(|t| t * t + var).collect();
    let target: Vec<f64> = mean.theta.iter().zip(&omega).map(|(t, o)| t * t / o).collect();

    let mut lambda = vec![1.0; p];
    if p > 1 {
        let tail = antitonic_fit(&target[1..], &omega[1..]);
        for (j, v) in tail.into_iter().enumerate() {
            lambda[j + 1] = v.clamp(0.0, 1.0);
        }
    }
    let mut risk = 0.0;
    for j in 0..p {
        let t2 = mean.theta[j] * mean.theta[j];
        risk += omega[j] * (lambda[j] - target[j]).powi(2) + t2 * var / omega[j];
    }
    // Convert the profile to simplex weights by differencing.
    let mut w = vec![0.0; p];
    for m in 0..p {
        let next = if m + 1 < p { lambda[m + 1] } else { 0.0 };
        w[m] = (lambda[m] - next).max(0.0);
    }
    let sum: f64 = w.iter().sum();
    if sum > 0.0 {
        for v in &mut w {
            *v /= sum;
        }
    }
    Ok(RiskReport {
        risk,
        optimal_weights: Some(OptimalWeights::Simplex(SimplexWeights::new(w)?)),
        denominator_offset: 0.0,
    })
}

/// Minimum risk over simplex weights for the given candidate set.
///
/// All-nested sets use the antitonic closed form above; everything else is
/// assembled as a risk QP and solved to gap `1e-9`.
pub fn optimal_ma_risk(mean: &MeanSpec, sigma2: f64, set: &CandidateSet) -> Result<RiskReport> {
    if sigma2 < 0.0 {
        return Err(Error::InvalidArgument("sigma2 must be >= 0".into()));
    }
    if set.p() != mean.p() {
        return Err(Error::DimensionMismatch(format!(
            "candidate set has p = {}, mean has p = {}",
            set.p(),
            mean.p()
        )));
    }
    if set.kind() == CandidateKind::AllNested {
        return optimal_nested_by_profile(mean, sigma2);
    }
    optimal_ma_risk_qp(mean, sigma2, set, DEFAULT_TOL, default_max_iter(set.len()))
}

/// The QP route for the optimal MA risk, available for any candidate set
/// (including nested ones, where it cross-checks the closed form in tests).
pub fn optimal_ma_risk_qp(
    mean: &MeanSpec,
    sigma2: f64,
    set: &CandidateSet,
    tol: f64,
    max_iter: usize,
) -> Result<RiskReport> {
    let qp = assemble_risk_qp(mean, sigma2, set)?;
    let solved = solve_simplex_qp(&qp, tol, max_iter)?;
    Ok(RiskReport {
        // Clamp away solver-tolerance negatives near zero.
        risk: solved.objective.max(0.0),
        optimal_weights: Some(OptimalWeights::Simplex(solved.weights)),
        denominator_offset: 0.0,
    })
}

/// Closed-form optimal all-subset MA risk
/// `sum_j theta_j^2 (sigma2/n) / (theta_j^2 + sigma2/n)` with the attaining
/// profile `gamma_j* = theta_j^2 / (theta_j^2 + sigma2/n)`.
pub fn optimal_all_subset_risk(theta: &[f64], sigma2: f64, n: usize) -> Result<RiskReport> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    if sigma2 < 0.0 {
        return Err(Error::InvalidArgument("sigma2 must be >= 0".into()));
    }
    let var = sigma2 / n as f64;
    let mut risk = 0.0;
    let mut gamma = Vec::with_capacity(theta.len());
    for &t in theta {
        let t2 = t * t;
        let denom = t2 + var;
        if denom > 0.0 {
            risk += t2 * var / denom;
            gamma.push(t2 / denom);
        } else {
            gamma.push(0.0);
        }
    }
    Ok(RiskReport {
        risk,
        optimal_weights: Some(OptimalWeights::Profile(ShrinkageProfile::new(gamma)?)),
        denominator_offset: 0.0,
    })
}

/// `1/n + optimal all-subset risk`: the denominator of the benchmark risk
/// ratio for all-subset averaging.
pub fn all_subset_ratio_denominator(theta: &[f64], sigma2: f64, n: usize) -> Result<f64> {
    Ok(1.0 / n as f64 + optimal_all_subset_risk(theta, sigma2, n)?.risk)
}
