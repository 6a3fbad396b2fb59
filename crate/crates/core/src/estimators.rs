//! Fit procedures on the spectral coefficients.
//!
//! All estimators here have the shrinkage form `fitted = sum_j gamma_j
//! theta_tilde_j psi_j`; they differ only in how the per-coordinate factors
//! are chosen:
//!
//! - `mma_fit`: factors induced by simplex weights minimizing the
//!   Mallows-type criterion over a candidate set (solved as a simplex QP);
//! - `adap_fit`: the dimension-adaptive rule, which minimizes the same
//!   criterion over the hypercube with univariate candidates and penalty
//!   `lambda = sqrt(2 log p / n)`; the minimizer is separable with the
//!   closed form `w_j = (1 - lambda^2 sigma^2 / theta_tilde_j^2)_+`;
//! - `soft_threshold_fit` / `hard_threshold_fit`: classical keep-or-shrink
//!   rules at threshold `lambda sigma`.

use nalgebra::DVector;

use crate::candidates::{shrinkage_profile, CandidateSet, ShrinkageProfile};
use crate::error::{Error, Result};
use crate::qp::{
    assemble_mallows_qp_spectral, default_max_iter, solve_simplex_qp, SimplexWeights, DEFAULT_TOL,
};
use crate::spectral::{spectral_transform, OrthoBasis, ResponseSample, SpectralCoefs};

/// Which rule produced a [`FitResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodTag {
    Mma,
    Adap,
    SoftThreshold,
    HardThreshold,
    RidgeCv,
    LassoCv,
}

impl MethodTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            MethodTag::Mma => "mma",
            MethodTag::Adap => "adap",
            MethodTag::SoftThreshold => "soft",
            MethodTag::HardThreshold => "hard",
            MethodTag::RidgeCv => "ridge_cv",
            MethodTag::LassoCv => "lasso_cv",
        }
    }
}

/// Weights attached to a fit: simplex weights over candidate models, or
/// per-coordinate hypercube weights.
#[derive(Debug, Clone, PartialEq)]
pub enum FitWeights {
    Simplex(SimplexWeights),
    Hypercube(Vec<f64>),
}

/// A fitted mean vector plus the bookkeeping needed to audit it.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub fitted: DVector<f64>,
    pub weights: Option<FitWeights>,
    pub shrinkage: Option<ShrinkageProfile>,
    pub method: MethodTag,
    pub penalty_lambda: f64,
    pub sigma2_used: f64,
}

impl FitResult {
    pub fn n(&self) -> usize {
        self.fitted.len()
    }
}

/// Penalty parameter for the Mallows-type criterion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Penalty {
    /// `sqrt(1/n)`: the classical Mallows weight-selection penalty.
    Mallows,
    /// `sqrt(2 log p / n)`: adapts to the basis dimension.
    DimAdaptive,
    /// `sqrt(log n / n)`.
    LogN,
    Custom(f64),
}

impl Penalty {
    pub fn lambda(&self, n: usize, p: usize) -> Result<f64> {
        let nf = n as f64;
        let v = match self {
            Penalty::Mallows => (1.0 / nf).sqrt(),
            Penalty::DimAdaptive => (2.0 * (p as f64).ln() / nf).sqrt(),
            Penalty::LogN => (nf.ln() / nf).sqrt(),
            Penalty::Custom(l) => {
                if *l < 0.0 || !l.is_finite() {
                    return Err(Error::InvalidArgument(format!("penalty lambda = {l}")));
                }
                *l
            }
        };
        Ok(v)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Penalty::Mallows => "mallows",
            Penalty::DimAdaptive => "dim_adaptive",
            Penalty::LogN => "log_n",
            Penalty::Custom(_) => "custom",
        }
    }
}

/// `sqrt(2 log p / n)`, the dimension-adaptive penalty used by `adap_fit`
/// and both thresholding rules.
pub fn dimension_adaptive_lambda(n: usize, p: usize) -> f64 {
    (2.0 * (p as f64).ln() / n as f64).sqrt()
}

/// Where the noise variance for a fit comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sigma2Source {
    Known(f64),
    /// Residual-based estimate using the largest candidate model dimension.
    EstimateFromLargest,
}

/// Residual variance estimate from the first `k` coordinates:
/// `sigma2_hat = (y'y - n sum_{j<=k} theta_tilde_j^2) / (n - k)`,
/// clamped at zero against rounding.
pub fn estimate_sigma2(y: &ResponseSample, basis: &OrthoBasis, k: usize) -> Result<f64> {
    let n = y.n();
    if k >= n {
        return Err(Error::InvalidArgument(format!(
            "largest model dimension k = {k} must be < n = {n}"
        )));
    }
    if k == 0 || k > basis.p() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} outside 1..={}",
            basis.p()
        )));
    }
    let coefs = spectral_transform(basis, y)?;
    let explained: f64 = coefs.theta_tilde.iter().take(k).map(|t| t * t).sum();
    let num = y.squared_norm() - n as f64 * explained;
    Ok((num / (n - k) as f64).max(0.0))
}

fn shrinkage_fit(
    basis: &OrthoBasis,
    coefs: &SpectralCoefs,
    gamma: ShrinkageProfile,
    weights: FitWeights,
    method: MethodTag,
    lambda: f64,
    sigma2: f64,
) -> Result<FitResult> {
    let kept: Vec<f64> = gamma
        .factors()
        .iter()
        .zip(coefs.theta_tilde.iter())
        .map(|(g, t)| g * t)
        .collect();
    let fitted = crate::spectral::reconstruct(basis, &kept)?;
    Ok(FitResult {
        fitted,
        weights: Some(weights),
        shrinkage: Some(gamma),
        method,
        penalty_lambda: lambda,
        sigma2_used: sigma2,
    })
}

/// Mallows-type model averaging: minimize the criterion over the simplex,
/// then average the candidate fits with the estimated weights.
pub fn mma_fit(
    y: &ResponseSample,
    basis: &OrthoBasis,
    set: &CandidateSet,
    penalty: Penalty,
    sigma2: Sigma2Source,
) -> Result<FitResult> {
    let n = y.n();
    let sigma2 = match sigma2 {
        Sigma2Source::Known(v) => {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("sigma2 = {v}")));
            }
            v
        }
        Sigma2Source::EstimateFromLargest => estimate_sigma2(y, basis, set.max_dim())?,
    };
    let lambda = penalty.lambda(n, basis.p())?;
    let coefs = spectral_transform(basis, y)?;
    let qp = assemble_mallows_qp_spectral(&coefs, y.squared_norm(), set, lambda, sigma2)?;
    let solved = solve_simplex_qp(&qp, DEFAULT_TOL, default_max_iter(set.len()))?;
    let gamma = shrinkage_profile(set, solved.weights.as_slice())?;
    shrinkage_fit(
        basis,
        &coefs,
        gamma,
        FitWeights::Simplex(solved.weights),
        MethodTag::Mma,
        lambda,
        sigma2,
    )
}

/// Closed-form dimension-adaptive averaging over univariate candidates:
/// `w_j = (1 - lambda^2 sigma^2 / theta_tilde_j^2)_+` with
/// `lambda = sqrt(2 log p / n)`. A zero coefficient gets weight zero (the
/// limit of the formula), so no division error can surface.
pub fn adap_fit(y: &ResponseSample, basis: &OrthoBasis, sigma2: f64) -> Result<FitResult> {
    if sigma2 < 0.0 || !sigma2.is_finite() {
        return Err(Error::InvalidArgument(format!("sigma2 = {sigma2}")));
    }
    let coefs = spectral_transform(basis, y)?;
    let lambda = dimension_adaptive_lambda(y.n(), basis.p());
    let w = adap_weights(coefs.theta_tilde.as_slice(), lambda, sigma2);
    let gamma = ShrinkageProfile::new(w.clone())?;
    shrinkage_fit(
        basis,
        &coefs,
        gamma,
        FitWeights::Hypercube(w),
        MethodTag::Adap,
        lambda,
        sigma2,
    )
}

/// The per-coordinate hypercube minimizer backing [`adap_fit`].
pub fn adap_weights(theta_tilde: &[f64], lambda: f64, sigma2: f64) -> Vec<f64> {
    let threshold2 = lambda * lambda * sigma2;
    theta_tilde
        .iter()
        .map(|&t| {
            let t2 = t * t;
            if t2 > threshold2 {
                1.0 - threshold2 / t2
            } else {
                0.0
            }
        })
        .collect()
}

/// Soft thresholding at `lambda sigma`: `sgn(t)(|t| - lambda sigma)_+`.
pub fn soft_threshold_fit(y: &ResponseSample, basis: &OrthoBasis, sigma2: f64) -> Result<FitResult> {
    if sigma2 < 0.0 || !sigma2.is_finite() {
        return Err(Error::InvalidArgument(format!("sigma2 = {sigma2}")));
    }
    let coefs = spectral_transform(basis, y)?;
    let lambda = dimension_adaptive_lambda(y.n(), basis.p());
    let threshold = lambda * sigma2.sqrt();
    let gamma: Vec<f64> = coefs
        .theta_tilde
        .iter()
        .map(|&t| {
            if t.abs() > threshold {
                1.0 - threshold / t.abs()
            } else {
                0.0
            }
        })
        .collect();
    let w = gamma.clone();
    let gamma = ShrinkageProfile::new(gamma)?;
    shrinkage_fit(
        basis,
        &coefs,
        gamma,
        FitWeights::Hypercube(w),
        MethodTag::SoftThreshold,
        lambda,
        sigma2,
    )
}

/// Hard thresholding at `lambda sigma`: keep `t` iff `|t| > lambda sigma`
/// (strict inequality; the boundary coefficient is dropped).
pub fn hard_threshold_fit(y: &ResponseSample, basis: &OrthoBasis, sigma2: f64) -> Result<FitResult> {
    if sigma2 < 0.0 || !sigma2.is_finite() {
        return Err(Error::InvalidArgument(format!("sigma2 = {sigma2}")));
    }
    let coefs = spectral_transform(basis, y)?;
    let lambda = dimension_adaptive_lambda(y.n(), basis.p());
    let threshold = lambda * sigma2.sqrt();
    let gamma: Vec<f64> = coefs
        .theta_tilde
        .iter()
        .map(|&t| if t.abs() > threshold { 1.0 } else { 0.0 })
        .collect();
    let w = gamma.clone();
    let gamma = ShrinkageProfile::new(gamma)?;
    shrinkage_fit(
        basis,
        &coefs,
        gamma,
        FitWeights::Hypercube(w),
        MethodTag::HardThreshold,
        lambda,
        sigma2,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::candidates::{build_all_nested, CandidateSet};
    use crate::spectral::canonical_basis;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn sample(v: Vec<f64>) -> ResponseSample {
        ResponseSample::new(v).unwrap()
    }

    #[test]
    fn sigma2_zero_when_in_span() {
        let n = 6;
        let basis = canonical_basis(n, 3).unwrap();
        let y = ResponseSample::from_vector(
            basis.column(0) * 1.5 - basis.column(1) * 0.25,
        )
        .unwrap();
        let s2 = estimate_sigma2(&y, &basis, 2).unwrap();
        assert_abs_diff_eq!(s2, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn sigma2_of_unexplained_direction() {
        // y = psi_2 with k = 1: nothing is removed, sigma2_hat = n / (n - 1).
        let n = 4;
        let basis = canonical_basis(n, 2).unwrap();
        let y = ResponseSample::from_vector(basis.column(1)).unwrap();
        let s2 = estimate_sigma2(&y, &basis, 1).unwrap();
        assert_abs_diff_eq!(s2, 4.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn sigma2_is_unbiased_under_gaussian_noise() {
        // mu in span of the first k coordinates, Gaussian noise: the mean of
        // sigma2_hat over many replications must sit within 3 standard errors.
        let n = 40;
        let k = 5;
        let sigma2: f64 = 0.8;
        let basis = canonical_basis(n, n).unwrap();
        let reps = 10_000;
        let mut rng = crate::rng::rng_from_seed(2024);
        let mu = crate::spectral::reconstruct(&basis, &{
            let mut c = vec![0.0; n];
            c[..k].copy_from_slice(&[1.0, -0.5, 0.3, 0.2, 0.1]);
            c
        })
        .unwrap();
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..reps {
            let eps = DVector::from_fn(n, |_, _| {
                rng.sample::<f64, _>(rand_distr::StandardNormal) * sigma2.sqrt()
            });
            let y = ResponseSample::from_vector(&mu + eps).unwrap();
            let est = estimate_sigma2(&y, &basis, k).unwrap();
            sum += est;
            sum_sq += est * est;
        }
        let mean = sum / reps as f64;
        let sd = ((sum_sq / reps as f64 - mean * mean).max(0.0)).sqrt();
        let se = sd / (reps as f64).sqrt();
        assert!(
            (mean - sigma2).abs() <= 3.0 * se,
            "mean {mean} vs sigma2 {sigma2}, se {se}"
        );
    }

    #[test]
    fn sigma2_rejects_k_out_of_range() {
        let basis = canonical_basis(4, 4).unwrap();
        let y = sample(vec![1.0; 4]);
        assert!(estimate_sigma2(&y, &basis, 4).is_err());
        assert!(estimate_sigma2(&y, &basis, 0).is_err());
    }

    #[test]
    fn adap_closed_form_values() {
        // lambda sigma = 0.1, theta = 0.2 -> w = 0.75, fitted coef 0.15.
        let w = adap_weights(&[0.2], 0.1, 1.0);
        assert_abs_diff_eq!(w[0], 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(w[0] * 0.2, 0.15, epsilon = 1e-12);

        // Below the threshold the weight clamps to zero.
        let w = adap_weights(&[0.05, -0.09, 0.1], 0.1, 1.0);
        assert_eq!(w, vec![0.0, 0.0, 0.0]);

        // Zero coefficient: weight zero by convention, no division error.
        let w = adap_weights(&[0.0], 0.1, 1.0);
        assert_eq!(w[0], 0.0);
    }

    /// Golden-section minimization of `(1 - w)^2 t^2 + 2 lam2s2 w` over
    /// `[0, 1]`. The summand is evaluated in double-double arithmetic so the
    /// bracketing comparisons do not hit the f64 noise floor (a plain f64
    /// golden section can only localize a quadratic minimum to ~sqrt(eps)).
    fn golden_section_summand_min(t: f64, lam2s2: f64) -> f64 {
        // Double-double helpers (Knuth two-sum, FMA two-product).
        fn two_sum(a: f64, b: f64) -> (f64, f64) {
            let s = a + b;
            let bb = s - a;
            (s, (a - (s - bb)) + (b - bb))
        }
        fn two_prod(a: f64, b: f64) -> (f64, f64) {
            let p = a * b;
            (p, a.mul_add(b, -p))
        }
        // g(w) as (hi, lo): (1-w)^2 t^2 + 2 lam2s2 w.
        let g = |w: f64| -> (f64, f64) {
            let u = 1.0 - w;
            let (u2, e1) = two_prod(u, u);
            let (a, e2) = two_prod(u2, t * t);
            let a_lo = (e1 * t * t) + e2;
            let (b, e3) = two_prod(2.0 * lam2s2, w);
            let (hi, e4) = two_sum(a, b);
            (hi, a_lo + e3 + e4)
        };
        let less = |x: (f64, f64), y: (f64, f64)| -> bool {
            let (d, e) = two_sum(x.0, -y.0);
            d + (e + (x.1 - y.1)) < 0.0
        };
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (0.0f64, 1.0f64);
        for _ in 0..100 {
            let c = b - phi * (b - a);
            let d = a + phi * (b - a);
            if less(g(c), g(d)) {
                b = d;
            } else {
                a = c;
            }
        }
        (a + b) / 2.0
    }

    #[test]
    fn adap_matches_golden_section_per_coordinate() {
        // The hypercube criterion is separable; each coordinate minimizes
        // g(w) = (1 - w)^2 t^2 + 2 lambda^2 sigma^2 w over [0, 1].
        let mut rng = crate::rng::rng_from_seed(99);
        let lambda = 0.21;
        let sigma2 = 1.3;
        for _ in 0..100 {
            let t = rng.gen::<f64>() * 2.0 - 1.0;
            let w = adap_weights(&[t], lambda, sigma2)[0];
            let oracle = golden_section_summand_min(t, lambda * lambda * sigma2);
            assert!(
                (w - oracle).abs() <= 1e-8,
                "t = {t}: closed form {w} vs golden-section {oracle}"
            );
        }
    }

    #[test]
    fn threshold_rules_boundary_and_values() {
        let n = 100;
        let p = 4;
        let basis = canonical_basis(n, p).unwrap();
        let lambda = dimension_adaptive_lambda(n, p);
        let sigma2 = 1.0;
        let threshold = lambda; // sigma = 1

        // Coefficients: one above threshold, one exactly at it, two below.
        let coefs = [2.0 * threshold, threshold, 0.5 * threshold, 0.0];
        let mut yv = vec![0.0; n];
        for (j, &c) in coefs.iter().enumerate() {
            yv[j] = c * (n as f64).sqrt();
        }
        let y = sample(yv);

        let soft = soft_threshold_fit(&y, &basis, sigma2).unwrap();
        let hard = hard_threshold_fit(&y, &basis, sigma2).unwrap();
        let gs = soft.shrinkage.as_ref().unwrap().factors();
        let gh = hard.shrinkage.as_ref().unwrap().factors();

        // Above: soft keeps |t| - threshold, hard keeps t.
        assert_abs_diff_eq!(gs[0] * coefs[0], coefs[0] - threshold, epsilon = 1e-12);
        assert_abs_diff_eq!(gh[0], 1.0);
        // Exactly at the boundary both drop the coefficient (strict >).
        assert_eq!(gs[1], 0.0);
        assert_eq!(gh[1], 0.0);
        // Below: dropped.
        assert_eq!(gs[2], 0.0);
        assert_eq!(gh[2], 0.0);
    }

    #[test]
    fn soft_thresholding_simple_numbers() {
        // theta = 0.2, lambda sigma = 0.1 -> soft 0.1, hard 0.2.
        let t: f64 = 0.2;
        let thr = 0.1;
        let soft = t.signum() * (t.abs() - thr).max(0.0);
        assert_abs_diff_eq!(soft, 0.1);
        // The module rules reproduce these on a real fit.
        // lambda = sqrt(2 ln p / n) vanishes at p = 1, so use two coordinates.
        let n = 25;
        let basis = canonical_basis(n, 2).unwrap();
        let lambda = dimension_adaptive_lambda(n, 2);
        let sigma2 = (thr / lambda).powi(2);
        let y2 = ResponseSample::from_vector(basis.column(0) * t).unwrap();
        let soft_fit = soft_threshold_fit(&y2, &basis, sigma2).unwrap();
        let hard_fit = hard_threshold_fit(&y2, &basis, sigma2).unwrap();
        let fitted_soft = soft_fit.shrinkage.unwrap().factors()[0] * t;
        let fitted_hard = hard_fit.shrinkage.unwrap().factors()[0] * t;
        assert_abs_diff_eq!(fitted_soft, 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(fitted_hard, 0.2, epsilon = 1e-12);
    }

    #[test]
    fn mma_single_candidate_is_projection_fit() {
        let n = 12;
        let basis = canonical_basis(n, 3).unwrap();
        let mut rng = crate::rng::rng_from_seed(8);
        let y = sample((0..n).map(|_| rng.gen::<f64>()).collect());
        let set = CandidateSet::custom(vec![vec![0, 1]], 3).unwrap();
        let fit = mma_fit(&y, &basis, &set, Penalty::Mallows, Sigma2Source::Known(1.0)).unwrap();
        let coefs = spectral_transform(&basis, &y).unwrap();
        let proj = crate::spectral::reconstruct(
            &basis,
            &[coefs.theta_tilde[0], coefs.theta_tilde[1], 0.0],
        )
        .unwrap();
        assert!((fit.fitted - proj).amax() <= 1e-12);
    }

    #[test]
    fn mma_noiseless_lambda_zero_recovers_projection() {
        let n = 10;
        let basis = canonical_basis(n, 4).unwrap();
        let y = ResponseSample::from_vector(basis.column(0) * 2.0).unwrap();
        let set = build_all_nested(4).unwrap();
        let fit =
            mma_fit(&y, &basis, &set, Penalty::Custom(0.0), Sigma2Source::Known(0.0)).unwrap();
        assert!((&fit.fitted - y.vector()).amax() <= 1e-10);
    }

    #[test]
    fn mma_beats_grid_on_fixed_seed_data() {
        let n = 30;
        let p = 4;
        let basis = canonical_basis(n, p).unwrap();
        let mut rng = crate::rng::rng_from_seed(555);
        let y = sample(
            (0..n)
                .map(|i| if i < p { 1.0 / (i + 1) as f64 } else { 0.0 } + rng.gen::<f64>() * 0.2)
                .collect(),
        );
        let set = build_all_nested(p).unwrap();
        let sigma2 = 0.04;
        let penalty = Penalty::Mallows;
        let fit = mma_fit(&y, &basis, &set, penalty, Sigma2Source::Known(sigma2)).unwrap();
        let lambda = penalty.lambda(n, p).unwrap();
        let qp = crate::qp::assemble_mallows_qp(&y, &basis, &set, lambda, sigma2).unwrap();
        let grid = crate::qp::grid_search_simplex(&qp, 20).unwrap();
        let w = match fit.weights.as_ref().unwrap() {
            FitWeights::Simplex(s) => s.as_slice().to_vec(),
            _ => unreachable!(),
        };
        assert!(qp.objective(&w) <= qp.objective(grid.as_slice()) + 1e-8);
        // Criterion at the returned weights is no worse than at any vertex.
        for m in 0..p {
            let mut vertex = vec![0.0; p];
            vertex[m] = 1.0;
            assert!(qp.objective(&w) <= qp.objective(&vertex) + 1e-9);
        }
    }

    #[test]
    fn mma_estimated_sigma2_path() {
        let n = 24;
        let basis = canonical_basis(n, 4).unwrap();
        let mut rng = crate::rng::rng_from_seed(77);
        let y = sample((0..n).map(|_| rng.gen::<f64>() - 0.5).collect());
        let set = build_all_nested(4).unwrap();
        let fit =
            mma_fit(&y, &basis, &set, Penalty::Mallows, Sigma2Source::EstimateFromLargest)
                .unwrap();
        let expect = estimate_sigma2(&y, &basis, 4).unwrap();
        assert_abs_diff_eq!(fit.sigma2_used, expect, epsilon = 1e-15);
    }

    #[test]
    fn fits_are_permutation_equivariant() {
        // Permuting the basis columns permutes the coefficients but leaves
        // the fitted vector unchanged (exactly, on the canonical basis).
        let n = 16;
        let p = 6;
        let basis = canonical_basis(n, p).unwrap();
        let mut rng = crate::rng::rng_from_seed(31);
        let y = sample((0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect());
        let sigma2 = 0.3;

        let perm: Vec<usize> = vec![3, 0, 5, 1, 4, 2];
        let dense = basis.to_dense();
        let mut permuted = dense.clone();
        for (to, &from) in perm.iter().enumerate() {
            permuted.set_column(to, &dense.column(from));
        }
        let basis_perm = crate::spectral::OrthoBasis::from_columns(permuted).unwrap();

        for maker in [adap_fit, soft_threshold_fit, hard_threshold_fit] {
            let a = maker(&y, &basis, sigma2).unwrap();
            let b = maker(&y, &basis_perm, sigma2).unwrap();
            assert_eq!(a.fitted, b.fitted);
        }
    }

    #[test]
    fn adap_dominates_hypercube_grid() {
        // The separable closed form beats every point of a dense hypercube
        // grid on the criterion it minimizes.
        let p = 4;
        let n = 50;
        let mut rng = crate::rng::rng_from_seed(404);
        let theta: Vec<f64> = (0..p).map(|_| rng.gen::<f64>() * 0.6 - 0.3).collect();
        let lambda = dimension_adaptive_lambda(n, p);
        let sigma2 = 0.5;
        let lam2s2 = lambda * lambda * sigma2;
        let criterion = |w: &[f64]| -> f64 {
            w.iter()
                .zip(&theta)
                .map(|(wi, t)| (1.0 - wi) * (1.0 - wi) * t * t + 2.0 * lam2s2 * wi)
                .sum()
        };
        let w_star = adap_weights(&theta, lambda, sigma2);
        let best = criterion(&w_star);
        let steps = 20; // step 0.05
        let mut idx = vec![0usize; p];
        loop {
            let w: Vec<f64> = idx.iter().map(|&i| i as f64 / steps as f64).collect();
            assert!(best <= criterion(&w) + 1e-10);
            // Odometer increment.
            let mut level = 0;
            loop {
                if level == p {
                    return;
                }
                idx[level] += 1;
                if idx[level] <= steps {
                    break;
                }
                idx[level] = 0;
                level += 1;
            }
        }
    }

    proptest! {
        // |soft_j| <= |adap_j| <= |hard_j| coordinate-wise.
        #[test]
        fn threshold_ordering(t in -3.0f64..3.0, lam in 0.01f64..1.0, sigma2 in 0.01f64..4.0) {
            let thr = lam * sigma2.sqrt();
            let soft = t.signum() * (t.abs() - thr).max(0.0);
            let adap = adap_weights(&[t], lam, sigma2)[0] * t;
            let hard = if t.abs() > thr { t } else { 0.0 };
            prop_assert!(soft.abs() <= adap.abs() + 1e-15);
            prop_assert!(adap.abs() <= hard.abs() + 1e-15);
        }
    }
}
