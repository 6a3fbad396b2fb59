//! Quadratic programs over the probability simplex.
//!
//! Both the Mallows criterion and the exact model-averaging risk are
//! quadratics `w' Q w + b' w + c` in the model weights, so weight estimation
//! and risk oracles reduce to the same problem: minimize a convex quadratic
//! over `W = {w >= 0, sum w = 1}`.
//!
//! The solver is Frank-Wolfe with exact line search plus a periodic away
//! step (every 10th iteration). On the simplex the linear minimization
//! oracle is a vertex pick and the iterate itself is its own vertex
//! decomposition, so away steps need no extra bookkeeping. Termination is
//! certified by the Frank-Wolfe duality gap: for convex objectives,
//! `f(w) - f(w*) <= gap`, so a returned gap below `tol` bounds the
//! suboptimality directly. Duplicate candidates make `Q` singular PSD; the
//! gap criterion still applies, only uniqueness of the argmin is lost.

use nalgebra::{DMatrix, DVector};

use crate::candidates::CandidateSet;
use crate::error::{Error, Result};
use crate::spectral::{MeanSpec, OrthoBasis, ResponseSample, SpectralCoefs};

/// `objective(w) = w' Q w + b' w + c` with `Q` symmetric PSD.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticProgram {
    q: DMatrix<f64>,
    b: DVector<f64>,
    c: f64,
}

impl QuadraticProgram {
    /// Validate symmetry (within `1e-10`, scaled by the largest entry) and
    /// positive semidefiniteness (Cholesky of `Q + 1e-8 ||Q||_max I` must
    /// succeed, i.e. the smallest eigenvalue is at least `-1e-8 ||Q||_max`).
    pub fn new(q: DMatrix<f64>, b: DVector<f64>, c: f64) -> Result<Self> {
        let m = q.nrows();
        if m == 0 || q.ncols() != m {
            return Err(Error::DimensionMismatch("Q must be square and non-empty".into()));
        }
        if b.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "b has length {}, Q is {m}x{m}",
                b.len()
            )));
        }
        if q.iter().any(|v| !v.is_finite()) || b.iter().any(|v| !v.is_finite()) || !c.is_finite() {
            return Err(Error::NonFinite("quadratic program".into()));
        }
        let scale = q.amax().max(1.0);
        for l in 0..m {
            for k in (l + 1)..m {
                if (q[(l, k)] - q[(k, l)]).abs() > 1e-10 * scale {
                    return Err(Error::InvalidArgument(format!(
                        "Q is not symmetric at ({l}, {k})"
                    )));
                }
            }
        }
        // The zero matrix (e.g. every candidate fits the data exactly) is
        // trivially PSD; a positive shift is required for Cholesky otherwise.
        let amax = q.amax();
        if amax > 0.0 {
            let shifted = &q + DMatrix::identity(m, m) * (1e-8 * amax);
            if nalgebra::Cholesky::new(shifted).is_none() {
                return Err(Error::NotPsd);
            }
        }
        Ok(Self { q, b, c })
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn objective(&self, w: &[f64]) -> f64 {
        assert_eq!(w.len(), self.dim());
        let w = DVector::from_column_slice(w);
        (&w.transpose() * &self.q * &w)[(0, 0)] + self.b.dot(&w) + self.c
    }

    /// `grad f(w) = 2 Q w + b`.
    fn gradient(&self, w: &DVector<f64>) -> DVector<f64> {
        2.0 * (&self.q * w) + &self.b
    }
}

/// Weights on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexWeights {
    w: Vec<f64>,
}

impl SimplexWeights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidArgument("empty weight vector".into()));
        }
        if let Some((m, &bad)) = w.iter().enumerate().find(|&(_, &v)| v < -1e-12) {
            return Err(Error::InvalidArgument(format!("weight w[{m}] = {bad} < 0")));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("weights sum to {sum}, not 1")));
        }
        Ok(Self { w })
    }

    pub fn vertex(m: usize, at: usize) -> Self {
        let mut w = vec![0.0; m];
        w[at] = 1.0;
        Self { w }
    }

    pub fn uniform(m: usize) -> Self {
        Self { w: vec![1.0 / m as f64; m] }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }
}

/// Result of a simplex-QP solve: weights, achieved objective, iterations
/// used, and the certified duality gap at termination.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub weights: SimplexWeights,
    pub objective: f64,
    pub iterations: usize,
    pub gap: f64,
}

/// Per-iteration solver diagnostics (see `io::write_solver_trace`).
#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub gap: f64,
}

/// Default iteration cap: `50 M^2`.
pub fn default_max_iter(m: usize) -> usize {
    50 * m * m
}

/// Default gap tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Minimize `qp` over the simplex starting from the uniform point.
pub fn solve_simplex_qp(qp: &QuadraticProgram, tol: f64, max_iter: usize) -> Result<SolveReport> {
    frank_wolfe(qp, SimplexWeights::uniform(qp.dim()), tol, max_iter, None)
}

/// Same as [`solve_simplex_qp`] but from a caller-supplied starting point.
/// A good warm start makes the gap certificate cheap to obtain.
pub fn solve_simplex_qp_from(
    qp: &QuadraticProgram,
    init: SimplexWeights,
    tol: f64,
    max_iter: usize,
) -> Result<SolveReport> {
    frank_wolfe(qp, init, tol, max_iter, None)
}

/// Solve while appending per-iteration objective and gap to `trace`.
pub fn solve_simplex_qp_traced(
    qp: &QuadraticProgram,
    tol: f64,
    max_iter: usize,
    trace: &mut Vec<TraceRow>,
) -> Result<SolveReport> {
    frank_wolfe(qp, SimplexWeights::uniform(qp.dim()), tol, max_iter, Some(trace))
}

fn frank_wolfe(
    qp: &QuadraticProgram,
    init: SimplexWeights,
    tol: f64,
    max_iter: usize,
    mut trace: Option<&mut Vec<TraceRow>>,
) -> Result<SolveReport> {
    if tol < 0.0 {
        return Err(Error::InvalidArgument("tol must be >= 0".into()));
    }
    let m = qp.dim();
    if init.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "start point has length {}, QP has {m}",
            init.len()
        )));
    }
    if m == 1 {
        let w = SimplexWeights::vertex(1, 0);
        let objective = qp.objective(w.as_slice());
        return Ok(SolveReport { weights: w, objective, iterations: 0, gap: 0.0 });
    }

    let mut w = DVector::from_column_slice(init.as_slice());
    let mut gap = f64::INFINITY;
    for iter in 0..max_iter {
        let grad = qp.gradient(&w);

        // Linear minimization oracle over the simplex: lowest-index minimizer.
        let mut s = 0;
        for k in 1..m {
            if grad[k] < grad[s] {
                s = k;
            }
        }
        let grad_dot_w = grad.dot(&w);
        gap = grad_dot_w - grad[s];
        if let Some(t) = trace.as_deref_mut() {
            t.push(TraceRow { iteration: iter, objective: qp.objective(w.as_slice()), gap });
        }
        if gap <= tol {
            return Ok(finish(qp, w, iter, gap));
        }

        // Every 10th iteration, try an away step: move mass off the active
        // vertex with the largest gradient entry. On the simplex the iterate
        // is its own convex decomposition, so the away vertex is just the
        // worst active coordinate.
        let mut dir_away = false;
        let mut away = 0usize;
        if (iter + 1) % 10 == 0 {
            let mut found = false;
            for k in 0..m {
                if w[k] > 0.0 && (!found || grad[k] > grad[away]) {
                    away = k;
                    found = true;
                }
            }
            // Away direction w - e_a descends iff grad' w > grad[a] is false;
            // the derivative is grad' w - grad[a] <= 0 with equality when the
            // active face is flat. Require strict descent and room to move.
            if found && grad[away] > grad_dot_w && w[away] < 1.0 {
                dir_away = true;
            }
        }

        if dir_away {
            // d = w - e_a, gamma_max = w_a / (1 - w_a).
            let gamma_max = w[away] / (1.0 - w[away]);
            let mut d = w.clone();
            d[away] -= 1.0;
            let gamma = exact_step(qp, &grad, &d, gamma_max);
            w.axpy(gamma, &d, 1.0);
            w[away] = w[away].max(0.0);
        } else {
            // d = e_s - w, gamma_max = 1.
            let mut d = -w.clone();
            d[s] += 1.0;
            let gamma = exact_step(qp, &grad, &d, 1.0);
            w.axpy(gamma, &d, 1.0);
        }
        // Guard against rounding drift off the simplex.
        for k in 0..m {
            if w[k] < 0.0 {
                w[k] = 0.0;
            }
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-14 {
            w /= sum;
        }
    }

    if gap <= tol {
        return Ok(finish(qp, w, max_iter, gap));
    }
    Err(Error::NoConvergence {
        tol,
        max_iter,
        objective: qp.objective(w.as_slice()),
        gap,
        best: w.iter().copied().collect(),
    })
}

/// Exact line search for a quadratic along direction `d`:
/// `argmin_{0 <= g <= gmax} f(w + g d)` is `-grad'd / (2 d'Qd)` clamped.
fn exact_step(qp: &QuadraticProgram, grad: &DVector<f64>, d: &DVector<f64>, gamma_max: f64) -> f64 {
    let lin = grad.dot(d);
    let quad = d.dot(&(qp.q() * d));
    if quad > 0.0 {
        (-lin / (2.0 * quad)).clamp(0.0, gamma_max)
    } else {
        // Flat (PSD-singular) direction with negative slope: go to the edge.
        gamma_max
    }
}

fn finish(qp: &QuadraticProgram, w: DVector<f64>, iterations: usize, gap: f64) -> SolveReport {
    let weights = SimplexWeights::new(w.iter().copied().collect())
        .expect("iterate stays on the simplex");
    let objective = qp.objective(weights.as_slice());
    SolveReport { weights, objective, iterations, gap }
}

/// Exact minimizer over the lattice `{w : w_m = c_m / K, sum c_m = K}`.
/// Enumerates all compositions of `K` into `M` parts; guarded at 10^7 points.
pub fn grid_search_simplex(qp: &QuadraticProgram, k: usize) -> Result<SimplexWeights> {
    if k == 0 {
        return Err(Error::InvalidArgument("grid resolution K must be >= 1".into()));
    }
    let m = qp.dim();
    let count = compositions(k as u128, m as u128);
    if count > 10_000_000 {
        return Err(Error::CapacityExceeded(format!(
            "grid has {count} points for M = {m}, K = {k}; limit is 10^7"
        )));
    }
    let mut counts = vec![0usize; m];
    let mut best_w = vec![0.0; m];
    let mut best_obj = f64::INFINITY;
    let mut scratch = vec![0.0; m];
    enumerate_compositions(qp, k, k, 0, &mut counts, &mut scratch, &mut best_obj, &mut best_w);
    SimplexWeights::new(best_w)
}

/// Number of compositions of `k` into `m` nonnegative parts: C(k+m-1, m-1).
fn compositions(k: u128, m: u128) -> u128 {
    let mut result: u128 = 1;
    for i in 0..(m - 1) {
        result = result.saturating_mul(k + i + 1) / (i + 1);
        if result > u128::from(u64::MAX) {
            return result;
        }
    }
    result
}

#[allow(clippy::too_many_arguments)]
fn enumerate_compositions(
    qp: &QuadraticProgram,
    k_total: usize,
    remaining: usize,
    level: usize,
    counts: &mut [usize],
    scratch: &mut [f64],
    best_obj: &mut f64,
    best_w: &mut [f64],
) {
    let m = counts.len();
    if level == m - 1 {
        counts[level] = remaining;
        for (s, &c) in scratch.iter_mut().zip(counts.iter()) {
            *s = c as f64 / k_total as f64;
        }
        let obj = qp.objective(scratch);
        // Strict improvement keeps the first minimizer in enumeration order.
        if obj < *best_obj {
            *best_obj = obj;
            best_w.copy_from_slice(scratch);
        }
        return;
    }
    for c in 0..=remaining {
        counts[level] = c;
        enumerate_compositions(
            qp,
            k_total,
            remaining - c,
            level + 1,
            counts,
            scratch,
            best_obj,
            best_w,
        );
    }
    counts[level] = 0;
}

/// Mallows-type criterion as a QP over the model weights:
/// `C(w) = ||y - P(w) y||^2 / n + 2 lambda^2 sigma2_hat tr P(w)`.
///
/// In spectral form the residual Gram entries are
/// `Q_lm = y'y/n - A_l - A_m + A_{l ∩ m}` with `A_S = sum_{j in S}
/// theta_tilde_j^2`, and `b_m = 2 lambda^2 sigma2_hat k_m`, `c = 0`. The
/// objective equals the criterion exactly for every simplex `w`, including
/// the part of `y` outside the basis span.
pub fn assemble_mallows_qp(
    y: &ResponseSample,
    basis: &OrthoBasis,
    set: &CandidateSet,
    lambda: f64,
    sigma2_hat: f64,
) -> Result<QuadraticProgram> {
    if lambda < 0.0 || sigma2_hat < 0.0 {
        return Err(Error::InvalidArgument(
            "lambda and sigma2_hat must be nonnegative".into(),
        ));
    }
    if set.p() != basis.p() {
        return Err(Error::DimensionMismatch(format!(
            "candidate set has p = {}, basis has p = {}",
            set.p(),
            basis.p()
        )));
    }
    let coefs = crate::spectral::spectral_transform(basis, y)?;
    assemble_mallows_qp_spectral(&coefs, y.squared_norm(), set, lambda, sigma2_hat)
}

/// Spectral-domain variant of [`assemble_mallows_qp`] for callers that
/// already hold the coefficients. `y_squared_norm` is `y'y` of the original
/// observations; it carries the out-of-span residual energy.
pub fn assemble_mallows_qp_spectral(
    coefs: &SpectralCoefs,
    y_squared_norm: f64,
    set: &CandidateSet,
    lambda: f64,
    sigma2_hat: f64,
) -> Result<QuadraticProgram> {
    if lambda < 0.0 || sigma2_hat < 0.0 {
        return Err(Error::InvalidArgument(
            "lambda and sigma2_hat must be nonnegative".into(),
        ));
    }
    if set.p() != coefs.p() {
        return Err(Error::DimensionMismatch(format!(
            "candidate set has p = {}, coefficients have p = {}",
            set.p(),
            coefs.p()
        )));
    }
    let n = coefs.n as f64;
    let m = set.len();
    let sq: Vec<f64> = coefs.theta_tilde.iter().map(|t| t * t).collect();
    let yty_n = y_squared_norm / n;

    // Model energies A_m = sum_{j in I_m} theta_tilde_j^2.
    let energy: Vec<f64> = (0..m)
        .map(|i| set.model(i).iter().map(|&j| sq[j]).sum::<f64>())
        .collect();

    // Residual energies cancel against yty/n; entries within rounding noise
    // of zero are snapped there so exact fits give an exactly PSD (zero)
    // block instead of a noise matrix with tiny negative eigenvalues.
    let noise_floor = 32.0 * f64::EPSILON * yty_n.abs();
    let mut q = DMatrix::zeros(m, m);
    for l in 0..m {
        for k in l..m {
            let inter = set.intersection_sum(l, k, &sq);
            let mut v = yty_n - energy[l] - energy[k] + inter;
            if v.abs() < noise_floor {
                v = 0.0;
            }
            q[(l, k)] = v;
            q[(k, l)] = v;
        }
    }
    let penalty = 2.0 * lambda * lambda * sigma2_hat;
    let b = DVector::from_fn(m, |i, _| penalty * set.dim(i) as f64);
    QuadraticProgram::new(q, b, 0.0)
}

/// Exact model-averaging risk as a QP over the model weights:
/// `R(w) = sum_j [(1 - gamma_j(w))^2 theta_j^2 + gamma_j(w)^2 sigma2 / n]`.
///
/// Expanding with the membership structure gives
/// `Q_lm = sum_{j in I_l ∩ I_m} (theta_j^2 + sigma2/n)`,
/// `b_m = -2 sum_{j in I_m} theta_j^2`, `c = sum_j theta_j^2`, matching the
/// projector form `Q_lm = [mu' P_l P_m mu + sigma2 tr(P_l P_m)] / n`.
pub fn assemble_risk_qp(
    mean: &MeanSpec,
    sigma2: f64,
    set: &CandidateSet,
) -> Result<QuadraticProgram> {
    if sigma2 < 0.0 {
        return Err(Error::InvalidArgument("sigma2 must be nonnegative".into()));
    }
    if set.p() != mean.p() {
        return Err(Error::DimensionMismatch(format!(
            "candidate set has p = {}, mean has p = {}",
            set.p(),
            mean.p()
        )));
    }
    let m = set.len();
    let var = sigma2 / mean.n as f64;
    let sq: Vec<f64> = mean.theta.iter().map(|t| t * t).collect();
    let weighted: Vec<f64> = sq.iter().map(|s| s + var).collect();

    let mut q = DMatrix::zeros(m, m);
    for l in 0..m {
        for k in l..m {
            let v = set.intersection_sum(l, k, &weighted);
            q[(l, k)] = v;
            q[(k, l)] = v;
        }
    }
    let b = DVector::from_fn(m, |i, _| {
        -2.0 * set.model(i).iter().map(|&j| sq[j]).sum::<f64>()
    });
    let c = sq.iter().sum();
    QuadraticProgram::new(q, b, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::candidates::{build_all_nested, enumerate_all_subsets, shrinkage_profile};
    use crate::spectral::{canonical_basis, spectral_transform};
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn random_psd(m: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = crate::rng::rng_from_seed(seed);
        let a = DMatrix::from_fn(m, m, |_, _| rng.gen::<f64>() - 0.5);
        &a * a.transpose()
    }

    fn random_simplex(m: usize, rng: &mut impl Rng) -> Vec<f64> {
        let mut w: Vec<f64> = (0..m).map(|_| -(rng.gen::<f64>().max(1e-12)).ln()).collect();
        let sum: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= sum);
        w
    }

    #[test]
    fn qp_validation() {
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 1.0]);
        assert!(QuadraticProgram::new(q, DVector::zeros(2), 0.0).is_ok());

        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.3, 1.0]);
        assert!(QuadraticProgram::new(asym, DVector::zeros(2), 0.0).is_err());

        let neg = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            QuadraticProgram::new(neg, DVector::zeros(2), 0.0),
            Err(Error::NotPsd)
        ));

        // Singular PSD (duplicate candidate) must be accepted.
        let sing = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(QuadraticProgram::new(sing, DVector::zeros(2), 0.0).is_ok());
    }

    #[test]
    fn single_model_returns_immediately() {
        let qp = QuadraticProgram::new(
            DMatrix::from_element(1, 1, 2.0),
            DVector::from_element(1, 1.0),
            0.5,
        )
        .unwrap();
        let r = solve_simplex_qp(&qp, 1e-9, 10).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.weights.as_slice(), &[1.0]);
        assert_abs_diff_eq!(r.objective, 3.5);
    }

    #[test]
    fn identity_qp_has_uniform_minimizer() {
        let qp =
            QuadraticProgram::new(DMatrix::identity(3, 3), DVector::zeros(3), 0.0).unwrap();
        let r = solve_simplex_qp(&qp, 1e-12, default_max_iter(3)).unwrap();
        for &w in r.weights.as_slice() {
            assert_abs_diff_eq!(w, 1.0 / 3.0, epsilon = 1e-6);
        }
        assert_abs_diff_eq!(r.objective, 1.0 / 3.0, epsilon = 1e-10);
        assert!(r.gap <= 1e-12);
    }

    #[test]
    fn solver_beats_grid_on_random_psd() {
        for seed in 0..10u64 {
            let m = 4;
            let q = random_psd(m, seed);
            let mut rng = crate::rng::rng_from_seed(900 + seed);
            let b = DVector::from_fn(m, |_, _| rng.gen::<f64>() - 0.5);
            let qp = QuadraticProgram::new(q, b, 0.0).unwrap();
            let fw = solve_simplex_qp(&qp, 1e-9, default_max_iter(m)).unwrap();
            let grid = grid_search_simplex(&qp, 50).unwrap();
            let grid_obj = qp.objective(grid.as_slice());
            assert!(
                fw.objective <= grid_obj + 1e-8,
                "seed {seed}: fw {} grid {}",
                fw.objective,
                grid_obj
            );
        }
    }

    #[test]
    fn grid_search_basics() {
        let qp = QuadraticProgram::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
            DVector::zeros(2),
            0.0,
        )
        .unwrap();
        let w = grid_search_simplex(&qp, 2).unwrap();
        assert_eq!(w.as_slice(), &[0.0, 1.0]);

        let one = QuadraticProgram::new(
            DMatrix::from_element(1, 1, 3.0),
            DVector::zeros(1),
            0.0,
        )
        .unwrap();
        assert_eq!(grid_search_simplex(&one, 17).unwrap().as_slice(), &[1.0]);
    }

    #[test]
    fn grid_capacity_guard() {
        let qp =
            QuadraticProgram::new(DMatrix::identity(8, 8), DVector::zeros(8), 0.0).unwrap();
        assert!(matches!(
            grid_search_simplex(&qp, 400),
            Err(Error::CapacityExceeded(_))
        ));
    }

    #[test]
    fn solver_monotone_objective() {
        let q = random_psd(5, 77);
        let mut rng = crate::rng::rng_from_seed(78);
        let b = DVector::from_fn(5, |_, _| rng.gen::<f64>() - 0.5);
        let qp = QuadraticProgram::new(q, b, 0.0).unwrap();
        let mut trace = Vec::new();
        let r = solve_simplex_qp_traced(&qp, 1e-10, default_max_iter(5), &mut trace).unwrap();
        assert!(trace.len() >= 2);
        for pair in trace.windows(2) {
            assert!(
                pair[1].objective <= pair[0].objective + 1e-12,
                "objective increased at iteration {}",
                pair[1].iteration
            );
        }
        assert!(r.gap <= 1e-10);
    }

    #[test]
    fn solver_handles_duplicate_candidates() {
        // Two identical rows/columns: singular PSD, flat optimum direction.
        let q = DMatrix::from_row_slice(3, 3, &[2.0, 2.0, 0.5, 2.0, 2.0, 0.5, 0.5, 0.5, 1.0]);
        let qp = QuadraticProgram::new(q, DVector::zeros(3), 0.0).unwrap();
        let r = solve_simplex_qp(&qp, 1e-9, default_max_iter(3)).unwrap();
        assert!(r.gap <= 1e-9);
    }

    #[test]
    fn nonconvergence_carries_best_iterate() {
        let q = random_psd(4, 5);
        let qp = QuadraticProgram::new(q, DVector::zeros(4), 0.0).unwrap();
        match solve_simplex_qp(&qp, 0.0, 2) {
            Err(Error::NoConvergence { best, gap, .. }) => {
                assert_eq!(best.len(), 4);
                assert!(gap > 0.0);
            }
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn mallows_qp_matches_direct_criterion() {
        // Objective at random simplex points must equal the criterion
        // computed from scratch: ||y - P(w) y||^2 / n + 2 lambda^2 s2 tr P(w).
        let n = 16;
        let p = 4;
        let basis = canonical_basis(n, p).unwrap();
        let mut rng = crate::rng::rng_from_seed(123);
        let y = ResponseSample::new((0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect())
            .unwrap();
        let set = build_all_nested(p).unwrap();
        let lambda = (1.0 / n as f64).sqrt();
        let s2 = 0.7;
        let qp = assemble_mallows_qp(&y, &basis, &set, lambda, s2).unwrap();

        let coefs = spectral_transform(&basis, &y).unwrap();
        for _ in 0..10 {
            let w = random_simplex(p, &mut rng);
            // Direct evaluation: residual in observation space.
            let gamma = shrinkage_profile(&set, &w).unwrap();
            let keep: Vec<f64> = gamma
                .factors()
                .iter()
                .zip(coefs.theta_tilde.iter())
                .map(|(g, t)| g * t)
                .collect();
            let fit = crate::spectral::reconstruct(&basis, &keep).unwrap();
            let resid = y.vector() - fit;
            let tr: f64 = w
                .iter()
                .enumerate()
                .map(|(m, wm)| wm * set.dim(m) as f64)
                .sum();
            let direct = resid.dot(&resid) / n as f64 + 2.0 * lambda * lambda * s2 * tr;
            let qp_val = qp.objective(&w);
            assert_abs_diff_eq!(qp_val, direct, epsilon = 1e-10 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn mallows_qp_accepts_exact_fit() {
        // y exactly in the span of every candidate makes the residual Gram
        // the zero matrix; assembly and solving must still work.
        let n = 8;
        let basis = canonical_basis(n, 3).unwrap();
        let y = ResponseSample::from_vector(basis.column(0)).unwrap();
        let set = build_all_nested(3).unwrap();
        let qp = assemble_mallows_qp(&y, &basis, &set, 0.3, 1.0).unwrap();
        let r = solve_simplex_qp(&qp, 1e-9, default_max_iter(3)).unwrap();
        // Smallest model wins: zero residual everywhere, smallest penalty.
        assert!(r.weights.as_slice()[0] > 0.99);
    }

    #[test]
    fn mallows_qp_single_candidate_value() {
        let n = 8;
        let basis = canonical_basis(n, 2).unwrap();
        let mut rng = crate::rng::rng_from_seed(5);
        let y =
            ResponseSample::new((0..n).map(|_| rng.gen::<f64>()).collect()).unwrap();
        let set = CandidateSet::custom(vec![vec![0]], 2).unwrap();
        let lambda = 0.3;
        let s2 = 1.1;
        let qp = assemble_mallows_qp(&y, &basis, &set, lambda, s2).unwrap();
        let coefs = spectral_transform(&basis, &y).unwrap();
        let fit = crate::spectral::reconstruct(&basis, &[coefs.theta_tilde[0], 0.0]).unwrap();
        let resid = y.vector() - fit;
        let expect = resid.dot(&resid) / n as f64 + 2.0 * lambda * lambda * s2;
        assert_abs_diff_eq!(qp.objective(&[1.0]), expect, epsilon = 1e-12);
    }

    #[test]
    fn mallows_lambda_zero_prefers_largest_model() {
        // With no penalty and the full model among the candidates, the
        // minimizer drives the spectral residual to its floor.
        let n = 10;
        let p = 10;
        let basis = canonical_basis(n, p).unwrap();
        let mut rng = crate::rng::rng_from_seed(42);
        let y =
            ResponseSample::new((0..n).map(|_| rng.gen::<f64>() + 0.5).collect()).unwrap();
        let set = build_all_nested(p).unwrap();
        let qp = assemble_mallows_qp(&y, &basis, &set, 0.0, 1.0).unwrap();
        let r = solve_simplex_qp(&qp, 1e-11, default_max_iter(p)).unwrap();
        // Full model has zero residual here (p = n), so optimum is ~0.
        assert!(r.objective <= 1e-9);
        assert!(r.weights.as_slice()[p - 1] > 0.99);
    }

    #[test]
    fn risk_qp_matches_spectral_formula() {
        let mean = MeanSpec::new(vec![1.0, 0.1], 50).unwrap();
        let sigma2 = 2.0; // sigma2 / n = 0.04
        let set = build_all_nested(2).unwrap();
        let qp = assemble_risk_qp(&mean, sigma2, &set).unwrap();
        // w = (1, 0): gamma = (1, 0) -> 0.1^2 + 0.04 = 0.05.
        assert_abs_diff_eq!(qp.objective(&[1.0, 0.0]), 0.05, epsilon = 1e-12);
        // w = (0, 1): gamma = (1, 1) -> 2 * 0.04 = 0.08.
        assert_abs_diff_eq!(qp.objective(&[0.0, 1.0]), 0.08, epsilon = 1e-12);
    }

    #[test]
    fn risk_qp_pure_variance_and_pure_bias() {
        let n = 25;
        let set = build_all_nested(3).unwrap();

        // theta = 0: objective(w) = sigma2/n * sum gamma_j^2, minimized at
        // the smallest model vertex.
        let zero = MeanSpec::new(vec![0.0; 3], n).unwrap();
        let qp = assemble_risk_qp(&zero, 1.0, &set).unwrap();
        let r = solve_simplex_qp(&qp, 1e-12, default_max_iter(3)).unwrap();
        assert!(r.weights.as_slice()[0] > 1.0 - 1e-6);
        assert_abs_diff_eq!(r.objective, 1.0 / n as f64, epsilon = 1e-9);

        // sigma2 = 0: any w with gamma = 1 on the support is optimal.
        let mean = MeanSpec::new(vec![1.0, 0.5, 0.2], n).unwrap();
        let qp = assemble_risk_qp(&mean, 0.0, &set).unwrap();
        assert_abs_diff_eq!(qp.objective(&[0.0, 0.0, 1.0]), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn risk_qp_agrees_with_explicit_projectors() {
        // Spectral assembly vs the projector formula on a non-canonical basis.
        let n = 12;
        let p = 5;
        let mut rng = crate::rng::rng_from_seed(31);
        let x = DMatrix::from_fn(n, p, |_, _| rng.gen::<f64>() - 0.5);
        let basis = crate::spectral::basis_from_svd(&x, 1e-10).unwrap();
        let theta: Vec<f64> = (0..p).map(|_| rng.gen::<f64>() - 0.5).collect();
        let mean = MeanSpec::new(theta.clone(), n).unwrap();
        let sigma2 = 0.5;
        let set = enumerate_all_subsets(p, false).unwrap();
        let qp = assemble_risk_qp(&mean, sigma2, &set).unwrap();

        let dense = basis.to_dense();
        let mu = mean.mean_vector(&basis).unwrap();
        let projectors: Vec<DMatrix<f64>> = set
            .models()
            .iter()
            .map(|idx| {
                let mut p_m = DMatrix::zeros(n, n);
                for &j in idx {
                    let col = dense.column(j);
                    p_m += col * col.transpose() / n as f64;
                }
                p_m
            })
            .collect();
        for _ in 0..5 {
            let w = random_simplex(set.len(), &mut rng);
            let mut pw = DMatrix::zeros(n, n);
            for (idx, &wm) in w.iter().enumerate() {
                pw += &projectors[idx] * wm;
            }
            let resid = (DMatrix::identity(n, n) - &pw) * &mu;
            let direct = resid.dot(&resid) / n as f64
                + sigma2 / n as f64 * (&pw * &pw).trace();
            assert_abs_diff_eq!(qp.objective(&w), direct, epsilon = 1e-9);
        }
    }

    #[test]
    fn objective_identity_random_points() {
        // 100 random simplex points on an assembled risk QP vs the direct
        // per-coordinate formula.
        let mut rng = crate::rng::rng_from_seed(64);
        let p = 6;
        let n = 40;
        let theta: Vec<f64> = (0..p).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let mean = MeanSpec::new(theta.clone(), n).unwrap();
        let sigma2 = 0.9;
        let set = build_all_nested(p).unwrap();
        let qp = assemble_risk_qp(&mean, sigma2, &set).unwrap();
        for _ in 0..100 {
            let w = random_simplex(p, &mut rng);
            let gamma = shrinkage_profile(&set, &w).unwrap();
            let direct: f64 = gamma
                .factors()
                .iter()
                .zip(&theta)
                .map(|(g, t)| (1.0 - g) * (1.0 - g) * t * t + g * g * sigma2 / n as f64)
                .sum();
            let v = qp.objective(&w);
            assert!((v - direct).abs() <= 1e-9 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn scale_equivariance_of_minimizer() {
        // Scaling y by s and sigma2_hat by s^2 scales Q by s^2 and leaves
        // the argmin unchanged.
        let n = 20;
        let p = 4;
        let basis = canonical_basis(n, p).unwrap();
        let mut rng = crate::rng::rng_from_seed(15);
        let yv: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let set = build_all_nested(p).unwrap();
        let lambda = (1.0 / n as f64).sqrt();

        let y1 = ResponseSample::new(yv.clone()).unwrap();
        let qp1 = assemble_mallows_qp(&y1, &basis, &set, lambda, 0.5).unwrap();
        let r1 = solve_simplex_qp(&qp1, 1e-11, default_max_iter(p)).unwrap();

        let s = 3.0;
        let y2 = ResponseSample::new(yv.iter().map(|v| v * s).collect()).unwrap();
        let qp2 = assemble_mallows_qp(&y2, &basis, &set, lambda, 0.5 * s * s).unwrap();
        let r2 = solve_simplex_qp(&qp2, 1e-11 * s * s, default_max_iter(p)).unwrap();

        for (a, b) in r1.weights.as_slice().iter().zip(r2.weights.as_slice()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-5);
        }
    }

    #[test]
    fn grid_matches_solver_within_grid_resolution() {
        for seed in [1u64, 2, 3] {
            let m = 3;
            let q = random_psd(m, 400 + seed);
            let qp = QuadraticProgram::new(q, DVector::zeros(m), 0.0).unwrap();
            let fw = solve_simplex_qp(&qp, 1e-10, default_max_iter(m)).unwrap();
            let grid = grid_search_simplex(&qp, 60).unwrap();
            let step = 1.0 / 60.0;
            let bound = fw.objective + 1e-10 + step * step * qp.q().amax() * (m as f64);
            assert!(qp.objective(grid.as_slice()) <= bound);
        }
    }
}
