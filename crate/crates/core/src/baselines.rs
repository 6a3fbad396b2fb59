//! Penalized least-squares baselines on a raw design matrix.
//!
//! Ridge solves `(X'X + n lambda I) beta = X'y` for each grid value; lasso
//! minimizes `||y - X beta||^2 / (2n) + lambda ||beta||_1` by cyclic
//! coordinate descent with a duality-gap stopping rule. Both pick `lambda`
//! by k-fold cross-validation over contiguous blocks (an optional seeded
//! shuffle is available), choosing the grid value with the smallest mean
//! validation MSE and breaking ties toward the larger penalty.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// How cross-validation folds are cut.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FoldMode {
    /// Contiguous blocks of rows in their given order.
    Contiguous,
    /// Rows shuffled by a seeded permutation before cutting blocks.
    Shuffled { seed: u64 },
}

/// Outcome of a cross-validated penalized fit.
#[derive(Debug, Clone)]
pub struct CvFit {
    pub beta: DVector<f64>,
    pub chosen_lambda: f64,
    /// Mean validation MSE for each grid value, in grid order.
    pub cv_mse: Vec<f64>,
}

impl CvFit {
    pub fn predict(&self, x: &DMatrix<f64>) -> DVector<f64> {
        x * &self.beta
    }
}

fn check_inputs(x: &DMatrix<f64>, y: &DVector<f64>, grid: &[f64], folds: usize) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "X has {} rows, y has {}",
            x.nrows(),
            y.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("design matrix or response".into()));
    }
    if grid.is_empty() {
        return Err(Error::InvalidArgument("penalty grid is empty".into()));
    }
    if grid.iter().any(|&l| l < 0.0 || !l.is_finite()) {
        return Err(Error::InvalidArgument("penalty grid must be nonnegative".into()));
    }
    if folds < 2 {
        return Err(Error::InvalidArgument("need at least 2 folds".into()));
    }
    if folds > x.nrows() {
        return Err(Error::InvalidArgument(format!(
            "{folds} folds for {} rows",
            x.nrows()
        )));
    }
    Ok(())
}

/// Row order used for fold cutting.
fn fold_order(n: usize, mode: FoldMode) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    if let FoldMode::Shuffled { seed } = mode {
        let mut rng = rng_from_seed(seed);
        // Fisher-Yates.
        for i in (1..n).rev() {
            let j = rand::Rng::gen_range(&mut rng, 0..=i);
            order.swap(i, j);
        }
    }
    order
}

/// Validation row ranges for `folds` contiguous blocks over `n` rows.
fn fold_ranges(n: usize, folds: usize) -> Vec<std::ops::Range<usize>> {
    (0..folds)
        .map(|f| (f * n / folds)..((f + 1) * n / folds))
        .collect()
}

fn split(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    order: &[usize],
    val: &std::ops::Range<usize>,
) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>, DVector<f64>) {
    let d = x.ncols();
    let val_rows: Vec<usize> = order[val.clone()].to_vec();
    let train_rows: Vec<usize> = order[..val.start]
        .iter()
        .chain(order[val.end..].iter())
        .copied()
        .collect();
    let take = |rows: &[usize]| -> (DMatrix<f64>, DVector<f64>) {
        let mut xm = DMatrix::zeros(rows.len(), d);
        let mut yv = DVector::zeros(rows.len());
        for (to, &from) in rows.iter().enumerate() {
            xm.row_mut(to).copy_from(&x.row(from));
            yv[to] = y[from];
        }
        (xm, yv)
    };
    let (xt, yt) = take(&train_rows);
    let (xv, yv) = take(&val_rows);
    (xt, yt, xv, yv)
}

/// Pick the grid value with smallest mean validation MSE; ties go to the
/// larger penalty.
fn choose_lambda(grid: &[f64], cv_mse: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..grid.len() {
        let better = cv_mse[i] < cv_mse[best]
            || (cv_mse[i] == cv_mse[best] && grid[i] > grid[best]);
        if better {
            best = i;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Ridge
// ---------------------------------------------------------------------------

/// Ridge solutions for a whole grid from one thin SVD: with `X = U S V'`,
/// `beta(lambda) = V diag(s_i / (s_i^2 + n lambda)) U' y`, which satisfies
/// `(X'X + n lambda I) beta = X'y` exactly for `lambda > 0`.
struct RidgePath {
    v: DMatrix<f64>,
    s: Vec<f64>,
    uty: DVector<f64>,
    n: usize,
}

impl RidgePath {
    fn new(x: &DMatrix<f64>, y: &DVector<f64>) -> Self {
        let svd = x.clone().svd(true, true);
        let u = svd.u.expect("u requested");
        let v_t = svd.v_t.expect("v_t requested");
        let uty = u.transpose() * y;
        Self {
            v: v_t.transpose(),
            s: svd.singular_values.iter().copied().collect(),
            uty,
            n: x.nrows(),
        }
    }

    fn rank(&self, tol: f64) -> usize {
        let smax = self.s.iter().cloned().fold(0.0f64, f64::max);
        self.s.iter().filter(|&&s| s > tol * smax).count()
    }

    fn beta(&self, lambda: f64) -> DVector<f64> {
        let n = self.n as f64;
        let coef = DVector::from_fn(self.s.len(), |i, _| {
            let s = self.s[i];
            let denom = s * s + n * lambda;
            if denom > 0.0 {
                s * self.uty[i] / denom
            } else {
                0.0
            }
        });
        &self.v * coef
    }
}

/// Cross-validated ridge regression.
pub fn ridge_cv_fit(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda_grid: &[f64],
    folds: usize,
    mode: FoldMode,
) -> Result<CvFit> {
    check_inputs(x, y, lambda_grid, folds)?;
    let full = RidgePath::new(x, y);
    if lambda_grid.contains(&0.0) && full.rank(1e-12) < x.ncols() {
        return Err(Error::RankDeficient(
            "lambda = 0 in the ridge grid but X is rank deficient".into(),
        ));
    }

    let n = x.nrows();
    let order = fold_order(n, mode);
    let ranges = fold_ranges(n, folds);
    let mut cv_sum = vec![0.0; lambda_grid.len()];
    for range in &ranges {
        let (xt, yt, xv, yv) = split(x, y, &order, range);
        let path = RidgePath::new(&xt, &yt);
        for (i, &lambda) in lambda_grid.iter().enumerate() {
            let beta = path.beta(lambda);
            let resid = &xv * beta - &yv;
            cv_sum[i] += resid.dot(&resid) / yv.len() as f64;
        }
    }
    let cv_mse: Vec<f64> = cv_sum.iter().map(|s| s / folds as f64).collect();
    let best = choose_lambda(lambda_grid, &cv_mse);
    Ok(CvFit { beta: full.beta(lambda_grid[best]), chosen_lambda: lambda_grid[best], cv_mse })
}

// ---------------------------------------------------------------------------
// Lasso
// ---------------------------------------------------------------------------

/// `||y - X beta||^2 / (2n) + lambda ||beta||_1`.
pub fn lasso_objective(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64, beta: &DVector<f64>) -> f64 {
    let resid = y - x * beta;
    resid.dot(&resid) / (2.0 * x.nrows() as f64) + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
}

fn soft(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Lasso solver state in the Gram (covariance-update) domain.
///
/// For a fixed training matrix the Gram `G = X'X` and `c = X'y` are
/// precomputed once and shared along the whole penalty path; every
/// coordinate update then costs O(d), and the duality gap is O(d) instead
/// of O(n d):
/// `||r||^2 = ||y||^2 - 2 beta'c + beta'g` and `X'r = c - g` with
/// `g = G beta` maintained incrementally.
struct LassoPath {
    gram: DMatrix<f64>,
    xty: DVector<f64>,
    yty: f64,
    n: usize,
}

impl LassoPath {
    fn new(x: &DMatrix<f64>, y: &DVector<f64>) -> Self {
        LassoPath {
            gram: x.transpose() * x,
            xty: x.transpose() * y,
            yty: y.dot(y),
            n: x.nrows(),
        }
    }

    fn dim(&self) -> usize {
        self.xty.len()
    }

    /// `||y - X beta||^2` from the maintained `g = G beta`.
    fn resid_sq(&self, beta: &DVector<f64>, g: &DVector<f64>) -> f64 {
        (self.yty - 2.0 * beta.dot(&self.xty) + beta.dot(g)).max(0.0)
    }

    fn primal(&self, lambda: f64, beta: &DVector<f64>, g: &DVector<f64>) -> f64 {
        self.resid_sq(beta, g) / (2.0 * self.n as f64)
            + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
    }

    /// Duality gap at the current iterate. The dual point is the scaled
    /// residual `nu = s r / n` with `s = min(1, n lambda / ||X'r||_inf)`.
    fn gap(&self, lambda: f64, beta: &DVector<f64>, g: &DVector<f64>) -> f64 {
        let nf = self.n as f64;
        let resid_sq = self.resid_sq(beta, g);
        let primal =
            resid_sq / (2.0 * nf) + lambda * beta.iter().map(|b| b.abs()).sum::<f64>();
        let inf_norm = (&self.xty - g).amax();
        let scale = if inf_norm > nf * lambda { nf * lambda / inf_norm } else { 1.0 };
        // y'r = ||r||^2 + beta'X'r.
        let ytr = resid_sq + beta.dot(&self.xty) - beta.dot(g);
        let dual = scale * ytr / nf - scale * scale * resid_sq / (2.0 * nf);
        primal - dual
    }

    /// One cyclic sweep; `active_only` restricts to nonzero coordinates.
    /// Returns the number of coordinates that moved.
    fn cycle(
        &self,
        lambda: f64,
        beta: &mut DVector<f64>,
        g: &mut DVector<f64>,
        active_only: bool,
    ) -> usize {
        let nf = self.n as f64;
        let d = self.dim();
        let mut moved = 0;
        for j in 0..d {
            let gjj = self.gram[(j, j)];
            if gjj == 0.0 || (active_only && beta[j] == 0.0) {
                continue;
            }
            let old = beta[j];
            let rho = self.xty[j] - g[j] + gjj * old;
            let new = soft(rho, nf * lambda) / gjj;
            if new != old {
                let delta = new - old;
                for (gi, ci) in g.iter_mut().zip(self.gram.column(j).iter()) {
                    *gi += delta * *ci;
                }
                beta[j] = new;
                moved += 1;
            }
        }
        moved
    }

    /// Candidate from iterated pattern-restricted exact solves. Starting
    /// from the given support and sign pattern, solve
    /// `G[A,A] beta_A = c_A - n lambda s_A`, drop coordinates whose solved
    /// sign disagrees with the pattern, and re-solve until the signs are
    /// feasible. Returns the candidate, or None when the solve fails.
    fn pattern_candidate(
        &self,
        lambda: f64,
        mut active: Vec<usize>,
        signs: &DVector<f64>,
    ) -> Option<DVector<f64>> {
        let nf = self.n as f64;
        for _ in 0..5 {
            if active.is_empty() {
                return Some(DVector::zeros(self.dim()));
            }
            let sub = self.gram.select_rows(active.iter()).select_columns(active.iter());
            let rhs = DVector::from_fn(active.len(), |i, _| {
                self.xty[active[i]] - nf * lambda * signs[active[i]]
            });
            let chol = nalgebra::Cholesky::new(sub.clone())?;
            let mut solved = chol.solve(&rhs);
            // Two rounds of iterative refinement: the active Gram can be
            // ill-conditioned enough that a single solve leaves a KKT
            // residue above the duality-gap target.
            for _ in 0..2 {
                let residual = &rhs - &sub * &solved;
                solved += chol.solve(&residual);
            }
            let keep: Vec<usize> = (0..active.len())
                .filter(|&i| solved[i] * signs[active[i]] > 0.0)
                .collect();
            if keep.len() == active.len() {
                let mut candidate = DVector::zeros(self.dim());
                for (i, &j) in active.iter().enumerate() {
                    candidate[j] = solved[i];
                }
                return Some(candidate);
            }
            active = keep.iter().map(|&i| active[i]).collect();
        }
        None
    }

    /// One pattern proposal: support = nonzeros plus `extras`, capped at n
    /// (extras first, then largest magnitudes). Returns whether the
    /// sign-feasible exact solution on that support was adopted.
    fn try_pattern(
        &self,
        lambda: f64,
        beta: &mut DVector<f64>,
        g: &mut DVector<f64>,
        extras: &[usize],
    ) -> bool {
        let d = self.dim();
        let mut support: Vec<usize> =
            (0..d).filter(|&j| beta[j] != 0.0 || extras.contains(&j)).collect();
        if support.is_empty() {
            return false;
        }
        if support.len() > self.n {
            support.sort_by(|&a, &b| {
                let ka = if extras.contains(&a) { f64::INFINITY } else { beta[a].abs() };
                let kb = if extras.contains(&b) { f64::INFINITY } else { beta[b].abs() };
                kb.partial_cmp(&ka).unwrap().then(a.cmp(&b))
            });
            support.truncate(self.n);
            support.sort_unstable();
        }
        // Iterate signs where nonzero, descent direction (sign of the
        // smooth-part gradient) for queued entries.
        let signs = DVector::from_fn(d, |j, _| {
            if beta[j] != 0.0 {
                beta[j].signum()
            } else {
                (self.xty[j] - g[j]).signum()
            }
        });
        let Some(candidate) = self.pattern_candidate(lambda, support, &signs) else {
            return false;
        };
        let cand_g = &self.gram * &candidate;
        if self.primal(lambda, &candidate, &cand_g) < self.primal(lambda, beta, g) {
            *beta = candidate;
            *g = cand_g;
            true
        } else {
            false
        }
    }

    /// Active-set refinement around the current iterate: propose the
    /// sign-feasible exact solution on the current support, adopt it when
    /// it lowers the primal objective, then pull the worst KKT violators
    /// (`|c_j - g_j| > n lambda` off the support) into the pattern and
    /// repeat; on rejection retry with fewer violators before handing back
    /// to plain descent. Every adoption lowers the objective, and the
    /// caller's gap check decides termination.
    fn refine_pattern(&self, lambda: f64, beta: &mut DVector<f64>, g: &mut DVector<f64>) -> bool {
        let d = self.dim();
        let nf = self.n as f64;
        let mut adopted_any = false;
        for round in 0..60 {
            let adopted_bare = round == 0 && self.try_pattern(lambda, beta, g, &[]);
            adopted_any |= adopted_bare;
            let mut violators: Vec<(f64, usize)> = (0..d)
                .filter(|&j| beta[j] == 0.0)
                .map(|j| ((self.xty[j] - g[j]).abs() - nf * lambda, j))
                .filter(|&(v, _)| v > nf * 1e-12)
                .collect();
            if violators.is_empty() {
                return adopted_any;
            }
            violators.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
            let worst: Vec<usize> = violators.iter().map(|&(_, j)| j).collect();
            let adopted = self.try_pattern(lambda, beta, g, &worst[..worst.len().min(10)])
                || self.try_pattern(lambda, beta, g, &worst[..1]);
            adopted_any |= adopted;
            if !adopted && !adopted_bare {
                return adopted_any;
            }
        }
        adopted_any
    }

    /// Cyclic coordinate descent from a warm start, stopping when the
    /// duality gap drops below `gap_tol`. Between full sweeps a few cycles
    /// touch only the active set, and pattern refinement runs with
    /// exponential backoff while its proposals keep being rejected; the
    /// gap certificate is the only stopping rule.
    fn solve(
        &self,
        lambda: f64,
        beta: &mut DVector<f64>,
        g: &mut DVector<f64>,
        gap_tol: f64,
        max_sweeps: usize,
    ) -> Result<()> {
        let mut sweeps = 0usize;
        let mut failures = 0u32;
        let mut next_refine = 0usize;
        while sweeps < max_sweeps {
            self.cycle(lambda, beta, g, false);
            sweeps += 1;
            if self.gap(lambda, beta, g) <= gap_tol {
                return Ok(());
            }
            if sweeps >= next_refine {
                let adopted = self.refine_pattern(lambda, beta, g);
                if self.gap(lambda, beta, g) <= gap_tol {
                    return Ok(());
                }
                // Back off exponentially while proposals keep being
                // rejected; plain descent sweeps are cheap in that regime.
                failures = if adopted { 0 } else { (failures + 1).min(12) };
                next_refine = sweeps + (1usize << failures);
            }
            for _ in 0..5 {
                if sweeps >= max_sweeps {
                    break;
                }
                self.cycle(lambda, beta, g, true);
                sweeps += 1;
            }
            if self.gap(lambda, beta, g) <= gap_tol {
                return Ok(());
            }
        }
        Err(Error::NoConvergence {
            tol: gap_tol,
            max_iter: max_sweeps,
            objective: self.primal(lambda, beta, g),
            gap: self.gap(lambda, beta, g),
            best: beta.iter().copied().collect(),
        })
    }
}

/// Duality-gap target for each lasso solve.
pub const LASSO_GAP_TOL: f64 = 1e-7;

const LASSO_MAX_SWEEPS: usize = 100_000;

/// Default grid: 50 log-spaced values from `lambda_max = ||X'y||_inf / n`
/// down to `1e-3 lambda_max`, or down to `1e-2 lambda_max` when the design
/// is not overdetermined (the same floor glmnet applies for n <= d, where
/// smaller penalties enter the degenerate interpolation regime).
pub fn default_lasso_grid(x: &DMatrix<f64>, y: &DVector<f64>) -> Vec<f64> {
    let lambda_max = (x.transpose() * y).amax() / x.nrows() as f64;
    let lambda_max = if lambda_max > 0.0 { lambda_max } else { 1.0 };
    let floor: f64 = if x.nrows() > x.ncols() { 1e-3 } else { 1e-2 };
    let count = 50;
    (0..count)
        .map(|i| lambda_max * floor.powf(i as f64 / (count - 1) as f64))
        .collect()
}

/// Cross-validated lasso. Each fold is solved along the descending-penalty
/// path with warm starts; the final fit at the chosen penalty uses the full
/// data set.
pub fn lasso_cv_fit(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda_grid: &[f64],
    folds: usize,
    mode: FoldMode,
) -> Result<CvFit> {
    check_inputs(x, y, lambda_grid, folds)?;
    let d = x.ncols();

    // Descending path order for warm starts; remember grid positions.
    let mut path: Vec<(usize, f64)> = lambda_grid.iter().copied().enumerate().collect();
    path.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());

    let n = x.nrows();
    let order = fold_order(n, mode);
    let ranges = fold_ranges(n, folds);
    let mut cv_sum = vec![0.0; lambda_grid.len()];
    for range in &ranges {
        let (xt, yt, xv, yv) = split(x, y, &order, range);
        let solver = LassoPath::new(&xt, &yt);
        let mut beta = DVector::zeros(d);
        let mut g = DVector::zeros(d);
        for &(grid_idx, lambda) in &path {
            solver.solve(lambda, &mut beta, &mut g, LASSO_GAP_TOL, LASSO_MAX_SWEEPS)?;
            let resid = &xv * &beta - &yv;
            cv_sum[grid_idx] += resid.dot(&resid) / yv.len() as f64;
        }
    }
    let cv_mse: Vec<f64> = cv_sum.iter().map(|s| s / folds as f64).collect();
    let best = choose_lambda(lambda_grid, &cv_mse);

    let solver = LassoPath::new(x, y);
    let mut beta = DVector::zeros(d);
    let mut g = DVector::zeros(d);
    for &(grid_idx, lambda) in &path {
        solver.solve(lambda, &mut beta, &mut g, LASSO_GAP_TOL, LASSO_MAX_SWEEPS)?;
        if grid_idx == best {
            break;
        }
    }
    Ok(CvFit { beta, chosen_lambda: lambda_grid[best], cv_mse })
}
