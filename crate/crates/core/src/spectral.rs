//! Regression model and orthogonal-basis (spectral) representation.
//!
//! The observation model is `y = mu + eps` with `mu` expressed in a basis
//! `psi_1..psi_p` normalized so that `psi_j' psi_j / n = 1` and
//! `psi_j' psi_k = 0` for `j != k`. Empirical coefficients are
//! `theta_tilde_j = psi_j' y / n`; under the normalization this transform is
//! an isometry: `|| sum_j c_j psi_j ||^2 / n = sum_j c_j^2`.
//!
//! Everything downstream (candidate fits, Mallows criteria, risk oracles)
//! works on these coefficients, so this module is deliberately small and
//! heavily validated.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Observation vector `y` of length `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseSample {
    y: DVector<f64>,
}

impl ResponseSample {
    pub fn new(y: Vec<f64>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::InvalidArgument("observation vector is empty".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("observation vector".into()));
        }
        Ok(Self { y: DVector::from_vec(y) })
    }

    pub fn from_vector(y: DVector<f64>) -> Result<Self> {
        Self::new(y.data.into())
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn vector(&self) -> &DVector<f64> {
        &self.y
    }

    /// `y' y`, used by criterion assembly and variance estimation.
    pub fn squared_norm(&self) -> f64 {
        self.y.dot(&self.y)
    }
}

/// Internal storage for the basis. The canonical basis (`psi_j = sqrt(n) e_j`)
/// is kept implicit so large simulations never materialize an `n x n` matrix.
#[derive(Debug, Clone, PartialEq)]
enum BasisRepr {
    Dense(DMatrix<f64>),
    Canonical { n: usize, p: usize },
}

/// `p` orthogonal directions in `R^n` with `psi_j' psi_j / n = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoBasis {
    repr: BasisRepr,
}

/// Outcome of [`validate_basis`]: the two worst deviations from the
/// normalized-orthogonality conditions, and whether both fall within `tol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    /// `max_{j != k} |psi_j' psi_k / n|`.
    pub max_off_diagonal: f64,
    /// `max_j |psi_j' psi_j / n - 1|`.
    pub max_norm_deviation: f64,
    pub pass: bool,
}

impl OrthoBasis {
    /// Wrap an `n x p` column matrix. Shape is checked here; orthogonality is
    /// checked separately by [`validate_basis`].
    pub fn from_columns(columns: DMatrix<f64>) -> Result<Self> {
        let (n, p) = columns.shape();
        if n == 0 || p == 0 {
            return Err(Error::InvalidArgument("basis must have n >= 1 and p >= 1".into()));
        }
        if p > n {
            return Err(Error::DimensionMismatch(format!("basis has p = {p} > n = {n}")));
        }
        if columns.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("basis columns".into()));
        }
        Ok(Self { repr: BasisRepr::Dense(columns) })
    }

    pub fn n(&self) -> usize {
        match &self.repr {
            BasisRepr::Dense(m) => m.nrows(),
            BasisRepr::Canonical { n, .. } => *n,
        }
    }

    pub fn p(&self) -> usize {
        match &self.repr {
            BasisRepr::Dense(m) => m.ncols(),
            BasisRepr::Canonical { p, .. } => *p,
        }
    }

    pub fn is_canonical(&self) -> bool {
        matches!(self.repr, BasisRepr::Canonical { .. })
    }

    /// Materialize column `j` (0-based).
    pub fn column(&self, j: usize) -> DVector<f64> {
        match &self.repr {
            BasisRepr::Dense(m) => m.column(j).into_owned(),
            BasisRepr::Canonical { n, .. } => {
                let mut v = DVector::zeros(*n);
                v[j] = (*n as f64).sqrt();
                v
            }
        }
    }

    /// Materialize the full `n x p` column matrix.
    pub fn to_dense(&self) -> DMatrix<f64> {
        match &self.repr {
            BasisRepr::Dense(m) => m.clone(),
            BasisRepr::Canonical { n, p } => {
                let s = (*n as f64).sqrt();
                DMatrix::from_fn(*n, *p, |i, j| if i == j { s } else { 0.0 })
            }
        }
    }
}

/// Empirical coefficients `theta_tilde_j = psi_j' y / n` together with the
/// noise variance the caller wants downstream rules to use.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoefs {
    pub theta_tilde: DVector<f64>,
    pub sigma2: f64,
    pub n: usize,
}

impl SpectralCoefs {
    pub fn p(&self) -> usize {
        self.theta_tilde.len()
    }

    /// Attach a noise variance (the transform itself does not know it).
    pub fn with_sigma2(mut self, sigma2: f64) -> Result<Self> {
        if sigma2.is_nan() || sigma2 < 0.0 {
            return Err(Error::InvalidArgument(format!("sigma2 must be >= 0, got {sigma2}")));
        }
        self.sigma2 = sigma2;
        Ok(self)
    }
}

/// True coefficients `theta_j` of a mean vector `mu = sum_j theta_j psi_j`
/// over a basis with the given `n`. The basis itself is passed to operations
/// that need it, with dimensions re-checked there.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanSpec {
    pub theta: DVector<f64>,
    pub n: usize,
}

impl MeanSpec {
    pub fn new(theta: Vec<f64>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be positive".into()));
        }
        if theta.is_empty() || theta.len() > n {
            return Err(Error::DimensionMismatch(format!(
                "need 1 <= p <= n, got p = {}, n = {}",
                theta.len(),
                n
            )));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("coefficient vector".into()));
        }
        Ok(Self { theta: DVector::from_vec(theta), n })
    }

    pub fn p(&self) -> usize {
        self.theta.len()
    }

    /// Reconstruct `mu` in observation space.
    pub fn mean_vector(&self, basis: &OrthoBasis) -> Result<DVector<f64>> {
        if basis.n() != self.n || basis.p() != self.p() {
            return Err(Error::DimensionMismatch(format!(
                "mean spec is ({}, {}), basis is ({}, {})",
                self.n,
                self.p(),
                basis.n(),
                basis.p()
            )));
        }
        reconstruct(basis, self.theta.as_slice())
    }
}

/// Check the normalized-orthogonality conditions of a basis within `tol`.
pub fn validate_basis(basis: &OrthoBasis, tol: f64) -> Result<ValidationReport> {
    if tol < 0.0 {
        return Err(Error::InvalidArgument("tolerance must be >= 0".into()));
    }
    let (max_off, max_norm) = match &basis.repr {
        // Exact by construction.
        BasisRepr::Canonical { .. } => (0.0, 0.0),
        BasisRepr::Dense(m) => {
            let n = m.nrows() as f64;
            let gram = m.transpose() * m / n;
            let p = gram.nrows();
            let mut max_off: f64 = 0.0;
            let mut max_norm: f64 = 0.0;
            for j in 0..p {
                for k in 0..p {
                    if j == k {
                        max_norm = max_norm.max((gram[(j, j)] - 1.0).abs());
                    } else {
                        max_off = max_off.max(gram[(j, k)].abs());
                    }
                }
            }
            (max_off, max_norm)
        }
    };
    Ok(ValidationReport {
        max_off_diagonal: max_off,
        max_norm_deviation: max_norm,
        pass: max_off <= tol && max_norm <= tol,
    })
}

/// Empirical coefficients `theta_tilde_j = psi_j' y / n`. The returned
/// `sigma2` is zero; attach one with [`SpectralCoefs::with_sigma2`] when a
/// shrinkage rule needs it.
pub fn spectral_transform(basis: &OrthoBasis, y: &ResponseSample) -> Result<SpectralCoefs> {
    if basis.n() != y.n() {
        return Err(Error::DimensionMismatch(format!(
            "basis n = {} but observation n = {}",
            basis.n(),
            y.n()
        )));
    }
    let n = y.n();
    let theta_tilde = match &basis.repr {
        BasisRepr::Dense(m) => m.transpose() * y.vector() / n as f64,
        BasisRepr::Canonical { p, .. } => {
            let inv_sqrt_n = 1.0 / (n as f64).sqrt();
            DVector::from_fn(*p, |j, _| y.vector()[j] * inv_sqrt_n)
        }
    };
    Ok(SpectralCoefs { theta_tilde, sigma2: 0.0, n })
}

/// `sum_j coefs[j] psi_j`.
pub fn reconstruct(basis: &OrthoBasis, coefs: &[f64]) -> Result<DVector<f64>> {
    if coefs.len() != basis.p() {
        return Err(Error::DimensionMismatch(format!(
            "coefficient length {} but basis has p = {}",
            coefs.len(),
            basis.p()
        )));
    }
    Ok(match &basis.repr {
        BasisRepr::Dense(m) => m * DVector::from_column_slice(coefs),
        BasisRepr::Canonical { n, .. } => {
            let s = (*n as f64).sqrt();
            let mut v = DVector::zeros(*n);
            for (j, &c) in coefs.iter().enumerate() {
                v[j] = s * c;
            }
            v
        }
    })
}

/// Build a basis from the left singular vectors of an `n x d` matrix:
/// `psi_j = sqrt(n) u_j`, ordered by descending singular value, keeping the
/// `p` directions with `s_j > rank_tol * s_max`.
///
/// Sign convention: each `u_j` is flipped so that its entry of largest
/// absolute value is positive, which makes the output reproducible across
/// platforms and SVD back ends.
pub fn basis_from_svd(x: &DMatrix<f64>, rank_tol: f64) -> Result<OrthoBasis> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::InvalidArgument("design matrix must be non-empty".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("design matrix".into()));
    }
    if rank_tol < 0.0 {
        return Err(Error::InvalidArgument("rank_tol must be >= 0".into()));
    }
    let n = x.nrows();
    let svd = x.clone().svd(true, false);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let sv = &svd.singular_values;

    // Order by descending singular value; nalgebra does not guarantee order.
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].partial_cmp(&sv[a]).unwrap().then(a.cmp(&b)));

    let s_max = sv[order[0]];
    if s_max.is_nan() || s_max <= 0.0 {
        return Err(Error::RankDeficient("all singular values are zero".into()));
    }
    let cutoff = rank_tol * s_max;
    let kept: Vec<usize> = order.iter().copied().filter(|&j| sv[j] > cutoff).collect();
    if kept.is_empty() {
        return Err(Error::RankDeficient(format!(
            "no singular value above {cutoff:.3e}"
        )));
    }

    let sqrt_n = (n as f64).sqrt();
    let mut columns = DMatrix::zeros(n, kept.len());
    for (out_j, &j) in kept.iter().enumerate() {
        let col = u.column(j);
        // First entry of maximal absolute value decides the sign.
        let mut best_i = 0;
        let mut best_abs = 0.0;
        for (i, &v) in col.iter().enumerate() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best_i = i;
            }
        }
        let sign = if col[best_i] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            columns[(i, out_j)] = sign * sqrt_n * col[i];
        }
    }
    OrthoBasis::from_columns(columns)
}

/// The canonical basis `psi_j = sqrt(n) e_j`, stored implicitly.
pub fn canonical_basis(n: usize, p: usize) -> Result<OrthoBasis> {
    if n == 0 || p == 0 {
        return Err(Error::InvalidArgument("n and p must be positive".into()));
    }
    if p > n {
        return Err(Error::DimensionMismatch(format!("p = {p} > n = {n}")));
    }
    Ok(OrthoBasis { repr: BasisRepr::Canonical { n, p } })
}
