//! Data-generating processes for the Monte Carlo lab: coefficient decay
//! profiles, noise families standardized to a target variance, and the
//! autoregressive design matrix used by the principal-components scenario.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Pareto, StandardNormal, StudentT};

use crate::error::{Error, Result};

/// Coefficient magnitude profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayKind {
    /// `theta_(j) = j^(-alpha)` with `alpha > 0.5`.
    Polynomial { alpha: f64 },
    /// `theta_(j) = exp(-j^alpha)` with `alpha > 0`.
    Exponential { alpha: f64 },
    /// Coefficients drawn uniformly from the cube
    /// `|theta_j| <= sqrt(2 sigma2 log p / n)` with independent signs,
    /// the worst-case region for all-subset averaging.
    HardestCube { sigma2: f64, n: usize },
}

/// Whether the ordered sequence is kept or randomly permuted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefOrder {
    Ordered,
    Permuted,
}

/// A complete coefficient recipe for one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientSpec {
    pub decay: DecayKind,
    pub p: usize,
    pub order: CoefOrder,
}

/// Generate coefficients. Deterministic for `Ordered` non-random decays;
/// the rng drives the permutation and the hardest-cube draws.
pub fn gen_coefficients(spec: &CoefficientSpec, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    if spec.p == 0 {
        return Err(Error::InvalidArgument("p must be positive".into()));
    }
    let mut theta: Vec<f64> = match spec.decay {
        DecayKind::Polynomial { alpha } => {
            if alpha <= 0.5 {
                return Err(Error::InvalidArgument(format!(
                    "polynomial decay needs alpha > 0.5, got {alpha}"
                )));
            }
            (1..=spec.p).map(|j| (j as f64).powf(-alpha)).collect()
        }
        DecayKind::Exponential { alpha } => {
            if alpha <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "exponential decay needs alpha > 0, got {alpha}"
                )));
            }
            (1..=spec.p).map(|j| (-((j as f64).powf(alpha))).exp()).collect()
        }
        DecayKind::HardestCube { sigma2, n } => {
            if sigma2 < 0.0 || n == 0 {
                return Err(Error::InvalidArgument(
                    "hardest cube needs sigma2 >= 0 and n >= 1".into(),
                ));
            }
            let radius = (2.0 * sigma2 * (spec.p as f64).ln() / n as f64).sqrt();
            (0..spec.p)
                .map(|_| {
                    let mag = rng.gen::<f64>() * radius;
                    if rng.gen::<bool>() {
                        mag
                    } else {
                        -mag
                    }
                })
                .collect()
        }
    };
    if spec.order == CoefOrder::Permuted {
        // Fisher-Yates.
        for i in (1..theta.len()).rev() {
            let j = rng.gen_range(0..=i);
            theta.swap(i, j);
        }
    }
    Ok(theta)
}

/// `sigma2 = sum theta_j^2 / snr`.
pub fn calibrate_sigma2(theta: &[f64], snr: f64) -> Result<f64> {
    if snr <= 0.0 || !snr.is_finite() {
        return Err(Error::InvalidArgument(format!("snr must be positive, got {snr}")));
    }
    let energy: f64 = theta.iter().map(|t| t * t).sum();
    if energy == 0.0 {
        return Err(Error::InvalidArgument(
            "cannot calibrate sigma2 from zero coefficients".into(),
        ));
    }
    Ok(energy / snr)
}

/// Noise distribution family. Non-Gaussian draws are rescaled so the
/// generated variance equals the requested `sigma2` exactly in expectation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseFamily {
    Gaussian,
    /// Student t; requires `df > 2`. Raw variance `df / (df - 2)`.
    StudentT { df: f64 },
    /// `S * X` with `X ~ Pareto(scale, shape)` and an independent uniform
    /// sign `S`; requires `shape > 2`. Raw second moment
    /// `shape scale^2 / (shape - 2)`.
    ParetoSymmetric { shape: f64, scale: f64 },
}

impl NoiseFamily {
    /// The heavy-tailed default: t with five degrees of freedom.
    pub fn student_t5() -> Self {
        NoiseFamily::StudentT { df: 5.0 }
    }

    /// The heavy-tailed default: symmetrized Pareto(shape 5, scale 1).
    pub fn pareto_5_1() -> Self {
        NoiseFamily::ParetoSymmetric { shape: 5.0, scale: 1.0 }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            NoiseFamily::Gaussian => "gaussian",
            NoiseFamily::StudentT { .. } => "student_t",
            NoiseFamily::ParetoSymmetric { .. } => "pareto_symmetric",
        }
    }
}

/// Noise family plus target variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub family: NoiseFamily,
    pub sigma2: f64,
}

/// Draw `n` i.i.d. errors with mean zero and variance `sigma2`.
pub fn gen_noise(spec: &NoiseSpec, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    if spec.sigma2 < 0.0 || !spec.sigma2.is_finite() {
        return Err(Error::InvalidArgument(format!("sigma2 = {}", spec.sigma2)));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    match spec.family {
        NoiseFamily::Gaussian => {
            let sd = spec.sigma2.sqrt();
            Ok((0..n)
                .map(|_| rng.sample::<f64, _>(StandardNormal) * sd)
                .collect())
        }
        NoiseFamily::StudentT { df } => {
            if df <= 2.0 {
                return Err(Error::InvalidArgument(format!(
                    "student t noise needs df > 2, got {df}"
                )));
            }
            // Var(t_df) = df / (df - 2); scale back to sigma2.
            let scale = (spec.sigma2 * (df - 2.0) / df).sqrt();
            let dist = StudentT::new(df)
                .map_err(|e| Error::InvalidArgument(format!("student t: {e}")))?;
            Ok((0..n).map(|_| dist.sample(rng) * scale).collect())
        }
        NoiseFamily::ParetoSymmetric { shape, scale } => {
            if shape <= 2.0 || scale <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "symmetric Pareto needs shape > 2 and scale > 0, got {shape}, {scale}"
                )));
            }
            // E X^2 = shape scale^2 / (shape - 2); the signed variable has
            // mean zero, so this is its variance.
            let raw_var = shape * scale * scale / (shape - 2.0);
            let factor = (spec.sigma2 / raw_var).sqrt();
            let dist = Pareto::new(scale, shape)
                .map_err(|e| Error::InvalidArgument(format!("pareto: {e}")))?;
            Ok((0..n)
                .map(|_| {
                    let x: f64 = dist.sample(rng);
                    let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                    sign * x * factor
                })
                .collect())
        }
    }
}

/// Rows i.i.d. `N(0, Sigma)` with `Sigma_{jk} = rho^{|j-k|}`, generated by
/// the AR(1) recursion `x_1 = z_1`, `x_j = rho x_{j-1} + sqrt(1-rho^2) z_j`.
pub fn ar1_design(n: usize, d: usize, rho: f64, rng: &mut ChaCha8Rng) -> Result<DMatrix<f64>> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::InvalidArgument(format!("ar(1) rho must be in [0, 1), got {rho}")));
    }
    if n == 0 || d == 0 {
        return Err(Error::InvalidArgument("design must be non-empty".into()));
    }
    let innov = (1.0 - rho * rho).sqrt();
    let mut x = DMatrix::zeros(n, d);
    for i in 0..n {
        let mut prev: f64 = rng.sample(StandardNormal);
        x[(i, 0)] = prev;
        for j in 1..d {
            let z: f64 = rng.sample(StandardNormal);
            prev = rho * prev + innov * z;
            x[(i, j)] = prev;
        }
    }
    Ok(x)
}
