//! Seeded Monte Carlo experiments over the estimators in this crate.
//!
//! Three scenario families are supported:
//!
//! - `nested`: canonical basis with `p = n`, ordered coefficients; methods
//!   are scored by mean loss divided by the optimal all-nested MA risk;
//! - `allsubset`: canonical basis with `p` decoupled from `n`, coefficients
//!   permuted per replication; the ratio denominator is `1/n` plus the
//!   optimal all-subset MA risk (the non-offset ratio is emitted alongside,
//!   together with the `2 log p` reference level);
//! - `pcr`: principal-components regression on an AR(1) design, basis from
//!   the SVD of a fresh `X` each replication; methods are scored by plain
//!   mean loss (denominator 1).
//!
//! Every replication derives its random streams purely from
//! `(master seed, scenario, n, p, replication index, stream label)`, so a
//! result is bit-identical across runs and across worker counts; the only
//! parallel reduction is a fixed-order sum over the collected losses.

pub mod dgp;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::baselines::{default_lasso_grid, lasso_cv_fit, ridge_cv_fit, FoldMode};
use crate::candidates::build_group_blocks;
use crate::error::{Error, Result};
use crate::estimators::{adap_fit, hard_threshold_fit, mma_fit, soft_threshold_fit};
use crate::estimators::{Penalty, Sigma2Source};
use crate::risk::{all_subset_ratio_denominator, optimal_all_subset_risk, optimal_ma_risk};
use crate::rng::{derive_seed, fnv1a, rng_from_seed};
use crate::spectral::{
    basis_from_svd, canonical_basis, MeanSpec, OrthoBasis, ResponseSample,
};
use dgp::{
    ar1_design, calibrate_sigma2, gen_coefficients, gen_noise, CoefOrder, CoefficientSpec,
    DecayKind, NoiseFamily, NoiseSpec,
};

/// Experiment family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Nested,
    AllSubset,
    Pcr,
}

impl Scenario {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::Nested => "nested",
            Scenario::AllSubset => "allsubset",
            Scenario::Pcr => "pcr",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "nested" => Ok(Scenario::Nested),
            "allsubset" => Ok(Scenario::AllSubset),
            "pcr" => Ok(Scenario::Pcr),
            other => Err(Error::InvalidConfig(format!("unknown scenario '{other}'"))),
        }
    }

    fn seed_code(&self) -> u64 {
        fnv1a(self.as_str().as_bytes())
    }
}

/// Estimators the lab can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMethod {
    /// Mallows averaging over the weakly geometric nested blocks.
    MmaGroup,
    Adap,
    Soft,
    Hard,
    LassoCv,
    RidgeCv,
}

impl SimMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            SimMethod::MmaGroup => "mma_group",
            SimMethod::Adap => "adap",
            SimMethod::Soft => "soft",
            SimMethod::Hard => "hard",
            SimMethod::LassoCv => "lasso_cv",
            SimMethod::RidgeCv => "ridge_cv",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "mma_group" => Ok(SimMethod::MmaGroup),
            "adap" => Ok(SimMethod::Adap),
            "soft" => Ok(SimMethod::Soft),
            "hard" => Ok(SimMethod::Hard),
            "lasso_cv" => Ok(SimMethod::LassoCv),
            "ridge_cv" => Ok(SimMethod::RidgeCv),
            other => Err(Error::InvalidConfig(format!("unknown method '{other}'"))),
        }
    }

    fn needs_design_matrix(&self) -> bool {
        matches!(self, SimMethod::LassoCv | SimMethod::RidgeCv)
    }
}

/// How `p` is chosen for each sample size.
#[derive(Debug, Clone, PartialEq)]
pub enum PRule {
    /// `p = n` (the nested protocol).
    MatchN,
    /// `p = floor(sqrt(n))`.
    SqrtN,
    /// An explicit list of `p` values crossed with every `n`.
    Fixed(Vec<usize>),
}

impl PRule {
    fn values_for(&self, n: usize) -> Vec<usize> {
        match self {
            PRule::MatchN => vec![n],
            PRule::SqrtN => vec![(n as f64).sqrt().floor() as usize],
            PRule::Fixed(ps) => ps.clone(),
        }
    }
}

/// Noise magnitude: explicit variance or calibrated from the coefficient
/// energy via a signal-to-noise ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseLevel {
    Sigma2(f64),
    Snr(f64),
}

/// Extra settings for the `pcr` scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcrSettings {
    /// Number of raw regressors.
    pub d: usize,
    /// AR(1) correlation of the design rows.
    pub ar_rho: f64,
    /// Cross-validation folds for the lasso/ridge baselines.
    pub cv_folds: usize,
}

impl Default for PcrSettings {
    fn default() -> Self {
        // Desk-scale default; the CLI's full-scale flag switches to
        // n = 500, d = 1000.
        PcrSettings { d: 400, ar_rho: 0.5, cv_folds: 5 }
    }
}

/// A declarative Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub n_values: Vec<usize>,
    pub p_rule: PRule,
    pub decay: DecayKind,
    pub order: CoefOrder,
    pub noise_family: NoiseFamily,
    pub noise_level: NoiseLevel,
    pub methods: Vec<SimMethod>,
    pub replications: usize,
    pub master_seed: u64,
    pub pcr: PcrSettings,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be >= 1".into()));
        }
        if self.n_values.is_empty() {
            return Err(Error::InvalidConfig("need at least one n".into()));
        }
        if let Some(&n) = self.n_values.iter().find(|&&n| n < 4) {
            return Err(Error::InvalidConfig(format!("n = {n} is below the minimum of 4")));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("need at least one method".into()));
        }
        for m in &self.methods {
            if m.needs_design_matrix() && self.scenario != Scenario::Pcr {
                return Err(Error::InvalidConfig(format!(
                    "method '{}' needs a design matrix and is only valid in the pcr scenario",
                    m.as_str()
                )));
            }
        }
        match self.scenario {
            Scenario::Nested => {
                if self.p_rule != PRule::MatchN {
                    return Err(Error::InvalidConfig(
                        "the nested scenario requires p = n".into(),
                    ));
                }
                if self.order != CoefOrder::Ordered {
                    return Err(Error::InvalidConfig(
                        "the nested scenario is defined for ordered coefficients".into(),
                    ));
                }
            }
            Scenario::AllSubset => {
                if self.p_rule == PRule::MatchN {
                    return Err(Error::InvalidConfig(
                        "the allsubset scenario needs p decoupled from n (fixed list or sqrt rule)"
                            .into(),
                    ));
                }
            }
            Scenario::Pcr => {
                if self.pcr.d == 0 || self.pcr.cv_folds < 2 {
                    return Err(Error::InvalidConfig("pcr needs d >= 1 and cv_folds >= 2".into()));
                }
            }
        }
        if matches!(self.decay, DecayKind::HardestCube { .. })
            && matches!(self.noise_level, NoiseLevel::Snr(_))
        {
            return Err(Error::InvalidConfig(
                "hardest-cube coefficients are random; calibrate noise with an explicit sigma2"
                    .into(),
            ));
        }
        if let NoiseLevel::Sigma2(s) = self.noise_level {
            if s < 0.0 || !s.is_finite() {
                return Err(Error::InvalidConfig(format!("sigma2 = {s}")));
            }
        }
        if let NoiseLevel::Snr(s) = self.noise_level {
            if s <= 0.0 || !s.is_finite() {
                return Err(Error::InvalidConfig(format!("snr = {s}")));
            }
        }
        Ok(())
    }
}

/// One aggregated result line.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scenario: Scenario,
    pub method: SimMethod,
    pub n: usize,
    pub p: usize,
    pub reps: usize,
    pub mean_loss: f64,
    /// Risk-ratio denominator (1.0 in the pcr scenario).
    pub denominator: f64,
    pub risk_ratio: f64,
    /// Standard error of the per-replication losses: sample sd / sqrt(reps).
    pub mc_se: f64,
    /// Ratio without the 1/n offset (allsubset scenario only).
    pub risk_ratio_no_offset: Option<f64>,
    /// Reference level `2 log p` (allsubset scenario only).
    pub ref_two_log_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
}

/// Sorted rows plus the reference curve extracted from them.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub rows: Vec<ResultRow>,
    /// `(p, 2 log p)` pairs present in the result, ascending in `p`.
    pub reference_curve: Vec<(usize, f64)>,
}

/// Stable ordering by (scenario, method, n, p) plus the 2 log p reference
/// points found in the rows.
pub fn summarize(result: &ExperimentResult) -> Summary {
    let mut rows = result.rows.clone();
    rows.sort_by(|a, b| {
        (a.scenario.as_str(), a.method.as_str(), a.n, a.p).cmp(&(
            b.scenario.as_str(),
            b.method.as_str(),
            b.n,
            b.p,
        ))
    });
    let mut reference_curve: Vec<(usize, f64)> = rows
        .iter()
        .filter_map(|r| r.ref_two_log_p.map(|v| (r.p, v)))
        .collect();
    reference_curve.sort_by_key(|&(p, _)| p);
    reference_curve.dedup();
    Summary { rows, reference_curve }
}

// Stream labels for per-replication seed splitting.
const STREAM_DESIGN: u64 = 0;
const STREAM_COEF: u64 = 1;
const STREAM_NOISE: u64 = 2;

fn replication_seed(config: &ExperimentConfig, n: usize, p: usize, rep: usize) -> u64 {
    derive_seed(
        config.master_seed,
        &[config.scenario.seed_code(), n as u64, p as u64, rep as u64],
    )
}

/// Run every (n, p, method) cell of the configured experiment. Rows come
/// back already summarized (sorted).
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let mut rows = Vec::new();
    for &n in &config.n_values {
        for p in config.p_rule.values_for(n) {
            if p == 0 || (config.scenario != Scenario::Pcr && p > n) {
                return Err(Error::InvalidConfig(format!("grid point n = {n}, p = {p}")));
            }
            let cell = run_cell(config, n, p)?;
            rows.extend(cell);
        }
    }
    Ok(ExperimentResult { rows: summarize(&ExperimentResult { rows }).rows })
}

/// Per-replication losses for every method at one (n, p) grid point.
fn run_cell(config: &ExperimentConfig, n: usize, p: usize) -> Result<Vec<ResultRow>> {
    let reps = config.replications;
    let losses: Vec<Result<Vec<f64>>> = (0..reps)
        .into_par_iter()
        .map(|rep| run_replication(config, n, p, rep))
        .collect();
    let mut per_method: Vec<Vec<f64>> = vec![Vec::with_capacity(reps); config.methods.len()];
    for rep_losses in losses {
        let rep_losses = rep_losses?;
        for (k, loss) in rep_losses.into_iter().enumerate() {
            per_method[k].push(loss);
        }
    }

    // Denominator per scenario, from the ordered coefficient profile.
    let (denominator, raw_denominator, reference) = match config.scenario {
        Scenario::Nested => {
            let (theta, sigma2) = base_theta_sigma(config, p)?;
            let mean = MeanSpec::new(theta, n)?;
            let set = crate::candidates::build_all_nested(p)?;
            let denom = optimal_ma_risk(&mean, sigma2, &set)?.risk;
            (denom, None, None)
        }
        Scenario::AllSubset => {
            let (theta, sigma2) = base_theta_sigma(config, p)?;
            let denom = all_subset_ratio_denominator(&theta, sigma2, n)?;
            let raw = optimal_all_subset_risk(&theta, sigma2, n)?.risk;
            (denom, Some(raw), Some(2.0 * (p as f64).ln()))
        }
        Scenario::Pcr => (1.0, None, None),
    };

    let mut rows = Vec::with_capacity(config.methods.len());
    for (k, method) in config.methods.iter().enumerate() {
        let xs = &per_method[k];
        let mean_loss = xs.iter().sum::<f64>() / reps as f64;
        let mc_se = if reps > 1 {
            let var = xs.iter().map(|x| (x - mean_loss) * (x - mean_loss)).sum::<f64>()
                / (reps - 1) as f64;
            (var / reps as f64).sqrt()
        } else {
            0.0
        };
        rows.push(ResultRow {
            scenario: config.scenario,
            method: *method,
            n,
            p,
            reps,
            mean_loss,
            denominator,
            risk_ratio: mean_loss / denominator,
            mc_se,
            risk_ratio_no_offset: raw_denominator
                .map(|raw| if raw > 0.0 { Some(mean_loss / raw) } else { None })
                .unwrap_or(None),
            ref_two_log_p: reference,
        });
    }
    Ok(rows)
}

/// Ordered coefficients and noise variance for a grid point; used both to
/// drive replications and, unpermuted, the scenario denominators.
fn base_theta_sigma(config: &ExperimentConfig, p: usize) -> Result<(Vec<f64>, f64)> {
    let spec = CoefficientSpec { decay: config.decay, p, order: CoefOrder::Ordered };
    match (config.decay, config.noise_level) {
        (DecayKind::HardestCube { .. }, _) => {
            // Random coefficients: the denominator is undefined per draw.
            Err(Error::InvalidConfig(
                "hardest-cube coefficients have no fixed ratio denominator".into(),
            ))
        }
        (_, NoiseLevel::Sigma2(s)) => {
            let theta = gen_coefficients(&spec, &mut rng_from_seed(0))?;
            Ok((theta, s))
        }
        (_, NoiseLevel::Snr(snr)) => {
            let theta = gen_coefficients(&spec, &mut rng_from_seed(0))?;
            let sigma2 = calibrate_sigma2(&theta, snr)?;
            Ok((theta, sigma2))
        }
    }
}

/// One replication: build the data, run every configured method, return
/// losses in method order.
fn run_replication(config: &ExperimentConfig, n: usize, p: usize, rep: usize) -> Result<Vec<f64>> {
    let rep_seed = replication_seed(config, n, p, rep);
    let mut coef_rng = rng_from_seed(derive_seed(rep_seed, &[STREAM_COEF]));
    let mut noise_rng = rng_from_seed(derive_seed(rep_seed, &[STREAM_NOISE]));

    // Basis and (for pcr) the raw design.
    let (basis, design): (OrthoBasis, Option<nalgebra::DMatrix<f64>>) = match config.scenario {
        Scenario::Pcr => {
            let mut design_rng = rng_from_seed(derive_seed(rep_seed, &[STREAM_DESIGN]));
            let x = ar1_design(n, config.pcr.d, config.pcr.ar_rho, &mut design_rng)?;
            let basis = basis_from_svd(&x, 1e-10)?;
            (basis, Some(x))
        }
        _ => (canonical_basis(n, p)?, None),
    };
    let p_eff = basis.p();

    // Coefficients and noise variance.
    let spec = CoefficientSpec { decay: config.decay, p: p_eff, order: config.order };
    let theta = gen_coefficients(&spec, &mut coef_rng)?;
    let sigma2 = match config.noise_level {
        NoiseLevel::Sigma2(s) => s,
        NoiseLevel::Snr(snr) => calibrate_sigma2(&theta, snr)?,
    };

    let mean = MeanSpec::new(theta, n)?;
    let mu = mean.mean_vector(&basis)?;
    let noise = gen_noise(&NoiseSpec { family: config.noise_family, sigma2 }, n, &mut noise_rng)?;
    let y = ResponseSample::from_vector(&mu + DVector::from_vec(noise))?;

    let mut losses = Vec::with_capacity(config.methods.len());
    for method in &config.methods {
        let fitted: DVector<f64> = match method {
            SimMethod::MmaGroup => {
                let set = build_group_blocks(p_eff)?;
                mma_fit(&y, &basis, &set, Penalty::Mallows, Sigma2Source::Known(sigma2))?.fitted
            }
            SimMethod::Adap => adap_fit(&y, &basis, sigma2)?.fitted,
            SimMethod::Soft => soft_threshold_fit(&y, &basis, sigma2)?.fitted,
            SimMethod::Hard => hard_threshold_fit(&y, &basis, sigma2)?.fitted,
            SimMethod::LassoCv => {
                let x = design.as_ref().expect("validated: pcr only");
                let grid = default_lasso_grid(x, y.vector());
                let fit =
                    lasso_cv_fit(x, y.vector(), &grid, config.pcr.cv_folds, FoldMode::Contiguous)?;
                fit.predict(x)
            }
            SimMethod::RidgeCv => {
                let x = design.as_ref().expect("validated: pcr only");
                let grid = default_lasso_grid(x, y.vector());
                let fit =
                    ridge_cv_fit(x, y.vector(), &grid, config.pcr.cv_folds, FoldMode::Contiguous)?;
                fit.predict(x)
            }
        };
        let diff = &fitted - &mu;
        losses.push(diff.dot(&diff) / n as f64);
    }
    Ok(losses)
}

/// CSV serialization of an [`ExperimentResult`]. The two trailing columns
/// are only populated in the allsubset scenario. Floats are written in
/// shortest round-trip form, so identical results give identical bytes.
pub fn results_to_csv(result: &ExperimentResult) -> String {
    let mut out = String::from(
        "scenario,method,n,p,reps,mean_loss,denominator,risk_ratio,mc_se,risk_ratio_no_offset,ref_2logp\n",
    );
    for r in &result.rows {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.scenario.as_str(),
            r.method.as_str(),
            r.n,
            r.p,
            r.reps,
            r.mean_loss,
            r.denominator,
            r.risk_ratio,
            r.mc_se,
            opt(r.risk_ratio_no_offset),
            opt(r.ref_two_log_p),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_nested(reps: usize, seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            scenario: Scenario::Nested,
            n_values: vec![32],
            p_rule: PRule::MatchN,
            decay: DecayKind::Polynomial { alpha: 1.0 },
            order: CoefOrder::Ordered,
            noise_family: NoiseFamily::Gaussian,
            noise_level: NoiseLevel::Snr(5.0),
            methods: vec![SimMethod::MmaGroup, SimMethod::Adap],
            replications: reps,
            master_seed: seed,
            pcr: PcrSettings::default(),
        }
    }

    #[test]
    fn nested_run_produces_rows() {
        let result = run_experiment(&tiny_nested(3, 7)).unwrap();
        assert_eq!(result.rows.len(), 2);
        for row in &result.rows {
            assert!(row.mean_loss.is_finite());
            assert!(row.denominator > 0.0);
            assert!(row.risk_ratio > 0.0);
            assert!(row.risk_ratio_no_offset.is_none());
        }
    }

    #[test]
    fn identical_seeds_give_identical_csv() {
        let a = results_to_csv(&run_experiment(&tiny_nested(4, 99)).unwrap());
        let b = results_to_csv(&run_experiment(&tiny_nested(4, 99)).unwrap());
        assert_eq!(a, b);
        let c = results_to_csv(&run_experiment(&tiny_nested(4, 100)).unwrap());
        assert_ne!(a, c);
    }

    #[test]
    fn determinism_across_thread_counts() {
        let config = tiny_nested(6, 5);
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_experiment(&config))
            .unwrap();
        let multi = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| run_experiment(&config))
            .unwrap();
        assert_eq!(results_to_csv(&single), results_to_csv(&multi));
    }

    #[test]
    fn noiseless_limit_recovers_mean() {
        let mut config = tiny_nested(2, 1);
        config.noise_level = NoiseLevel::Sigma2(0.0);
        config.methods = vec![SimMethod::Adap, SimMethod::Soft, SimMethod::Hard];
        let result = run_experiment(&config).unwrap();
        for row in &result.rows {
            assert!(row.mean_loss <= 1e-20, "{} loss {}", row.method.as_str(), row.mean_loss);
        }
    }

    #[test]
    fn allsubset_emits_reference_and_raw_ratio() {
        let config = ExperimentConfig {
            scenario: Scenario::AllSubset,
            n_values: vec![100],
            p_rule: PRule::Fixed(vec![10]),
            decay: DecayKind::Polynomial { alpha: 1.0 },
            order: CoefOrder::Permuted,
            noise_family: NoiseFamily::Gaussian,
            noise_level: NoiseLevel::Snr(5.0),
            methods: vec![SimMethod::Adap],
            replications: 3,
            master_seed: 11,
            pcr: PcrSettings::default(),
        };
        let result = run_experiment(&config).unwrap();
        let row = &result.rows[0];
        let expect_ref = 2.0 * 10f64.ln();
        assert!((row.ref_two_log_p.unwrap() - expect_ref).abs() < 1e-12);
        assert!(row.risk_ratio_no_offset.unwrap() >= row.risk_ratio);
        // Denominator includes the 1/n offset.
        assert!(row.denominator > 1.0 / 100.0);

        let summary = summarize(&result);
        assert_eq!(summary.reference_curve, vec![(10, expect_ref)]);
    }

    #[test]
    fn summarize_handles_empty_and_single_rows() {
        let empty = summarize(&ExperimentResult::default());
        assert!(empty.rows.is_empty());
        assert!(empty.reference_curve.is_empty());

        let one = run_experiment(&tiny_nested(1, 3)).unwrap();
        let again = summarize(&one);
        assert_eq!(again.rows, one.rows);
    }

    #[test]
    fn sqrt_rule_and_row_ordering() {
        let config = ExperimentConfig {
            scenario: Scenario::AllSubset,
            n_values: vec![100, 64],
            p_rule: PRule::SqrtN,
            decay: DecayKind::Exponential { alpha: 0.5 },
            order: CoefOrder::Permuted,
            noise_family: NoiseFamily::Gaussian,
            noise_level: NoiseLevel::Snr(5.0),
            methods: vec![SimMethod::Soft, SimMethod::Adap],
            replications: 2,
            master_seed: 3,
            pcr: PcrSettings::default(),
        };
        let result = run_experiment(&config).unwrap();
        let labels: Vec<(String, usize, usize)> = result
            .rows
            .iter()
            .map(|r| (r.method.as_str().to_string(), r.n, r.p))
            .collect();
        assert_eq!(
            labels,
            vec![
                ("adap".into(), 64, 8),
                ("adap".into(), 100, 10),
                ("soft".into(), 64, 8),
                ("soft".into(), 100, 10),
            ]
        );
    }

    #[test]
    fn pcr_smoke_run() {
        let config = ExperimentConfig {
            scenario: Scenario::Pcr,
            n_values: vec![24],
            p_rule: PRule::MatchN,
            decay: DecayKind::Polynomial { alpha: 1.0 },
            order: CoefOrder::Ordered,
            noise_family: NoiseFamily::Gaussian,
            noise_level: NoiseLevel::Snr(5.0),
            methods: vec![
                SimMethod::MmaGroup,
                SimMethod::Adap,
                SimMethod::LassoCv,
                SimMethod::RidgeCv,
            ],
            replications: 2,
            master_seed: 21,
            pcr: PcrSettings { d: 30, ar_rho: 0.5, cv_folds: 3 },
        };
        let result = run_experiment(&config).unwrap();
        assert_eq!(result.rows.len(), 4);
        for row in &result.rows {
            assert_eq!(row.denominator, 1.0);
            assert_eq!(row.risk_ratio, row.mean_loss);
            assert!(row.mean_loss.is_finite() && row.mean_loss >= 0.0);
            assert_eq!(row.p, 24); // rank of a 24 x 30 Gaussian design
        }
    }

    #[test]
    fn config_validation_rejects_bad_combos() {
        let mut config = tiny_nested(1, 0);
        config.methods = vec![SimMethod::LassoCv];
        assert!(matches!(run_experiment(&config), Err(Error::InvalidConfig(_))));

        let mut config = tiny_nested(1, 0);
        config.order = CoefOrder::Permuted;
        assert!(run_experiment(&config).is_err());

        let mut config = tiny_nested(1, 0);
        config.replications = 0;
        assert!(run_experiment(&config).is_err());

        let mut config = tiny_nested(1, 0);
        config.n_values = vec![3];
        assert!(run_experiment(&config).is_err());

        let mut config = tiny_nested(1, 0);
        config.decay = DecayKind::HardestCube { sigma2: 1.0, n: 32 };
        config.noise_level = NoiseLevel::Snr(5.0);
        assert!(run_experiment(&config).is_err());
    }

    #[test]
    fn scale_invariance_of_ratios() {
        // Scaling theta by s and sigma2 by s^2 scales every loss and the
        // denominator by s^2, leaving the nested ratio unchanged. The same
        // noise stream is used because only the scale factor differs.
        let n = 40;
        let p = n;
        let base = tiny_nested(5, 44);
        let denom_and_ratios = |scale: f64| -> Vec<f64> {
            let basis = canonical_basis(n, p).unwrap();
            let spec = CoefficientSpec {
                decay: DecayKind::Polynomial { alpha: 1.0 },
                p,
                order: CoefOrder::Ordered,
            };
            let theta: Vec<f64> = gen_coefficients(&spec, &mut rng_from_seed(0))
                .unwrap()
                .into_iter()
                .map(|t| t * scale)
                .collect();
            let sigma2 = calibrate_sigma2(&theta, 5.0).unwrap();
            let mean = MeanSpec::new(theta, n).unwrap();
            let mu = mean.mean_vector(&basis).unwrap();
            let set = crate::candidates::build_all_nested(p).unwrap();
            let denom = optimal_ma_risk(&mean, sigma2, &set).unwrap().risk;
            let mut ratios = Vec::new();
            for rep in 0..5 {
                let seed = replication_seed(&base, n, p, rep);
                let mut noise_rng = rng_from_seed(derive_seed(seed, &[STREAM_NOISE]));
                let eps = gen_noise(
                    &NoiseSpec { family: NoiseFamily::Gaussian, sigma2 },
                    n,
                    &mut noise_rng,
                )
                .unwrap();
                let y = ResponseSample::from_vector(&mu + DVector::from_vec(eps)).unwrap();
                let fit = adap_fit(&y, &basis, sigma2).unwrap();
                let diff = &fit.fitted - &mu;
                ratios.push(diff.dot(&diff) / n as f64 / denom);
            }
            ratios
        };
        let r1 = denom_and_ratios(1.0);
        let r2 = denom_and_ratios(3.0);
        for (a, b) in r1.iter().zip(&r2) {
            assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }
}
