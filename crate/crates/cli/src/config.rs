//! TOML experiment configuration.
//!
//! Flat key-value sections; every key is echoed into the run manifest so a
//! result directory is self-describing. Parse errors surface with the TOML
//! line/column; semantic errors name the offending field.

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use mallows_ma::simlab::dgp::{CoefOrder, DecayKind, NoiseFamily};
use mallows_ma::simlab::{
    ExperimentConfig, NoiseLevel, PRule, PcrSettings, Scenario, SimMethod,
};

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub experiment: ExperimentSection,
    pub grid: GridSection,
    pub coefficients: CoefficientSection,
    pub noise: NoiseSection,
    #[serde(default)]
    pub pcr: Option<PcrSection>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub scenario: String,
    pub replications: usize,
    pub seed: u64,
    pub methods: Vec<String>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: Vec<usize>,
    pub p: PValue,
}

/// `p = "match_n"`, `p = "sqrt_n"`, or `p = [30, 50, 80]`.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum PValue {
    Rule(String),
    List(Vec<usize>),
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSection {
    pub decay: String,
    #[serde(default)]
    pub alpha: Option<f64>,
    pub order: String,
    /// Cube radius inputs for `decay = "hardest_cube"`.
    #[serde(default)]
    pub cube_sigma2: Option<f64>,
    #[serde(default)]
    pub cube_n: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub family: String,
    #[serde(default)]
    pub snr: Option<f64>,
    #[serde(default)]
    pub sigma2: Option<f64>,
    #[serde(default)]
    pub df: Option<f64>,
    #[serde(default)]
    pub shape: Option<f64>,
    #[serde(default)]
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PcrSection {
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub ar_rho: Option<f64>,
    #[serde(default)]
    pub cv_folds: Option<usize>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        toml::from_str(text).context("config file does not parse")
    }

    /// Resolve the raw file into a validated experiment configuration.
    /// `seed_override` substitutes the master seed; `full_scale` switches
    /// the pcr scenario to its full-scale dimensions (n = 500, d = 1000).
    pub fn resolve(
        &self,
        seed_override: Option<u64>,
        full_scale: bool,
    ) -> anyhow::Result<ExperimentConfig> {
        let scenario = Scenario::parse(&self.experiment.scenario)
            .map_err(|e| anyhow::anyhow!("[experiment] scenario: {e}"))?;

        let methods = self
            .experiment
            .methods
            .iter()
            .map(|m| SimMethod::parse(m).map_err(|e| anyhow::anyhow!("[experiment] methods: {e}")))
            .collect::<anyhow::Result<Vec<_>>>()?;

        let p_rule = match &self.grid.p {
            PValue::Rule(r) => match r.as_str() {
                "match_n" => PRule::MatchN,
                "sqrt_n" => PRule::SqrtN,
                other => bail!("[grid] p: unknown rule '{other}' (match_n, sqrt_n, or a list)"),
            },
            PValue::List(ps) => PRule::Fixed(ps.clone()),
        };

        let decay = match self.coefficients.decay.as_str() {
            "polynomial" => DecayKind::Polynomial {
                alpha: self
                    .coefficients
                    .alpha
                    .ok_or_else(|| anyhow::anyhow!("[coefficients] alpha required for polynomial"))?,
            },
            "exponential" => DecayKind::Exponential {
                alpha: self
                    .coefficients
                    .alpha
                    .ok_or_else(|| anyhow::anyhow!("[coefficients] alpha required for exponential"))?,
            },
            "hardest_cube" => DecayKind::HardestCube {
                sigma2: self.coefficients.cube_sigma2.ok_or_else(|| {
                    anyhow::anyhow!("[coefficients] cube_sigma2 required for hardest_cube")
                })?,
                n: self.coefficients.cube_n.ok_or_else(|| {
                    anyhow::anyhow!("[coefficients] cube_n required for hardest_cube")
                })?,
            },
            other => bail!("[coefficients] decay: unknown kind '{other}'"),
        };

        let order = match self.coefficients.order.as_str() {
            "ordered" => CoefOrder::Ordered,
            "permuted" => CoefOrder::Permuted,
            other => bail!("[coefficients] order: unknown value '{other}'"),
        };

        let noise_family = match self.noise.family.as_str() {
            "gaussian" => NoiseFamily::Gaussian,
            "student_t" => NoiseFamily::StudentT { df: self.noise.df.unwrap_or(5.0) },
            "pareto_symmetric" => NoiseFamily::ParetoSymmetric {
                shape: self.noise.shape.unwrap_or(5.0),
                scale: self.noise.scale.unwrap_or(1.0),
            },
            other => bail!("[noise] family: unknown value '{other}'"),
        };

        let noise_level = match (self.noise.snr, self.noise.sigma2) {
            (Some(snr), None) => NoiseLevel::Snr(snr),
            (None, Some(s2)) => NoiseLevel::Sigma2(s2),
            (Some(_), Some(_)) => bail!("[noise] give either snr or sigma2, not both"),
            (None, None) => bail!("[noise] one of snr or sigma2 is required"),
        };

        let defaults = PcrSettings::default();
        let mut pcr = match &self.pcr {
            Some(s) => PcrSettings {
                d: s.d.unwrap_or(defaults.d),
                ar_rho: s.ar_rho.unwrap_or(defaults.ar_rho),
                cv_folds: s.cv_folds.unwrap_or(defaults.cv_folds),
            },
            None => defaults,
        };

        let mut n_values = self.grid.n.clone();
        if full_scale && scenario == Scenario::Pcr {
            n_values = vec![500];
            pcr.d = 1000;
        }

        let config = ExperimentConfig {
            scenario,
            n_values,
            p_rule,
            decay,
            order,
            noise_family,
            noise_level,
            methods,
            replications: self.experiment.replications,
            master_seed: seed_override.unwrap_or(self.experiment.seed),
            pcr,
        };
        config.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
        Ok(config)
    }
}

/// Manifest: the parsed config echoed back, plus the run parameters that
/// are not part of the file. Serialized as TOML; contains no timestamps so
/// identical runs write identical bytes.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub version: &'a str,
    pub master_seed: u64,
    pub full_scale: bool,
    pub config: &'a ConfigFile,
    /// `2 log p` reference levels present in the result, keyed by p.
    pub reference_two_log_p: Vec<ReferencePoint>,
}

#[derive(Debug, Serialize)]
pub struct ReferencePoint {
    pub p: usize,
    pub two_log_p: f64,
}
