//! TOML experiment configuration. Every section is optional except
//! `[system]` for the subcommands that need one; missing keys take the
//! defaults below.

use std::path::{Path, PathBuf};

use pec_core::adversary::AdversaryScheme;
use pec_core::ffield::FieldSpec;
use pec_core::probsim::{Channel, Pmf};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub budget: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub system: Option<SystemConfig>,
    #[serde(default)]
    pub region: RegionConfig,
    #[serde(default)]
    pub exponent: ExponentConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub leakage: LeakageConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default = "two")]
    pub q: u32,
    pub p_x: Vec<f64>,
    pub p_k: Vec<f64>,
    /// Side channel rows `W(. | k)`.
    pub w: Vec<Vec<f64>>,
}

/// Validated system parameters.
#[derive(Debug, Clone)]
pub struct System {
    pub field: FieldSpec,
    pub p_x: Pmf,
    pub p_k: Pmf,
    pub w: Channel,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegionConfig {
    pub lambdas: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl Default for RegionConfig {
    fn default() -> Self {
        RegionConfig {
            lambdas: 64,
            lambda_min: 1e-3,
            lambda_max: 1e3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExponentConfig {
    pub r_a: Vec<f64>,
    pub r: Vec<f64>,
    /// Steps per unit of the `(mu, alpha)` grid.
    pub surface_grid: u32,
    pub refine: bool,
    pub compute_g: bool,
    pub g_lattice: u32,
    pub g_polish_levels: u32,
    pub g_polish_steps: usize,
    /// Grid of the surfaces evaluated at candidate joints of the `G` search.
    pub g_light_grid: u32,
}

impl Default for ExponentConfig {
    fn default() -> Self {
        let grid = vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        ExponentConfig {
            r_a: grid.clone(),
            r: grid,
            surface_grid: 64,
            refine: true,
            compute_g: true,
            g_lattice: 6,
            g_polish_levels: 2,
            g_polish_steps: 6,
            g_light_grid: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderChoice {
    /// Best of `candidates` sampled affine encoders.
    Sampled,
    /// `A = I`, `b = 0`: no compression.
    Identity,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub n: Vec<usize>,
    pub rate: f64,
    pub encoder: EncoderChoice,
    pub candidates: usize,
    pub trials: u64,
    /// Monte Carlo trials per candidate when exact scoring is over budget.
    pub pilot_trials: u64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            n: vec![8, 12, 16, 20],
            rate: 0.55,
            encoder: EncoderChoice::Sampled,
            candidates: 32,
            trials: 100_000,
            pilot_trials: 10_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LeakageConfig {
    pub n: Vec<usize>,
    /// Compression rate; `m = floor(n rate / ln q)`.
    pub rate: f64,
    pub schemes: Vec<AdversaryScheme>,
    pub r_a: Vec<f64>,
    /// Also evaluate the type-class decomposition of the divergence bound.
    pub chain: bool,
}

impl Default for LeakageConfig {
    fn default() -> Self {
        LeakageConfig {
            n: vec![2, 3, 4, 5, 6],
            rate: 0.5,
            schemes: AdversaryScheme::ALL.to_vec(),
            r_a: vec![0.0, 0.2, 0.4],
            chain: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpsilonForm {
    Verbatim,
    Conditional,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    /// Random systems for the leakage inequalities.
    pub systems: usize,
    pub max_n: usize,
    pub r_a: f64,
    pub zeta_n: usize,
    pub zeta_m: usize,
    pub zeta_samples: usize,
    /// Which `Upsilon` the sampled `zeta` means are compared with.
    pub upsilon_form: UpsilonForm,
    pub type_factor_max_n: usize,
    pub type_factor_rates: Vec<f64>,
    pub exponent_n: Vec<usize>,
    pub bsc: Vec<f64>,
    pub exponent_r_a: Vec<f64>,
    pub exponent_r: Vec<f64>,
    pub surface_grid: u32,
    /// Random joints for the `G >= F / 3` check.
    pub joints: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            systems: 8,
            max_n: 4,
            r_a: 0.3,
            zeta_n: 3,
            zeta_m: 2,
            zeta_samples: 200,
            upsilon_form: UpsilonForm::Verbatim,
            type_factor_max_n: 4,
            type_factor_rates: vec![0.2, 0.5, std::f64::consts::LN_2],
            exponent_n: vec![4, 6],
            bsc: vec![0.1, 0.3],
            exponent_r_a: vec![0.0, 0.2, 0.4],
            exponent_r: vec![0.25, 0.45, 0.65],
            surface_grid: 8,
            joints: 2,
        }
    }
}

fn two() -> u32 {
    2
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn check_rates(name: &str, v: &[f64]) -> Result<(), CliError> {
    match v.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
        Some(r) => Err(bad(format!("{name}: rates must be finite and >= 0, got {r}"))),
        None => Ok(()),
    }
}

fn check_blocklengths(name: &str, v: &[usize]) -> Result<(), CliError> {
    if v.is_empty() || v.contains(&0) || v.iter().any(|&n| n > 63) {
        return Err(bad(format!("{name}: need a nonempty list of blocklengths in 1..=63")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Schema checks that do not depend on the subcommand.
    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(s) = &self.system {
            s.build()?;
        }
        let r = &self.region;
        if !(r.lambda_min > 0.0 && r.lambda_max >= r.lambda_min && r.lambda_max.is_finite()) {
            return Err(bad("region: need 0 < lambda_min <= lambda_max < inf"));
        }
        let e = &self.exponent;
        check_rates("exponent.r_a", &e.r_a)?;
        check_rates("exponent.r", &e.r)?;
        if e.surface_grid == 0 || e.g_lattice == 0 || e.g_light_grid == 0 || e.g_polish_levels > 8 {
            return Err(bad("exponent: grids must be positive and g_polish_levels <= 8"));
        }
        let s = &self.simulate;
        check_blocklengths("simulate.n", &s.n)?;
        check_rates("simulate.rate", &[s.rate])?;
        if s.candidates == 0 || s.trials == 0 || s.pilot_trials == 0 {
            return Err(bad("simulate: candidates, trials and pilot_trials must be positive"));
        }
        let l = &self.leakage;
        check_blocklengths("leakage.n", &l.n)?;
        check_rates("leakage.rate", &[l.rate])?;
        check_rates("leakage.r_a", &l.r_a)?;
        if l.schemes.is_empty() {
            return Err(bad("leakage.schemes must not be empty"));
        }
        let v = &self.verify;
        check_rates("verify.r_a", &[v.r_a])?;
        check_rates("verify.type_factor_rates", &v.type_factor_rates)?;
        check_rates("verify.exponent_r_a", &v.exponent_r_a)?;
        check_rates("verify.exponent_r", &v.exponent_r)?;
        if v.exponent_r.contains(&0.0) {
            return Err(bad("verify.exponent_r: rates must be > 0"));
        }
        if v.zeta_m == 0 || v.zeta_m > v.zeta_n || v.zeta_samples < 2 || v.max_n == 0 || v.surface_grid == 0 {
            return Err(bad("verify: need 1 <= zeta_m <= zeta_n, zeta_samples >= 2, max_n >= 1, surface_grid >= 1"));
        }
        if v.bsc.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(bad("verify.bsc: crossover probabilities must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn system(&self) -> Result<System, CliError> {
        self.system.as_ref().ok_or_else(|| bad("missing [system] section"))?.build()
    }
}

impl SystemConfig {
    pub fn build(&self) -> Result<System, CliError> {
        let field = FieldSpec::new(self.q).map_err(|e| bad(format!("system.q: {e}")))?;
        let pmf = |name: &str, v: &[f64]| Pmf::new(v.to_vec()).map_err(|e| bad(format!("system.{name}: {e}")));
        let p_x = pmf("p_x", &self.p_x)?;
        let p_k = pmf("p_k", &self.p_k)?;
        let rows = self
            .w
            .iter()
            .enumerate()
            .map(|(i, r)| pmf(&format!("w[{i}]"), r))
            .collect::<Result<Vec<_>, _>>()?;
        let w = Channel::new(rows).map_err(|e| bad(format!("system.w: {e}")))?;
        let q = field.size();
        if p_x.len() != q || p_k.len() != q || w.in_size() != q {
            return Err(bad(format!("system: p_x, p_k and the rows of w need {q} entries / rows")));
        }
        Ok(System { field, p_x, p_k, w })
    }
}
