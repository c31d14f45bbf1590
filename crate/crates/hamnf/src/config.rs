//! TOML experiment configs.
//!
//! A config has a `[model]` section (frequency rule, perturbation, basis),
//! an optional `[nf]` section (order, strategy, divisor floor), a `[run]`
//! section (ε list, dt, horizon cap, seed, smoothness weight), subcommand
//! sections (`[resonance]`, `[checks]`), and an `[output]` section. Unknown
//! keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::Method;
use crate::frequencies::{FreqError, FrequencyModel};
use crate::galerkin::{ModelFlavor, Potential, TaylorTerm};
use crate::normal_form::Strategy;
use crate::poly::{Polynomial, PolyError};

#[derive(Debug)]
pub enum ConfigError {
    Io(std::io::Error),
    Parse(String),
    Invalid(String),
    Freq(FreqError),
    Poly(PolyError),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(e) => write!(f, "config io error: {}", e),
            ConfigError::Parse(m) => write!(f, "config parse error: {}", m),
            ConfigError::Invalid(m) => write!(f, "invalid config: {}", m),
            ConfigError::Freq(e) => write!(f, "config frequency error: {}", e),
            ConfigError::Poly(e) => write!(f, "config polynomial error: {}", e),
        }
    }
}

impl std::error::Error for ConfigError {}

impl From<std::io::Error> for ConfigError {
    fn from(e: std::io::Error) -> Self {
        ConfigError::Io(e)
    }
}
impl From<FreqError> for ConfigError {
    fn from(e: FreqError) -> Self {
        ConfigError::Freq(e)
    }
}
impl From<PolyError> for ConfigError {
    fn from(e: PolyError) -> Self {
        ConfigError::Poly(e)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub nf: Option<NfSection>,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub resonance: Option<ResonanceSection>,
    #[serde(default)]
    pub checks: Option<ChecksSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// "explicit" | "nlw" | "convolution" (frequency rule).
    #[serde(default)]
    pub frequencies: Option<String>,
    #[serde(default)]
    pub omega: Option<Vec<f64>>,
    #[serde(default)]
    pub mass: Option<f64>,
    /// Convolution decay exponent m.
    #[serde(default)]
    pub decay: Option<u32>,
    #[serde(default)]
    pub seeds: Option<Vec<f64>>,
    /// Draw this many convolution seeds from the run seed.
    #[serde(default)]
    pub seed_count: Option<usize>,
    /// Perturbation terms in the polynomial text-line format.
    #[serde(default)]
    pub terms: Option<Vec<String>>,
    /// Perturbation as real products of position modes: (coeff, [modes…]).
    #[serde(default)]
    pub q_terms: Option<Vec<(f64, Vec<u32>)>>,
    /// Perturbation from a polynomial text file.
    #[serde(default)]
    pub p_file: Option<PathBuf>,
    /// Basis kind for Galerkin builds: "sine" | "exponential" | "sturm_liouville".
    #[serde(default)]
    pub basis: Option<String>,
    #[serde(default)]
    pub n_modes: Option<usize>,
    #[serde(default)]
    pub grid: Option<usize>,
    /// "schrodinger" | "wave"
    #[serde(default)]
    pub flavor: Option<ModelFlavor>,
    /// Potential as inline trig coefficients.
    #[serde(default)]
    pub v: Option<PotentialSpec>,
    /// Potential as a two-column samples file (x, V(x)).
    #[serde(default)]
    pub v_file: Option<PathBuf>,
    #[serde(default)]
    pub nonlinearity: Option<Vec<NonlinearityTerm>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl PotentialSpec {
    pub fn to_potential(&self) -> Potential {
        Potential::TrigSeries { constant: self.constant, cos: self.cos.clone(), sin: self.sin.clone() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityTerm {
    pub degree: usize,
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
    /// Samples file overriding the inline coefficients.
    #[serde(default)]
    pub g_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NfSection {
    pub order: usize,
    #[serde(default = "default_strategy")]
    pub strategy: Strategy,
    #[serde(default = "default_divisor_floor")]
    pub divisor_floor: f64,
}

fn default_strategy() -> Strategy {
    Strategy::ActionKernel
}

fn default_divisor_floor() -> f64 {
    crate::normal_form::DEFAULT_DIVISOR_FLOOR
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default)]
    pub eps: Vec<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_t_cap")]
    pub t_cap: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub s_weight: f64,
    #[serde(default = "default_method")]
    pub method: Method,
    /// Radii for the residual certificate of `cmd_nf`.
    #[serde(default)]
    pub radii: Vec<f64>,
    #[serde(default = "default_samples_per_radius")]
    pub samples_per_radius: usize,
    /// Also write a single trajectory at this ε.
    #[serde(default)]
    pub trajectory_eps: Option<f64>,
    #[serde(default)]
    pub t_final: Option<f64>,
}

fn default_t_cap() -> f64 {
    1e6
}
fn default_method() -> Method {
    Method::ImplicitMidpoint
}
fn default_samples_per_radius() -> usize {
    20
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            eps: Vec::new(),
            dt: None,
            t_cap: default_t_cap(),
            seed: 0,
            s_weight: 0.0,
            method: default_method(),
            radii: Vec::new(),
            samples_per_radius: default_samples_per_radius(),
            trajectory_eps: None,
            t_final: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceSection {
    pub r: u32,
    #[serde(default = "default_mu_max")]
    pub mu_max: u32,
    #[serde(default = "default_tail_max")]
    pub tail_max: u32,
    /// Box half-width for the exhaustive small-divisor minimum.
    #[serde(default)]
    pub k_max: Option<u32>,
    /// Run the diophantine margin check with these parameters.
    #[serde(default)]
    pub diophantine: Option<DiophantineSpec>,
    #[serde(default)]
    pub measure: Option<MeasureSpec>,
}

fn default_mu_max() -> u32 {
    8
}
fn default_tail_max() -> u32 {
    64
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiophantineSpec {
    pub gamma: f64,
    pub alpha: f64,
    pub k_max: u32,
    /// Truncation used for the enumeration (defaults to mu_max).
    #[serde(default)]
    pub n_modes: Option<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub gammas: Vec<f64>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    pub n_list: Vec<u32>,
    #[serde(default = "default_mc_samples")]
    pub samples: u64,
    #[serde(default = "default_k_budget")]
    pub k_budget: usize,
}

fn default_beta() -> f64 {
    5.0
}
fn default_mc_samples() -> u64 {
    10_000
}
fn default_k_budget() -> usize {
    1_000_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksSection {
    #[serde(default)]
    pub phi_bound: Option<PhiBoundSpec>,
    #[serde(default)]
    pub localization_orders: Option<Vec<u32>>,
    #[serde(default)]
    pub tame: Option<TameSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiBoundSpec {
    pub k: usize,
    pub n_exponent: u32,
    #[serde(default)]
    pub nu: f64,
    pub j_max: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TameSpec {
    pub degree: usize,
    pub s: f64,
    pub s0: f64,
    pub rhos: Vec<f64>,
    pub n_list: Vec<usize>,
    #[serde(default = "default_tame_samples")]
    pub samples: usize,
}

fn default_tame_samples() -> usize {
    34
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_formats() -> Vec<String> {
    vec!["csv".into(), "json".into()]
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: default_out_dir(), formats: default_formats() }
    }
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if let Some(fmt) = self
            .output
            .formats
            .iter()
            .find(|f| f.as_str() != "csv" && f.as_str() != "json")
        {
            return Err(ConfigError::Invalid(format!(
                "unknown output format `{}` (expected csv or json)",
                fmt
            )));
        }
        if let Some(nf) = &self.nf {
            if nf.order < 3 {
                return Err(ConfigError::Invalid("nf.order must be >= 3".into()));
            }
        }
        Ok(())
    }

    /// Frequency rule from the model section.
    pub fn frequency_model(&self) -> Result<FrequencyModel, ConfigError> {
        let m = &self.model;
        let kind = m.frequencies.as_deref().unwrap_or("explicit");
        match kind {
            "explicit" => {
                let omega = m
                    .omega
                    .as_ref()
                    .ok_or_else(|| ConfigError::Invalid("explicit frequencies need model.omega".into()))?;
                Ok(FrequencyModel::explicit(omega))
            }
            "nlw" => {
                let mass = m
                    .mass
                    .ok_or_else(|| ConfigError::Invalid("nlw frequencies need model.mass".into()))?;
                Ok(FrequencyModel::nlw(mass)?)
            }
            "convolution" => {
                let decay = m
                    .decay
                    .ok_or_else(|| ConfigError::Invalid("convolution frequencies need model.decay".into()))?;
                if let Some(seeds) = &m.seeds {
                    Ok(FrequencyModel::convolution(decay, seeds.clone())?)
                } else if let Some(count) = m.seed_count {
                    Ok(FrequencyModel::convolution_random(decay, count, self.run.seed)?)
                } else {
                    Err(ConfigError::Invalid(
                        "convolution frequencies need model.seeds or model.seed_count".into(),
                    ))
                }
            }
            other => Err(ConfigError::Invalid(format!(
                "unknown frequency rule `{}` (expected explicit, nlw, convolution)",
                other
            ))),
        }
    }

    /// Perturbation polynomial from inline terms, q-products, or a file.
    pub fn perturbation(&self, cutoff: usize, base_dir: &Path) -> Result<Polynomial, ConfigError> {
        let m = &self.model;
        let sources =
            m.terms.is_some() as u8 + m.q_terms.is_some() as u8 + m.p_file.is_some() as u8;
        if sources > 1 {
            return Err(ConfigError::Invalid(
                "give at most one of model.terms, model.q_terms, model.p_file".into(),
            ));
        }
        if let Some(lines) = &m.terms {
            let mut text = format!("degree_cutoff {}\n", cutoff);
            for line in lines {
                text.push_str(line);
                text.push('\n');
            }
            return Ok(Polynomial::from_text(&text)?);
        }
        if let Some(q_terms) = &m.q_terms {
            let mut p = Polynomial::zero(cutoff);
            for (coeff, modes) in q_terms {
                if modes.iter().any(|&m| m == 0) {
                    return Err(ConfigError::Invalid("q_terms mode indices start at 1".into()));
                }
                p = p.add(&Polynomial::from_q_product(*coeff, modes, cutoff));
            }
            return Ok(p);
        }
        if let Some(path) = &m.p_file {
            let full = if path.is_absolute() { path.clone() } else { base_dir.join(path) };
            let text = std::fs::read_to_string(&full)?;
            return Ok(Polynomial::from_text(&text)?.truncated(cutoff));
        }
        Ok(Polynomial::zero(cutoff))
    }

    /// Potential for the Sturm–Liouville eigenproblem.
    pub fn potential(&self, base_dir: &Path) -> Result<Potential, ConfigError> {
        if self.model.v.is_some() && self.model.v_file.is_some() {
            return Err(ConfigError::Invalid("give either model.v or model.v_file".into()));
        }
        if let Some(spec) = &self.model.v {
            return Ok(spec.to_potential());
        }
        if let Some(path) = &self.model.v_file {
            let full = if path.is_absolute() { path.clone() } else { base_dir.join(path) };
            return read_samples(&full);
        }
        Ok(Potential::zero())
    }

    /// Nonlinearity Taylor coefficients `g_k`.
    pub fn taylor_terms(&self, base_dir: &Path) -> Result<Vec<TaylorTerm>, ConfigError> {
        let Some(terms) = &self.model.nonlinearity else {
            return Ok(Vec::new());
        };
        let mut out = Vec::new();
        for t in terms {
            if t.degree < 3 {
                return Err(ConfigError::Invalid(format!(
                    "nonlinearity degree {} below 3",
                    t.degree
                )));
            }
            let g = if let Some(path) = &t.g_file {
                let full = if path.is_absolute() { path.clone() } else { base_dir.join(path) };
                read_samples(&full)?
            } else {
                Potential::TrigSeries {
                    constant: t.constant,
                    cos: t.cos.clone(),
                    sin: t.sin.clone(),
                }
            };
            out.push(TaylorTerm { degree: t.degree, g });
        }
        Ok(out)
    }

    pub fn emit_csv(&self) -> bool {
        self.output.formats.iter().any(|f| f == "csv")
    }

    pub fn emit_json(&self) -> bool {
        self.output.formats.iter().any(|f| f == "json")
    }
}

/// Two-column whitespace- or comma-separated samples file.
fn read_samples(path: &Path) -> Result<Potential, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    let mut samples = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        if fields.len() != 2 {
            return Err(ConfigError::Parse(format!(
                "{}:{}: expected two columns (x, V)",
                path.display(),
                no + 1
            )));
        }
        let x: f64 = fields[0]
            .parse()
            .map_err(|_| ConfigError::Parse(format!("{}:{}: bad x value", path.display(), no + 1)))?;
        let v: f64 = fields[1]
            .parse()
            .map_err(|_| ConfigError::Parse(format!("{}:{}: bad V value", path.display(), no + 1)))?;
        samples.push((x, v));
    }
    if samples.is_empty() {
        return Err(ConfigError::Parse(format!("{}: no samples", path.display())));
    }
    samples.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(Potential::Samples(samples))
}
