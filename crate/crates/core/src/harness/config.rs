//! Experiment configuration: TOML sections `[model] [coeffs] [grid] [mc]
//! [experiment]`, unknown keys rejected.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::covariance::{CovarianceModel, Interval, StationaryF};
use crate::error::{Error, Result};
use crate::fourier::{CoefficientRule, CoefficientSequence, SpectralDensity, TruncationPolicy, TvCase};
use crate::roughpath::PairSet;
use crate::she::Bc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Variation,
    Check,
    CheckSeries,
    Sample,
    Lift,
    She,
    Rates,
    Embedding,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Variation => "variation",
            ExperimentKind::Check => "check",
            ExperimentKind::CheckSeries => "check-series",
            ExperimentKind::Sample => "sample",
            ExperimentKind::Lift => "lift",
            ExperimentKind::She => "she",
            ExperimentKind::Rates => "rates",
            ExperimentKind::Embedding => "embedding",
        }
    }
}

/// `[model]`: a catalog kind with named parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_tol: Option<f64>,
}

/// `[coeffs]`: a coefficient rule plus cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffsSection {
    pub sequence: CoefficientRule,
    #[serde(default = "default_k_max")]
    pub k_max: u64,
    #[serde(default)]
    pub a0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    /// Case of the total-variation bound, applied to `tv_sequence`
    /// (or `sequence` when absent).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tv_case: Option<TvCase>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tv_sequence: Option<CoefficientRule>,
}

fn default_k_max() -> u64 {
    1_000_000
}

impl CoeffsSection {
    pub fn to_sequence(&self) -> Result<CoefficientSequence> {
        let mut a = CoefficientSequence::symmetric(self.sequence.clone(), self.k_max.min(usize::MAX as u64) as usize)
            .with_a0(self.a0);
        if let Some(r) = self.rho {
            a.decay_rho = r;
        }
        a.validate()?;
        Ok(a)
    }
}

/// `[grid]`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "default_grid_n")]
    pub n: usize,
    #[serde(default = "default_d")]
    pub d: usize,
}

fn default_grid_n() -> usize {
    33
}
fn default_d() -> usize {
    1
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { n: default_grid_n(), d: default_d() }
    }
}

/// `[mc]`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_level")]
    pub level: usize,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default = "default_pairs")]
    pub pairs: PairSet,
}

fn default_paths() -> usize {
    200
}
fn default_level() -> usize {
    3
}
fn default_beta() -> f64 {
    0.05
}
fn default_q() -> f64 {
    2.0
}
fn default_pairs() -> PairSet {
    PairSet::DyadicLags
}

impl Default for McSection {
    fn default() -> Self {
        McSection {
            paths: default_paths(),
            seed: 0,
            level: default_level(),
            beta: default_beta(),
            q: default_q(),
            pairs: default_pairs(),
        }
    }
}

/// `[experiment]`: the subcommand and its knobs. Keys that a subcommand
/// does not use are ignored by it but still validated by name.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub name: Option<ExperimentKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
    /// Single-file output (JSON) when `out_dir` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    // variation
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rect: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sides: Option<usize>,
    // check
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    // lift
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    // she
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bc: Option<Bc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoffs: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lags: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_rate: Option<f64>,
    // embedding
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<CoeffsSection>,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub mc: McSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Parameter names of each kind, in positional order for `kind:a,b,c`.
pub fn kind_params(kind: &str) -> Option<&'static [&'static str]> {
    Some(match kind {
        "fbm" => &["hurst"],
        "brownian_bridge" => &["horizon"],
        "stationary_power" => &["exponent"],
        "stationary_exp" => &["lambda"],
        "ou" => &["lambda"],
        "fou" => &["hurst", "lambda"],
        "bifbm" => &["hurst", "k"],
        "rfs" => &["exponent", "scale", "a0"],
        "she_dirichlet" => &["alpha"],
        "she_periodic" => &["alpha", "lambda", "color"],
        "spectral_she" => &["alpha", "lambda"],
        "spectral_gaussian" => &[],
        _ => return None,
    })
}

/// Parses `kind:p1,p2,...`, e.g. `fbm:0.3` or `bifbm:0.6,0.7`. Dashes in the
/// kind are accepted for underscores.
pub fn parse_model_spec(spec: &str) -> Result<ModelSection> {
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let kind = kind.trim().replace('-', "_");
    let names = kind_params(&kind).ok_or_else(|| Error::Config(format!("unknown model kind '{kind}'")))?;
    let values: Vec<f64> = rest
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| Error::Config(format!("bad number '{s}' in '{spec}'"))))
        .collect::<Result<_>>()?;
    if values.len() > names.len() {
        return Err(Error::Config(format!("'{kind}' takes at most {} parameters", names.len())));
    }
    Ok(ModelSection {
        kind,
        params: names.iter().zip(values).map(|(n, v)| (n.to_string(), v)).collect(),
        domain: None,
        rho: None,
        tail_tol: None,
    })
}

impl ModelSection {
    fn param(&self, name: &str) -> Result<f64> {
        self.params
            .get(name)
            .copied()
            .ok_or_else(|| Error::Config(format!("model '{}' needs params.{name}", self.kind)))
    }

    fn param_or(&self, name: &str, default: f64) -> f64 {
        self.params.get(name).copied().unwrap_or(default)
    }

    /// Builds the model; `coeffs` supplies the sequence of an `rfs` kind
    /// when `params.exponent` is absent.
    pub fn build(&self, coeffs: Option<&CoeffsSection>) -> Result<CovarianceModel> {
        let names =
            kind_params(&self.kind).ok_or_else(|| Error::Config(format!("unknown model kind '{}'", self.kind)))?;
        if let Some(bad) = self.params.keys().find(|k| !names.contains(&k.as_str())) {
            return Err(Error::Config(format!("model '{}' has no parameter '{bad}'", self.kind)));
        }
        let mut m = match self.kind.as_str() {
            "fbm" => CovarianceModel::fbm(self.param("hurst")?)?,
            "brownian_bridge" => CovarianceModel::brownian_bridge(self.param_or("horizon", 1.0))?,
            "stationary_power" => CovarianceModel::stationary_f(StationaryF::power(self.param("exponent")?))?,
            "stationary_exp" => CovarianceModel::stationary_f(StationaryF::exponential(self.param("lambda")?))?,
            "ou" => CovarianceModel::ou(self.param("lambda")?)?,
            "fou" => CovarianceModel::fractional_ou(self.param("hurst")?, self.param("lambda")?)?,
            "bifbm" => CovarianceModel::bifbm(self.param("hurst")?, self.param("k")?)?,
            "rfs" => {
                let a = match (self.params.get("exponent"), coeffs) {
                    (Some(&e), _) => CoefficientSequence::symmetric(
                        CoefficientRule::Power { scale: self.param_or("scale", 1.0), exponent: e },
                        crate::fourier::MAX_SERIES_MODES,
                    )
                    .with_a0(self.param_or("a0", 0.0)),
                    (None, Some(c)) => c.to_sequence()?,
                    (None, None) => {
                        return Err(Error::Config("rfs needs params.exponent or a [coeffs] section".into()))
                    }
                };
                CovarianceModel::rfs(a)?
            }
            "she_dirichlet" => CovarianceModel::she_dirichlet(self.param("alpha")?)?,
            "she_periodic" => CovarianceModel::she_periodic(
                self.param("alpha")?,
                self.param_or("lambda", 1.0),
                self.param_or("color", 0.0),
            )?,
            "spectral_she" => CovarianceModel::spectral(SpectralDensity::whole_line_she(
                self.param("alpha")?,
                self.param_or("lambda", 1.0),
            )?)?,
            "spectral_gaussian" => CovarianceModel::spectral(SpectralDensity::gaussian())?,
            other => return Err(Error::Config(format!("unknown model kind '{other}'"))),
        };
        if let Some([lo, hi]) = self.domain {
            m = m.with_domain(Interval::new(lo, hi)?)?;
        }
        if let Some(tol) = self.tail_tol {
            m = m.with_truncation(TruncationPolicy::Tail { tol });
        }
        if let Some(r) = self.rho {
            m = m.with_rho(r)?;
        }
        Ok(m)
    }
}
