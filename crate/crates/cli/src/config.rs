//! Layered run configuration: built-in defaults, then the profile, then a
//! flat TOML file, then command-line flags.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use kdv_core::integrator::{DEFAULT_M, DESK_DT, PAPER_DT};
use kdv_core::Scheme;
use serde::{Deserialize, Serialize};

#[derive(Debug)]
pub enum ConfigError {
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    Parse {
        path: PathBuf,
        message: String,
    },
    Invalid {
        key: &'static str,
        reason: String,
    },
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Read { path, source } => {
                write!(f, "cannot read config {}: {source}", path.display())
            }
            ConfigError::Parse { path, message } => {
                write!(f, "invalid config {}: {message}", path.display())
            }
            ConfigError::Invalid { key, reason } => {
                write!(f, "invalid value for `{key}`: {reason}")
            }
        }
    }
}

impl std::error::Error for ConfigError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            ConfigError::Read { source, .. } => Some(source),
            _ => None,
        }
    }
}

/// Which time-stepping defaults apply.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Integrating-factor RK4 with `dt = 1e-5`.
    #[default]
    Desk,
    /// Fornberg–Whitham leapfrog with `dt = 1e-7`.
    Paper,
}

impl Profile {
    pub fn dt(self) -> f64 {
        match self {
            Profile::Desk => DESK_DT,
            Profile::Paper => PAPER_DT,
        }
    }

    pub fn scheme(self) -> Scheme {
        match self {
            Profile::Desk => Scheme::IntegratingFactorRk4,
            Profile::Paper => Scheme::FornbergWhitham,
        }
    }
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            other => Err(format!(
                "unknown profile `{other}` (expected desk or paper)"
            )),
        }
    }
}

/// One configuration layer. Every key is optional; later layers win.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub profile: Option<Profile>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub m: Option<usize>,
    pub scheme: Option<Scheme>,
    pub dealias: Option<bool>,
    pub epsilon: Option<f64>,
    pub amplitude: Option<f64>,
    /// Comma-separated list, e.g. `"0.4,0.2,0.1"`.
    pub epsilons: Option<String>,
    pub seed: Option<u64>,
    pub delta: Option<f64>,
    pub eps: Option<f64>,
    pub threshold: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),*) => {
        ConfigLayer { $($field: $top.$field.or($base.$field)),* }
    };
}

impl ConfigLayer {
    /// Keys set in `top` replace those in `self`.
    pub fn overlay(self, top: ConfigLayer) -> ConfigLayer {
        let base = self;
        overlay!(base, top; profile, a, b, dt, t_final, m, scheme, dealias, epsilon,
            amplitude, epsilons, seed, delta, eps, threshold, out_dir)
    }
}

/// Fully resolved and validated configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub profile: Profile,
    /// `None` lets each subcommand apply its own coefficients.
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub dt: f64,
    pub t_final: Option<f64>,
    pub m: usize,
    pub scheme: Scheme,
    pub dealias: bool,
    pub epsilon: Option<f64>,
    pub amplitude: Option<f64>,
    pub epsilons: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub delta: Option<f64>,
    pub eps: Option<f64>,
    pub threshold: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::resolve(ConfigLayer::default()).expect("defaults are valid")
    }
}

fn invalid(key: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key,
        reason: reason.into(),
    }
}

fn positive(key: &'static str, value: Option<f64>) -> Result<(), ConfigError> {
    match value {
        Some(v) if !(v.is_finite() && v > 0.0) => Err(invalid(key, format!("{v} is not positive"))),
        _ => Ok(()),
    }
}

fn finite(key: &'static str, value: Option<f64>) -> Result<(), ConfigError> {
    match value {
        Some(v) if !v.is_finite() => Err(invalid(key, format!("{v} is not finite"))),
        _ => Ok(()),
    }
}

pub fn parse_list(key: &'static str, text: &str) -> Result<Vec<f64>, ConfigError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|e| invalid(key, format!("`{s}`: {e}")))
        })
        .collect()
}

impl RunConfig {
    /// Fills unset keys from the built-in and profile defaults and checks
    /// every value against the module preconditions.
    pub fn resolve(layer: ConfigLayer) -> Result<Self, ConfigError> {
        let profile = layer.profile.unwrap_or_default();
        let m = layer.m.unwrap_or(DEFAULT_M);
        if !m.is_power_of_two() || m < 4 {
            return Err(invalid("m", format!("{m} is not a power of two ≥ 4")));
        }
        let dt = layer.dt.unwrap_or(profile.dt());
        positive("dt", Some(dt))?;
        positive("t_final", layer.t_final)?;
        finite("a", layer.a)?;
        finite("b", layer.b)?;
        finite("amplitude", layer.amplitude)?;
        positive("threshold", layer.threshold)?;
        let unit_interval = |key, value: Option<f64>| match value {
            Some(v) if !(v > 0.0 && v <= 1.0) => Err(invalid(key, format!("{v} not in (0, 1]"))),
            _ => Ok(()),
        };
        unit_interval("epsilon", layer.epsilon)?;
        unit_interval("eps", layer.eps)?;
        if let Some(d) = layer.delta {
            if !(d.is_finite() && d >= 0.0) {
                return Err(invalid("delta", format!("{d} is negative")));
            }
        }
        let epsilons = match &layer.epsilons {
            Some(text) => {
                let list = parse_list("epsilons", text)?;
                for &e in &list {
                    unit_interval("epsilons", Some(e))?;
                }
                Some(list)
            }
            None => None,
        };
        Ok(RunConfig {
            profile,
            a: layer.a,
            b: layer.b,
            dt,
            t_final: layer.t_final,
            m,
            scheme: layer.scheme.unwrap_or(profile.scheme()),
            dealias: layer.dealias.unwrap_or(true),
            epsilon: layer.epsilon,
            amplitude: layer.amplitude,
            epsilons,
            seed: layer.seed,
            delta: layer.delta,
            eps: layer.eps,
            threshold: layer.threshold,
            out_dir: layer.out_dir,
        })
    }
}

pub fn read_layer(path: &Path) -> Result<ConfigLayer, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_owned(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| ConfigError::Parse {
        path: path.to_owned(),
        message: match e.span().and_then(|span| key_at(&text, span.start)) {
            Some(key) if !e.message().contains(&format!("`{key}`")) => {
                format!("key `{key}`: {}", e.message())
            }
            _ => e.message().to_owned(),
        },
    })
}

/// Key of the `key = value` line containing byte `offset`.
fn key_at(text: &str, offset: usize) -> Option<String> {
    let start = text[..offset.min(text.len())]
        .rfind('\n')
        .map_or(0, |i| i + 1);
    let line = text[start..].lines().next()?;
    let (key, _) = line.split_once('=')?;
    Some(key.trim().to_owned())
}

/// Reads and resolves a config file on its own.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    RunConfig::resolve(read_layer(path)?)
}
