//! Scenario configuration files (TOML, or JSON by extension).

use std::path::{Path, PathBuf};

use serde_json::{Map, Value};
use thiserror::Error;

use crate::laws::LawSpec;
use crate::tensor::Family;

pub const DEFAULT_SAMPLES: usize = 1_000_000;
pub const MIN_SAMPLES: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(String),
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("config field `{field}`: {message}")]
    Field { field: String, message: String },
}

fn field_err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinsSetting {
    Auto,
    Fixed(usize),
}

/// Pass thresholds for the scenario predicates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// Minimum `tv_hist` for a singular input law.
    pub prohorov_negative: f64,
    /// Maximum `tv_hist` at the largest `n` for an absolutely continuous law.
    pub prohorov_positive: f64,
    pub moo_ks: f64,
    pub moo_fm: f64,
    pub tv_invariance: f64,
    /// Minimum `tv_hist` for the dominant-pair chaos.
    pub dominant: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            prohorov_negative: 0.9,
            prohorov_positive: 0.05,
            moo_ks: 0.05,
            moo_fm: 0.05,
            tv_invariance: 0.08,
            dominant: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: String,
    pub degree: usize,
    pub family: Family,
    /// Strictly increasing dimensions.
    pub n_list: Vec<usize>,
    pub law_x: LawSpec,
    pub law_y: Option<LawSpec>,
    pub samples: usize,
    pub seed: u64,
    pub bins: BinsSetting,
    pub range: Option<(f64, f64)>,
    pub output: Option<PathBuf>,
    pub thresholds: Thresholds,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let value: Value = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        Self::from_value(value)
    }

    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        Self::from_value(value)
    }

    /// Validates a parsed document and fills defaults.
    pub fn from_value(value: Value) -> Result<Self, ConfigError> {
        let Value::Object(mut map) = value else {
            return Err(ConfigError::Parse("top level must be a table".into()));
        };
        let scenario = take_string(&mut map, "scenario")?.ok_or_else(|| field_err("scenario", "missing"))?;
        let degree = take_uint(&mut map, "degree")?.ok_or_else(|| field_err("degree", "missing"))? as usize;
        if degree == 0 {
            return Err(field_err("degree", "must be at least 1"));
        }
        let family: Family = take_string(&mut map, "family")?
            .ok_or_else(|| field_err("family", "missing"))?
            .parse()
            .map_err(|e: String| field_err("family", e))?;

        let n_list = match map.remove("n_list") {
            None => return Err(field_err("n_list", "missing")),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| v.as_u64().map(|n| n as usize).ok_or_else(|| field_err("n_list", "entries must be positive integers")))
                .collect::<Result<Vec<_>, _>>()?,
            Some(_) => return Err(field_err("n_list", "must be a list")),
        };
        if n_list.is_empty() {
            return Err(field_err("n_list", "must not be empty"));
        }
        if n_list.contains(&0) {
            return Err(field_err("n_list", "entries must be positive"));
        }
        if n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(field_err("n_list", "must be strictly increasing"));
        }
        if n_list[0] < degree {
            return Err(field_err("n_list", format!("dimensions must be at least the degree {degree}")));
        }

        let law_x = take_law(&mut map, "law_x")?.ok_or_else(|| field_err("law_x", "missing"))?;
        let law_y = take_law(&mut map, "law_y")?;

        let samples = take_uint(&mut map, "samples")?.map_or(DEFAULT_SAMPLES, |s| s as usize);
        if samples < MIN_SAMPLES {
            return Err(field_err("samples", format!("must be at least {MIN_SAMPLES}, got {samples}")));
        }
        let seed = take_uint(&mut map, "seed")?.unwrap_or(0);

        let bins = match map.remove("bins") {
            None => BinsSetting::Auto,
            Some(Value::String(s)) if s == "auto" => BinsSetting::Auto,
            Some(v) => match v.as_u64() {
                Some(b) if b >= 10 => BinsSetting::Fixed(b as usize),
                _ => return Err(field_err("bins", "must be \"auto\" or an integer >= 10")),
            },
        };
        let range = match map.remove("range") {
            None => None,
            Some(Value::Array(items)) if items.len() == 2 => {
                let lo = items[0].as_f64().ok_or_else(|| field_err("range", "bounds must be numbers"))?;
                let hi = items[1].as_f64().ok_or_else(|| field_err("range", "bounds must be numbers"))?;
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(field_err("range", "need finite lo < hi"));
                }
                Some((lo, hi))
            }
            Some(_) => return Err(field_err("range", "must be [lo, hi]")),
        };
        let output = take_string(&mut map, "output")?.map(PathBuf::from);
        let thresholds = match map.remove("thresholds") {
            None => Thresholds::default(),
            Some(Value::Object(t)) => parse_thresholds(t)?,
            Some(_) => return Err(field_err("thresholds", "must be a table")),
        };
        if let Some(extra) = map.keys().next() {
            return Err(field_err(extra, "unknown field"));
        }
        Ok(Self {
            scenario,
            degree,
            family,
            n_list,
            law_x,
            law_y,
            samples,
            seed,
            bins,
            range,
            output,
            thresholds,
        })
    }
}

fn take_string(map: &mut Map<String, Value>, field: &str) -> Result<Option<String>, ConfigError> {
    match map.remove(field) {
        None => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(_) => Err(field_err(field, "must be a string")),
    }
}

fn take_uint(map: &mut Map<String, Value>, field: &str) -> Result<Option<u64>, ConfigError> {
    match map.remove(field) {
        None => Ok(None),
        Some(v) => v
            .as_u64()
            .map(Some)
            .ok_or_else(|| field_err(field, "must be a nonnegative integer")),
    }
}

fn take_law(map: &mut Map<String, Value>, field: &str) -> Result<Option<LawSpec>, ConfigError> {
    match map.remove(field) {
        None => Ok(None),
        Some(v) => {
            let spec: LawSpec = serde_json::from_value(v).map_err(|e| field_err(field, e.to_string()))?;
            spec.build().map_err(|e| field_err(field, e.to_string()))?;
            Ok(Some(spec))
        }
    }
}

fn parse_thresholds(mut t: Map<String, Value>) -> Result<Thresholds, ConfigError> {
    let mut out = Thresholds::default();
    let slots: [(&str, &mut f64); 6] = [
        ("prohorov_negative", &mut out.prohorov_negative),
        ("prohorov_positive", &mut out.prohorov_positive),
        ("moo_ks", &mut out.moo_ks),
        ("moo_fm", &mut out.moo_fm),
        ("tv_invariance", &mut out.tv_invariance),
        ("dominant", &mut out.dominant),
    ];
    for (name, slot) in slots {
        if let Some(v) = t.remove(name) {
            let field = format!("thresholds.{name}");
            *slot = v
                .as_f64()
                .filter(|x| x.is_finite() && *x >= 0.0)
                .ok_or_else(|| field_err(&field, "must be a nonnegative number"))?;
        }
    }
    if let Some(extra) = t.keys().next() {
        return Err(field_err(&format!("thresholds.{extra}"), "unknown field"));
    }
    Ok(out)
}

/// Reads a config file; `.json` files are parsed as JSON, anything else as
/// TOML.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        ScenarioConfig::from_json_str(&text)
    } else {
        ScenarioConfig::from_toml_str(&text)
    }
}
