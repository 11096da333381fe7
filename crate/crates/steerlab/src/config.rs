//! Experiment configuration: a flat JSON object, optionally overridden by
//! command-line flags. Unknown keys are rejected all at once.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use steerlab_core::squeeze::Frame;
use thiserror::Error;

pub const KNOWN_KEYS: &[&str] = &[
    "experiment",
    "r",
    "r1",
    "r2",
    "r_values",
    "xi",
    "xi_range",
    "phi0",
    "frame",
    "steps_per_period",
    "record_stride",
    "out",
    "berry_steps",
];

const MAX_SWEEP_POINTS: usize = 10_000;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown configuration keys: {}", .0.join(", "))]
    UnknownKeys(Vec<String>),
    #[error("`{field}` = {value} is out of range: must be {bound}")]
    OutOfRange {
        field: &'static str,
        value: String,
        bound: &'static str,
    },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("`xi` and `xi_range` are mutually exclusive")]
    ConflictingXi,
    #[error("malformed xi range `{0}`: expected start:stop:factor")]
    MalformedRange(String),
    #[error("configuration must be a JSON object")]
    NotAnObject,
    #[error("invalid configuration: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Loop,
    Sweep,
    Berry,
    Fivelevel,
    Polarization,
    Verify,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ExperimentKind::Loop => "loop",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::Berry => "berry",
            ExperimentKind::Fivelevel => "fivelevel",
            ExperimentKind::Polarization => "polarization",
            ExperimentKind::Verify => "verify",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrameChoice {
    #[serde(alias = "lab")]
    Lab,
    #[serde(alias = "rotating")]
    Rotating,
}

impl From<FrameChoice> for Frame {
    fn from(f: FrameChoice) -> Frame {
        match f {
            FrameChoice::Lab => Frame::Lab,
            FrameChoice::Rotating => Frame::Rotating,
        }
    }
}

/// Geometric progression `start, start·factor, …` up to `stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XiRange {
    pub start: f64,
    pub stop: f64,
    pub factor: f64,
}

impl XiRange {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let parts: Vec<&str> = text.split(':').collect();
        let [start, stop, factor] = parts[..] else {
            return Err(ConfigError::MalformedRange(text.to_string()));
        };
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| ConfigError::MalformedRange(text.to_string()))
        };
        Ok(Self {
            start: num(start)?,
            stop: num(stop)?,
            factor: num(factor)?,
        })
    }

    pub fn expand(&self) -> Result<Vec<f64>, ConfigError> {
        for (field, value) in [("xi_range.start", self.start), ("xi_range.stop", self.stop)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(out_of_range(field, value, "finite and > 0"));
            }
        }
        let descending = self.start > self.stop;
        let ok_factor = self.factor.is_finite()
            && self.factor > 0.0
            && self.factor != 1.0
            && (self.start == self.stop || (self.factor < 1.0) == descending);
        if !ok_factor {
            return Err(out_of_range(
                "xi_range.factor",
                self.factor,
                "positive, != 1, and moving start toward stop",
            ));
        }
        let (lo, hi) = if descending {
            (self.stop, self.start)
        } else {
            (self.start, self.stop)
        };
        let slack = 1e-9;
        let mut values = Vec::new();
        let mut k = 0;
        loop {
            let x = self.start * self.factor.powi(k);
            if x < lo * (1.0 - slack) || x > hi * (1.0 + slack) || values.len() == MAX_SWEEP_POINTS
            {
                break;
            }
            values.push(x);
            k += 1;
        }
        Ok(values)
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum XiSpec {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Debug, Default, Deserialize)]
struct RawConfig {
    experiment: Option<ExperimentKind>,
    r: Option<f64>,
    r1: Option<f64>,
    r2: Option<f64>,
    r_values: Option<Vec<f64>>,
    xi: Option<XiSpec>,
    xi_range: Option<String>,
    phi0: Option<f64>,
    frame: Option<FrameChoice>,
    steps_per_period: Option<u64>,
    record_stride: Option<usize>,
    out: Option<PathBuf>,
    berry_steps: Option<usize>,
}

/// Validated configuration with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Squeezing amplitude (first channel for the five-level atom).
    pub r: f64,
    /// Second-channel amplitude for the five-level atom.
    pub r2: f64,
    /// Amplitudes for the Berry-phase check.
    pub r_values: Vec<f64>,
    /// `ξ = φ̇/Γ` points, ascending.
    pub xi: Vec<f64>,
    pub xi_range: Option<XiRange>,
    pub phi0: f64,
    pub frame: FrameChoice,
    pub steps_per_period: Option<u64>,
    pub record_stride: usize,
    pub out: PathBuf,
    pub berry_steps: usize,
}

fn out_of_range(field: &'static str, value: impl fmt::Display, bound: &'static str) -> ConfigError {
    ConfigError::OutOfRange {
        field,
        value: value.to_string(),
        bound,
    }
}

fn check_amplitude(field: &'static str, r: f64) -> Result<f64, ConfigError> {
    if r.is_finite() && (0.0..=5.0).contains(&r) {
        Ok(r)
    } else {
        Err(out_of_range(field, r, "finite with 0 <= r <= 5"))
    }
}

fn check_xi(xi: f64) -> Result<f64, ConfigError> {
    if xi.is_finite() && xi > 0.0 && xi <= 1.0 {
        Ok(xi)
    } else {
        Err(out_of_range("xi", xi, "finite with 0 < xi <= 1"))
    }
}

impl ExperimentConfig {
    pub fn from_map(map: Map<String, Value>) -> Result<Self, ConfigError> {
        let mut unknown: Vec<String> = map
            .keys()
            .filter(|k| !KNOWN_KEYS.contains(&k.as_str()))
            .cloned()
            .collect();
        if !unknown.is_empty() {
            unknown.sort();
            return Err(ConfigError::UnknownKeys(unknown));
        }
        let raw: RawConfig = serde_json::from_value(Value::Object(map))?;
        Self::resolve(raw)
    }

    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        match serde_json::from_str(text)? {
            Value::Object(map) => Self::from_map(map),
            _ => Err(ConfigError::NotAnObject),
        }
    }

    fn resolve(raw: RawConfig) -> Result<Self, ConfigError> {
        let experiment = raw.experiment.ok_or(ConfigError::Missing("experiment"))?;

        let r = check_amplitude("r", raw.r1.or(raw.r).unwrap_or(0.5))?;
        let r2 = check_amplitude("r2", raw.r2.unwrap_or(1.0))?;
        let r_values = match (raw.r_values, raw.r) {
            (Some(values), _) => values,
            (None, Some(r)) if experiment == ExperimentKind::Berry => vec![r],
            (None, _) => vec![0.25, 0.5, 1.0],
        };
        for &value in &r_values {
            check_amplitude("r_values", value)?;
        }

        let xi_range = raw.xi_range.as_deref().map(XiRange::parse).transpose()?;
        let mut xi = match (raw.xi, xi_range) {
            (Some(_), Some(_)) => return Err(ConfigError::ConflictingXi),
            (Some(XiSpec::One(x)), None) => vec![x],
            (Some(XiSpec::Many(xs)), None) => xs,
            (None, Some(range)) => range.expand()?,
            (None, None) if experiment == ExperimentKind::Sweep => XiRange {
                start: 1e-1,
                stop: 1e-3,
                factor: 0.5,
            }
            .expand()?,
            (None, None) => vec![1e-3],
        };
        if xi.is_empty() {
            return Err(ConfigError::Missing("xi"));
        }
        for x in &xi {
            check_xi(*x)?;
        }
        xi.sort_by(f64::total_cmp);
        xi.dedup();

        let phi0 = raw.phi0.unwrap_or(0.0);
        if !phi0.is_finite() {
            return Err(out_of_range("phi0", phi0, "finite"));
        }
        if let Some(n) = raw.steps_per_period {
            if n == 0 {
                return Err(out_of_range("steps_per_period", n, ">= 1"));
            }
        }
        let record_stride = raw.record_stride.unwrap_or(64);
        if record_stride == 0 {
            return Err(out_of_range("record_stride", record_stride, ">= 1"));
        }
        let berry_steps = raw.berry_steps.unwrap_or(10_000);
        if berry_steps < 8 {
            return Err(out_of_range("berry_steps", berry_steps, ">= 8"));
        }

        Ok(Self {
            experiment,
            r,
            r2,
            r_values,
            xi,
            xi_range,
            phi0,
            frame: raw.frame.unwrap_or(FrameChoice::Lab),
            steps_per_period: raw.steps_per_period,
            record_stride,
            out: raw.out.unwrap_or_else(|| PathBuf::from("steerlab-out")),
            berry_steps,
        })
    }
}

/// Reads `path` (if any) and applies `overrides` on top of it.
pub fn load_config(
    path: Option<&Path>,
    overrides: Map<String, Value>,
) -> Result<ExperimentConfig, ConfigError> {
    let mut map = match path {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            match serde_json::from_str(&text)? {
                Value::Object(map) => map,
                _ => return Err(ConfigError::NotAnObject),
            }
        }
        None => Map::new(),
    };
    map.extend(overrides);
    ExperimentConfig::from_map(map)
}
