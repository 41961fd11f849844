//! Scenario documents: parsing, defaults, validation and parameter paths.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::engagement::{DeviceConfig, Directionality, UserFieldParams};
use crate::geometry::{Vec2, MIN_POLYGON_VERTICES};
use crate::patterns::PatternConfig;

use super::noise::NoiseModel;
use super::trajectory::Trajectory;

/// Version string every scenario document must carry.
pub const SCENARIO_SCHEMA: &str = "fields-scenario/1";

pub const DEFAULT_TICK_RATE: f64 = 20.0;
pub const DEFAULT_POLYGON_N: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("malformed scenario document: {0}")]
    Parse(String),
    #[error("invalid scenario: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

impl ScenarioError {
    pub fn messages(&self) -> Vec<String> {
        match self {
            ScenarioError::Parse(m) => vec![m.clone()],
            ScenarioError::Invalid(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Arena {
    pub width: f64,
    pub height: f64,
}

impl Default for Arena {
    fn default() -> Self {
        Arena {
            width: 5.0,
            height: 5.0,
        }
    }
}

impl Arena {
    /// Inclusive containment in `[0, width] × [0, height]`.
    pub fn contains(&self, p: Vec2) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceEntry {
    pub name: String,
    pub position: Vec2,
    #[serde(default)]
    pub facing: f64,
    pub radius: f64,
    pub directionality: Directionality,
}

impl DeviceEntry {
    pub fn config(&self) -> DeviceConfig {
        DeviceConfig {
            position: self.position,
            facing: self.facing,
            radius: self.radius,
            directionality: self.directionality,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActorEntry {
    pub name: String,
    pub trajectory: Trajectory,
    #[serde(default)]
    pub params: UserFieldParams,
    /// Heading used until the actor first moves, radians.
    #[serde(default)]
    pub initial_heading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Binding {
    pub actor: String,
    pub device: String,
    pub pattern: PatternConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub version: String,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub arena: Arena,
    #[serde(default = "default_tick_rate")]
    pub tick_rate: f64,
    pub duration: f64,
    #[serde(default = "default_polygon_n")]
    pub polygon_n: usize,
    #[serde(default)]
    pub noise: NoiseModel,
    pub devices: Vec<DeviceEntry>,
    pub actors: Vec<ActorEntry>,
    pub bindings: Vec<Binding>,
}

fn default_tick_rate() -> f64 {
    DEFAULT_TICK_RATE
}

fn default_polygon_n() -> usize {
    DEFAULT_POLYGON_N
}

impl ScenarioConfig {
    /// Collects every validation failure rather than stopping at the first.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let mut errors = Vec::new();
        if self.version != SCENARIO_SCHEMA {
            errors.push(format!(
                "unsupported version {:?}, expected {SCENARIO_SCHEMA:?}",
                self.version
            ));
        }
        let Arena { width, height } = self.arena;
        if !(width.is_finite() && width > 0.0 && height.is_finite() && height > 0.0) {
            errors.push(format!("arena dimensions must be > 0, got {width} x {height}"));
        }
        if !(self.tick_rate.is_finite() && self.tick_rate > 0.0) {
            errors.push(format!("tick_rate must be > 0, got {}", self.tick_rate));
        }
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            errors.push(format!("duration must be >= 0, got {}", self.duration));
        }
        if self.polygon_n < MIN_POLYGON_VERTICES {
            errors.push(format!(
                "polygon_n must be >= {MIN_POLYGON_VERTICES}, got {}",
                self.polygon_n
            ));
        }
        if let Err(e) = self.noise.validate() {
            errors.push(e);
        }

        let mut device_names = HashSet::new();
        for (i, d) in self.devices.iter().enumerate() {
            if d.name.is_empty() {
                errors.push(format!("devices[{i}]: name must not be empty"));
            } else if !device_names.insert(d.name.as_str()) {
                errors.push(format!("devices[{i}]: duplicate device name {:?}", d.name));
            }
            if let Err(e) = d.config().validate() {
                errors.push(format!("devices[{i}]: {e}"));
            }
            if !self.arena.contains(d.position) {
                errors.push(format!("devices[{i}]: position lies outside the arena"));
            }
        }

        let mut actor_names = HashSet::new();
        for (i, a) in self.actors.iter().enumerate() {
            if a.name.is_empty() {
                errors.push(format!("actors[{i}]: name must not be empty"));
            } else if !actor_names.insert(a.name.as_str()) {
                errors.push(format!("actors[{i}]: duplicate actor name {:?}", a.name));
            }
            if let Err(e) = a.params.validate() {
                errors.push(format!("actors[{i}]: {e}"));
            }
            if !a.initial_heading.is_finite() {
                errors.push(format!("actors[{i}]: initial_heading must be finite"));
            }
            match a.trajectory.validate() {
                Err(e) => errors.push(format!("actors[{i}]: {e}")),
                Ok(()) => {
                    if let Some(w) = a.trajectory.waypoints().iter().find(|w| !self.arena.contains(w.position)) {
                        errors.push(format!(
                            "actors[{i}]: waypoint at t = {} lies outside the arena",
                            w.t
                        ));
                    }
                }
            }
        }

        for (i, b) in self.bindings.iter().enumerate() {
            if !actor_names.contains(b.actor.as_str()) {
                errors.push(format!("bindings[{i}]: unknown actor {:?}", b.actor));
            }
            if !device_names.contains(b.device.as_str()) {
                errors.push(format!("bindings[{i}]: unknown device {:?}", b.device));
            }
            if let Err(e) = b.pattern.validate() {
                errors.push(format!("bindings[{i}]: {e}"));
            }
        }

        if errors.is_empty() {
            Ok(())
        } else {
            Err(ScenarioError::Invalid(errors))
        }
    }

    pub fn actor_index(&self, name: &str) -> Option<usize> {
        self.actors.iter().position(|a| a.name == name)
    }

    pub fn device_index(&self, name: &str) -> Option<usize> {
        self.devices.iter().position(|d| d.name == name)
    }

    /// Number of ticks covering `[0, duration]` inclusive.
    pub fn tick_count(&self) -> u64 {
        (self.duration * self.tick_rate + 1e-9).floor() as u64 + 1
    }

    /// Canonical serialization with all defaults materialized.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("scenario config serializes")
    }

    /// Hex SHA-256 of [`ScenarioConfig::to_canonical_json`].
    pub fn config_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_canonical_json().as_bytes()))
    }
}

/// Parses and validates a scenario document.
pub fn load_scenario(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    let config: ScenarioConfig = serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Same as [`load_scenario`] for an already-parsed JSON value.
pub fn load_scenario_value(value: Value) -> Result<ScenarioConfig, ScenarioError> {
    let config: ScenarioConfig = serde_json::from_value(value).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("invalid parameter path {path:?}: {reason}")]
    Path { path: String, reason: String },
    #[error("invalid value for {path:?}: {reason}")]
    Value { path: String, reason: String },
}

/// Parsed form of a tunable parameter path such as `actors[0].k`,
/// `devices[tv].radius` or `bindings[0].greeting.t2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParamPath {
    Actor { index: usize, field: String },
    Device { index: usize, field: String },
    Binding { index: usize, field: String },
    Run(String),
    Noise(String),
}

const ACTOR_FIELDS: &[&str] = &["k", "rest_radius", "velocity_smoothing_alpha", "heading_speed_floor"];
const DEVICE_FIELDS: &[&str] = &["radius", "facing", "position", "directionality"];
const BINDING_FIELDS: &[&str] = &["t1", "t2", "dwell", "thresholds"];
const RUN_FIELDS: &[&str] = &["tick_rate", "duration", "polygon_n"];
const NOISE_FIELDS: &[&str] = &["enabled", "range_sigma", "angle_sigma", "seed"];

impl fmt::Display for ParamPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamPath::Actor { index, field } => write!(f, "actors[{index}].{field}"),
            ParamPath::Device { index, field } => write!(f, "devices[{index}].{field}"),
            ParamPath::Binding { index, field } => write!(f, "bindings[{index}].{field}"),
            ParamPath::Run(field) => f.write_str(field),
            ParamPath::Noise(field) => write!(f, "noise.{field}"),
        }
    }
}

fn split_indexed(segment: &str) -> Option<(&str, &str)> {
    let open = segment.find('[')?;
    let inner = segment[open + 1..].strip_suffix(']')?;
    Some((&segment[..open], inner))
}

impl ParamPath {
    /// Resolves `path` against `config`; list entries may be addressed by
    /// index or (for actors and devices) by name.
    pub fn parse(path: &str, config: &ScenarioConfig) -> Result<ParamPath, ParamError> {
        let fail = |reason: String| ParamError::Path {
            path: path.to_string(),
            reason,
        };
        let segments: Vec<&str> = path.split('.').collect();
        let resolve = |key: &str, len: usize, by_name: &dyn Fn(&str) -> Option<usize>| -> Result<usize, ParamError> {
            let index = match key.parse::<usize>() {
                Ok(i) => i,
                Err(_) => by_name(key).ok_or_else(|| fail(format!("no entry named {key:?}")))?,
            };
            if index < len {
                Ok(index)
            } else {
                Err(fail(format!("index {index} out of range (len {len})")))
            }
        };
        let check = |field: &str, allowed: &[&str]| -> Result<String, ParamError> {
            if allowed.contains(&field) {
                Ok(field.to_string())
            } else {
                Err(fail(format!("unknown field {field:?}, expected one of {allowed:?}")))
            }
        };

        match segments.as_slice() {
            [head, field] if head.starts_with("actors[") => {
                let (_, key) = split_indexed(head).ok_or_else(|| fail("malformed index".into()))?;
                let index = resolve(key, config.actors.len(), &|n| config.actor_index(n))?;
                Ok(ParamPath::Actor {
                    index,
                    field: check(field, ACTOR_FIELDS)?,
                })
            }
            [head, field] if head.starts_with("devices[") => {
                let (_, key) = split_indexed(head).ok_or_else(|| fail("malformed index".into()))?;
                let index = resolve(key, config.devices.len(), &|n| config.device_index(n))?;
                Ok(ParamPath::Device {
                    index,
                    field: check(field, DEVICE_FIELDS)?,
                })
            }
            [head, kind, field] if head.starts_with("bindings[") => {
                let (_, key) = split_indexed(head).ok_or_else(|| fail("malformed index".into()))?;
                let index = resolve(key, config.bindings.len(), &|_| None)?;
                let actual = config.bindings[index].pattern.kind().to_string();
                if *kind != actual {
                    return Err(fail(format!("binding {index} is a {actual} pattern, not {kind}")));
                }
                Ok(ParamPath::Binding {
                    index,
                    field: check(field, BINDING_FIELDS)?,
                })
            }
            ["noise", field] => Ok(ParamPath::Noise(check(field, NOISE_FIELDS)?)),
            [field] => Ok(ParamPath::Run(check(field, RUN_FIELDS)?)),
            _ => Err(fail("unrecognized path".into())),
        }
    }
}

/// Applies one parameter change to a copy of `config` and validates the
/// result; `config` itself is untouched on error.
pub fn apply_param(config: &ScenarioConfig, path: &str, value: &Value) -> Result<ScenarioConfig, ParamError> {
    let parsed = ParamPath::parse(path, config)?;
    let value_err = |reason: String| ParamError::Value {
        path: path.to_string(),
        reason,
    };
    let mut doc = serde_json::to_value(config).expect("scenario config serializes");
    let slot = match &parsed {
        ParamPath::Actor { index, field } => doc["actors"][*index]["params"].get_mut(field.as_str()),
        ParamPath::Device { index, field } => doc["devices"][*index].get_mut(field.as_str()),
        ParamPath::Binding { index, field } => doc["bindings"][*index]["pattern"].get_mut(field.as_str()),
        ParamPath::Run(field) => doc.get_mut(field.as_str()),
        ParamPath::Noise(field) => doc["noise"].get_mut(field.as_str()),
    };
    let slot = slot.ok_or_else(|| value_err(format!("{parsed} does not apply to this pattern")))?;
    if std::mem::discriminant(slot) != std::mem::discriminant(value) {
        return Err(value_err(format!("expected a value shaped like {slot}, got {value}")));
    }
    *slot = value.clone();
    let updated: ScenarioConfig = serde_json::from_value(doc).map_err(|e| value_err(e.to_string()))?;
    updated.validate().map_err(|e| value_err(e.messages().join("; ")))?;
    Ok(updated)
}
