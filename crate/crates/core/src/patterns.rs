//! Greeting, Turn-taking and Revealing state machines.
//!
//! Each machine consumes Potential Interest readings and emits discrete
//! events. "Above" comparisons are inclusive (`pi >= t`) and "below" are
//! strict (`pi < t`). A transition commits only once its condition has held
//! continuously for `dwell` seconds; with `dwell = 0` it commits on the
//! first qualifying sample.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default debounce time applied to every transition, seconds.
pub const DEFAULT_DWELL: f64 = 0.3;

/// Slack for floating-point time arithmetic when comparing against dwell.
const TIME_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PatternError {
    #[error("time went backwards: {t} < {last}")]
    NonMonotonicTime { t: f64, last: f64 },
    #[error("potential interest must be a finite value in [0, 1], got {0}")]
    InvalidPi(f64),
    #[error("invalid pattern config: {0}")]
    InvalidConfig(String),
    #[error("state belongs to a {state} machine but config is {config}")]
    KindMismatch { state: PatternKind, config: PatternKind },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    Greeting,
    TurnTaking,
    Revealing,
}

impl std::fmt::Display for PatternKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PatternKind::Greeting => "greeting",
            PatternKind::TurnTaking => "turn_taking",
            PatternKind::Revealing => "revealing",
        })
    }
}

fn check_ratio(name: &str, v: f64) -> Result<(), PatternError> {
    if v.is_finite() && (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(PatternError::InvalidConfig(format!("{name} must be in [0, 1], got {v}")))
    }
}

fn check_dwell(dwell: f64) -> Result<(), PatternError> {
    if dwell.is_finite() && dwell >= 0.0 {
        Ok(())
    } else {
        Err(PatternError::InvalidConfig(format!("dwell must be >= 0, got {dwell}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "GreetingSpec")]
pub struct GreetingConfig {
    /// Wake-up threshold.
    pub t1: f64,
    /// Back-to-sleep threshold, at most `t1`.
    pub t2: f64,
    pub dwell: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GreetingSpec {
    t1: f64,
    t2: Option<f64>,
    #[serde(default = "default_dwell")]
    dwell: f64,
}

impl From<GreetingSpec> for GreetingConfig {
    fn from(spec: GreetingSpec) -> Self {
        GreetingConfig {
            t1: spec.t1,
            t2: spec.t2.unwrap_or(spec.t1 * 2.0 / 3.0),
            dwell: spec.dwell,
        }
    }
}

fn default_dwell() -> f64 {
    DEFAULT_DWELL
}

impl GreetingConfig {
    /// `t2` defaults to two thirds of `t1`.
    pub fn with_t1(t1: f64) -> Self {
        GreetingConfig {
            t1,
            t2: t1 * 2.0 / 3.0,
            dwell: DEFAULT_DWELL,
        }
    }

    pub fn validate(&self) -> Result<(), PatternError> {
        check_ratio("t1", self.t1)?;
        check_ratio("t2", self.t2)?;
        check_dwell(self.dwell)?;
        if self.t2 > self.t1 {
            return Err(PatternError::InvalidConfig(format!(
                "t2 must be <= t1 (t1 = {}, t2 = {})",
                self.t1, self.t2
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurnTakingConfig {
    pub t1: f64,
    #[serde(default = "default_dwell")]
    pub dwell: f64,
}

impl TurnTakingConfig {
    pub fn validate(&self) -> Result<(), PatternError> {
        check_ratio("t1", self.t1)?;
        check_dwell(self.dwell)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RevealingConfig {
    /// Strictly ascending thresholds in `(0, 1]`; level `i` is shown once
    /// `pi` reaches `thresholds[i - 1]`.
    pub thresholds: Vec<f64>,
    #[serde(default = "default_dwell")]
    pub dwell: f64,
}

impl RevealingConfig {
    pub fn validate(&self) -> Result<(), PatternError> {
        if self.thresholds.is_empty() {
            return Err(PatternError::InvalidConfig("at least one threshold is required".into()));
        }
        for &t in &self.thresholds {
            if !(t.is_finite() && t > 0.0 && t <= 1.0) {
                return Err(PatternError::InvalidConfig(format!("thresholds must be in (0, 1], got {t}")));
            }
        }
        if self.thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PatternError::InvalidConfig("thresholds must be strictly ascending".into()));
        }
        check_dwell(self.dwell)
    }

    /// Number of thresholds at or below `pi`.
    pub fn target_level(&self, pi: f64) -> usize {
        self.thresholds.iter().take_while(|&&t| pi >= t).count()
    }
}

/// A pattern binding's configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PatternConfig {
    Greeting(GreetingConfig),
    TurnTaking(TurnTakingConfig),
    Revealing(RevealingConfig),
}

impl PatternConfig {
    pub fn kind(&self) -> PatternKind {
        match self {
            PatternConfig::Greeting(_) => PatternKind::Greeting,
            PatternConfig::TurnTaking(_) => PatternKind::TurnTaking,
            PatternConfig::Revealing(_) => PatternKind::Revealing,
        }
    }

    pub fn validate(&self) -> Result<(), PatternError> {
        match self {
            PatternConfig::Greeting(c) => c.validate(),
            PatternConfig::TurnTaking(c) => c.validate(),
            PatternConfig::Revealing(c) => c.validate(),
        }
    }

    pub fn dwell(&self) -> f64 {
        match self {
            PatternConfig::Greeting(c) => c.dwell,
            PatternConfig::TurnTaking(c) => c.dwell,
            PatternConfig::Revealing(c) => c.dwell,
        }
    }

    /// Thresholds whose crossing can trigger an event.
    pub fn thresholds(&self) -> Vec<f64> {
        match self {
            PatternConfig::Greeting(c) => vec![c.t1, c.t2],
            PatternConfig::TurnTaking(c) => vec![c.t1],
            PatternConfig::Revealing(c) => c.thresholds.clone(),
        }
    }

    pub fn reset(&self) -> PatternState {
        reset(self)
    }

    pub fn step(&self, state: &PatternState, pi: f64, t: f64) -> Result<(PatternState, Vec<PatternEvent>), PatternError> {
        match self {
            PatternConfig::Greeting(c) => greeting_step(state, pi, t, c),
            PatternConfig::TurnTaking(c) => turntaking_step(state, pi, t, c),
            PatternConfig::Revealing(c) => revealing_step(state, pi, t, c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Sleep,
    Active,
    Playing,
    Paused,
    Level(usize),
}

impl Phase {
    pub fn kind(self) -> PatternKind {
        match self {
            Phase::Sleep | Phase::Active => PatternKind::Greeting,
            Phase::Playing | Phase::Paused => PatternKind::TurnTaking,
            Phase::Level(_) => PatternKind::Revealing,
        }
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Phase::Sleep => f.write_str("sleep"),
            Phase::Active => f.write_str("active"),
            Phase::Playing => f.write_str("playing"),
            Phase::Paused => f.write_str("paused"),
            Phase::Level(l) => write!(f, "level:{l}"),
        }
    }
}

/// A candidate transition and the time its condition started holding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pending {
    pub candidate: Phase,
    pub since: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternState {
    pub phase: Phase,
    pub pending: Option<Pending>,
    pub last_t: Option<f64>,
}

impl PatternState {
    fn fresh(phase: Phase) -> Self {
        PatternState {
            phase,
            pending: None,
            last_t: None,
        }
    }

    pub fn kind(&self) -> PatternKind {
        self.phase.kind()
    }

    /// Seconds the pending candidate has held as of `t`.
    pub fn pending_for(&self, t: f64) -> f64 {
        self.pending.map_or(0.0, |p| t - p.since)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum EventKind {
    WakeUp,
    Sleep,
    Pause,
    Resume,
    LevelChanged { from: usize, to: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternEvent {
    pub t: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

pub fn reset(cfg: &PatternConfig) -> PatternState {
    PatternState::fresh(match cfg {
        PatternConfig::Greeting(_) => Phase::Sleep,
        PatternConfig::TurnTaking(_) => Phase::Playing,
        PatternConfig::Revealing(_) => Phase::Level(0),
    })
}

fn check_input(state: &PatternState, pi: f64, t: f64, expected: PatternKind) -> Result<(), PatternError> {
    if state.kind() != expected {
        return Err(PatternError::KindMismatch {
            state: state.kind(),
            config: expected,
        });
    }
    if !(pi.is_finite() && (0.0..=1.0).contains(&pi)) {
        return Err(PatternError::InvalidPi(pi));
    }
    if let Some(last) = state.last_t {
        if t.is_nan() || t < last {
            return Err(PatternError::NonMonotonicTime { t, last });
        }
    }
    Ok(())
}

/// Shared dwell logic: `target` is the phase the current sample argues for.
fn advance(state: &PatternState, target: Phase, t: f64, dwell: f64) -> (PatternState, Option<Phase>) {
    let mut next = PatternState {
        last_t: Some(t),
        ..*state
    };
    if target == state.phase {
        next.pending = None;
        return (next, None);
    }
    let since = match state.pending {
        Some(p) if p.candidate == target => p.since,
        _ => t,
    };
    if t - since + TIME_EPSILON >= dwell {
        let from = state.phase;
        next.phase = target;
        next.pending = None;
        (next, Some(from))
    } else {
        next.pending = Some(Pending { candidate: target, since });
        (next, None)
    }
}

pub fn greeting_step(
    state: &PatternState,
    pi: f64,
    t: f64,
    cfg: &GreetingConfig,
) -> Result<(PatternState, Vec<PatternEvent>), PatternError> {
    cfg.validate()?;
    check_input(state, pi, t, PatternKind::Greeting)?;
    let target = match state.phase {
        Phase::Sleep if pi >= cfg.t1 => Phase::Active,
        Phase::Active if pi < cfg.t2 => Phase::Sleep,
        phase => phase,
    };
    let (next, committed) = advance(state, target, t, cfg.dwell);
    let events = match committed {
        Some(_) if next.phase == Phase::Active => vec![PatternEvent { t, kind: EventKind::WakeUp }],
        Some(_) => vec![PatternEvent { t, kind: EventKind::Sleep }],
        None => Vec::new(),
    };
    Ok((next, events))
}

pub fn turntaking_step(
    state: &PatternState,
    pi: f64,
    t: f64,
    cfg: &TurnTakingConfig,
) -> Result<(PatternState, Vec<PatternEvent>), PatternError> {
    cfg.validate()?;
    check_input(state, pi, t, PatternKind::TurnTaking)?;
    let target = if pi >= cfg.t1 { Phase::Playing } else { Phase::Paused };
    let (next, committed) = advance(state, target, t, cfg.dwell);
    let events = match committed {
        Some(_) if next.phase == Phase::Paused => vec![PatternEvent { t, kind: EventKind::Pause }],
        Some(_) => vec![PatternEvent { t, kind: EventKind::Resume }],
        None => Vec::new(),
    };
    Ok((next, events))
}

pub fn revealing_step(
    state: &PatternState,
    pi: f64,
    t: f64,
    cfg: &RevealingConfig,
) -> Result<(PatternState, Vec<PatternEvent>), PatternError> {
    cfg.validate()?;
    check_input(state, pi, t, PatternKind::Revealing)?;
    let target = Phase::Level(cfg.target_level(pi));
    let (next, committed) = advance(state, target, t, cfg.dwell);
    let events = match (committed, next.phase) {
        (Some(Phase::Level(from)), Phase::Level(to)) => {
            vec![PatternEvent {
                t,
                kind: EventKind::LevelChanged { from, to },
            }]
        }
        _ => Vec::new(),
    };
    Ok((next, events))
}
