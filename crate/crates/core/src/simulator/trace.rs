use serde::{Deserialize, Serialize};

use crate::patterns::{EventKind, PatternConfig, PatternEvent};

use super::engine::{Engine, EngineError};
use super::scenario::{ScenarioConfig, ScenarioError};

/// Version string written in every trace header.
pub const TRACE_SCHEMA: &str = "fields-trace/1";

/// One binding's state at one tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: f64,
    pub actor: String,
    pub device: String,
    pub pi: f64,
    pub state: String,
    pub events: Vec<PatternEvent>,
}

/// Header line of a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub schema: String,
    pub config_hash: String,
    pub seed: u64,
    pub config: ScenarioConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventTrace {
    pub meta: TraceMeta,
    pub records: Vec<TraceRecord>,
}

/// An event together with the binding that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct TracedEvent {
    pub actor: String,
    pub device: String,
    pub event: PatternEvent,
}

impl EventTrace {
    /// JSON-lines: the header, then one record per binding per tick.
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.meta).expect("trace header serializes");
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("trace record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().unwrap_or("");
        let meta: TraceMeta = serde_json::from_str(header)?;
        let records = lines.map(serde_json::from_str).collect::<Result<_, _>>()?;
        Ok(EventTrace { meta, records })
    }

    pub fn events(&self) -> Vec<TracedEvent> {
        self.records
            .iter()
            .flat_map(|r| {
                r.events.iter().map(|e| TracedEvent {
                    actor: r.actor.clone(),
                    device: r.device.clone(),
                    event: *e,
                })
            })
            .collect()
    }

    pub fn event_kinds(&self) -> Vec<EventKind> {
        self.events().into_iter().map(|e| e.event.kind).collect()
    }

    /// Records belonging to one (actor, device) binding, in time order.
    pub fn binding_records<'a>(&'a self, actor: &'a str, device: &'a str) -> impl Iterator<Item = &'a TraceRecord> + 'a {
        self.records.iter().filter(move |r| r.actor == actor && r.device == device)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ScenarioError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Runs a scenario from `t = 0` to `duration` inclusive.
pub fn run_scenario(config: &ScenarioConfig) -> Result<EventTrace, RunError> {
    let mut engine = Engine::new(config.clone())?;
    let mut records = Vec::with_capacity(config.tick_count() as usize * config.bindings.len());
    for _ in 0..config.tick_count() {
        let frame = engine.step()?;
        records.extend(engine.records(&frame));
    }
    Ok(EventTrace {
        meta: TraceMeta {
            schema: TRACE_SCHEMA.to_string(),
            config_hash: config.config_hash(),
            seed: config.noise.seed,
            config: config.clone(),
        },
        records,
    })
}

type Predicate = Box<dyn Fn(f64) -> bool>;

/// Checks that every event in `trace` is backed by a threshold crossing: the
/// event's own sample lies on the new side of the relevant threshold, and a
/// sample on the old side occurs within `dwell + 2` ticks before it (or the
/// window reaches the start of the run).
pub fn check_crossings(trace: &EventTrace) -> Result<(), String> {
    let config = &trace.meta.config;
    let tick = 1.0 / config.tick_rate;
    for binding in &config.bindings {
        let records: Vec<&TraceRecord> = trace.binding_records(&binding.actor, &binding.device).collect();
        let start = records.first().map_or(0.0, |r| r.t);
        for (i, rec) in records.iter().enumerate() {
            for ev in &rec.events {
                let (after, before): (Predicate, Predicate) =
                    match (&binding.pattern, ev.kind) {
                        (PatternConfig::Greeting(c), EventKind::WakeUp) => {
                            let t1 = c.t1;
                            (Box::new(move |pi| pi >= t1), Box::new(move |pi| pi < t1))
                        }
                        (PatternConfig::Greeting(c), EventKind::Sleep) => {
                            let t2 = c.t2;
                            (Box::new(move |pi| pi < t2), Box::new(move |pi| pi >= t2))
                        }
                        (PatternConfig::TurnTaking(c), EventKind::Pause) => {
                            let t1 = c.t1;
                            (Box::new(move |pi| pi < t1), Box::new(move |pi| pi >= t1))
                        }
                        (PatternConfig::TurnTaking(c), EventKind::Resume) => {
                            let t1 = c.t1;
                            (Box::new(move |pi| pi >= t1), Box::new(move |pi| pi < t1))
                        }
                        (PatternConfig::Revealing(c), EventKind::LevelChanged { from, to }) => {
                            let cfg = c.clone();
                            let cfg2 = c.clone();
                            (
                                Box::new(move |pi| cfg.target_level(pi) == to),
                                Box::new(move |pi| {
                                    let level = cfg2.target_level(pi);
                                    if to > from {
                                        level < to
                                    } else {
                                        level > to
                                    }
                                }),
                            )
                        }
                        (_, kind) => {
                            return Err(format!(
                                "{}/{}: event {kind:?} does not belong to a {} pattern",
                                binding.actor,
                                binding.device,
                                binding.pattern.kind()
                            ))
                        }
                    };
                if !after(rec.pi) {
                    return Err(format!(
                        "{}/{} at t = {}: {:?} fired with pi = {} on the wrong side",
                        binding.actor, binding.device, rec.t, ev.kind, rec.pi
                    ));
                }
                let window_start = rec.t - binding.pattern.dwell() - 2.0 * tick - 1e-9;
                let reaches_start = window_start <= start;
                let crossed = records[..i]
                    .iter()
                    .rev()
                    .take_while(|r| r.t >= window_start)
                    .any(|r| before(r.pi));
                if !crossed && !reaches_start {
                    return Err(format!(
                        "{}/{} at t = {}: {:?} fired without a preceding crossing",
                        binding.actor, binding.device, rec.t, ev.kind
                    ));
                }
            }
        }
    }
    Ok(())
}
