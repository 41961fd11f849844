//! The tick loop shared by offline runs and live sessions.

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::engagement::{compute_device_field, compute_user_field, ActorState, EngagementError};
use crate::geometry::{convex_intersect, polygon_iou, to_polygon, ConvexPolygon, FieldShape, GeometryError, Vec2};
use crate::patterns::{Phase, PatternConfig, PatternError, PatternEvent, PatternState};

use super::noise::inject_noise;
use super::scenario::{ScenarioConfig, ScenarioError};
use super::trajectory::sample_trajectory;
use super::trace::TraceRecord;

/// Finite differences averaged when estimating a client-driven velocity.
pub const CLIENT_VELOCITY_WINDOW: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Engagement(#[from] EngagementError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("binding {binding}: {source}")]
    Pattern { binding: usize, source: PatternError },
    #[error("unknown actor {0:?}")]
    UnknownActor(String),
    #[error("position {0:?} lies outside the arena")]
    OutsideArena(Vec2),
}

/// Where an actor's pose comes from each tick.
#[derive(Debug, Clone, PartialEq)]
pub enum PoseSource {
    Trajectory,
    /// Pose set by a live client; `history` holds the positions used at the
    /// most recent ticks, newest last.
    Client { target: Vec2, history: VecDeque<Vec2> },
}

#[derive(Debug, Clone, PartialEq)]
struct ActorRuntime {
    source: PoseSource,
    state: Option<ActorState>,
}

/// Everything computed during one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct TickFrame {
    pub tick: u64,
    pub t: f64,
    pub actors: Vec<ActorState>,
    pub user_fields: Vec<FieldShape>,
    pub user_polygons: Vec<ConvexPolygon>,
    pub device_fields: Vec<FieldShape>,
    pub device_polygons: Vec<ConvexPolygon>,
    pub bindings: Vec<BindingFrame>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BindingFrame {
    pub actor: usize,
    pub device: usize,
    pub pi: f64,
    pub phase: Phase,
    pub events: Vec<PatternEvent>,
}

#[derive(Debug, Clone)]
pub struct Engine {
    config: ScenarioConfig,
    tick: u64,
    rng: ChaCha8Rng,
    actors: Vec<ActorRuntime>,
    machines: Vec<PatternState>,
    links: Vec<(usize, usize)>,
}

impl Engine {
    pub fn new(config: ScenarioConfig) -> Result<Self, ScenarioError> {
        config.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(config.noise.seed);
        let actors = config
            .actors
            .iter()
            .map(|_| ActorRuntime {
                source: PoseSource::Trajectory,
                state: None,
            })
            .collect();
        let machines = config.bindings.iter().map(|b| b.pattern.reset()).collect();
        let links = links_for(&config);
        Ok(Engine {
            config,
            tick: 0,
            rng,
            actors,
            machines,
            links,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    /// Index of the next tick to run.
    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn time_of(&self, tick: u64) -> f64 {
        tick as f64 / self.config.tick_rate
    }

    pub fn machines(&self) -> &[PatternState] {
        &self.machines
    }

    pub fn pose_source(&self, actor: usize) -> Option<&PoseSource> {
        self.actors.get(actor).map(|a| &a.source)
    }

    /// Swaps in a revised config with the same actors, devices and bindings.
    /// Machine states survive unless the pattern kind changed; a Revealing
    /// level above the new threshold count is clamped.
    pub fn replace_config(&mut self, config: ScenarioConfig) -> Result<(), ScenarioError> {
        config.validate()?;
        let same_shape = config.actors.len() == self.config.actors.len()
            && config.devices.len() == self.config.devices.len()
            && config.bindings.len() == self.config.bindings.len();
        if !same_shape {
            return Err(ScenarioError::Invalid(vec![
                "parameter updates cannot add or remove actors, devices or bindings".into(),
            ]));
        }
        for (state, binding) in self.machines.iter_mut().zip(&config.bindings) {
            if state.kind() != binding.pattern.kind() {
                *state = binding.pattern.reset();
            } else if let (Phase::Level(level), PatternConfig::Revealing(cfg)) = (state.phase, &binding.pattern) {
                if level > cfg.thresholds.len() {
                    state.phase = Phase::Level(cfg.thresholds.len());
                    state.pending = None;
                }
            }
        }
        self.links = links_for(&config);
        self.config = config;
        Ok(())
    }

    /// Switches an actor to client-driven pose at `position`.
    pub fn move_actor(&mut self, name: &str, position: Vec2) -> Result<(), EngineError> {
        let index = self
            .config
            .actor_index(name)
            .ok_or_else(|| EngineError::UnknownActor(name.to_string()))?;
        if !self.config.arena.contains(position) {
            return Err(EngineError::OutsideArena(position));
        }
        let runtime = &mut self.actors[index];
        match &mut runtime.source {
            PoseSource::Client { target, .. } => *target = position,
            source @ PoseSource::Trajectory => {
                let mut history = VecDeque::new();
                if let Some(prev) = runtime.state {
                    history.push_back(prev.position);
                }
                *source = PoseSource::Client {
                    target: position,
                    history,
                };
            }
        }
        Ok(())
    }

    /// Runs one tick: pose sampling, optional noise, velocity smoothing,
    /// field construction, Potential Interest per binding and pattern steps.
    pub fn step(&mut self) -> Result<TickFrame, EngineError> {
        let tick = self.tick;
        let t = self.time_of(tick);
        let rate = self.config.tick_rate;
        let n = self.config.polygon_n;

        let mut actors = Vec::with_capacity(self.actors.len());
        for (runtime, entry) in self.actors.iter_mut().zip(&self.config.actors) {
            let observed = match &mut runtime.source {
                PoseSource::Trajectory => {
                    let sampled = sample_trajectory(&entry.trajectory, t);
                    inject_noise(&sampled, &self.config.noise, &mut self.rng)
                }
                PoseSource::Client { target, history } => {
                    history.push_back(*target);
                    while history.len() > CLIENT_VELOCITY_WINDOW + 1 {
                        history.pop_front();
                    }
                    ActorState {
                        position: *target,
                        velocity: client_velocity(history, rate),
                        heading: 0.0,
                    }
                }
            };
            let state = match runtime.state {
                // The first observation seeds the smoother directly.
                None => ActorState {
                    heading: entry.initial_heading,
                    velocity: Vec2::ZERO,
                    ..observed
                }
                .observe(observed.position, observed.velocity, &entry.params, 1.0),
                Some(prev) => prev.observe(
                    observed.position,
                    observed.velocity,
                    &entry.params,
                    entry.params.alpha_at(rate),
                ),
            };
            runtime.state = Some(state);
            actors.push(state);
        }

        let user_fields = actors
            .iter()
            .zip(&self.config.actors)
            .map(|(state, entry)| compute_user_field(state, &entry.params))
            .collect::<Result<Vec<_>, _>>()?;
        let device_fields = self
            .config
            .devices
            .iter()
            .map(|d| compute_device_field(&d.config()))
            .collect::<Result<Vec<_>, _>>()?;
        let user_polygons = user_fields
            .iter()
            .map(|f| to_polygon(f, n))
            .collect::<Result<Vec<_>, _>>()?;
        let device_polygons = device_fields
            .iter()
            .map(|f| to_polygon(f, n))
            .collect::<Result<Vec<_>, _>>()?;

        let mut bindings = Vec::with_capacity(self.links.len());
        for (i, &(actor, device)) in self.links.iter().enumerate() {
            let pi = polygon_iou(&user_polygons[actor], &device_polygons[device]);
            let pattern = &self.config.bindings[i].pattern;
            let (state, events) = pattern
                .step(&self.machines[i], pi, t)
                .map_err(|source| EngineError::Pattern { binding: i, source })?;
            self.machines[i] = state;
            bindings.push(BindingFrame {
                actor,
                device,
                pi,
                phase: state.phase,
                events,
            });
        }

        self.tick += 1;
        Ok(TickFrame {
            tick,
            t,
            actors,
            user_fields,
            user_polygons,
            device_fields,
            device_polygons,
            bindings,
        })
    }

    /// Trace records for a frame, one per binding.
    pub fn records(&self, frame: &TickFrame) -> Vec<TraceRecord> {
        frame
            .bindings
            .iter()
            .map(|b| TraceRecord {
                t: frame.t,
                actor: self.config.actors[b.actor].name.clone(),
                device: self.config.devices[b.device].name.clone(),
                pi: b.pi,
                state: b.phase.to_string(),
                events: b.events.clone(),
            })
            .collect()
    }

    /// Intersection polygon of a binding's fields in `frame`.
    pub fn intersection(frame: &TickFrame, binding: &BindingFrame) -> ConvexPolygon {
        convex_intersect(&frame.user_polygons[binding.actor], &frame.device_polygons[binding.device])
    }
}

fn links_for(config: &ScenarioConfig) -> Vec<(usize, usize)> {
    config
        .bindings
        .iter()
        .map(|b| {
            (
                config.actor_index(&b.actor).expect("validated binding"),
                config.device_index(&b.device).expect("validated binding"),
            )
        })
        .collect()
}

fn client_velocity(history: &VecDeque<Vec2>, rate: f64) -> Vec2 {
    if history.len() < 2 {
        return Vec2::ZERO;
    }
    let diffs = history.len() - 1;
    let sum = history
        .iter()
        .zip(history.iter().skip(1))
        .fold(Vec2::ZERO, |acc, (a, b)| acc + (*b - *a));
    sum * (rate / diffs as f64)
}
