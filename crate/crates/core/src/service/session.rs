use crate::simulator::{apply_param, load_scenario_value, Engine, PoseSource, ScenarioConfig, ScenarioError};

use super::messages::{
    ActorSnapshot, BindingSnapshot, ClientEnvelope, ClientMessage, DeviceSnapshot, ServerMessage, Snapshot,
    SnapshotEvent, MESSAGE_SCHEMA,
};

/// Parameters that cannot change while a session is running.
const FROZEN_PATHS: &[&str] = &["tick_rate"];

/// A live engine steered by client messages. All mutation goes through
/// [`Session::apply`] and [`Session::tick_and_snapshot`], so a caller that
/// serializes those two calls never exposes a half-applied change.
#[derive(Debug, Clone)]
pub struct Session {
    engine: Engine,
    paused: bool,
}

impl Session {
    pub fn new(config: ScenarioConfig) -> Result<Self, ScenarioError> {
        Ok(Session {
            engine: Engine::new(config)?,
            paused: false,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        self.engine.config()
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn is_paused(&self) -> bool {
        self.paused
    }

    /// Parses and applies one raw JSON message.
    pub fn apply_text(&mut self, text: &str) -> ServerMessage {
        match serde_json::from_str::<ClientEnvelope>(text) {
            Ok(env) => self.apply(&env),
            Err(e) => {
                let id = serde_json::from_str::<serde_json::Value>(text)
                    .ok()
                    .and_then(|v| v.get("id").and_then(|id| id.as_u64()));
                ServerMessage::Error {
                    id,
                    reason: format!("malformed message: {e}"),
                }
            }
        }
    }

    /// Applies a message. On error the session is left unchanged.
    pub fn apply(&mut self, env: &ClientEnvelope) -> ServerMessage {
        let id = env.id;
        match self.try_apply(env) {
            Ok(()) => ServerMessage::Ack { id },
            Err(reason) => ServerMessage::Error { id: Some(id), reason },
        }
    }

    fn try_apply(&mut self, env: &ClientEnvelope) -> Result<(), String> {
        if env.schema != MESSAGE_SCHEMA {
            return Err(format!(
                "unsupported message schema {:?}, expected {MESSAGE_SCHEMA:?}",
                env.schema
            ));
        }
        match &env.message {
            ClientMessage::LoadScenario { document } => {
                let config = load_scenario_value(document.clone()).map_err(|e| e.to_string())?;
                self.engine = Engine::new(config).map_err(|e| e.to_string())?;
                self.paused = false;
            }
            ClientMessage::MoveActor { name, position } => {
                self.engine.move_actor(name, *position).map_err(|e| e.to_string())?;
            }
            ClientMessage::SetParam { path, value } => {
                if FROZEN_PATHS.contains(&path.as_str()) {
                    return Err(format!("{path} cannot change during a live session"));
                }
                let updated = apply_param(self.engine.config(), path, value).map_err(|e| e.to_string())?;
                self.engine.replace_config(updated).map_err(|e| e.to_string())?;
            }
            ClientMessage::PauseResume => self.paused = !self.paused,
            ClientMessage::Reset => {
                self.engine = Engine::new(self.engine.config().clone()).map_err(|e| e.to_string())?;
                self.paused = false;
            }
        }
        Ok(())
    }

    /// Advances one tick and builds its snapshot; `None` while paused.
    pub fn tick_and_snapshot(&mut self) -> Option<ServerMessage> {
        if self.paused {
            return None;
        }
        let frame = match self.engine.step() {
            Ok(frame) => frame,
            Err(e) => {
                return Some(ServerMessage::Error {
                    id: None,
                    reason: format!("tick failed: {e}"),
                })
            }
        };
        let config = self.engine.config();
        let actors = config
            .actors
            .iter()
            .enumerate()
            .map(|(i, entry)| ActorSnapshot {
                name: entry.name.clone(),
                position: frame.actors[i].position,
                velocity: frame.actors[i].velocity,
                heading: frame.actors[i].heading,
                client_driven: matches!(self.engine.pose_source(i), Some(PoseSource::Client { .. })),
                field: frame.user_polygons[i].vertices().to_vec(),
            })
            .collect();
        let devices = config
            .devices
            .iter()
            .enumerate()
            .map(|(i, entry)| DeviceSnapshot {
                name: entry.name.clone(),
                field: frame.device_polygons[i].vertices().to_vec(),
            })
            .collect();
        let mut events = Vec::new();
        let bindings = frame
            .bindings
            .iter()
            .map(|b| {
                let actor = config.actors[b.actor].name.clone();
                let device = config.devices[b.device].name.clone();
                events.extend(b.events.iter().map(|e| SnapshotEvent {
                    actor: actor.clone(),
                    device: device.clone(),
                    event: *e,
                }));
                BindingSnapshot {
                    actor,
                    device,
                    pi: b.pi,
                    state: b.phase.to_string(),
                    intersection: Engine::intersection(&frame, b).vertices().to_vec(),
                }
            })
            .collect();
        Some(ServerMessage::Snapshot(Snapshot {
            tick: frame.tick,
            t: frame.t,
            actors,
            devices,
            bindings,
            events,
        }))
    }
}
