use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::geometry::Vec2;
use crate::patterns::PatternEvent;

/// Version string carried by every client and server message.
pub const MESSAGE_SCHEMA: &str = "fields-msg/1";

/// A request from a client. `id` is echoed in the reply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientEnvelope {
    pub schema: String,
    pub id: u64,
    #[serde(flatten)]
    pub message: ClientMessage,
}

impl ClientEnvelope {
    pub fn new(id: u64, message: ClientMessage) -> Self {
        ClientEnvelope {
            schema: MESSAGE_SCHEMA.to_string(),
            id,
            message,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    /// Replaces the running scenario; `document` is a scenario object.
    LoadScenario { document: Value },
    MoveActor { name: String, position: Vec2 },
    SetParam { path: String, value: Value },
    PauseResume,
    Reset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerEnvelope {
    pub schema: String,
    #[serde(flatten)]
    pub message: ServerMessage,
}

impl From<ServerMessage> for ServerEnvelope {
    fn from(message: ServerMessage) -> Self {
        ServerEnvelope {
            schema: MESSAGE_SCHEMA.to_string(),
            message,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Snapshot(Snapshot),
    Ack { id: u64 },
    Error { id: Option<u64>, reason: String },
}

impl ServerMessage {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&ServerEnvelope::from(self.clone())).expect("server message serializes")
    }
}

/// Engine state after one tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub tick: u64,
    pub t: f64,
    pub actors: Vec<ActorSnapshot>,
    pub devices: Vec<DeviceSnapshot>,
    pub bindings: Vec<BindingSnapshot>,
    pub events: Vec<SnapshotEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorSnapshot {
    pub name: String,
    pub position: Vec2,
    pub velocity: Vec2,
    pub heading: f64,
    pub client_driven: bool,
    /// Polygonized user field, counter-clockwise.
    pub field: Vec<Vec2>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceSnapshot {
    pub name: String,
    pub field: Vec<Vec2>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BindingSnapshot {
    pub actor: String,
    pub device: String,
    pub pi: f64,
    pub state: String,
    pub intersection: Vec<Vec2>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEvent {
    pub actor: String,
    pub device: String,
    #[serde(flatten)]
    pub event: PatternEvent,
}
