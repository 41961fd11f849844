//! Live session host: message schema and session state. The socket
//! transport lives in the `fields-service` crate.

mod messages;
mod session;

pub use messages::{
    ActorSnapshot, BindingSnapshot, ClientEnvelope, ClientMessage, DeviceSnapshot, ServerEnvelope, ServerMessage,
    Snapshot, SnapshotEvent, MESSAGE_SCHEMA,
};
pub use session::Session;
