//! Deterministic replay of scripted scenarios.

mod engine;
mod noise;
mod scenario;
mod trace;
mod trajectory;

pub use engine::{BindingFrame, Engine, EngineError, PoseSource, TickFrame, CLIENT_VELOCITY_WINDOW};
pub use noise::{inject_noise, NoiseModel};
pub use scenario::{
    apply_param, load_scenario, load_scenario_value, ActorEntry, Arena, Binding, DeviceEntry, ParamError, ParamPath,
    ScenarioConfig, ScenarioError, DEFAULT_POLYGON_N, DEFAULT_TICK_RATE, SCENARIO_SCHEMA,
};
pub use trace::{check_crossings, run_scenario, EventTrace, RunError, TraceMeta, TraceRecord, TracedEvent, TRACE_SCHEMA};
pub use trajectory::{sample_trajectory, Trajectory, Waypoint};
