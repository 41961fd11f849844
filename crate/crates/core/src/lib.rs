//! Proxemic engagement engine.
//!
//! Users and devices carry interaction fields: a constant-area ellipse that
//! stretches along the user's motion, and a half-disk or circle around each
//! device. Potential Interest is the intersection-over-union of a user field
//! and a device field, and drives three threshold state machines (Greeting,
//! Turn-taking, Revealing). Scenarios replay scripted trajectories through
//! the same tick loop that backs live sessions.

pub mod engagement;
pub mod geometry;
pub mod patterns;
pub mod scenarios;
pub mod service;
pub mod simulator;
