//! User and device interaction fields, and Potential Interest samples.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    self, ellipse_axes, normalize_angle, CircleField, EllipseField, FieldShape, GeometryError, HalfDiskField, Vec2,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngagementError {
    #[error("invalid user field parameters: {0}")]
    UserParams(String),
    #[error("invalid device: {0}")]
    Device(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Tracked pose of a user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActorState {
    pub position: Vec2,
    pub velocity: Vec2,
    /// Motion direction in `[-π, π)`, kept from the last sample that moved
    /// faster than the heading speed floor.
    pub heading: f64,
}

impl ActorState {
    pub fn at_rest(position: Vec2, heading: f64) -> Self {
        ActorState {
            position,
            velocity: Vec2::ZERO,
            heading: normalize_angle(heading),
        }
    }

    pub fn speed(&self) -> f64 {
        self.velocity.length()
    }

    /// Folds a new tracker observation into this state: smooths velocity and
    /// updates heading when the smoothed speed clears the floor.
    pub fn observe(&self, position: Vec2, raw_velocity: Vec2, params: &UserFieldParams, alpha: f64) -> ActorState {
        let velocity = smooth_velocity(self.velocity, raw_velocity, alpha);
        ActorState {
            position,
            velocity,
            heading: heading_for(velocity, self.heading, params.heading_speed_floor),
        }
    }
}

fn heading_for(velocity: Vec2, previous: f64, floor: f64) -> f64 {
    if velocity.length() >= floor && velocity != Vec2::ZERO {
        normalize_angle(velocity.angle())
    } else {
        previous
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UserFieldParams {
    /// Radius of the field at rest, meters. The ellipse area constant is its square.
    pub rest_radius: f64,
    /// Dynamics coefficient, s/m.
    pub k: f64,
    /// Exponential smoothing weight of the newest velocity sample at 20 Hz.
    pub velocity_smoothing_alpha: f64,
    /// Below this speed (m/s) the previous heading is retained.
    pub heading_speed_floor: f64,
}

impl Default for UserFieldParams {
    fn default() -> Self {
        UserFieldParams {
            rest_radius: 1.2,
            k: 0.25,
            velocity_smoothing_alpha: 0.4,
            heading_speed_floor: 0.05,
        }
    }
}

impl UserFieldParams {
    pub fn validate(&self) -> Result<(), EngagementError> {
        let err = |m: String| Err(EngagementError::UserParams(m));
        if !(self.rest_radius.is_finite() && self.rest_radius > 0.0) {
            return err(format!("rest_radius must be > 0, got {}", self.rest_radius));
        }
        if !(self.k.is_finite() && self.k >= 0.0) {
            return err(format!("k must be >= 0, got {}", self.k));
        }
        let a = self.velocity_smoothing_alpha;
        if !(a.is_finite() && a > 0.0 && a <= 1.0) {
            return err(format!("velocity_smoothing_alpha must be in (0, 1], got {a}"));
        }
        if !(self.heading_speed_floor.is_finite() && self.heading_speed_floor >= 0.0) {
            return err(format!("heading_speed_floor must be >= 0, got {}", self.heading_speed_floor));
        }
        Ok(())
    }

    /// Ellipse area constant, `rest_radius²`.
    pub fn area_constant(&self) -> f64 {
        self.rest_radius * self.rest_radius
    }

    /// Smoothing weight for an update interval of `1 / tick_rate` seconds,
    /// giving the same time constant as `velocity_smoothing_alpha` at 20 Hz.
    pub fn alpha_at(&self, tick_rate: f64) -> f64 {
        let a = self.velocity_smoothing_alpha;
        if a >= 1.0 {
            return 1.0;
        }
        1.0 - (1.0 - a).powf(REFERENCE_TICK_RATE / tick_rate)
    }
}

/// Update rate at which `velocity_smoothing_alpha` is specified.
pub const REFERENCE_TICK_RATE: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Directionality {
    Directional,
    NonDirectional,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub position: Vec2,
    /// Direction the device faces, radians.
    #[serde(default)]
    pub facing: f64,
    /// Device interaction-field radius, meters.
    pub radius: f64,
    pub directionality: Directionality,
}

impl DeviceConfig {
    pub fn validate(&self) -> Result<(), EngagementError> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(EngagementError::Device(format!("radius must be > 0, got {}", self.radius)));
        }
        if !self.facing.is_finite() {
            return Err(EngagementError::Device("facing must be finite".into()));
        }
        Ok(())
    }
}

/// One Potential Interest reading for a (user, device) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngagementSample {
    pub t: f64,
    pub pi: f64,
    pub user_field: FieldShape,
    pub device_field: FieldShape,
}

pub fn smooth_velocity(previous_smoothed: Vec2, raw: Vec2, alpha: f64) -> Vec2 {
    if alpha >= 1.0 {
        return raw;
    }
    raw * alpha + previous_smoothed * (1.0 - alpha)
}

/// Builds the user's field. At rest it is a circle of `rest_radius`; in
/// motion it is a constant-area ellipse elongated along the heading, with the
/// actor on the rear focus so the field projects forward.
pub fn compute_user_field(actor: &ActorState, params: &UserFieldParams) -> Result<FieldShape, EngagementError> {
    params.validate()?;
    let speed = actor.speed();
    if speed == 0.0 {
        return Ok(FieldShape::Circle(CircleField::oriented(actor.position, params.rest_radius, actor.heading)?));
    }
    let (r_major, r_minor) = ellipse_axes(speed, params.k, params.area_constant())?;
    if r_major == r_minor {
        return Ok(FieldShape::Circle(CircleField::oriented(actor.position, params.rest_radius, actor.heading)?));
    }
    let heading = heading_for(actor.velocity, actor.heading, params.heading_speed_floor);
    let focal = (r_major * r_major - r_minor * r_minor).sqrt();
    let center = actor.position + Vec2::from_angle(heading) * focal;
    Ok(FieldShape::Ellipse(EllipseField::new(center, r_major, r_minor, heading)?))
}

pub fn compute_device_field(device: &DeviceConfig) -> Result<FieldShape, EngagementError> {
    device.validate()?;
    Ok(match device.directionality {
        Directionality::Directional => {
            FieldShape::HalfDisk(HalfDiskField::new(device.position, device.radius, device.facing)?)
        }
        Directionality::NonDirectional => {
            FieldShape::Circle(CircleField::oriented(device.position, device.radius, device.facing)?)
        }
    })
}

pub fn potential_interest(
    actor: &ActorState,
    params: &UserFieldParams,
    device: &DeviceConfig,
    t: f64,
    n: usize,
) -> Result<EngagementSample, EngagementError> {
    let user_field = compute_user_field(actor, params)?;
    let device_field = compute_device_field(device)?;
    let pi = geometry::iou(&user_field, &device_field, n)?;
    Ok(EngagementSample {
        t,
        pi,
        user_field,
        device_field,
    })
}
