use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::engagement::ActorState;
use crate::geometry::Vec2;

/// Zero-mean Gaussian tracker error in polar coordinates about the arena
/// origin. Defaults are the tracker's reported error spread: 0.14 m in range
/// and 7.4° in angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    pub enabled: bool,
    /// Range standard deviation, meters.
    pub range_sigma: f64,
    /// Angle standard deviation, degrees.
    pub angle_sigma: f64,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            enabled: false,
            range_sigma: 0.14,
            angle_sigma: 7.4,
            seed: 0,
        }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.range_sigma.is_finite() && self.range_sigma >= 0.0) {
            return Err(format!("noise range_sigma must be >= 0, got {}", self.range_sigma));
        }
        if !(self.angle_sigma.is_finite() && self.angle_sigma >= 0.0) {
            return Err(format!("noise angle_sigma must be >= 0, got {}", self.angle_sigma));
        }
        Ok(())
    }

    fn is_identity(&self) -> bool {
        !self.enabled || (self.range_sigma == 0.0 && self.angle_sigma == 0.0)
    }
}

/// Perturbs the position only; velocity and heading pass through.
pub fn inject_noise<R: Rng + ?Sized>(actor: &ActorState, model: &NoiseModel, rng: &mut R) -> ActorState {
    if model.is_identity() {
        return *actor;
    }
    let range_noise = Normal::new(0.0, model.range_sigma).expect("sigma validated");
    let angle_noise = Normal::new(0.0, model.angle_sigma.to_radians()).expect("sigma validated");
    let dr = range_noise.sample(rng);
    let da = angle_noise.sample(rng);
    let range = actor.position.length() + dr;
    let angle = actor.position.angle() + da;
    let (s, c) = angle.sin_cos();
    ActorState {
        position: Vec2 {
            x: range * c,
            y: range * s,
        },
        ..*actor
    }
}
