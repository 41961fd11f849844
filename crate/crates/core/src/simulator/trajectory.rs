use serde::{Deserialize, Serialize};

use crate::engagement::ActorState;
use crate::geometry::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub t: f64,
    pub position: Vec2,
}

/// Piecewise-linear path through timestamped waypoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Trajectory {
    waypoints: Vec<Waypoint>,
}

impl Trajectory {
    pub fn new(waypoints: Vec<Waypoint>) -> Result<Self, String> {
        let traj = Trajectory { waypoints };
        traj.validate()?;
        Ok(traj)
    }

    /// A trajectory that stays at `position` forever.
    pub fn stationary(position: Vec2) -> Self {
        Trajectory {
            waypoints: vec![Waypoint { t: 0.0, position }],
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.waypoints.is_empty() {
            return Err("trajectory needs at least one waypoint".into());
        }
        if let Some(w) = self.waypoints.iter().find(|w| !w.t.is_finite()) {
            return Err(format!("waypoint time {} is not finite", w.t));
        }
        if let Some(i) = self.waypoints.windows(2).position(|w| w[1].t <= w[0].t) {
            return Err(format!(
                "waypoint times must be strictly increasing ({} then {})",
                self.waypoints[i].t,
                self.waypoints[i + 1].t
            ));
        }
        Ok(())
    }

    pub fn waypoints(&self) -> &[Waypoint] {
        &self.waypoints
    }
}

/// Pose at time `t`. Velocity is the slope of the segment containing `t`
/// (segments are half-open, `[t_i, t_{i+1})`); outside the scripted span the
/// position is clamped to the nearest end and velocity is zero. Heading is
/// left at zero for the caller to track.
pub fn sample_trajectory(traj: &Trajectory, t: f64) -> ActorState {
    let wps = &traj.waypoints;
    let first = wps[0];
    let last = wps[wps.len() - 1];
    if t < first.t {
        return ActorState::at_rest(first.position, 0.0);
    }
    if t >= last.t {
        return ActorState::at_rest(last.position, 0.0);
    }
    // First waypoint strictly after t; guaranteed to be in 1..len.
    let hi = wps.partition_point(|w| w.t <= t);
    let a = wps[hi - 1];
    let b = wps[hi];
    let span = b.t - a.t;
    let delta = b.position - a.position;
    let frac = (t - a.t) / span;
    ActorState {
        position: a.position + delta * frac,
        velocity: delta * (1.0 / span),
        heading: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> Trajectory {
        Trajectory::new(vec![
            Waypoint {
                t: 0.0,
                position: Vec2::new(0.0, 0.0),
            },
            Waypoint {
                t: 4.0,
                position: Vec2::new(4.0, 0.0),
            },
        ])
        .unwrap()
    }

    #[test]
    fn interpolates() {
        let s = sample_trajectory(&line(), 2.0);
        assert_eq!(s.position, Vec2::new(2.0, 0.0));
        assert_eq!(s.velocity, Vec2::new(1.0, 0.0));
    }

    #[test]
    fn segment_start() {
        let s = sample_trajectory(&line(), 0.0);
        assert_eq!(s.position, Vec2::new(0.0, 0.0));
        assert_eq!(s.velocity, Vec2::new(1.0, 0.0));
    }

    #[test]
    fn clamps_after_end_and_before_start() {
        let s = sample_trajectory(&line(), 10.0);
        assert_eq!(s.position, Vec2::new(4.0, 0.0));
        assert_eq!(s.velocity, Vec2::ZERO);
        let s = sample_trajectory(&line(), 4.0);
        assert_eq!(s.velocity, Vec2::ZERO);
        let s = sample_trajectory(&line(), -1.0);
        assert_eq!(s.position, Vec2::ZERO);
        assert_eq!(s.velocity, Vec2::ZERO);
    }

    #[test]
    fn multi_segment_and_pause() {
        let traj = Trajectory::new(vec![
            Waypoint {
                t: 0.0,
                position: Vec2::new(1.0, 1.0),
            },
            Waypoint {
                t: 2.0,
                position: Vec2::new(1.0, 1.0),
            },
            Waypoint {
                t: 3.0,
                position: Vec2::new(1.0, 3.0),
            },
        ])
        .unwrap();
        assert_eq!(sample_trajectory(&traj, 1.0).velocity, Vec2::ZERO);
        let s = sample_trajectory(&traj, 2.5);
        assert_eq!(s.position, Vec2::new(1.0, 2.0));
        assert_eq!(s.velocity, Vec2::new(0.0, 2.0));
    }

    #[test]
    fn stationary_trajectory() {
        let traj = Trajectory::stationary(Vec2::new(2.0, 2.0));
        for t in [0.0, 5.0, 100.0] {
            let s = sample_trajectory(&traj, t);
            assert_eq!(s.position, Vec2::new(2.0, 2.0));
            assert_eq!(s.velocity, Vec2::ZERO);
        }
    }

    #[test]
    fn rejects_bad_waypoints() {
        assert!(Trajectory::new(vec![]).is_err());
        let w = |t| Waypoint { t, position: Vec2::ZERO };
        assert!(Trajectory::new(vec![w(0.0), w(0.0)]).is_err());
        assert!(Trajectory::new(vec![w(1.0), w(0.5)]).is_err());
    }
}
