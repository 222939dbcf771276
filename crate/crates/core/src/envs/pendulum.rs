//! Continuing torque-limited inverted pendulum.
//!
//! Angle 0 is upright. One semi-implicit Euler step per action with
//! `g = 9.8`, `m = l = 1`, `dt = 0.05`:
//!
//! ```text
//! ω' = clip(ω + dt·(3g/(2l)·sin θ + 3/(m l²)·u), -8, 8)
//! θ' = wrap(θ + dt·ω')
//! ```
//!
//! The reward is the negated quadratic cost of the state the action was
//! taken in, `-(θ² + 0.1·ω² + 0.001·u²)`, so holding the pendulum upright
//! with zero torque earns exactly 0.

use std::f64::consts::PI;

use rand::Rng;

use super::{EnvStep, Environment};

const GRAVITY: f64 = 9.8;
const MASS: f64 = 1.0;
const LENGTH: f64 = 1.0;
const DT: f64 = 0.05;
const MAX_SPEED: f64 = 8.0;
const START_NOISE: f64 = 0.05;

/// Discrete torque set; action `k` applies `PENDULUM_TORQUES[k]`.
pub const PENDULUM_TORQUES: [f64; 3] = [-2.0, 0.0, 2.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumState {
    /// Radians in `[-π, π)`.
    pub angle: f64,
    /// Radians per second in `[-8, 8]`.
    pub ang_vel: f64,
}

impl PendulumState {
    pub fn as_array(&self) -> [f64; 2] {
        [self.angle, self.ang_vel]
    }
}

/// Maps any angle into `[-π, π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if y >= PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Advances the pendulum by one step under torque action `action`
/// (an index into [`PENDULUM_TORQUES`]).
pub fn pendulum_step(state: PendulumState, action: usize) -> EnvStep<PendulumState> {
    let u = PENDULUM_TORQUES[action];
    let angle = wrap_angle(state.angle);
    let reward = -(angle * angle + 0.1 * state.ang_vel * state.ang_vel + 0.001 * u * u);

    let accel = 3.0 * GRAVITY / (2.0 * LENGTH) * angle.sin() + 3.0 / (MASS * LENGTH * LENGTH) * u;
    let ang_vel = (state.ang_vel + DT * accel).clamp(-MAX_SPEED, MAX_SPEED);
    let angle = wrap_angle(angle + DT * ang_vel);
    EnvStep {
        reward,
        next_obs: PendulumState { angle, ang_vel },
    }
}

#[derive(Debug, Clone)]
pub struct Pendulum {
    state: PendulumState,
}

impl Default for Pendulum {
    fn default() -> Self {
        Pendulum {
            state: PendulumState {
                angle: 0.0,
                ang_vel: 0.0,
            },
        }
    }
}

impl Pendulum {
    pub fn state(&self) -> PendulumState {
        self.state
    }
}

impl Environment for Pendulum {
    type Obs = PendulumState;

    fn n_actions(&self) -> usize {
        PENDULUM_TORQUES.len()
    }

    /// Upright and at rest, plus uniform noise in `[-0.05, 0.05]` on both
    /// coordinates.
    fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> PendulumState {
        self.state = PendulumState {
            angle: rng.random_range(-START_NOISE..=START_NOISE),
            ang_vel: rng.random_range(-START_NOISE..=START_NOISE),
        };
        self.state
    }

    fn step<R: Rng + ?Sized>(&mut self, action: usize, _rng: &mut R) -> EnvStep<PendulumState> {
        let step = pendulum_step(self.state, action);
        self.state = step.next_obs;
        step
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const UP: PendulumState = PendulumState {
        angle: 0.0,
        ang_vel: 0.0,
    };

    #[test]
    fn upright_rest_is_fixed_point() {
        let step = pendulum_step(UP, 1);
        assert_eq!(step.next_obs, UP);
        assert_eq!(step.reward, 0.0);
    }

    #[test]
    fn one_push_from_rest() {
        let step = pendulum_step(UP, 2);
        assert_abs_diff_eq!(step.reward, -0.004, epsilon = 1e-15);
        assert_abs_diff_eq!(step.next_obs.ang_vel, 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(step.next_obs.angle, 0.015, epsilon = 1e-15);
    }

    #[test]
    fn wraps_past_pi() {
        let s = PendulumState {
            angle: PI - 1e-3,
            ang_vel: 5.0,
        };
        let next = pendulum_step(s, 2).next_obs;
        assert!(next.angle >= -PI && next.angle < PI);
        assert!(next.angle < 0.0);
        assert_eq!(wrap_angle(PI), -PI);
        assert_eq!(wrap_angle(-PI), -PI);
        assert!(wrap_angle(-1e-18) < PI);
    }

    #[test]
    fn speed_is_clipped() {
        let mut s = PendulumState {
            angle: 1.0,
            ang_vel: 7.9,
        };
        for _ in 0..200 {
            let step = pendulum_step(s, 2);
            assert!(step.reward <= 0.0);
            s = step.next_obs;
            assert!(s.ang_vel.abs() <= 8.0);
            assert!(s.angle >= -PI && s.angle < PI);
        }
    }
}
