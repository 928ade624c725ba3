//! Action scaling and unicycle integration.

use serde::{Deserialize, Serialize};

use crate::world::{normalize_angle, KinematicLimits, Pose};

/// Normalized velocity command; both components lie in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Action {
    pub u_v: f64,
    pub u_omega: f64,
}

fn clamp_unit(u: f64) -> f64 {
    if u.is_nan() {
        0.0
    } else {
        u.clamp(-1.0, 1.0)
    }
}

impl Action {
    pub const ZERO: Action = Action {
        u_v: 0.0,
        u_omega: 0.0,
    };

    /// Builds a command, clamping both components into `[-1, 1]` (NaN maps to 0).
    pub fn new(u_v: f64, u_omega: f64) -> Self {
        Self {
            u_v: clamp_unit(u_v),
            u_omega: clamp_unit(u_omega),
        }
    }

    pub fn clamped(self) -> Self {
        Self::new(self.u_v, self.u_omega)
    }

    pub fn is_zero(&self) -> bool {
        self.u_v == 0.0 && self.u_omega == 0.0
    }
}

impl From<[f64; 2]> for Action {
    fn from(v: [f64; 2]) -> Self {
        Action::new(v[0], v[1])
    }
}

impl From<Action> for [f64; 2] {
    fn from(a: Action) -> Self {
        [a.u_v, a.u_omega]
    }
}

/// Converts a normalized action into `(v, ω)` velocity commands.
pub fn scale_action(a: Action, limits: &KinematicLimits) -> (f64, f64) {
    let a = a.clamped();
    (a.u_v * limits.v_max, a.u_omega * limits.omega_max)
}

/// Exact-arc unicycle update over `dt` seconds.
pub fn integrate_unicycle(pose: Pose, v: f64, omega: f64, dt: f64) -> Pose {
    let th = pose.heading;
    if omega.abs() < 1e-12 {
        let (s, c) = th.sin_cos();
        return Pose {
            x: pose.x + v * dt * c,
            y: pose.y + v * dt * s,
            heading: th,
        };
    }
    let th2 = th + omega * dt;
    let k = v / omega;
    Pose {
        x: pose.x + k * (th2.sin() - th.sin()),
        y: pose.y - k * (th2.cos() - th.cos()),
        heading: normalize_angle(th2),
    }
}
