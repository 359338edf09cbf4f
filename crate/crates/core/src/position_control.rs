//! Outer-loop virtual accelerations and their conversion into a thrust
//! magnitude plus desired roll and pitch.

use serde::{Deserialize, Serialize};

use crate::attitude_control::{ChannelGains, ChannelRuntime};
use crate::error::{Error, Result};
use crate::vehicle_model::QuadrotorParams;

/// Smallest admissible `U_z + g` (m/s²) before thrust extraction is refused.
pub const MIN_VERTICAL_ACCEL: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositionAxis {
    X,
    Y,
    Z,
}

impl PositionAxis {
    pub const ALL: [PositionAxis; 3] = [PositionAxis::X, PositionAxis::Y, PositionAxis::Z];
}

/// Desired translational accelerations, m/s².
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VirtualControls {
    pub ux: f64,
    pub uy: f64,
    pub uz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AttitudeSetpoint {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    /// Collective thrust `U_p`, N.
    pub thrust: f64,
}

/// Virtual control for one translational axis:
/// `−ξ₁ + ż₂ + (ν − ς)/τ − k·ξ₂ − d̂`.
///
/// Pass `0.0` as the disturbance estimate to get the law without
/// disturbance compensation.
pub fn position_channel_control(
    gains: &ChannelGains,
    rt: &ChannelRuntime,
    rate_command_derivative: f64,
    disturbance_estimate: f64,
) -> f64 {
    -rt.xi1 + rate_command_derivative + (rt.nu - rt.surface) / gains.tau
        - gains.k * rt.xi2
        - disturbance_estimate
}

/// Resolves the underactuation: pitch first, then roll (which needs the
/// pitch), then thrust.
pub fn extract_thrust_and_attitude(
    u: &VirtualControls,
    yaw_des: f64,
    p: &QuadrotorParams,
) -> Result<AttitudeSetpoint> {
    let vertical = u.uz + p.gravity;
    if !vertical.is_finite() || !u.ux.is_finite() || !u.uy.is_finite() || !yaw_des.is_finite() {
        return Err(Error::NonFinite("virtual controls"));
    }
    if vertical < MIN_VERTICAL_ACCEL {
        return Err(Error::DenominatorTooSmall {
            value: vertical,
            limit: MIN_VERTICAL_ACCEL,
        });
    }
    let (sy, cy) = yaw_des.sin_cos();
    let pitch = ((u.ux * cy + u.uy * sy) / vertical).atan();
    let roll = ((u.ux * sy - u.uy * cy) * pitch.cos() / vertical).atan();
    let thrust = p.mass * vertical / (roll.cos() * pitch.cos());
    Ok(AttitudeSetpoint {
        roll,
        pitch,
        yaw: yaw_des,
        thrust,
    })
}

/// The built-in spiral climb: a 3 m circle centred on (3, 2) at 1/15 rad/s,
/// climbing at 0.1 m/s from 1 m.
pub fn desired_trajectory(t: f64) -> [f64; 3] {
    let (s, c) = (t / 15.0).sin_cos();
    [3.0 - 3.0 * c, 2.0 + 3.0 * s, 1.0 + t / 10.0]
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Trajectory {
    #[default]
    Spiral,
    /// Rows of `[t, x, y, z]`, strictly increasing in `t`, linearly
    /// interpolated and held constant outside the table.
    Waypoints { points: Vec<[f64; 4]> },
}

impl Trajectory {
    pub fn validate(&self) -> Result<()> {
        if let Trajectory::Waypoints { points } = self {
            if points.is_empty() {
                return Err(Error::InvalidScenario(
                    "trajectory.points must not be empty".into(),
                ));
            }
            if points.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::InvalidScenario(
                    "trajectory.points must be finite".into(),
                ));
            }
            if points.windows(2).any(|w| w[1][0] <= w[0][0]) {
                return Err(Error::InvalidScenario(
                    "trajectory.points must be strictly increasing in time".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, t: f64) -> [f64; 3] {
        match self {
            Trajectory::Spiral => desired_trajectory(t),
            Trajectory::Waypoints { points } => {
                let pos = |row: &[f64; 4]| [row[1], row[2], row[3]];
                let first = &points[0];
                let last = &points[points.len() - 1];
                if t <= first[0] {
                    return pos(first);
                }
                if t >= last[0] {
                    return pos(last);
                }
                let i = points.partition_point(|row| row[0] <= t);
                let (a, b) = (&points[i - 1], &points[i]);
                let w = (t - a[0]) / (b[0] - a[0]);
                [
                    a[1] + w * (b[1] - a[1]),
                    a[2] + w * (b[2] - a[2]),
                    a[3] + w * (b[3] - a[3]),
                ]
            }
        }
    }
}
