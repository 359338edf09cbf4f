//! Quadrotor plant: physical parameters, the 12-state Euler-angle model,
//! motor mixing and the translational thrust-direction geometry.
//!
//! State ordering is `(φ, φ̇, θ, θ̇, ψ, ψ̇, x, ẋ, y, ẏ, z, ż)` throughout.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

pub const STATE_DIM: usize = 12;

/// How the gyroscopic residual rotor speed Ω_r is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ResidualSpeedMode {
    /// `Ω_r = −ω₁ + ω₂ − ω₃ + ω₄`
    #[default]
    Computed,
    Fixed {
        value: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadrotorParams {
    /// m/s²
    pub gravity: f64,
    /// kg
    pub mass: f64,
    /// Centre of mass to rotor, m.
    pub arm_length: f64,
    /// N·s²
    pub thrust_coeff: f64,
    /// N·m·s²
    pub drag_coeff: f64,
    /// kg·m²
    pub rotor_inertia: f64,
    pub inertia_roll: f64,
    pub inertia_pitch: f64,
    pub inertia_yaw: f64,
    /// Not used by the rigid-body model; kept so parameter files round-trip.
    pub motor_inertia: f64,
    pub residual_speed: ResidualSpeedMode,
}

impl Default for QuadrotorParams {
    fn default() -> Self {
        Self {
            gravity: 9.81,
            mass: 0.650,
            arm_length: 0.235,
            thrust_coeff: 2.980e-6,
            drag_coeff: 7.5e-7,
            rotor_inertia: 3.357e-5,
            inertia_roll: 7.5e-3,
            inertia_pitch: 7.5e-3,
            inertia_yaw: 1.3e-3,
            motor_inertia: 3.357e-5,
            residual_speed: ResidualSpeedMode::Computed,
        }
    }
}

impl QuadrotorParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gravity", self.gravity),
            ("mass", self.mass),
            ("arm_length", self.arm_length),
            ("thrust_coeff", self.thrust_coeff),
            ("drag_coeff", self.drag_coeff),
            ("rotor_inertia", self.rotor_inertia),
            ("inertia_roll", self.inertia_roll),
            ("inertia_pitch", self.inertia_pitch),
            ("inertia_yaw", self.inertia_yaw),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidScenario(format!(
                    "params.{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if !(self.motor_inertia.is_finite() && self.motor_inertia >= 0.0) {
            return Err(Error::InvalidScenario(
                "params.motor_inertia must be finite and >= 0".into(),
            ));
        }
        if let ResidualSpeedMode::Fixed { value } = self.residual_speed {
            if !value.is_finite() {
                return Err(Error::InvalidScenario(
                    "params.residual_speed.value must be finite".into(),
                ));
            }
        }
        Ok(())
    }
}

/// The twelve plant states.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlantState(pub [f64; STATE_DIM]);

impl PlantState {
    pub fn roll(&self) -> f64 {
        self.0[0]
    }
    pub fn roll_rate(&self) -> f64 {
        self.0[1]
    }
    pub fn pitch(&self) -> f64 {
        self.0[2]
    }
    pub fn pitch_rate(&self) -> f64 {
        self.0[3]
    }
    pub fn yaw(&self) -> f64 {
        self.0[4]
    }
    pub fn yaw_rate(&self) -> f64 {
        self.0[5]
    }
    pub fn position(&self) -> [f64; 3] {
        [self.0[6], self.0[8], self.0[10]]
    }
    pub fn velocity(&self) -> [f64; 3] {
        [self.0[7], self.0[9], self.0[11]]
    }

    /// At rest, level, at the given position.
    pub fn at_rest(position: [f64; 3]) -> Self {
        let mut s = [0.0; STATE_DIM];
        s[6] = position[0];
        s[8] = position[1];
        s[10] = position[2];
        PlantState(s)
    }
}

/// `(U_p, U_φ, U_θ, U_ψ)`. The roll and pitch inputs are force-like and are
/// scaled by `l/I` in the plant; yaw is a torque.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInputs {
    pub thrust: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl ControlInputs {
    pub fn new(thrust: f64, roll: f64, pitch: f64, yaw: f64) -> Self {
        Self {
            thrust,
            roll,
            pitch,
            yaw,
        }
    }

    fn as_array(&self) -> [f64; 4] {
        [self.thrust, self.roll, self.pitch, self.yaw]
    }
}

/// Rotor angular speeds ω₁..ω₄ in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RotorSpeeds(pub [f64; 4]);

/// Additive disturbances on the six acceleration rows.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DisturbanceVector {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl DisturbanceVector {
    /// `[roll, pitch, yaw, x, y, z]`
    pub fn from_array(a: [f64; 6]) -> Self {
        Self {
            roll: a[0],
            pitch: a[1],
            yaw: a[2],
            x: a[3],
            y: a[4],
            z: a[5],
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.roll, self.pitch, self.yaw, self.x, self.y, self.z]
    }
}

/// Right-hand side of the plant ODE with additive per-channel disturbances.
pub fn state_derivative(
    p: &QuadrotorParams,
    s: &PlantState,
    u: &ControlInputs,
    residual_speed: f64,
    d: &DisturbanceVector,
) -> Result<[f64; STATE_DIM]> {
    ensure_finite(&s.0, "plant state")?;
    ensure_finite(&u.as_array(), "control inputs")?;
    ensure_finite(&d.to_array(), "disturbance vector")?;
    if !residual_speed.is_finite() {
        return Err(Error::NonFinite("residual rotor speed"));
    }

    let x = &s.0;
    let (ix, iy, iz) = (p.inertia_roll, p.inertia_pitch, p.inertia_yaw);
    let (s1, c1) = x[0].sin_cos();
    let (s3, c3) = x[2].sin_cos();
    let (s5, c5) = x[4].sin_cos();
    let accel = u.thrust / p.mass;

    Ok([
        x[1],
        x[3] * x[5] * (iy - iz) / ix
            + x[3] * residual_speed * p.rotor_inertia / ix
            + p.arm_length / ix * u.roll
            + d.roll,
        x[3],
        x[1] * x[5] * (iz - ix) / iy - x[1] * residual_speed * p.rotor_inertia / iy
            + p.arm_length / iy * u.pitch
            + d.pitch,
        x[5],
        x[1] * x[3] * (ix - iy) / iz + u.yaw / iz + d.yaw,
        x[7],
        (c1 * s3 * c5 + s1 * s5) * accel + d.x,
        x[9],
        (c1 * s3 * s5 - s1 * c5) * accel + d.y,
        x[11],
        -p.gravity + c1 * c3 * accel + d.z,
    ])
}

fn validate_speeds(w: &RotorSpeeds) -> Result<()> {
    ensure_finite(&w.0, "rotor speeds")?;
    if w.0.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidScenario(format!(
            "rotor speeds must be non-negative, got {:?}",
            w.0
        )));
    }
    Ok(())
}

/// Forward mixing: squared rotor speeds to `(U_p, U_φ, U_θ, U_ψ)`.
///
/// Roll and pitch use the differential cross-configuration
/// `U_φ = b(ω₄² − ω₂²)`, `U_θ = b(ω₃² − ω₁²)`.
pub fn rotor_speeds_to_inputs(p: &QuadrotorParams, w: &RotorSpeeds) -> Result<ControlInputs> {
    validate_speeds(w)?;
    let [s1, s2, s3, s4] = w.0.map(|v| v * v);
    Ok(ControlInputs {
        thrust: p.thrust_coeff * (s1 + s2 + s3 + s4),
        roll: p.thrust_coeff * (s4 - s2),
        pitch: p.thrust_coeff * (s3 - s1),
        yaw: p.drag_coeff * (s1 - s2 + s3 - s4),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixOutput {
    pub speeds: RotorSpeeds,
    /// Rotors whose squared speed came out negative and was clamped to zero.
    pub clamped: [bool; 4],
}

impl MixOutput {
    pub fn any_clamped(&self) -> bool {
        self.clamped.iter().any(|&c| c)
    }
}

/// Inverse mixing. Negative squared speeds are saturated at zero and flagged.
pub fn mix_inputs_to_rotor_speeds(p: &QuadrotorParams, u: &ControlInputs) -> Result<MixOutput> {
    ensure_finite(&u.as_array(), "control inputs")?;
    let total = u.thrust / p.thrust_coeff;
    let roll = u.roll / p.thrust_coeff;
    let pitch = u.pitch / p.thrust_coeff;
    let yaw = u.yaw / p.drag_coeff;

    // ω₁²+ω₃² and ω₂²+ω₄² split the thrust by the yaw differential.
    let odd = 0.5 * (total + yaw);
    let even = 0.5 * (total - yaw);
    let squared = [
        0.5 * (odd - pitch),
        0.5 * (even - roll),
        0.5 * (odd + pitch),
        0.5 * (even + roll),
    ];

    let mut clamped = [false; 4];
    let mut speeds = [0.0; 4];
    for i in 0..4 {
        if squared[i] < 0.0 {
            clamped[i] = true;
        } else {
            speeds[i] = squared[i].sqrt();
        }
    }
    Ok(MixOutput {
        speeds: RotorSpeeds(speeds),
        clamped,
    })
}

pub fn residual_speed(mode: ResidualSpeedMode, w: &RotorSpeeds) -> f64 {
    match mode {
        ResidualSpeedMode::Computed => -w.0[0] + w.0[1] - w.0[2] + w.0[3],
        ResidualSpeedMode::Fixed { value } => value,
    }
}

/// Thrust-direction components that multiply `U_p/m` in the x and y rows.
pub fn virtual_from_angles(roll: f64, pitch: f64, yaw: f64) -> (f64, f64) {
    let (s1, c1) = roll.sin_cos();
    let s3 = pitch.sin();
    let (s5, c5) = yaw.sin_cos();
    (c1 * s3 * c5 + s1 * s5, c1 * s3 * s5 - s1 * c5)
}

/// Per-rotor `(thrust fᵢ = bωᵢ², reaction torque τᵢ = dωᵢ²)`.
pub fn rotor_forces_torques(p: &QuadrotorParams, w: &RotorSpeeds) -> Result<[(f64, f64); 4]> {
    validate_speeds(w)?;
    Ok(w.0.map(|v| {
        let sq = v * v;
        (p.thrust_coeff * sq, p.drag_coeff * sq)
    }))
}
