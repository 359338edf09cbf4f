//! Inner-loop output-feedback backstepping for roll, pitch and yaw.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::CommandFilterState;
use crate::observers::ChannelModelTerms;
use crate::vehicle_model::QuadrotorParams;

/// Design constants of one control channel, shared by the attitude and
/// position loops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelGains {
    /// Surface gain, 1/s.
    pub p: f64,
    /// Backstepping gain, 1/s.
    pub k: f64,
    /// First-order filter time constant, s.
    pub tau: f64,
    pub m1: f64,
    pub m2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Disturbance observer gain, 1/s.
    pub lambda: f64,
}

impl ChannelGains {
    /// The attitude surface gains are large, so the filter must be much
    /// faster than `1/p` for the surface error `e₁` to stay small.
    pub const ATTITUDE_TAU: f64 = 0.002;
    pub const POSITION_TAU: f64 = 0.05;
    pub const DEFAULT_EPSILON: f64 = 0.05;
    pub const ATTITUDE_LAMBDA: f64 = 10.0;
    pub const POSITION_LAMBDA: f64 = 5.0;

    fn tabulated(p: f64, k: f64, m2: f64, tau: f64, lambda: f64) -> Self {
        Self {
            p,
            k,
            tau,
            m1: 1.0,
            m2,
            beta1: 1.0,
            beta2: 2.0,
            epsilon: Self::DEFAULT_EPSILON,
            lambda,
        }
    }

    pub fn roll() -> Self {
        Self::tabulated(100.0, 120.0, 1.0, Self::ATTITUDE_TAU, Self::ATTITUDE_LAMBDA)
    }
    pub fn pitch() -> Self {
        Self::tabulated(100.0, 120.0, 1.0, Self::ATTITUDE_TAU, Self::ATTITUDE_LAMBDA)
    }
    pub fn yaw() -> Self {
        Self::tabulated(1.0, 10.0, 1.0, Self::ATTITUDE_TAU, Self::ATTITUDE_LAMBDA)
    }
    pub fn x() -> Self {
        Self::tabulated(0.1, 5.0, 0.1, Self::POSITION_TAU, Self::POSITION_LAMBDA)
    }
    pub fn y() -> Self {
        Self::tabulated(0.1, 5.0, 0.1, Self::POSITION_TAU, Self::POSITION_LAMBDA)
    }
    pub fn z() -> Self {
        Self::tabulated(0.1, 1.0, 0.1, Self::POSITION_TAU, Self::POSITION_LAMBDA)
    }

    /// Checks sign and range constraints. `channel` only labels the error.
    pub fn validate(&self, channel: &str) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidScenario(format!("gains.{channel}: {msg}")));
        let all = [
            self.p,
            self.k,
            self.tau,
            self.m1,
            self.m2,
            self.beta1,
            self.beta2,
            self.epsilon,
            self.lambda,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return fail("all gains must be finite".into());
        }
        for (name, v) in [
            ("p", self.p),
            ("k", self.k),
            ("m1", self.m1),
            ("m2", self.m2),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
        ] {
            if v <= 0.0 {
                return fail(format!("{name} must be > 0, got {v}"));
            }
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return fail(format!("tau must lie in (0, 1], got {}", self.tau));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return fail(format!("epsilon must lie in (0, 1], got {}", self.epsilon));
        }
        if self.lambda <= 0.5 {
            return fail(format!("lambda must exceed 1/2, got {}", self.lambda));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttitudeAxis {
    Roll,
    Pitch,
    Yaw,
}

impl AttitudeAxis {
    pub const ALL: [AttitudeAxis; 3] = [AttitudeAxis::Roll, AttitudeAxis::Pitch, AttitudeAxis::Yaw];

    /// Gain from the channel input to the channel's angular acceleration.
    pub fn input_gain(self, p: &QuadrotorParams) -> f64 {
        match self {
            AttitudeAxis::Roll => p.arm_length / p.inertia_roll,
            AttitudeAxis::Pitch => p.arm_length / p.inertia_pitch,
            AttitudeAxis::Yaw => 1.0 / p.inertia_yaw,
        }
    }

    /// Gyroscopic and inertial coupling on this axis' acceleration row.
    ///
    /// `cross_rates` are the other two body rates in roll, pitch, yaw order
    /// with this axis removed: `(θ̇, ψ̇)` for roll, `(φ̇, ψ̇)` for pitch and
    /// `(φ̇, θ̇)` for yaw.
    pub fn coupling(
        self,
        p: &QuadrotorParams,
        cross_rates: (f64, f64),
        residual_speed: f64,
    ) -> f64 {
        let (ix, iy, iz, ir) = (
            p.inertia_roll,
            p.inertia_pitch,
            p.inertia_yaw,
            p.rotor_inertia,
        );
        let (a, b) = cross_rates;
        match self {
            AttitudeAxis::Roll => ((iy - iz) * a * b + ir * residual_speed * a) / ix,
            AttitudeAxis::Pitch => ((iz - ix) * a * b - ir * residual_speed * a) / iy,
            AttitudeAxis::Yaw => (ix - iy) * a * b / iz,
        }
    }

    pub fn model_terms(
        self,
        p: &QuadrotorParams,
        cross_rates: (f64, f64),
        residual_speed: f64,
    ) -> ChannelModelTerms {
        ChannelModelTerms::new(
            self.coupling(p, cross_rates, residual_speed),
            self.input_gain(p),
        )
    }
}

/// Per-step signals of one channel, derived from its filter and observer
/// states.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChannelRuntime {
    /// Filtered reference `z₁`.
    pub reference: f64,
    /// Filtered reference rate `z₂`.
    pub rate_command: f64,
    /// First-order filter output ς.
    pub surface: f64,
    /// Auxiliary control ν.
    pub nu: f64,
    pub xi1: f64,
    pub xi2: f64,
    /// `ς − ν`
    pub e1: f64,
}

impl ChannelRuntime {
    /// Evaluates ξ₁, ν, ξ₂ and e₁ from the output/rate estimates.
    pub fn evaluate(
        gains: &ChannelGains,
        output_estimate: f64,
        rate_estimate: f64,
        command: &CommandFilterState,
        surface: f64,
    ) -> Self {
        let xi1 = output_estimate - command.z1;
        let nu = auxiliary_control(gains, xi1, command.z2);
        let (xi1, xi2, e1) = channel_errors(
            output_estimate,
            rate_estimate,
            command.z1,
            command.z2,
            surface,
            nu,
        );
        Self {
            reference: command.z1,
            rate_command: command.z2,
            surface,
            nu,
            xi1,
            xi2,
            e1,
        }
    }
}

/// `ν = −p·ξ₁ + z₂`
pub fn auxiliary_control(gains: &ChannelGains, xi1: f64, rate_command: f64) -> f64 {
    -gains.p * xi1 + rate_command
}

/// `(ξ₁, ξ₂, e₁) = (x̂₁ − z₁, x̂₂ − ς − z₂, ς − ν)`
pub fn channel_errors(
    output_estimate: f64,
    rate_estimate: f64,
    z1: f64,
    z2: f64,
    surface: f64,
    nu: f64,
) -> (f64, f64, f64) {
    (
        output_estimate - z1,
        rate_estimate - surface - z2,
        surface - nu,
    )
}

/// Backstepping torque law for one attitude axis:
///
/// ```text
/// U = −(1/g₁)·(ξ₁ + h(x̂) − ż₂ − (ν − ς)/τ + k·ξ₂ + d̂)
/// ```
///
/// `rate_command_derivative` is `ż₂` from the axis' command filter.
#[allow(clippy::too_many_arguments)]
pub fn attitude_channel_control(
    axis: AttitudeAxis,
    params: &QuadrotorParams,
    gains: &ChannelGains,
    rt: &ChannelRuntime,
    cross_rates: (f64, f64),
    residual_speed: f64,
    rate_command_derivative: f64,
    disturbance_estimate: f64,
) -> f64 {
    let coupling = axis.coupling(params, cross_rates, residual_speed);
    let inner = rt.xi1 + coupling - rate_command_derivative - (rt.nu - rt.surface) / gains.tau
        + gains.k * rt.xi2
        + disturbance_estimate;
    -inner / axis.input_gain(params)
}
