//! Closed-loop wiring of plant, filters, observers and control laws.
//!
//! The augmented state is the 12 plant states followed by six rigs (roll,
//! pitch, yaw, x, y, z), each holding
//! `[z₁, z₂, ς, x̂₁, x̂₂, γ]`: command filter, first-order filter, high-gain
//! observer and disturbance observer.

use crate::attitude_control::{
    attitude_channel_control, AttitudeAxis, ChannelGains, ChannelRuntime,
};
use crate::disturbances::DisturbanceSet;
use crate::error::{Error, Result};
use crate::filters::{command_filter_derivative, first_order_filter_derivative};
use crate::filters::{CommandFilterState, FirstOrderFilterState};
use crate::observers::{
    do_derivative, do_estimate, hgo_derivative, ChannelModelTerms, DisturbanceObserverState,
    HgoState,
};
use crate::position_control::{
    extract_thrust_and_attitude, position_channel_control, AttitudeSetpoint, Trajectory,
    VirtualControls,
};
use crate::vehicle_model::{
    mix_inputs_to_rotor_speeds, residual_speed, rotor_speeds_to_inputs, state_derivative,
    virtual_from_angles, ControlInputs, DisturbanceVector, MixOutput, PlantState, QuadrotorParams,
    ResidualSpeedMode, STATE_DIM,
};

use super::scenario::{PositionDoModel, Scenario, Toggles};

pub const RIG_COUNT: usize = 6;
pub const RIG_DIM: usize = 6;
pub const AUGMENTED_DIM: usize = STATE_DIM + RIG_COUNT * RIG_DIM;

/// Roll and pitch may not come closer than this to ±π/2.
pub const ANGLE_GUARD_MARGIN: f64 = 0.05;

const Z1: usize = 0;
const Z2: usize = 1;
const SURFACE: usize = 2;
const HAT1: usize = 3;
const HAT2: usize = 4;
const GAMMA: usize = 5;

/// Plant index of the measured output of each rig; the rate follows it.
const OUTPUT_INDEX: [usize; RIG_COUNT] = [0, 2, 4, 6, 8, 10];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigState {
    pub z1: f64,
    pub z2: f64,
    pub surface: f64,
    pub output_estimate: f64,
    pub rate_estimate: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentedState(pub [f64; AUGMENTED_DIM]);

impl AugmentedState {
    pub fn plant(&self) -> PlantState {
        let mut s = [0.0; STATE_DIM];
        s.copy_from_slice(&self.0[..STATE_DIM]);
        PlantState(s)
    }

    fn base(rig: usize) -> usize {
        STATE_DIM + rig * RIG_DIM
    }

    pub fn rig(&self, rig: usize) -> RigState {
        let r = &self.0[Self::base(rig)..Self::base(rig) + RIG_DIM];
        RigState {
            z1: r[Z1],
            z2: r[Z2],
            surface: r[SURFACE],
            output_estimate: r[HAT1],
            rate_estimate: r[HAT2],
            gamma: r[GAMMA],
        }
    }

    pub fn set_rig(&mut self, rig: usize, s: RigState) {
        let b = Self::base(rig);
        self.0[b + Z1] = s.z1;
        self.0[b + Z2] = s.z2;
        self.0[b + SURFACE] = s.surface;
        self.0[b + HAT1] = s.output_estimate;
        self.0[b + HAT2] = s.rate_estimate;
        self.0[b + GAMMA] = s.gamma;
    }

    /// The twelve observer estimates in plant-state order.
    pub fn estimates(&self) -> [f64; STATE_DIM] {
        let mut out = [0.0; STATE_DIM];
        for rig in 0..RIG_COUNT {
            let r = self.rig(rig);
            out[OUTPUT_INDEX[rig]] = r.output_estimate;
            out[OUTPUT_INDEX[rig] + 1] = r.rate_estimate;
        }
        out
    }
}

/// Everything the controller computed during one evaluation of the closed
/// loop, for logging and metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopSignals {
    pub t: f64,
    /// Raw trajectory reference.
    pub reference: [f64; 3],
    pub setpoint: AttitudeSetpoint,
    pub virtual_controls: VirtualControls,
    /// Inputs requested by the control laws.
    pub commanded: ControlInputs,
    /// Inputs realised by the (possibly saturated) rotor speeds.
    pub applied: ControlInputs,
    pub mix: MixOutput,
    /// Ω_r seen by the plant.
    pub residual_speed: f64,
    pub disturbance: DisturbanceVector,
    /// Roll, pitch, yaw, x, y, z.
    pub disturbance_estimate: [f64; 6],
    /// Roll, pitch, yaw, x, y, z.
    pub runtimes: [ChannelRuntime; 6],
    /// Plant minus raw reference, in x, y, z, φ, θ, ψ order.
    pub tracking_error: [f64; 6],
}

/// Outer-loop quantities that the attitude loop consumes.
#[derive(Debug, Clone, Copy)]
struct PositionStage {
    runtimes: [ChannelRuntime; 3],
    filter_rates: [(f64, f64); 3],
    disturbance_estimates: [f64; 3],
    virtual_controls: VirtualControls,
    setpoint: AttitudeSetpoint,
    reference: [f64; 3],
}

/// Immutable per-run wiring derived from a [`Scenario`].
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    pub params: QuadrotorParams,
    pub gains: [ChannelGains; 6],
    pub trajectory: Trajectory,
    pub psi_des: f64,
    pub toggles: Toggles,
    pub disturbances: DisturbanceSet,
}

impl ClosedLoop {
    pub fn new(sc: &Scenario) -> Self {
        let resolved = sc.resolved();
        Self {
            params: sc.params,
            gains: sc.gains.as_array(),
            trajectory: sc.trajectory.clone(),
            psi_des: sc.psi_des,
            toggles: sc.toggles,
            disturbances: DisturbanceSet::new(resolved.disturbances.as_array()),
        }
    }

    /// Output and rate the controller uses for a rig.
    fn controller_view(&self, plant: &PlantState, rig: &RigState, index: usize) -> (f64, f64) {
        if self.toggles.true_state_feedback {
            let i = OUTPUT_INDEX[index];
            (plant.0[i], plant.0[i + 1])
        } else {
            (rig.output_estimate, rig.rate_estimate)
        }
    }

    fn command_filter(&self, rig: &RigState, index: usize) -> CommandFilterState {
        CommandFilterState {
            z1: rig.z1,
            z2: rig.z2,
            m1: self.gains[index].m1,
            m2: self.gains[index].m2,
        }
    }

    fn disturbance_observer(&self, rig: &RigState, index: usize) -> DisturbanceObserverState {
        DisturbanceObserverState {
            gamma: rig.gamma,
            lambda: self.gains[index].lambda,
        }
    }

    fn position_stage(&self, a: &AugmentedState, t: f64) -> Result<PositionStage> {
        let plant = a.plant();
        let reference = self.trajectory.evaluate(t);
        let mut runtimes = [ChannelRuntime::default(); 3];
        let mut filter_rates = [(0.0, 0.0); 3];
        let mut dhat = [0.0; 3];
        let mut u = [0.0; 3];
        for axis in 0..3 {
            let index = 3 + axis;
            let rig = a.rig(index);
            let gains = &self.gains[index];
            let cf = self.command_filter(&rig, index);
            filter_rates[axis] = command_filter_derivative(&cf, reference[axis]);
            let (y, v) = self.controller_view(&plant, &rig, index);
            runtimes[axis] = ChannelRuntime::evaluate(gains, y, v, &cf, rig.surface);
            dhat[axis] = do_estimate(&self.disturbance_observer(&rig, index), v);
            let compensation = if self.toggles.position_do {
                dhat[axis]
            } else {
                0.0
            };
            u[axis] = position_channel_control(
                gains,
                &runtimes[axis],
                filter_rates[axis].1,
                compensation,
            );
        }
        let virtual_controls = VirtualControls {
            ux: u[0],
            uy: u[1],
            uz: u[2],
        };
        let setpoint = extract_thrust_and_attitude(&virtual_controls, self.psi_des, &self.params)?;
        Ok(PositionStage {
            runtimes,
            filter_rates,
            disturbance_estimates: dhat,
            virtual_controls,
            setpoint,
            reference,
        })
    }

    fn controller_residual_speed(&self, held: f64) -> f64 {
        match self.params.residual_speed {
            ResidualSpeedMode::Computed => held,
            ResidualSpeedMode::Fixed { value } => value,
        }
    }

    /// Evaluates the closed loop at `(t, a)`.
    ///
    /// `held_residual_speed` is the Ω_r the controller believes in: the value
    /// realised at the previous major step, held over the current one.
    pub fn evaluate(
        &self,
        a: &AugmentedState,
        t: f64,
        held_residual_speed: f64,
    ) -> Result<([f64; AUGMENTED_DIM], LoopSignals)> {
        if a.0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("augmented state"));
        }
        let plant = a.plant();
        let guard = std::f64::consts::FRAC_PI_2 - ANGLE_GUARD_MARGIN;
        if plant.roll().abs() >= guard || plant.pitch().abs() >= guard {
            return Err(Error::AngleGuard {
                t,
                roll: plant.roll(),
                pitch: plant.pitch(),
            });
        }

        let p = &self.params;
        let mut deriv = [0.0; AUGMENTED_DIM];
        let mut runtimes = [ChannelRuntime::default(); 6];
        let mut dhat_all = [0.0; 6];

        // Outer loop.
        let outer = self.position_stage(a, t)?;
        let setpoint = outer.setpoint;
        runtimes[3..].copy_from_slice(&outer.runtimes);
        dhat_all[3..].copy_from_slice(&outer.disturbance_estimates);

        // Inner loop.
        let omega_ctrl = self.controller_residual_speed(held_residual_speed);
        let attitude_refs = [setpoint.roll, setpoint.pitch, setpoint.yaw];
        let mut views = [(0.0, 0.0); 3];
        for (i, view) in views.iter_mut().enumerate() {
            *view = self.controller_view(&plant, &a.rig(i), i);
        }
        let mut attitude_rates = [(0.0, 0.0); 3];
        let mut torques = [0.0; 3];
        for (i, axis) in AttitudeAxis::ALL.into_iter().enumerate() {
            let rig = a.rig(i);
            let gains = &self.gains[i];
            let cf = self.command_filter(&rig, i);
            attitude_rates[i] = command_filter_derivative(&cf, attitude_refs[i]);
            let (y, v) = views[i];
            let rt = ChannelRuntime::evaluate(gains, y, v, &cf, rig.surface);
            let cross = cross_rates(i, [views[0].1, views[1].1, views[2].1]);
            let dhat = do_estimate(&self.disturbance_observer(&rig, i), v);
            let compensation = if self.toggles.attitude_do { dhat } else { 0.0 };
            torques[i] = attitude_channel_control(
                axis,
                p,
                gains,
                &rt,
                cross,
                omega_ctrl,
                attitude_rates[i].1,
                compensation,
            );
            runtimes[i] = rt;
            dhat_all[i] = dhat;
        }

        let commanded = ControlInputs::new(setpoint.thrust, torques[0], torques[1], torques[2]);
        let mix = mix_inputs_to_rotor_speeds(p, &commanded)?;
        let applied = rotor_speeds_to_inputs(p, &mix.speeds)?;
        let omega_plant = residual_speed(p.residual_speed, &mix.speeds);

        let disturbance = if self.toggles.disturbances {
            self.disturbances.evaluate(t)
        } else {
            DisturbanceVector::default()
        };

        let plant_rates = state_derivative(p, &plant, &applied, omega_plant, &disturbance)?;
        deriv[..STATE_DIM].copy_from_slice(&plant_rates);

        // Observers run on their own estimates; in true-state mode only the
        // disturbance observers switch to the plant states.
        let hat = a.estimates();
        let applied_torque = [applied.roll, applied.pitch, applied.yaw];
        for (i, axis) in AttitudeAxis::ALL.into_iter().enumerate() {
            let rig = a.rig(i);
            let gains = &self.gains[i];
            let base = AugmentedState::base(i);
            deriv[base + Z1] = attitude_rates[i].0;
            deriv[base + Z2] = attitude_rates[i].1;
            deriv[base + SURFACE] = first_order_filter_derivative(
                &FirstOrderFilterState {
                    output: rig.surface,
                    tau: gains.tau,
                },
                runtimes[i].nu,
            );

            let est_cross = cross_rates(i, [hat[1], hat[3], hat[5]]);
            let nominal = axis.coupling(p, est_cross, omega_ctrl);
            let input_term = axis.input_gain(p) * applied_torque[i];
            let hgo = hgo_state(&rig, gains);
            let (h1, h2) = hgo_derivative(&hgo, plant.0[OUTPUT_INDEX[i]], nominal, input_term);
            deriv[base + HAT1] = h1;
            deriv[base + HAT2] = h2;

            let view_cross = cross_rates(i, [views[0].1, views[1].1, views[2].1]);
            let terms = axis.model_terms(p, view_cross, omega_ctrl);
            deriv[base + GAMMA] = do_derivative(
                &self.disturbance_observer(&rig, i),
                views[i].1,
                &terms,
                applied_torque[i],
            );
        }

        let thrust_accel = applied.thrust / p.mass;
        let translation = |roll: f64, pitch: f64, yaw: f64| {
            let (gx, gy) = virtual_from_angles(roll, pitch, yaw);
            [
                gx * thrust_accel,
                gy * thrust_accel,
                roll.cos() * pitch.cos() * thrust_accel - p.gravity,
            ]
        };
        let nominal_translation = translation(hat[0], hat[2], hat[4]);
        let observed_translation = translation(views[0].0, views[1].0, views[2].0);
        let virtual_u = [
            outer.virtual_controls.ux,
            outer.virtual_controls.uy,
            outer.virtual_controls.uz,
        ];
        for axis in 0..3 {
            let index = 3 + axis;
            let rig = a.rig(index);
            let gains = &self.gains[index];
            let base = AugmentedState::base(index);
            deriv[base + Z1] = outer.filter_rates[axis].0;
            deriv[base + Z2] = outer.filter_rates[axis].1;
            deriv[base + SURFACE] = first_order_filter_derivative(
                &FirstOrderFilterState {
                    output: rig.surface,
                    tau: gains.tau,
                },
                outer.runtimes[axis].nu,
            );
            let hgo = hgo_state(&rig, gains);
            let (h1, h2) = hgo_derivative(
                &hgo,
                plant.0[OUTPUT_INDEX[index]],
                nominal_translation[axis],
                0.0,
            );
            deriv[base + HAT1] = h1;
            deriv[base + HAT2] = h2;
            let (_, v) = self.controller_view(&plant, &rig, index);
            let (terms, input) = match self.toggles.position_do_model {
                PositionDoModel::Thrust => {
                    (ChannelModelTerms::new(observed_translation[axis], 1.0), 0.0)
                }
                PositionDoModel::VirtualControl => {
                    (ChannelModelTerms::new(0.0, 1.0), virtual_u[axis])
                }
            };
            deriv[base + GAMMA] =
                do_derivative(&self.disturbance_observer(&rig, index), v, &terms, input);
        }

        if deriv.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("closed-loop derivative"));
        }

        let pos = plant.position();
        let signals = LoopSignals {
            t,
            reference: outer.reference,
            setpoint,
            virtual_controls: outer.virtual_controls,
            commanded,
            applied,
            mix,
            residual_speed: omega_plant,
            disturbance,
            disturbance_estimate: dhat_all,
            runtimes,
            tracking_error: [
                pos[0] - outer.reference[0],
                pos[1] - outer.reference[1],
                pos[2] - outer.reference[2],
                plant.roll() - setpoint.roll,
                plant.pitch() - setpoint.pitch,
                plant.yaw() - setpoint.yaw,
            ],
        };
        Ok((deriv, signals))
    }

    /// Initial augmented state: observers start on the true initial state,
    /// command filters on their references with zero rate, first-order
    /// filters on their inputs and disturbance estimates at zero.
    pub fn initial_state(&self, plant: &PlantState) -> Result<AugmentedState> {
        let mut a = AugmentedState([0.0; AUGMENTED_DIM]);
        a.0[..STATE_DIM].copy_from_slice(&plant.0);
        for (index, &i) in OUTPUT_INDEX.iter().enumerate() {
            a.set_rig(
                index,
                RigState {
                    z1: 0.0,
                    z2: 0.0,
                    surface: 0.0,
                    output_estimate: plant.0[i],
                    rate_estimate: plant.0[i + 1],
                    gamma: -self.gains[index].lambda * plant.0[i + 1],
                },
            );
        }

        let r0 = self.trajectory.evaluate(0.0);
        for (axis, &r) in r0.iter().enumerate() {
            let index = 3 + axis;
            let mut rig = a.rig(index);
            rig.z1 = r;
            a.set_rig(index, rig);
        }
        // ς(0) = ν(0) for the position channels, before the setpoint is
        // extracted, so the outer loop starts with e₁ = 0.
        for axis in 0..3 {
            let index = 3 + axis;
            let mut rig = a.rig(index);
            let cf = self.command_filter(&rig, index);
            let (y, v) = self.controller_view(plant, &rig, index);
            rig.surface = ChannelRuntime::evaluate(&self.gains[index], y, v, &cf, 0.0).nu;
            a.set_rig(index, rig);
        }

        let setpoint = self.position_stage(&a, 0.0)?.setpoint;
        let refs = [setpoint.roll, setpoint.pitch, setpoint.yaw];
        for (index, reference) in refs.into_iter().enumerate() {
            let mut rig = a.rig(index);
            rig.z1 = reference;
            let cf = self.command_filter(&rig, index);
            let (y, v) = self.controller_view(plant, &rig, index);
            rig.surface = ChannelRuntime::evaluate(&self.gains[index], y, v, &cf, 0.0).nu;
            a.set_rig(index, rig);
        }
        Ok(a)
    }
}

fn hgo_state(rig: &RigState, gains: &ChannelGains) -> HgoState {
    HgoState {
        x1: rig.output_estimate,
        x2: rig.rate_estimate,
        beta1: gains.beta1,
        beta2: gains.beta2,
        epsilon: gains.epsilon,
    }
}

/// The two body rates other than `axis`, in roll-pitch-yaw order.
fn cross_rates(axis: usize, rates: [f64; 3]) -> (f64, f64) {
    match axis {
        0 => (rates[1], rates[2]),
        1 => (rates[0], rates[2]),
        _ => (rates[0], rates[1]),
    }
}

/// Derivative of the augmented state, discarding the logged signals.
pub fn closed_loop_derivative(
    cl: &ClosedLoop,
    a: &AugmentedState,
    t: f64,
    held_residual_speed: f64,
) -> Result<[f64; AUGMENTED_DIM]> {
    cl.evaluate(a, t, held_residual_speed).map(|(d, _)| d)
}
