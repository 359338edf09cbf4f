//! Small isolated rigs shared by the integration tests and the acceptance
//! suite. Everything here is built from the public library API.

#![allow(dead_code)]

use cfquad::attitude_control::{
    attitude_channel_control, AttitudeAxis, ChannelGains, ChannelRuntime,
};
use cfquad::filters::{
    command_filter_derivative, first_order_filter_derivative, CommandFilterState,
    FirstOrderFilterState,
};
use cfquad::observers::{
    do_derivative, do_estimate, hgo_derivative, ChannelModelTerms, DisturbanceObserverState,
    HgoState,
};
use cfquad::sim::integrator::rk4_step;
use cfquad::sim::Scenario;
use cfquad::vehicle_model::QuadrotorParams;

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Default mission with `epsilon` on every channel.
pub fn with_epsilon(mut sc: Scenario, epsilon: f64) -> Scenario {
    sc.gains = sc.gains.map(|g| g.epsilon = epsilon);
    sc
}

#[derive(Debug, Clone, Copy)]
pub struct RollSample {
    pub t: f64,
    pub phi: f64,
    pub rate: f64,
    pub xi1: f64,
    pub xi2: f64,
    pub e1: f64,
    pub d: f64,
    pub dhat: f64,
}

impl RollSample {
    /// `½(ξ₁² + ξ₂² + e₁² + d̃²)`
    pub fn lyapunov(&self) -> f64 {
        0.5 * (self.xi1.powi(2) + self.xi2.powi(2) + self.e1.powi(2) + (self.dhat - self.d).powi(2))
    }

    pub fn error_norm(&self) -> f64 {
        (2.0 * self.lyapunov()).sqrt()
    }
}

/// Roll channel on its own: `φ̈ = (l/I_x)·U_φ + d(t)` with the other body
/// rates at zero, regulated to φ = 0 with exact state feedback.
///
/// State: `[φ, φ̇, z₁, z₂, ς, γ]`.
pub fn roll_regulation(
    initial_angle: f64,
    disturbance: impl Fn(f64) -> f64,
    use_observer: bool,
    duration: f64,
    dt: f64,
) -> Vec<RollSample> {
    roll_regulation_with(
        ChannelGains::roll(),
        initial_angle,
        disturbance,
        use_observer,
        duration,
        dt,
    )
}

pub fn roll_regulation_with(
    g: ChannelGains,
    initial_angle: f64,
    disturbance: impl Fn(f64) -> f64,
    use_observer: bool,
    duration: f64,
    dt: f64,
) -> Vec<RollSample> {
    let p = QuadrotorParams::default();
    let axis = AttitudeAxis::Roll;
    let b = axis.input_gain(&p);

    let eval = |t: f64, y: &[f64; 6]| {
        let cf = CommandFilterState {
            z1: y[2],
            z2: y[3],
            m1: g.m1,
            m2: g.m2,
        };
        let (dz1, dz2) = command_filter_derivative(&cf, 0.0);
        let rt = ChannelRuntime::evaluate(&g, y[0], y[1], &cf, y[4]);
        let obs = DisturbanceObserverState {
            gamma: y[5],
            lambda: g.lambda,
        };
        let dhat = do_estimate(&obs, y[1]);
        let u = attitude_channel_control(
            axis,
            &p,
            &g,
            &rt,
            (0.0, 0.0),
            0.0,
            dz2,
            if use_observer { dhat } else { 0.0 },
        );
        let d = disturbance(t);
        let dy = [
            y[1],
            b * u + d,
            dz1,
            dz2,
            first_order_filter_derivative(
                &FirstOrderFilterState {
                    output: y[4],
                    tau: g.tau,
                },
                rt.nu,
            ),
            do_derivative(&obs, y[1], &ChannelModelTerms::new(0.0, b), u),
        ];
        let sample = RollSample {
            t,
            phi: y[0],
            rate: y[1],
            xi1: rt.xi1,
            xi2: rt.xi2,
            e1: rt.e1,
            d,
            dhat,
        };
        (dy, sample)
    };

    let cf0 = CommandFilterState::at_reference(0.0, g.m1, g.m2);
    let nu0 = ChannelRuntime::evaluate(&g, initial_angle, 0.0, &cf0, 0.0).nu;
    let mut y = [initial_angle, 0.0, 0.0, 0.0, nu0, 0.0];
    let steps = (duration / dt).round() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = k as f64 * dt;
        out.push(eval(t, &y).1);
        if k < steps {
            y = rk4_step(|t, y| Ok(eval(t, y).0), &y, t, dt).unwrap();
        }
    }
    out
}

/// Disturbance observer on a channel `ẋ₂ = d(t)` fed exact rates. Returns
/// `(t, d̂ − d)` per step.
pub fn isolated_observer(
    lambda: f64,
    disturbance: impl Fn(f64) -> f64,
    initial_estimate: f64,
    duration: f64,
    dt: f64,
) -> Vec<(f64, f64)> {
    // State: [x₂, γ].
    let f = |t: f64, y: &[f64; 2]| {
        let obs = DisturbanceObserverState {
            gamma: y[1],
            lambda,
        };
        Ok([
            disturbance(t),
            do_derivative(&obs, y[0], &ChannelModelTerms::new(0.0, 1.0), 0.0),
        ])
    };
    let mut y = [0.0, initial_estimate];
    let steps = (duration / dt).round() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = k as f64 * dt;
        let obs = DisturbanceObserverState {
            gamma: y[1],
            lambda,
        };
        out.push((t, do_estimate(&obs, y[0]) - disturbance(t)));
        if k < steps {
            y = rk4_step(f, &y, t, dt).unwrap();
        }
    }
    out
}

/// High-gain observer on the plant `ẋ₁ = x₂, ẋ₂ = −x₁ + sin(2t)` with the
/// forcing unknown to the observer (nominal model `−x̂₁`). Returns
/// `(t, x₂ − x̂₂, x̂₂)` per step.
pub fn hgo_on_forced_oscillator(
    epsilon: f64,
    initial_output_error: f64,
    duration: f64,
    dt: f64,
) -> Vec<(f64, f64, f64)> {
    let (beta1, beta2) = (1.0, 2.0);
    let f = |t: f64, y: &[f64; 4]| {
        let h = HgoState {
            x1: y[2],
            x2: y[3],
            beta1,
            beta2,
            epsilon,
        };
        let (a, b) = hgo_derivative(&h, y[0], -y[2], 0.0);
        Ok([y[1], -y[0] + (2.0 * t).sin(), a, b])
    };
    let mut y = [initial_output_error, 0.0, 0.0, 0.0];
    let steps = (duration / dt).round() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = k as f64 * dt;
        out.push((t, y[1] - y[3], y[3]));
        if k < steps {
            y = rk4_step(f, &y, t, dt).unwrap();
        }
    }
    out
}
