//! Per-channel nonlinear disturbance observer and two-state high-gain
//! observer.
//!
//! Both operate on a second-order channel
//!
//! ```text
//! ẋ₁ = x₂
//! ẋ₂ = h(x) + g₁·u + g₂·d
//! ```
//!
//! where only `x₁` is measured. The disturbance observer uses the design
//! function `p(x) = λ·x₂`, so its gain row is `l = [0, λ]` and `l·g₂ = λ`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceObserverState {
    /// Internal state γ.
    pub gamma: f64,
    /// Design gain λ, 1/s. Must exceed 1/2.
    pub lambda: f64,
}

/// Known rate-row terms of a channel, evaluated at the current estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModelTerms {
    /// Coupling dynamics `h(x̂)`.
    pub h: f64,
    /// Input gain, e.g. `l/I_x` for roll.
    pub g1: f64,
    /// Disturbance gain on the rate row.
    pub g2: f64,
}

impl ChannelModelTerms {
    pub fn new(h: f64, g1: f64) -> Self {
        Self { h, g1, g2: 1.0 }
    }
}

/// `γ̇ = −λg₂γ − λ(g₂λx̂₂ + h + g₁u)`
pub fn do_derivative(
    o: &DisturbanceObserverState,
    rate_estimate: f64,
    terms: &ChannelModelTerms,
    input: f64,
) -> f64 {
    let l = o.lambda;
    -l * terms.g2 * o.gamma - l * (terms.g2 * l * rate_estimate + terms.h + terms.g1 * input)
}

/// `d̂ = γ + λx̂₂`
pub fn do_estimate(o: &DisturbanceObserverState, rate_estimate: f64) -> f64 {
    o.gamma + o.lambda * rate_estimate
}

/// Inverts [`do_estimate`]: the γ that yields a given estimate.
pub fn do_state_for_estimate(lambda: f64, rate_estimate: f64, estimate: f64) -> f64 {
    estimate - lambda * rate_estimate
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HgoState {
    pub x1: f64,
    pub x2: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Must lie in (0, 1].
    pub epsilon: f64,
}

/// `(x̂̇₁, x̂̇₂)` given the measured output, the nominal coupling dynamics and
/// the known input contribution to the rate row.
pub fn hgo_derivative(
    h: &HgoState,
    measured: f64,
    nominal_dynamics: f64,
    input_term: f64,
) -> (f64, f64) {
    let innovation = measured - h.x1;
    (
        h.x2 + h.beta1 * innovation / h.epsilon,
        nominal_dynamics + input_term + h.beta2 * innovation / (h.epsilon * h.epsilon),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HurwitzCheck {
    pub hurwitz: bool,
    pub eigenvalues: [Complex64; 2],
}

/// Eigenvalues of the scaled estimation-error matrix `[[−β₁, 1], [−β₂, 0]]`,
/// i.e. the roots of `s² + β₁s + β₂`.
pub fn hgo_error_matrix_is_hurwitz(beta1: f64, beta2: f64) -> HurwitzCheck {
    let disc = Complex64::new(beta1 * beta1 - 4.0 * beta2, 0.0).sqrt();
    let half = Complex64::new(-0.5 * beta1, 0.0);
    let eigenvalues = [half + 0.5 * disc, half - 0.5 * disc];
    HurwitzCheck {
        hurwitz: eigenvalues.iter().all(|e| e.re < 0.0),
        eigenvalues,
    }
}
