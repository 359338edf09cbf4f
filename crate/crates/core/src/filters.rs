//! Super-twisting command filter and first-order dynamic-surface filter.

use serde::{Deserialize, Serialize};

/// `sign` with `sign(0) = 0`, so a zero tracking error is an equilibrium.
pub fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Second-order sliding-mode filter producing a smoothed reference `z1` and
/// its rate `z2` without differentiating the reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommandFilterState {
    pub z1: f64,
    pub z2: f64,
    pub m1: f64,
    pub m2: f64,
}

impl CommandFilterState {
    /// Starts on the reference with zero rate.
    pub fn at_reference(reference: f64, m1: f64, m2: f64) -> Self {
        Self {
            z1: reference,
            z2: 0.0,
            m1,
            m2,
        }
    }
}

/// `(ż₁, ż₂)` for the given reference.
pub fn command_filter_derivative(cf: &CommandFilterState, reference: f64) -> (f64, f64) {
    let err = cf.z1 - reference;
    let s = sign(err);
    (-cf.m1 * err.abs().sqrt() * s + cf.z2, -cf.m2 * s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderFilterState {
    pub output: f64,
    /// Time constant, s.
    pub tau: f64,
}

/// `ς̇ = (ν − ς)/τ`
pub fn first_order_filter_derivative(f: &FirstOrderFilterState, input: f64) -> f64 {
    (input - f.output) / f.tau
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn command_filter_at_reference() {
        let cf = CommandFilterState {
            z1: 0.3,
            z2: 0.25,
            m1: 1.0,
            m2: 1.0,
        };
        assert_eq!(command_filter_derivative(&cf, 0.3), (0.25, 0.0));
    }

    #[test]
    fn command_filter_square_root_term() {
        let cf = CommandFilterState {
            z1: 4.0,
            z2: 0.0,
            m1: 1.0,
            m2: 0.7,
        };
        assert_eq!(command_filter_derivative(&cf, 0.0), (-2.0, -0.7));
    }

    #[test]
    fn first_order_filter_basics() {
        let f = FirstOrderFilterState {
            output: 2.5,
            tau: 0.05,
        };
        assert_eq!(first_order_filter_derivative(&f, 2.5), 0.0);
        let f = FirstOrderFilterState {
            output: 0.0,
            tau: 1.0,
        };
        assert_relative_eq!(first_order_filter_derivative(&f, 1.0), 1.0);
    }

    #[test]
    fn sign_of_zero_is_zero() {
        assert_eq!(sign(0.0), 0.0);
        assert_eq!(sign(-0.0), 0.0);
        assert_eq!(sign(1e-300), 1.0);
        assert_eq!(sign(-3.0), -1.0);
    }
}
