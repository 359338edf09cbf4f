//! Classical fixed-step fourth-order Runge–Kutta.

use crate::error::{Error, Result};

fn axpy<const N: usize>(y: &[f64; N], h: f64, k: &[f64; N]) -> [f64; N] {
    let mut out = *y;
    for (o, ki) in out.iter_mut().zip(k) {
        *o += h * ki;
    }
    out
}

/// One RK4 step of `ẏ = f(t, y)`.
pub fn rk4_step<const N: usize, F>(f: F, y: &[f64; N], t: f64, dt: f64) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let mut f = f;
    let k1 = f(t, y)?;
    rk4_step_from_slope(f, y, t, dt, &k1)
}

/// RK4 step reusing an already evaluated first stage `k1 = f(t, y)`.
pub fn rk4_step_from_slope<const N: usize, F>(
    mut f: F,
    y: &[f64; N],
    t: f64,
    dt: f64,
    k1: &[f64; N],
) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    if dt.is_nan() || dt <= 0.0 {
        return Err(Error::InvalidScenario(format!(
            "step size must be > 0, got {dt}"
        )));
    }
    let half = 0.5 * dt;
    let k2 = f(t + half, &axpy(y, half, k1))?;
    let k3 = f(t + half, &axpy(y, half, &k2))?;
    let k4 = f(t + dt, &axpy(y, dt, &k3))?;

    let mut out = *y;
    let sixth = dt / 6.0;
    for i in 0..N {
        out[i] += sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("integrated state"));
    }
    Ok(out)
}
