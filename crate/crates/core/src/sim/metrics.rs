//! Tracking and estimation error statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::trace::SimLog;

/// One value per controlled channel.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ChannelValues<T> {
    pub x: T,
    pub y: T,
    pub z: T,
    pub phi: T,
    pub theta: T,
    pub psi: T,
}

impl<T: Copy> ChannelValues<T> {
    /// From an array in x, y, z, φ, θ, ψ order.
    pub fn from_xyz_first(a: [T; 6]) -> Self {
        Self {
            x: a[0],
            y: a[1],
            z: a[2],
            phi: a[3],
            theta: a[4],
            psi: a[5],
        }
    }

    /// x, y, z, φ, θ, ψ.
    pub fn to_array(&self) -> [T; 6] {
        [self.x, self.y, self.z, self.phi, self.theta, self.psi]
    }
}

/// Reorders a roll, pitch, yaw, x, y, z array to x, y, z, φ, θ, ψ.
pub fn attitude_first_to_xyz_first<T: Copy>(a: [T; 6]) -> [T; 6] {
    [a[3], a[4], a[5], a[0], a[1], a[2]]
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    /// `[t0, t1]` actually covered by the samples.
    pub window: [f64; 2],
    pub samples: u64,
    pub tracking_rmse: ChannelValues<f64>,
    pub tracking_peak: ChannelValues<f64>,
    /// RMSE of `x̂ − x` on the measured outputs.
    pub output_estimation_rmse: ChannelValues<f64>,
    /// RMSE of `x̂ − x` on the rates.
    pub rate_estimation_rmse: ChannelValues<f64>,
    /// RMSE of `d̂ − d`.
    pub disturbance_estimation_rmse: ChannelValues<f64>,
    /// Last time the tracking error was outside its settle band (window start
    /// if never); `None` if it is outside the band at the end of the window.
    pub settle_time: ChannelValues<Option<f64>>,
    /// Samples at which at least one squared rotor speed was clamped.
    pub clamp_events: u64,
    pub guard_events: u64,
}

/// Per-sample errors, all in x, y, z, φ, θ, ψ order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorSample {
    pub t: f64,
    pub tracking: [f64; 6],
    pub output_estimation: [f64; 6],
    pub rate_estimation: [f64; 6],
    pub disturbance_estimation: [f64; 6],
    pub clamped: bool,
}

#[derive(Debug, Clone)]
pub struct MetricsAccumulator {
    window: [f64; 2],
    bands: [f64; 6],
    first: Option<f64>,
    last: f64,
    samples: u64,
    sq_tracking: [f64; 6],
    sq_output: [f64; 6],
    sq_rate: [f64; 6],
    sq_disturbance: [f64; 6],
    peak: [f64; 6],
    last_violation: [Option<f64>; 6],
    outside_at_end: [bool; 6],
    clamps: u64,
    guards: u64,
}

impl MetricsAccumulator {
    /// `bands` are the settle bands for position (m) and attitude (rad).
    pub fn new(window: [f64; 2], position_band: f64, attitude_band: f64) -> Self {
        let p = position_band;
        let a = attitude_band;
        Self {
            window,
            bands: [p, p, p, a, a, a],
            first: None,
            last: f64::NAN,
            samples: 0,
            sq_tracking: [0.0; 6],
            sq_output: [0.0; 6],
            sq_rate: [0.0; 6],
            sq_disturbance: [0.0; 6],
            peak: [0.0; 6],
            last_violation: [None; 6],
            outside_at_end: [false; 6],
            clamps: 0,
            guards: 0,
        }
    }

    pub fn push(&mut self, s: &ErrorSample) {
        if s.t < self.window[0] || s.t > self.window[1] {
            return;
        }
        self.first.get_or_insert(s.t);
        self.last = s.t;
        self.samples += 1;
        for i in 0..6 {
            let e = s.tracking[i];
            self.sq_tracking[i] += e * e;
            self.sq_output[i] += s.output_estimation[i].powi(2);
            self.sq_rate[i] += s.rate_estimation[i].powi(2);
            self.sq_disturbance[i] += s.disturbance_estimation[i].powi(2);
            self.peak[i] = self.peak[i].max(e.abs());
            let outside = e.abs() > self.bands[i];
            if outside {
                self.last_violation[i] = Some(s.t);
            }
            self.outside_at_end[i] = outside;
        }
        if s.clamped {
            self.clamps += 1;
        }
    }

    pub fn record_guard(&mut self) {
        self.guards += 1;
    }

    pub fn finish(&self) -> Result<Metrics> {
        let Some(first) = self.first else {
            return Err(Error::EmptyWindow {
                start: self.window[0],
                end: self.window[1],
            });
        };
        let n = self.samples as f64;
        let rms = |sq: &[f64; 6]| ChannelValues::from_xyz_first(sq.map(|v| (v / n).sqrt()));
        let settle: [Option<f64>; 6] = std::array::from_fn(|i| {
            match (self.outside_at_end[i], self.last_violation[i]) {
                (true, _) => None,
                (false, None) => Some(first),
                // Reported as the time of the last excursion.
                (false, Some(tv)) => Some(tv),
            }
        });
        Ok(Metrics {
            window: [first, self.last],
            samples: self.samples,
            tracking_rmse: rms(&self.sq_tracking),
            tracking_peak: ChannelValues::from_xyz_first(self.peak),
            output_estimation_rmse: rms(&self.sq_output),
            rate_estimation_rmse: rms(&self.sq_rate),
            disturbance_estimation_rmse: rms(&self.sq_disturbance),
            settle_time: ChannelValues::from_xyz_first(settle),
            clamp_events: self.clamps,
            guard_events: self.guards,
        })
    }
}

/// Plant row of each x, y, z, φ, θ, ψ output; the rate is the next row.
const OUTPUT_ROWS: [usize; 6] = [6, 8, 10, 0, 2, 4];

/// Error sample reconstructed from a logged record.
pub fn error_sample_from_record(r: &super::trace::LogRecord) -> ErrorSample {
    let mut out = [0.0; 6];
    let mut rate = [0.0; 6];
    for (i, &row) in OUTPUT_ROWS.iter().enumerate() {
        out[i] = r.estimate[row] - r.state[row];
        rate[i] = r.estimate[row + 1] - r.state[row + 1];
    }
    let dist: [f64; 6] = std::array::from_fn(|i| r.disturbance_estimate[i] - r.disturbance[i]);
    ErrorSample {
        t: r.t,
        tracking: r.tracking_error,
        output_estimation: out,
        rate_estimation: rate,
        disturbance_estimation: attitude_first_to_xyz_first(dist),
        clamped: false,
    }
}

/// Metrics over the logged samples inside `window`, with the default settle
/// bands (0.5 m, 0.1 rad). Clamp and guard counts are not part of the log and
/// come out as zero.
pub fn compute_rmse(log: &SimLog, window: (f64, f64)) -> Result<Metrics> {
    let mut acc = MetricsAccumulator::new([window.0, window.1], 0.5, 0.1);
    for r in &log.records {
        acc.push(&error_sample_from_record(r));
    }
    acc.finish()
}
