//! Fixed-step execution of a scenario.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::engine::{AugmentedState, ClosedLoop, LoopSignals, AUGMENTED_DIM};
use super::integrator::rk4_step_from_slope;
use super::metrics::{attitude_first_to_xyz_first, ErrorSample, Metrics, MetricsAccumulator};
use super::scenario::Scenario;
use super::trace::{LogRecord, SimLog};

/// Why and where a run stopped early.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbortRecord {
    pub t: f64,
    pub step: u64,
    pub kind: String,
    pub message: String,
}

impl AbortRecord {
    fn new(step: u64, t: f64, err: &Error) -> Self {
        let kind = match err {
            Error::AngleGuard { .. } => "angle_guard",
            Error::DenominatorTooSmall { .. } => "denominator_too_small",
            Error::NonFinite(_) => "non_finite",
            _ => "other",
        };
        Self {
            t,
            step,
            kind: kind.into(),
            message: err.to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub log: SimLog,
    pub metrics: Metrics,
    pub abort: Option<AbortRecord>,
}

impl RunOutput {
    pub fn completed(&self) -> bool {
        self.abort.is_none()
    }
}

/// What an observer sees at every major step, before the step is taken.
#[derive(Debug, Clone, Copy)]
pub struct StepView<'a> {
    pub step: u64,
    pub state: &'a AugmentedState,
    pub signals: &'a LoopSignals,
}

/// Plant rows of the x, y, z, φ, θ, ψ outputs; each rate is the next row.
const OUTPUT_ROWS: [usize; 6] = [6, 8, 10, 0, 2, 4];

fn record(a: &AugmentedState, s: &LoopSignals) -> LogRecord {
    let plant = a.plant();
    LogRecord {
        t: s.t,
        state: plant.0,
        estimate: a.estimates(),
        reference: [
            s.reference[0],
            s.reference[1],
            s.reference[2],
            s.setpoint.roll,
            s.setpoint.pitch,
            s.setpoint.yaw,
        ],
        inputs: [
            s.applied.thrust,
            s.applied.roll,
            s.applied.pitch,
            s.applied.yaw,
        ],
        rotor_speeds: s.mix.speeds.0,
        virtual_controls: [
            s.virtual_controls.ux,
            s.virtual_controls.uy,
            s.virtual_controls.uz,
        ],
        disturbance: s.disturbance.to_array(),
        disturbance_estimate: s.disturbance_estimate,
        tracking_error: s.tracking_error,
    }
}

fn error_sample(a: &AugmentedState, s: &LoopSignals) -> ErrorSample {
    let x = a.plant().0;
    let xhat = a.estimates();
    let mut out = [0.0; 6];
    let mut rate = [0.0; 6];
    for (i, &row) in OUTPUT_ROWS.iter().enumerate() {
        out[i] = xhat[row] - x[row];
        rate[i] = xhat[row + 1] - x[row + 1];
    }
    let d = s.disturbance.to_array();
    let mut dist = [0.0; 6];
    for i in 0..6 {
        dist[i] = s.disturbance_estimate[i] - d[i];
    }
    ErrorSample {
        t: s.t,
        tracking: s.tracking_error,
        output_estimation: out,
        rate_estimation: rate,
        disturbance_estimation: attitude_first_to_xyz_first(dist),
        clamped: s.mix.any_clamped(),
    }
}

pub fn run_scenario(sc: &Scenario) -> Result<RunOutput> {
    run_scenario_observed(sc, |_| {})
}

/// Runs `sc`, calling `observe` at every major step with the state and the
/// signals evaluated there.
///
/// Invalid scenarios are an error; failures during integration end the run
/// and are reported in [`RunOutput::abort`] next to the partial log.
pub fn run_scenario_observed<F>(sc: &Scenario, mut observe: F) -> Result<RunOutput>
where
    F: FnMut(&StepView<'_>),
{
    sc.validate()?;
    let cl = ClosedLoop::new(sc);
    let dt = sc.sim.dt;
    let steps = sc.steps();
    let decimation = u64::from(sc.sim.decimation);
    let window = sc.sim.metrics_window.unwrap_or([0.0, f64::INFINITY]);
    let mut acc = MetricsAccumulator::new(
        window,
        sc.sim.settle_band_position,
        sc.sim.settle_band_attitude,
    );
    let mut log = SimLog {
        records: Vec::with_capacity((steps / decimation + 1) as usize),
    };

    let mut abort = None;
    let mut a = match cl.initial_state(&sc.initial_state) {
        Ok(a) => a,
        Err(e) if e.is_runtime_abort() => {
            acc.record_guard();
            abort = Some(AbortRecord::new(0, 0.0, &e));
            AugmentedState([0.0; AUGMENTED_DIM])
        }
        Err(e) => return Err(e),
    };

    // Ω_r as the controller knows it: the value realised at the previous
    // step, zero before the first.
    let mut held_residual = 0.0;
    if abort.is_none() {
        for k in 0..=steps {
            let t = k as f64 * dt;
            let step = cl.evaluate(&a, t, held_residual).and_then(|(k1, signals)| {
                observe(&StepView {
                    step: k,
                    state: &a,
                    signals: &signals,
                });
                acc.push(&error_sample(&a, &signals));
                if k % decimation == 0 {
                    log.records.push(record(&a, &signals));
                }
                if k == steps {
                    return Ok(None);
                }
                let h = held_residual;
                let next = rk4_step_from_slope(
                    |ts, y: &[f64; AUGMENTED_DIM]| {
                        cl.evaluate(&AugmentedState(*y), ts, h).map(|(d, _)| d)
                    },
                    &a.0,
                    t,
                    dt,
                    &k1,
                )?;
                Ok(Some((next, signals.residual_speed)))
            });
            match step {
                Ok(Some((next, omega))) => {
                    a = AugmentedState(next);
                    held_residual = omega;
                }
                Ok(None) => {}
                Err(e) if e.is_runtime_abort() => {
                    acc.record_guard();
                    abort = Some(AbortRecord::new(k, t, &e));
                    break;
                }
                Err(e) => return Err(e),
            }
        }
    }

    let metrics = match acc.finish() {
        Ok(m) => m,
        // A run that aborted before reaching the window still reports its
        // event counts.
        Err(Error::EmptyWindow { .. }) if abort.is_some() => Metrics {
            guard_events: 1,
            ..Metrics::default()
        },
        Err(e) => return Err(e),
    };
    Ok(RunOutput {
        log,
        metrics,
        abort,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::position_control::Trajectory;
    use crate::sim::scenario::DisturbanceSpecs;
    use crate::vehicle_model::PlantState;

    fn short_hover() -> Scenario {
        let mut sc = Scenario {
            trajectory: Trajectory::Waypoints {
                points: vec![[0.0, 0.0, 0.0, 1.0]],
            },
            initial_state: PlantState::at_rest([0.0, 0.0, 1.0]),
            disturbances: DisturbanceSpecs::none(),
            ..Scenario::default()
        };
        sc.sim.duration = 0.5;
        sc
    }

    #[test]
    fn log_spacing_follows_decimation() {
        let out = run_scenario(&short_hover()).unwrap();
        assert!(out.completed());
        assert_eq!(out.log.len(), 51);
        for (i, r) in out.log.records.iter().enumerate() {
            assert_eq!(r.t, i as f64 * 10.0 * 1e-3);
        }
        assert_eq!(out.metrics.samples, 501);
    }

    #[test]
    fn hover_stays_put() {
        let out = run_scenario(&short_hover()).unwrap();
        let last = out.log.records.last().unwrap();
        assert!(
            last.tracking_error.iter().all(|e| e.abs() < 1e-9),
            "{last:?}"
        );
    }

    #[test]
    fn guard_abort_keeps_partial_log() {
        let mut sc = short_hover();
        sc.initial_state.0[0] = 1.53;
        let out = run_scenario(&sc).unwrap();
        let abort = out.abort.unwrap();
        assert_eq!(abort.kind, "angle_guard");
        assert_eq!(out.metrics.guard_events, 1);
    }

    #[test]
    fn invalid_scenario_is_an_error() {
        let mut sc = short_hover();
        sc.sim.dt = 0.5;
        assert!(run_scenario(&sc).is_err());
    }
}
