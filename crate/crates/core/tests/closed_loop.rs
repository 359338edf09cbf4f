mod common;

use cfquad::attitude_control::ChannelGains;
use cfquad::position_control::Trajectory;
use cfquad::sim::integrator::rk4_step;
use cfquad::sim::scenario::{DisturbanceSpecs, PositionDoModel};
use cfquad::sim::trace::summary_json;
use cfquad::sim::{closed_loop_derivative, run_scenario, AugmentedState, ClosedLoop, Scenario};
use cfquad::vehicle_model::{
    state_derivative, ControlInputs, DisturbanceVector, PlantState, QuadrotorParams,
};

use common::{roll_regulation, roll_regulation_with, RollSample};

const DT: f64 = 1e-3;

fn settle_below(samples: &[RollSample], band: f64) -> Option<f64> {
    let mut settled = None;
    for s in samples {
        if s.xi1.abs() >= band {
            settled = None;
        } else if settled.is_none() {
            settled = Some(s.t);
        }
    }
    settled
}

#[test]
fn roll_regulation_settles() {
    let run = roll_regulation(0.1, |_| 0.0, true, 2.0, DT);
    let ts = settle_below(&run, 1e-3).expect("roll did not settle");
    assert!((ts - 0.053).abs() <= 0.002, "settle time {ts}");
    assert!(run.last().unwrap().phi.abs() < 1e-6);
}

#[test]
fn observer_shrinks_the_steady_roll_error() {
    let d = 2.0;
    let steady = |use_observer: bool| {
        let run = roll_regulation(0.0, |_| d, use_observer, 5.0, DT);
        run.iter()
            .filter(|s| s.t >= 4.0)
            .map(|s| s.xi1.abs())
            .fold(0.0, f64::max)
    };
    let with = steady(true);
    let without = steady(false);
    assert!(with < without, "with {with}, without {without}");
    assert!(with < 1e-3 * without);
}

#[test]
fn slow_surface_filter_breaks_monotone_decrease() {
    // With the surface filter as slow as the position channels', V stops
    // decreasing on a large share of samples even far from the origin.
    let g = ChannelGains {
        tau: ChannelGains::POSITION_TAU,
        ..ChannelGains::roll()
    };
    let run = roll_regulation_with(g, 0.1, |_| 0.0, false, 1.0, DT);
    let decreasing = run
        .windows(2)
        .filter(|w| w[1].lyapunov() <= w[0].lyapunov())
        .count();
    let fraction = decreasing as f64 / (run.len() - 1) as f64;
    assert!(fraction < 0.9, "fraction {fraction}");
}

fn hover_scenario() -> Scenario {
    let mut sc = Scenario {
        trajectory: Trajectory::Waypoints {
            points: vec![[0.0, 1.0, -2.0, 5.0]],
        },
        initial_state: PlantState::at_rest([1.0, -2.0, 5.0]),
        disturbances: DisturbanceSpecs::none(),
        ..Scenario::default()
    };
    sc.sim.duration = 5.0;
    sc
}

#[test]
fn hover_stays_put() {
    let sc = hover_scenario();
    let weight = sc.params.mass * sc.params.gravity;
    let out = run_scenario(&sc).unwrap();
    assert!(out.completed());
    for r in &out.log.records {
        assert!(r.tracking_error.iter().all(|e| e.abs() < 1e-9), "t {}", r.t);
        assert!((r.inputs[0] - weight).abs() < 1e-9 * weight, "t {}", r.t);
    }
}

#[test]
fn free_fall_accelerates_downwards() {
    let p = QuadrotorParams::default();
    let f = |_t: f64, y: &[f64; 12]| {
        state_derivative(
            &p,
            &PlantState(*y),
            &ControlInputs::default(),
            0.0,
            &DisturbanceVector::default(),
        )
    };
    let mut y = PlantState::at_rest([0.0, 0.0, 10.0]).0;
    let mut prev = y[11];
    for k in 0..1000 {
        y = rk4_step(f, &y, k as f64 * DT, DT).unwrap();
        assert!(y[11] < prev);
        prev = y[11];
    }
    assert!((y[11] + p.gravity).abs() < 1e-9);
    assert!((y[10] - (10.0 - 0.5 * p.gravity)).abs() < 1e-9);
}

#[test]
fn rk4_step_agrees_with_the_derivative() {
    let sc = Scenario::default();
    let cl = ClosedLoop::new(&sc);
    let mut a = cl.initial_state(&sc.initial_state).unwrap();
    // Move off the initial point so every rig is excited.
    a.0[1] = 0.05;
    a.0[7] = -0.2;
    let t = 3.0;
    let f0 = closed_loop_derivative(&cl, &a, t, 0.0).unwrap();
    let err = |h: f64| {
        let next = rk4_step(
            |ts, y| closed_loop_derivative(&cl, &AugmentedState(*y), ts, 0.0),
            &a.0,
            t,
            h,
        )
        .unwrap();
        next.iter()
            .zip(&a.0)
            .zip(&f0)
            .map(|((n, y), d)| ((n - y) / h - d).abs())
            .fold(0.0, f64::max)
    };
    let (coarse, fine) = (err(1e-5), err(5e-6));
    // First-order convergence of the difference quotient. The observer and
    // surface-filter poles make the constant large.
    let ratio = coarse / fine;
    assert!((1.6..2.4).contains(&ratio), "ratio {ratio}");
}

#[test]
fn disturbances_raise_the_position_error() {
    let mut quiet = Scenario::default();
    quiet.sim.duration = 60.0;
    quiet.toggles.disturbances = false;
    let mut loud = quiet.clone();
    loud.toggles.disturbances = true;
    let q = run_scenario(&quiet).unwrap();
    let l = run_scenario(&loud).unwrap();
    assert!(q.completed() && l.completed());
    let (qm, lm) = (q.metrics.tracking_rmse, l.metrics.tracking_rmse);
    assert!(qm.z < lm.z);
    assert!(qm.x + qm.y + qm.z < lm.x + lm.y + lm.z);
}

#[test]
fn halving_dt_keeps_most_rmses_within_one_percent() {
    let base = run_scenario(&Scenario::default()).unwrap();
    let mut fine = Scenario::default();
    fine.sim.dt = 5e-4;
    fine.sim.decimation = 20;
    let fine = run_scenario(&fine).unwrap();
    assert!(base.completed() && fine.completed());
    let a = base.metrics.tracking_rmse;
    let b = fine.metrics.tracking_rmse;
    for (name, x, y) in [
        ("x", a.x, b.x),
        ("y", a.y, b.y),
        ("z", a.z, b.z),
        ("phi", a.phi, b.phi),
        ("psi", a.psi, b.psi),
    ] {
        assert!(((x - y) / x).abs() < 0.01, "{name}: {x} vs {y}");
    }
    // Pitch error is dominated by the switching feedforward of the filtered
    // references, whose chatter scales with the step.
    assert!(
        ((a.theta - b.theta) / a.theta).abs() < 0.15,
        "{} {}",
        a.theta,
        b.theta
    );
}

#[test]
fn summary_carries_seed_and_all_rmses() {
    let mut sc = Scenario::default();
    sc.sim.duration = 1.0;
    sc.sim.seed = 7;
    let out = run_scenario(&sc).unwrap();
    let doc = summary_json(&out.metrics, &sc, out.abort.as_ref());
    assert_eq!(doc["seed"], 7);
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["digest"].as_str().unwrap().len(), 64);
    for c in ["x", "y", "z", "phi", "theta", "psi"] {
        assert!(
            doc["metrics"]["tracking_rmse"][c].as_f64().unwrap() >= 0.0,
            "{c}"
        );
    }
    assert!(doc["abort"].is_null());
    for c in ["roll", "pitch", "yaw"] {
        assert!(doc["noise_seeds"][c].is_u64(), "{c}");
    }
    let back = Scenario::from_json_value(doc["scenario"].clone()).unwrap();
    assert_eq!(back, sc.resolved());
}

#[test]
fn observer_driven_by_the_virtual_control_destabilises_the_mission() {
    let mut sc = Scenario::default();
    sc.sim.duration = 15.0;
    sc.toggles.position_do_model = PositionDoModel::VirtualControl;
    let out = run_scenario(&sc).unwrap();
    let abort = out.abort.expect("expected the run to abort");
    assert!(abort.t > 5.0 && abort.t < 10.0, "{abort:?}");
    assert_eq!(out.metrics.guard_events, 1);
}
