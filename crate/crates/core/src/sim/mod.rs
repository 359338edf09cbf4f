//! Closed-loop simulation: scenario files, the augmented-state ODE, RK4
//! integration, traces, metrics and batch execution.

pub mod batch;
pub mod engine;
pub mod integrator;
pub mod metrics;
pub mod runner;
pub mod scenario;
pub mod sweep;
pub mod trace;

pub use batch::{run_batch, ExecMode};
pub use engine::{closed_loop_derivative, AugmentedState, ClosedLoop, LoopSignals};
pub use integrator::rk4_step;
pub use metrics::{compute_rmse, Metrics};
pub use runner::{run_scenario, run_scenario_observed, AbortRecord, RunOutput, StepView};
pub use scenario::Scenario;
pub use trace::{read_trace, write_summary, write_trace, LogRecord, SimLog};
