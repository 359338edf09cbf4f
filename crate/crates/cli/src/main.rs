use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use cfquad::sim::sweep::{expand_sweep, write_sweep_table, SweepAxis};
use cfquad::sim::Scenario;
use cfquad::sim::{run_batch, run_scenario, write_summary, write_trace, ExecMode, RunOutput};
use cfquad::Error;
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

/// Closed-loop quadrotor simulator.
#[derive(Debug, Parser)]
#[command(name = "cfquad", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario and write trace.csv and summary.json.
    Run {
        /// Scenario JSON; omitted fields take the default mission values.
        /// Without it the default mission runs.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Integration step, s.
        #[arg(long)]
        dt: Option<f64>,
        /// Simulated time, s.
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the cartesian product of one or more parameter lists.
    Sweep {
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// `path=v1,v2,...`, e.g. `gains.roll.k=100,120,140`. Repeatable.
        #[arg(long, required = true)]
        vary: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; 1 runs sequentially. Defaults to all cores.
        #[arg(long)]
        jobs: Option<usize>,
    },
}

const EXIT_OTHER: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_ABORT: u8 = 3;

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = match error.downcast_ref::<Error>() {
            Some(Error::InvalidScenario(_)) => EXIT_INVALID,
            _ => EXIT_OTHER,
        };
        Self { code, error }
    }
}

fn load_scenario(
    path: Option<&Path>,
    dt: Option<f64>,
    duration: Option<f64>,
    seed: Option<u64>,
) -> anyhow::Result<Scenario> {
    let mut doc = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading scenario {}", p.display()))?;
            serde_json::from_str::<Value>(&text)
                .map_err(|e| Error::InvalidScenario(format!("{}: {e}", p.display())))?
        }
        None => json!({}),
    };
    if !doc.is_object() {
        return Err(Error::InvalidScenario("scenario must be a JSON object".into()).into());
    }
    let overrides = [
        ("dt", dt.map(Value::from)),
        ("duration", duration.map(Value::from)),
        ("seed", seed.map(Value::from)),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            let sim = doc
                .as_object_mut()
                .expect("checked above")
                .entry("sim")
                .or_insert_with(|| json!({}));
            match sim.as_object_mut() {
                Some(o) => {
                    o.insert(key.into(), v);
                }
                None => {
                    return Err(Error::InvalidScenario("sim must be an object".into()).into());
                }
            }
        }
    }
    Ok(Scenario::from_json_value(doc)?)
}

fn write_run(dir: &Path, sc: &Scenario, out: &RunOutput) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_trace(&out.log, &dir.join("trace.csv"))?;
    write_summary(
        &out.metrics,
        sc,
        out.abort.as_ref(),
        &dir.join("summary.json"),
    )?;
    Ok(())
}

fn run(
    scenario: Option<PathBuf>,
    out_dir: PathBuf,
    dt: Option<f64>,
    duration: Option<f64>,
    seed: Option<u64>,
) -> Result<(), Failure> {
    let sc = load_scenario(scenario.as_deref(), dt, duration, seed)?;
    let out = run_scenario(&sc).map_err(anyhow::Error::from)?;
    write_run(&out_dir, &sc, &out)?;
    let rmse = out.metrics.tracking_rmse;
    eprintln!(
        "rmse x {:.4} y {:.4} z {:.4} phi {:.4} theta {:.4} psi {:.4}",
        rmse.x, rmse.y, rmse.z, rmse.phi, rmse.theta, rmse.psi
    );
    if let Some(abort) = out.abort {
        return Err(Failure {
            code: EXIT_ABORT,
            error: anyhow::anyhow!("run aborted at step {}: {}", abort.step, abort.message),
        });
    }
    Ok(())
}

fn sweep(
    scenario: Option<PathBuf>,
    vary: Vec<String>,
    out_dir: PathBuf,
    jobs: Option<usize>,
) -> Result<(), Failure> {
    let base = load_scenario(scenario.as_deref(), None, None, None)?;
    let axes = vary
        .iter()
        .map(|s| s.parse::<SweepAxis>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(anyhow::Error::from)?;
    let points = expand_sweep(&base, &axes).map_err(anyhow::Error::from)?;
    let mode = match jobs {
        None => ExecMode::Parallel,
        Some(0) | Some(1) => ExecMode::Sequential,
        Some(n) => ExecMode::ParallelWith(n),
    };
    let scenarios: Vec<Scenario> = points.iter().map(|p| p.scenario.clone()).collect();
    let results = run_batch(&scenarios, mode);

    std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut aborted = 0;
    for (i, (sc, result)) in scenarios.iter().zip(&results).enumerate() {
        let dir = out_dir.join(format!("run_{i:03}"));
        match result {
            Ok(out) => {
                write_run(&dir, sc, out)?;
                if out.abort.is_some() {
                    aborted += 1;
                }
            }
            Err(e) => {
                return Err(anyhow::anyhow!("run {i:03}: {e}").into());
            }
        }
    }
    write_sweep_table(&out_dir.join("sweep.csv"), &axes, &points, &results)
        .map_err(anyhow::Error::from)?;
    eprintln!("{} runs, {} aborted", results.len(), aborted);
    if aborted > 0 {
        return Err(Failure {
            code: EXIT_ABORT,
            error: anyhow::anyhow!("{aborted} of {} runs aborted", results.len()),
        });
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenario,
            out,
            dt,
            duration,
            seed,
        } => run(scenario, out, dt, duration, seed),
        Command::Sweep {
            scenario,
            vary,
            out,
            jobs,
        } => sweep(scenario, vary, out, jobs),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
