//! CSV trace and JSON run summary.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

use super::metrics::Metrics;
use super::runner::AbortRecord;
use super::scenario::{Scenario, CHANNELS, SCHEMA_VERSION};

pub const COLUMN_COUNT: usize = 60;

/// Trace column names in file order.
pub fn column_names() -> Vec<String> {
    let mut names = vec!["t".to_string()];
    names.extend((1..=12).map(|i| format!("x{i}")));
    names.extend((1..=12).map(|i| format!("xhat{i}")));
    for n in [
        "xr",
        "yr",
        "zr",
        "phi_des",
        "theta_des",
        "psi_des",
        "Up",
        "Uphi",
        "Utheta",
        "Upsi",
    ] {
        names.push(n.into());
    }
    names.extend((1..=4).map(|i| format!("w{i}")));
    for n in ["Ux", "Uy", "Uz"] {
        names.push(n.into());
    }
    let suffixes = ["phi", "theta", "psi", "x", "y", "z"];
    names.extend(suffixes.iter().map(|s| format!("d_{s}")));
    names.extend(suffixes.iter().map(|s| format!("dhat_{s}")));
    names.extend(
        ["x", "y", "z", "phi", "theta", "psi"]
            .iter()
            .map(|s| format!("e_{s}")),
    );
    names
}

/// One logged instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LogRecord {
    pub t: f64,
    pub state: [f64; 12],
    pub estimate: [f64; 12],
    /// x_r, y_r, z_r, φ_des, θ_des, ψ_des.
    pub reference: [f64; 6],
    /// U_p, U_φ, U_θ, U_ψ as applied to the plant.
    pub inputs: [f64; 4],
    pub rotor_speeds: [f64; 4],
    pub virtual_controls: [f64; 3],
    /// Roll, pitch, yaw, x, y, z.
    pub disturbance: [f64; 6],
    /// Roll, pitch, yaw, x, y, z.
    pub disturbance_estimate: [f64; 6],
    /// x, y, z, φ, θ, ψ.
    pub tracking_error: [f64; 6],
}

impl LogRecord {
    pub fn to_row(&self) -> [f64; COLUMN_COUNT] {
        let mut row = [0.0; COLUMN_COUNT];
        let mut i = 0;
        let mut put = |vals: &[f64]| {
            row[i..i + vals.len()].copy_from_slice(vals);
            i += vals.len();
        };
        put(&[self.t]);
        put(&self.state);
        put(&self.estimate);
        put(&self.reference);
        put(&self.inputs);
        put(&self.rotor_speeds);
        put(&self.virtual_controls);
        put(&self.disturbance);
        put(&self.disturbance_estimate);
        put(&self.tracking_error);
        row
    }

    pub fn from_row(row: &[f64; COLUMN_COUNT]) -> Self {
        let mut i = 0;
        let mut take = |out: &mut [f64]| {
            out.copy_from_slice(&row[i..i + out.len()]);
            i += out.len();
        };
        let mut r = LogRecord::default();
        let mut t = [0.0];
        take(&mut t);
        r.t = t[0];
        take(&mut r.state);
        take(&mut r.estimate);
        take(&mut r.reference);
        take(&mut r.inputs);
        take(&mut r.rotor_speeds);
        take(&mut r.virtual_controls);
        take(&mut r.disturbance);
        take(&mut r.disturbance_estimate);
        take(&mut r.tracking_error);
        r
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimLog {
    pub records: Vec<LogRecord>,
}

impl SimLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.t)
    }
}

/// Nine significant digits, exponent form.
fn format_value(v: f64) -> String {
    format!("{v:.8e}")
}

pub fn write_trace_to<W: Write>(log: &SimLog, out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(column_names())?;
    for r in &log.records {
        w.write_record(r.to_row().iter().map(|&v| format_value(v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace(log: &SimLog, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_trace_to(log, BufWriter::new(file)).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_trace(path: &Path) -> Result<SimLog> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_string)
        .collect();
    if header != column_names() {
        return Err(Error::InvalidScenario(format!(
            "{}: unexpected trace header",
            path.display()
        )));
    }
    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let mut row = [0.0; COLUMN_COUNT];
        for (slot, field) in row.iter_mut().zip(rec.iter()) {
            *slot = field.parse().map_err(|_| {
                Error::InvalidScenario(format!("{}: bad number {field:?}", path.display()))
            })?;
        }
        records.push(LogRecord::from_row(&row));
    }
    Ok(SimLog { records })
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    schema_version: u32,
    digest: String,
    seed: u64,
    noise_seeds: serde_json::Map<String, serde_json::Value>,
    metrics: &'a Metrics,
    abort: Option<&'a AbortRecord>,
    scenario: Scenario,
}

/// Summary document for a run of `sc`.
pub fn summary_json(
    metrics: &Metrics,
    sc: &Scenario,
    abort: Option<&AbortRecord>,
) -> serde_json::Value {
    let resolved = sc.resolved();
    let mut noise_seeds = serde_json::Map::new();
    for (name, spec) in CHANNELS.iter().zip(resolved.disturbances.as_array()) {
        if let Some(seed) = spec.seed() {
            noise_seeds.insert((*name).into(), seed.into());
        }
    }
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        digest: sc.digest(),
        seed: sc.sim.seed,
        noise_seeds,
        metrics,
        abort,
        scenario: resolved,
    };
    serde_json::to_value(summary).expect("summary serialises")
}

pub fn write_summary(
    metrics: &Metrics,
    sc: &Scenario,
    abort: Option<&AbortRecord>,
    path: &Path,
) -> Result<()> {
    let doc = summary_json(metrics, sc, abort);
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &doc)
        .map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
        .and_then(|_| {
            w.flush().map_err(|source| Error::Io {
                path: path.to_path_buf(),
                source,
            })
        })
}
