//! Parameter sweeps over a base scenario.
//!
//! A sweep axis is written `path=v1,v2,...`, where `path` is a dotted path
//! into the scenario document (`gains.roll.k`, `sim.seed`, ...) and each value
//! is parsed as JSON, falling back to a plain string.

use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};

use super::runner::RunOutput;
use super::scenario::Scenario;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub path: String,
    pub values: Vec<Value>,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (path, list) = s
            .split_once('=')
            .ok_or_else(|| Error::InvalidScenario(format!("--vary {s:?}: expected path=v1,v2")))?;
        let path = path.trim();
        if path.is_empty() || path.split('.').any(str::is_empty) {
            return Err(Error::InvalidScenario(format!("--vary {s:?}: bad path")));
        }
        let values: Vec<Value> = list
            .split(',')
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .map(|v| serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.into())))
            .collect();
        if values.is_empty() {
            return Err(Error::InvalidScenario(format!("--vary {s:?}: no values")));
        }
        Ok(Self {
            path: path.into(),
            values,
        })
    }
}

/// One point of the sweep grid.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub assignments: Vec<(String, Value)>,
    pub scenario: Scenario,
}

fn assign(doc: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut slot = doc;
    for key in path.split('.') {
        slot = slot
            .as_object_mut()
            .and_then(|o| o.get_mut(key))
            .ok_or_else(|| Error::InvalidScenario(format!("unknown scenario field {path:?}")))?;
    }
    *slot = value;
    Ok(())
}

/// Cartesian product of the axes applied to `base`, first axis slowest.
pub fn expand_sweep(base: &Scenario, axes: &[SweepAxis]) -> Result<Vec<SweepPoint>> {
    let doc = serde_json::to_value(base.resolved()).expect("scenario serialises");
    let mut combos: Vec<Vec<(String, Value)>> = vec![Vec::new()];
    for axis in axes {
        combos = combos
            .into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |v| {
                    let mut c = prefix.clone();
                    c.push((axis.path.clone(), v.clone()));
                    c
                })
            })
            .collect();
    }
    combos
        .into_iter()
        .map(|assignments| {
            let mut d = doc.clone();
            for (path, value) in &assignments {
                assign(&mut d, path, value.clone())?;
            }
            let scenario: Scenario =
                serde_json::from_value(d).map_err(|e| Error::InvalidScenario(e.to_string()))?;
            scenario.validate()?;
            Ok(SweepPoint {
                assignments,
                scenario,
            })
        })
        .collect()
}

/// Writes one row per sweep point: index, the swept values, completion flag
/// and the six tracking RMSEs.
pub fn write_sweep_table(
    path: &Path,
    axes: &[SweepAxis],
    points: &[SweepPoint],
    results: &[Result<RunOutput>],
) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec!["run".to_string()];
    header.extend(axes.iter().map(|a| a.path.clone()));
    header.push("status".into());
    for c in ["x", "y", "z", "phi", "theta", "psi"] {
        header.push(format!("rmse_{c}"));
    }
    w.write_record(&header).map_err(csv_err)?;
    for (i, (point, result)) in points.iter().zip(results).enumerate() {
        let mut row = vec![format!("{i:03}")];
        row.extend(point.assignments.iter().map(|(_, v)| match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        }));
        match result {
            Ok(out) => {
                row.push(
                    out.abort
                        .as_ref()
                        .map_or("ok".to_string(), |a| a.kind.clone()),
                );
                row.extend(
                    out.metrics
                        .tracking_rmse
                        .to_array()
                        .iter()
                        .map(|v| format!("{v:.8e}")),
                );
            }
            Err(_) => {
                row.push("error".into());
                row.extend(std::iter::repeat_n(String::new(), 6));
            }
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_axis() {
        let a: SweepAxis = "gains.roll.k=100, 120,140".parse().unwrap();
        assert_eq!(a.path, "gains.roll.k");
        assert_eq!(a.values.len(), 3);
        assert_eq!(a.values[1], Value::from(120));
        assert!("gains.roll.k".parse::<SweepAxis>().is_err());
        assert!("gains..k=1".parse::<SweepAxis>().is_err());
        assert!("gains.roll.k=".parse::<SweepAxis>().is_err());
    }

    #[test]
    fn cartesian_product_in_order() {
        let axes: Vec<SweepAxis> = ["gains.roll.k=100,140", "sim.seed=1,2,3"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        let points = expand_sweep(&Scenario::default(), &axes).unwrap();
        assert_eq!(points.len(), 6);
        assert_eq!(points[0].scenario.gains.roll.k, 100.0);
        assert_eq!(points[0].scenario.sim.seed, 1);
        assert_eq!(points[5].scenario.gains.roll.k, 140.0);
        assert_eq!(points[5].scenario.sim.seed, 3);
    }

    #[test]
    fn unknown_or_invalid_fields_fail() {
        let bad: SweepAxis = "gains.roll.kk=1".parse().unwrap();
        assert!(expand_sweep(&Scenario::default(), &[bad]).is_err());
        let invalid: SweepAxis = "sim.dt=0.5".parse().unwrap();
        assert!(expand_sweep(&Scenario::default(), &[invalid]).is_err());
    }
}
