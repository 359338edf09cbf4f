//! Run configuration and its JSON representation.
//!
//! A scenario file only needs to mention what it changes: the file is merged
//! over the default mission before it is parsed, so a partial `gains.roll`
//! object keeps the remaining roll defaults. Objects carrying a `kind`,
//! `mode` or `type` tag replace the default wholesale instead of merging.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::attitude_control::ChannelGains;
use crate::disturbances::{DisturbanceSpec, NoiseKind, RampTail};
use crate::error::{Error, Result};
use crate::position_control::{desired_trajectory, Trajectory};
use crate::vehicle_model::{PlantState, QuadrotorParams};

pub const SCHEMA_VERSION: u32 = 1;

/// Channel order used for every six-element array in the simulator.
pub const CHANNELS: [&str; 6] = ["roll", "pitch", "yaw", "x", "y", "z"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainSet {
    pub roll: ChannelGains,
    pub pitch: ChannelGains,
    pub yaw: ChannelGains,
    pub x: ChannelGains,
    pub y: ChannelGains,
    pub z: ChannelGains,
}

impl Default for GainSet {
    fn default() -> Self {
        Self {
            roll: ChannelGains::roll(),
            pitch: ChannelGains::pitch(),
            yaw: ChannelGains::yaw(),
            x: ChannelGains::x(),
            y: ChannelGains::y(),
            z: ChannelGains::z(),
        }
    }
}

impl GainSet {
    pub fn as_array(&self) -> [ChannelGains; 6] {
        [self.roll, self.pitch, self.yaw, self.x, self.y, self.z]
    }

    /// Applies `f` to every channel.
    pub fn map(mut self, f: impl Fn(&mut ChannelGains)) -> Self {
        for g in [
            &mut self.roll,
            &mut self.pitch,
            &mut self.yaw,
            &mut self.x,
            &mut self.y,
            &mut self.z,
        ] {
            f(g);
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSpecs {
    pub roll: DisturbanceSpec,
    pub pitch: DisturbanceSpec,
    pub yaw: DisturbanceSpec,
    pub x: DisturbanceSpec,
    pub y: DisturbanceSpec,
    pub z: DisturbanceSpec,
}

impl Default for DisturbanceSpecs {
    fn default() -> Self {
        Self {
            roll: DisturbanceSpec::Noise {
                noise: NoiseKind::Gaussian { sigma: 0.1 },
                hold: 15.0,
                seed: None,
            },
            pitch: DisturbanceSpec::Noise {
                noise: NoiseKind::Uniform {
                    low: -0.1,
                    high: 0.1,
                },
                hold: 15.0,
                seed: None,
            },
            yaw: DisturbanceSpec::Noise {
                noise: NoiseKind::BandLimited {
                    power: 1e-3,
                    sample_time: 0.1,
                },
                hold: 1.0,
                seed: None,
            },
            x: DisturbanceSpec::Sinusoid {
                amplitude: 1.0,
                frequency: 0.1,
                phase: 0.0,
            },
            y: DisturbanceSpec::Step {
                value: 1.0,
                onset: 50.0,
            },
            z: DisturbanceSpec::Ramp {
                offset: 0.1,
                slope: 0.01,
                start: 0.0,
                end: 100.0,
                tail: RampTail::Zero,
            },
        }
    }
}

impl DisturbanceSpecs {
    pub fn none() -> Self {
        Self {
            roll: DisturbanceSpec::None,
            pitch: DisturbanceSpec::None,
            yaw: DisturbanceSpec::None,
            x: DisturbanceSpec::None,
            y: DisturbanceSpec::None,
            z: DisturbanceSpec::None,
        }
    }

    pub fn as_array(&self) -> [DisturbanceSpec; 6] {
        [self.roll, self.pitch, self.yaw, self.x, self.y, self.z]
    }

    pub fn from_array(a: [DisturbanceSpec; 6]) -> Self {
        Self {
            roll: a[0],
            pitch: a[1],
            yaw: a[2],
            x: a[3],
            y: a[4],
            z: a[5],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSettings {
    /// Integration step, s. Must lie in (0, 0.01].
    pub dt: f64,
    pub duration: f64,
    /// Master seed; noise channels without their own seed derive one from it.
    pub seed: u64,
    /// Log every n-th step. Metrics always use every step.
    pub decimation: u32,
    /// `[t0, t1]` for metrics; the whole run when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics_window: Option<[f64; 2]>,
    /// Settle band for position tracking errors, m.
    pub settle_band_position: f64,
    /// Settle band for attitude tracking errors, rad.
    pub settle_band_attitude: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            duration: 120.0,
            seed: 42,
            decimation: 10,
            metrics_window: None,
            settle_band_position: 0.5,
            settle_band_attitude: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Toggles {
    /// Subtract the position disturbance estimates in the virtual controls.
    pub position_do: bool,
    /// Subtract the attitude disturbance estimates in the torque laws.
    pub attitude_do: bool,
    /// Inject the configured disturbances into the plant.
    pub disturbances: bool,
    /// Feed true plant states to the controller and disturbance observers
    /// instead of high-gain observer estimates. Reference mode only.
    pub true_state_feedback: bool,
    pub position_do_model: PositionDoModel,
}

/// Known dynamics the position disturbance observers subtract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositionDoModel {
    /// Thrust through the observed attitude, `f(x̂, U_p)`.
    #[default]
    Thrust,
    /// The requested virtual control, as if attitude tracking were perfect.
    VirtualControl,
}

impl Default for Toggles {
    fn default() -> Self {
        Self {
            position_do: true,
            attitude_do: true,
            disturbances: true,
            true_state_feedback: false,
            position_do_model: PositionDoModel::Thrust,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub params: QuadrotorParams,
    pub gains: GainSet,
    pub trajectory: Trajectory,
    /// Desired yaw, rad.
    pub psi_des: f64,
    pub disturbances: DisturbanceSpecs,
    pub initial_state: PlantState,
    pub sim: SimSettings,
    pub toggles: Toggles,
}

impl Default for Scenario {
    /// The 2-minute spiral climb, starting at rest on the trajectory's first
    /// point, under the full disturbance set.
    fn default() -> Self {
        Self {
            params: QuadrotorParams::default(),
            gains: GainSet::default(),
            trajectory: Trajectory::Spiral,
            psi_des: 0.0,
            disturbances: DisturbanceSpecs::default(),
            initial_state: PlantState::at_rest(desired_trajectory(0.0)),
            sim: SimSettings::default(),
            toggles: Toggles::default(),
        }
    }
}

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (key, value) in p {
                let replaces = value
                    .as_object()
                    .is_some_and(|o| ["kind", "mode", "type"].iter().any(|t| o.contains_key(*t)));
                match b.get_mut(&key) {
                    Some(slot) if !replaces => merge(slot, value),
                    _ => {
                        b.insert(key, value);
                    }
                }
            }
        }
        (slot, value) => *slot = value,
    }
}

impl Scenario {
    /// Parses a (possibly partial) scenario document, fills defaults and
    /// validates the result.
    pub fn from_json_value(patch: Value) -> Result<Self> {
        let mut doc = serde_json::to_value(Scenario::default()).expect("default serialises");
        merge(&mut doc, patch);
        let sc: Scenario =
            serde_json::from_value(doc).map_err(|e| Error::InvalidScenario(e.to_string()))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let v: Value =
            serde_json::from_str(text).map_err(|e| Error::InvalidScenario(e.to_string()))?;
        Self::from_json_value(v)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text).map_err(|e| match e {
            Error::InvalidScenario(m) => Error::InvalidScenario(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        for (name, g) in CHANNELS.iter().zip(self.gains.as_array()) {
            g.validate(name)?;
        }
        for (name, d) in CHANNELS.iter().zip(self.disturbances.as_array()) {
            d.validate(name)?;
        }
        self.trajectory.validate()?;
        let s = &self.sim;
        if !(s.dt > 0.0 && s.dt <= 0.01) {
            return Err(Error::InvalidScenario(format!(
                "sim.dt must lie in (0, 0.01], got {}",
                s.dt
            )));
        }
        for (name, g) in CHANNELS.iter().zip(self.gains.as_array()) {
            if s.dt > 2.0 * g.tau {
                return Err(Error::InvalidScenario(format!(
                    "sim.dt {} exceeds twice gains.{name}.tau ({}); the filter would be unstable",
                    s.dt, g.tau
                )));
            }
        }
        if !(s.duration.is_finite() && s.duration > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "sim.duration must be > 0, got {}",
                s.duration
            )));
        }
        if s.decimation == 0 {
            return Err(Error::InvalidScenario("sim.decimation must be >= 1".into()));
        }
        if let Some([a, b]) = s.metrics_window {
            if !(a.is_finite() && b.is_finite() && a <= b) {
                return Err(Error::InvalidScenario(
                    "sim.metrics_window must be an ordered pair of finite times".into(),
                ));
            }
        }
        if !(s.settle_band_position > 0.0 && s.settle_band_attitude > 0.0) {
            return Err(Error::InvalidScenario("settle bands must be > 0".into()));
        }
        if !self.psi_des.is_finite() {
            return Err(Error::InvalidScenario("psi_des must be finite".into()));
        }
        let x = &self.initial_state.0;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidScenario(
                "initial_state must be finite".into(),
            ));
        }
        let limit = std::f64::consts::FRAC_PI_2;
        if x[0].abs() >= limit || x[2].abs() >= limit {
            return Err(Error::InvalidScenario(
                "initial roll and pitch must lie in (-pi/2, pi/2)".into(),
            ));
        }
        Ok(())
    }

    /// Number of integration steps.
    pub fn steps(&self) -> u64 {
        (self.sim.duration / self.sim.dt).round() as u64
    }

    /// Copy with every noise seed made explicit.
    pub fn resolved(&self) -> Self {
        let mut out = self.clone();
        let specs = self.disturbances.as_array();
        let mut resolved = specs;
        for (i, spec) in specs.iter().enumerate() {
            resolved[i] = spec.with_resolved_seed(derive_seed(self.sim.seed, i));
        }
        out.disturbances = DisturbanceSpecs::from_array(resolved);
        out
    }

    /// SHA-256 over the canonical JSON of the resolved scenario.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(&self.resolved()).expect("scenario serialises");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Per-channel noise seed derived from the master seed (splitmix64 step).
pub fn derive_seed(master: u64, channel: usize) -> u64 {
    let mut z = master.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(channel as u64 + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
