//! Disturbance signals injected into the acceleration rows.
//!
//! Every generator is a pure function of `(spec, seed, t)`: sampled noise is
//! drawn from a ChaCha stream keyed by the hold-interval index, so RK4
//! sub-steps inside one interval see the same value and any interval can be
//! evaluated without replaying the ones before it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vehicle_model::DisturbanceVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RampTail {
    /// The ramp switches off after its end time.
    #[default]
    Zero,
    /// The ramp holds its end value.
    Hold,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseKind {
    Gaussian {
        sigma: f64,
    },
    Uniform {
        low: f64,
        high: f64,
    },
    /// White sequence of variance `power / sample_time`, updated every
    /// `sample_time` seconds.
    BandLimited {
        power: f64,
        sample_time: f64,
    },
}

fn zero() -> f64 {
    0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DisturbanceSpec {
    None,
    Sinusoid {
        amplitude: f64,
        /// rad/s
        frequency: f64,
        #[serde(default = "zero")]
        phase: f64,
    },
    Step {
        value: f64,
        onset: f64,
    },
    /// `offset + slope·t` on `[start, end]`, zero before `start`.
    Ramp {
        offset: f64,
        slope: f64,
        #[serde(default = "zero")]
        start: f64,
        end: f64,
        #[serde(default)]
        tail: RampTail,
    },
    /// Piecewise-constant noise re-sampled every `hold` seconds.
    Noise {
        noise: NoiseKind,
        hold: f64,
        /// Derived from the scenario's master seed when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

impl DisturbanceSpec {
    pub fn validate(&self, channel: &str) -> Result<()> {
        let fail = |m: &str| {
            Err(Error::InvalidScenario(format!(
                "disturbances.{channel}: {m}"
            )))
        };
        let finite = |vs: &[f64]| vs.iter().all(|v| v.is_finite());
        match *self {
            DisturbanceSpec::None => Ok(()),
            DisturbanceSpec::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => {
                if finite(&[amplitude, frequency, phase]) {
                    Ok(())
                } else {
                    fail("sinusoid parameters must be finite")
                }
            }
            DisturbanceSpec::Step { value, onset } => {
                if finite(&[value, onset]) {
                    Ok(())
                } else {
                    fail("step parameters must be finite")
                }
            }
            DisturbanceSpec::Ramp {
                offset,
                slope,
                start,
                end,
                ..
            } => {
                if !finite(&[offset, slope, start, end]) {
                    fail("ramp parameters must be finite")
                } else if end < start {
                    fail("ramp end time must not precede its start")
                } else {
                    Ok(())
                }
            }
            DisturbanceSpec::Noise { noise, hold, .. } => {
                if !(hold.is_finite() && hold > 0.0) {
                    return fail("hold interval must be > 0");
                }
                match noise {
                    NoiseKind::Gaussian { sigma } if !(sigma.is_finite() && sigma >= 0.0) => {
                        fail("gaussian sigma must be >= 0")
                    }
                    NoiseKind::Uniform { low, high } if !(finite(&[low, high]) && low <= high) => {
                        fail("uniform bounds must satisfy low <= high")
                    }
                    NoiseKind::BandLimited { power, sample_time }
                        if !(power.is_finite()
                            && power >= 0.0
                            && sample_time.is_finite()
                            && sample_time > 0.0) =>
                    {
                        fail("band-limited noise needs power >= 0 and sample_time > 0")
                    }
                    _ => Ok(()),
                }
            }
        }
    }

    /// Fills in a missing noise seed.
    pub fn with_resolved_seed(self, fallback: u64) -> Self {
        match self {
            DisturbanceSpec::Noise {
                noise,
                hold,
                seed: None,
            } => DisturbanceSpec::Noise {
                noise,
                hold,
                seed: Some(fallback),
            },
            other => other,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            DisturbanceSpec::Noise { seed, .. } => *seed,
            _ => None,
        }
    }
}

/// Sample-and-hold noise source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseStream {
    pub kind: NoiseKind,
    pub seed: u64,
    pub hold: f64,
}

impl NoiseStream {
    fn draw(&self, stream: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        match self.kind {
            NoiseKind::Gaussian { sigma } => {
                if sigma == 0.0 {
                    return 0.0;
                }
                Normal::new(0.0, sigma)
                    .expect("validated sigma")
                    .sample(&mut rng)
            }
            NoiseKind::Uniform { low, high } => {
                if low == high {
                    return low;
                }
                Uniform::new_inclusive(low, high)
                    .expect("validated bounds")
                    .sample(&mut rng)
            }
            NoiseKind::BandLimited { power, sample_time } => {
                if power == 0.0 {
                    return 0.0;
                }
                Normal::new(0.0, (power / sample_time).sqrt())
                    .expect("validated power")
                    .sample(&mut rng)
            }
        }
    }

    /// Value held on `[k·hold, (k+1)·hold)`.
    pub fn boundary_value(&self, k: u64) -> f64 {
        match self.kind {
            NoiseKind::BandLimited { sample_time, .. } => {
                // Sample the inner white sequence at the outer boundary.
                let t = k as f64 * self.hold;
                let inner = (t / sample_time + 1e-9).floor() as u64;
                self.draw(inner)
            }
            _ => self.draw(k),
        }
    }

    pub fn interval_index(&self, t: f64) -> u64 {
        (t.max(0.0) / self.hold).floor() as u64
    }

    pub fn value_at(&self, t: f64) -> f64 {
        self.boundary_value(self.interval_index(t))
    }
}

/// Builds the piecewise-constant noise source for one channel.
pub fn seeded_noise_stream(kind: NoiseKind, seed: u64, hold: f64) -> NoiseStream {
    NoiseStream { kind, seed, hold }
}

/// Evaluates a disturbance at time `t`. `stream` must be the source built
/// from the same spec for noise variants and is ignored otherwise.
pub fn evaluate_disturbance(spec: &DisturbanceSpec, t: f64, stream: Option<&NoiseStream>) -> f64 {
    match *spec {
        DisturbanceSpec::None => 0.0,
        DisturbanceSpec::Sinusoid {
            amplitude,
            frequency,
            phase,
        } => amplitude * (frequency * t + phase).sin(),
        DisturbanceSpec::Step { value, onset } => {
            if t >= onset {
                value
            } else {
                0.0
            }
        }
        DisturbanceSpec::Ramp {
            offset,
            slope,
            start,
            end,
            tail,
        } => {
            if t < start {
                0.0
            } else if t <= end {
                offset + slope * t
            } else {
                match tail {
                    RampTail::Zero => 0.0,
                    RampTail::Hold => offset + slope * end,
                }
            }
        }
        DisturbanceSpec::Noise { noise, hold, seed } => match stream {
            Some(s) => s.value_at(t),
            None => seeded_noise_stream(noise, seed.unwrap_or(0), hold).value_at(t),
        },
    }
}

/// One disturbance source per channel, in roll, pitch, yaw, x, y, z order.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceSet {
    specs: [DisturbanceSpec; 6],
    streams: [Option<NoiseStream>; 6],
}

impl DisturbanceSet {
    /// Seeds must already be resolved; unresolved noise seeds fall back to 0.
    pub fn new(specs: [DisturbanceSpec; 6]) -> Self {
        let streams = specs.map(|s| match s {
            DisturbanceSpec::Noise { noise, hold, seed } => {
                Some(seeded_noise_stream(noise, seed.unwrap_or(0), hold))
            }
            _ => None,
        });
        Self { specs, streams }
    }

    pub fn silent() -> Self {
        Self::new([DisturbanceSpec::None; 6])
    }

    pub fn evaluate(&self, t: f64) -> DisturbanceVector {
        let mut out = [0.0; 6];
        for (i, v) in out.iter_mut().enumerate() {
            *v = evaluate_disturbance(&self.specs[i], t, self.streams[i].as_ref());
        }
        DisturbanceVector::from_array(out)
    }
}
