use std::path::PathBuf;

/// Everything that can go wrong between loading a scenario and writing its trace.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("attitude guard tripped at t = {t:.6} s (roll {roll:.4} rad, pitch {pitch:.4} rad)")]
    AngleGuard { t: f64, roll: f64, pitch: f64 },

    #[error("thrust extraction denominator U_z + g = {value:.6} m/s^2 is below {limit} m/s^2")]
    DenominatorTooSmall { value: f64, limit: f64 },

    #[error("metrics window [{start}, {end}] contains no samples")]
    EmptyWindow { start: f64, end: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// Errors raised while the closed loop is being integrated, as opposed to
    /// configuration or I/O problems.
    pub fn is_runtime_abort(&self) -> bool {
        matches!(
            self,
            Error::AngleGuard { .. } | Error::DenominatorTooSmall { .. } | Error::NonFinite(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(values: &[f64], what: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
