use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cycle file is empty")]
    EmptyCycle,

    #[error("negative speed {value} at data row {row}")]
    NegativeSpeed { row: usize, value: f64 },

    #[error("non-uniform timestamps at data row {row}: expected {expected} s, found {found} s")]
    NonUniformTimestamps { row: usize, expected: f64, found: f64 },

    #[error("malformed cycle data at row {row}: {message}")]
    MalformedCycle { row: usize, message: String },

    #[error("invalid {what}: {message}")]
    InvalidInput { what: &'static str, message: String },

    #[error("target savings {target:.4} exceeds the achievable maximum {max_achievable:.4} for this cycle")]
    TargetUnreachable { target: f64, max_achievable: f64 },

    #[error("cycle consumes no net energy per repetition ({energy_wh:.3} Wh); range is unbounded")]
    NonPositiveCycleEnergy { energy_wh: f64 },

    #[error("cycle kinds differ: {aev} vs {ev}")]
    CycleKindMismatch { aev: String, ev: String },

    #[error("vehicle brakes at every second of the cycle; no second can absorb auxiliary loads")]
    AllBraking,

    #[error(
        "capacity did not fall to {threshold:.2} within {days} days (final capacity {final_capacity:.5})"
    )]
    DayCapReached {
        days: usize,
        threshold: f64,
        final_capacity: f64,
        partial_curve: Vec<(f64, f64)>,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("unknown bundled {kind} '{name}'")]
    UnknownBundled { kind: &'static str, name: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(what: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidInput {
            what,
            message: message.into(),
        }
    }

    /// True for failures caused by bad user input rather than the numerics.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Error::Numerical(_)
                | Error::DayCapReached { .. }
                | Error::NonPositiveCycleEnergy { .. }
                | Error::TargetUnreachable { .. }
        )
    }
}
