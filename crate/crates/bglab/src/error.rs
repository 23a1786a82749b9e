//! Crate-wide error type and exit-code mapping.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("packing infeasible: {0}")]
    PackingInfeasible(String),

    #[error("causality violation: event at t = {event_time} behind clock t = {clock}")]
    CausalityViolation { event_time: f64, clock: f64 },

    #[error("penetration detected: pair ({a}, {b}) at distance {distance} with d = {d}")]
    PenetrationDetected {
        a: u32,
        b: u32,
        distance: f64,
        d: f64,
    },

    #[error("tether broken: pair ({a}, {b}) at distance {distance} with d = {d}")]
    TetherBroken {
        a: u32,
        b: u32,
        distance: f64,
        d: f64,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("replay mismatch: {0}")]
    ReplayMismatch(String),

    #[error("data format error: {0}")]
    Format(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code: 2 config error, 3 runtime invariant violation, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParam(_)
            | Error::Config(_)
            | Error::PackingInfeasible(_)
            | Error::GridMismatch(_)
            | Error::InsufficientData(_) => 2,
            Error::CausalityViolation { .. }
            | Error::PenetrationDetected { .. }
            | Error::TetherBroken { .. }
            | Error::ReplayMismatch(_) => 3,
            Error::Format(_) | Error::Io(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
