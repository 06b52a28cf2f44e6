//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} must be finite, got {value}")]
    NonFinite { what: &'static str, value: f64 },

    #[error("sample time must be positive and finite, got {0}")]
    InvalidSampleTime(f64),

    #[error("denominator is zero or empty")]
    ZeroDenominator,

    #[error("improper transfer function: numerator degree {num_deg} exceeds denominator degree {den_deg}")]
    Improper { num_deg: usize, den_deg: usize },

    #[error("sample times differ: {a} s vs {b} s")]
    SampleTimeMismatch { a: f64, b: f64 },

    #[error("frequency {omega} rad/s outside [0, {nyquist}) rad/s")]
    FrequencyOutOfRange { omega: f64, nyquist: f64 },

    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("participation dc gains must sum to 1, got {sum}")]
    ParticipationSum { sum: f64 },

    #[error("a DVPP admits at most one residual participation factor")]
    MultipleResiduals,

    #[error("adaptive participation requires a positive total capacity")]
    ZeroTotalCapacity,

    #[error("capacities must be non-negative, got {0}")]
    NegativeCapacity(f64),

    #[error("saturation interval is inverted: [{lo}, {hi}]")]
    InvertedSaturation { lo: f64, hi: f64 },

    #[error("forward-Euler swing step unstable: T*d/(2H) = {0}, must be < 2")]
    UnstableGrid(f64),

    #[error("non-finite signal '{signal}' at tick {tick} (t = {time} s)")]
    NonFiniteSignal {
        signal: String,
        tick: usize,
        time: f64,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
