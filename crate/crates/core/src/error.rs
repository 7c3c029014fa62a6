use thiserror::Error;

/// Errors raised by the gain-switching models.
///
/// Times and values are carried as `f64` regardless of the working scalar so
/// the error type stays non-generic.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("argument {what} = {value:e} outside domain [{lo:e}, {hi:e}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("step size underflow at t = {t:e} s (h = {h:e} s); system too stiff for the configured step floor")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("non-finite state at t = {t:e} s")]
    NonFinite { t: f64 },

    #[error("integrator exceeded {steps} steps before t = {t:e} s")]
    TooManySteps { steps: usize, t: f64 },

    #[error("no finite duration satisfies the slew limit (B = {b} <= 2)")]
    SlewInfeasible { b: f64 },

    #[error("no lasing for given T = {t:e} s")]
    NoLasing { t: f64 },

    #[error("metric undefined: window contains no positive sample")]
    UndefinedMetric,

    #[error("unbounded pulse: signal never falls below half maximum inside the window")]
    UnboundedPulse,

    #[error("sample interval mismatch: {a:e} s vs {b:e} s")]
    SampleIntervalMismatch { a: f64, b: f64 },

    #[error("negative sample {value:e} at index {index}")]
    NegativeSample { index: usize, value: f64 },

    #[error("non-uniform sampling at row {row}")]
    NonUniformSampling { row: usize },

    #[error("zero denominator in efficiency")]
    ZeroPower,

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
