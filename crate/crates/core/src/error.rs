use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate interval [{a}, {b}]")]
    DegenerateInterval { a: f64, b: f64 },

    #[error("time partition invalid: {0}")]
    InvalidTimes(String),

    #[error("block index ({k}, {l}) out of range for {m} time slices")]
    IndexOutOfRange { k: usize, l: usize, m: usize },

    #[error("divergent tail: {0}")]
    DivergentTail(String),

    #[error("non-finite kernel value at ({x}, {y})")]
    NonFiniteKernel { x: f64, y: f64 },

    #[error("near-singular linear system (pivot {pivot:e})")]
    NearSingular { pivot: f64 },

    #[error("series evaluated outside its range: s = {s} > {limit}")]
    SeriesOutOfRange { s: f64, limit: f64 },

    #[error("step size underflow at s = {s} (h = {h:e})")]
    StepSizeUnderflow { s: f64, h: f64 },

    #[error("first integral {which} drifted to {value:e} at s = {s}")]
    FirstIntegralViolation { which: usize, s: f64, value: f64 },

    #[error("tail cutoff not reached before {limit}")]
    TailCutoff { limit: f64 },

    #[error("rejection sampler exhausted {attempts} attempts (acceptance rate {rate:e})")]
    AcceptanceExhausted { attempts: u64, rate: f64 },
}

pub(crate) fn finite(x: f64, what: &'static str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFinite(what))
    }
}
