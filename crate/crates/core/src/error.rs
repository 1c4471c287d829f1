use thiserror::Error;

use crate::spin::HalfInt;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("angular momentum labels (S={s}, m={m}, m'={mp}) are not admissible")]
    InvalidSpinLabels { s: HalfInt, m: HalfInt, mp: HalfInt },

    #[error("fit rejected: {0}")]
    Fit(String),

    #[error("adaptive integrator step underflow at t={t}: step {step:e} below minimum")]
    StepUnderflow { t: f64, step: f64 },

    #[error("band limit violated: {0}")]
    BandLimit(String),

    #[error("degenerate design: {0}")]
    Degenerate(String),

    #[error("system too large: Liouvillian dimension {0} exceeds the guard")]
    TooLarge(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
