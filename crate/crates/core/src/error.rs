use thiserror::Error;

use crate::model::ModelKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// An iterative evaluation did not reach its tolerance.
    #[error("{op} did not converge for a = {a}, x = {x}")]
    NonConvergence { op: &'static str, a: f64, x: f64 },

    /// A caller-side precondition was violated.
    #[error("contract violation in {op}: {detail}")]
    Contract { op: &'static str, detail: String },

    /// Not enough data to form an estimate or a proper posterior.
    #[error("insufficient data for {op}: need at least {needed}, have {have}")]
    InsufficientData {
        op: &'static str,
        needed: usize,
        have: usize,
    },

    /// A sample falls below the first conventional bin edge.
    #[error("sample {value} lies below the lowest bin edge {lowest}")]
    OutOfRange { value: f64, lowest: f64 },

    /// Bin probabilities handed to the acceptance test do not sum to one.
    #[error("bin probabilities sum to {sum}, expected 1")]
    Normalization { sum: f64 },

    /// The record was produced for a different measurement model.
    #[error("record holds {record:?} samples but the model is {model:?}")]
    ModelMismatch { record: ModelKind, model: ModelKind },
}

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn contract(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Contract {
            op,
            detail: detail.into(),
        }
    }
}
