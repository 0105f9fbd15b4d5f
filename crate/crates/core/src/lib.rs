//! Conversion of continuous quantum-RNG measurement records into uniformly
//! distributed symbols.
//!
//! Two conversion methods are provided side by side:
//!
//! * **conventional**: estimate the model parameter by maximum likelihood and
//!   cut the measurement axis into equiprobable bins under that estimate;
//! * **bayesian**: keep the full posterior over the parameter, push it through
//!   the probability integral transform of each measurement and only accept a
//!   measurement when one fixed-width bin holds at least `P_a` of the
//!   resulting mass.
//!
//! Two measurement models are implemented: photon time-of-arrival
//! ([`toa`]) and vacuum homodyne quadrature ([`homodyne`]). The numerics are
//! generic over the scalar type through [`Real`]; the `*64` aliases at the
//! crate root pin everything to `f64`, which is what the accuracy contract in
//! [`special::EvalDomain`] is stated for.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod binning;
pub mod diagnostics;
mod error;
pub mod homodyne;
pub mod model;
mod rng;
pub mod special;
mod sum;
pub mod toa;

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive};

pub use binning::{
    accept_reject, assign_conventional, equiprobable_edges, pack_bits, run_online, run_pipeline,
    run_with_parameter, unpack_bits, BinAssignment, BinningConfig, Method, PipelineOutput,
    SymbolStream,
};
pub use diagnostics::{DiagnosticsReport, SymbolHistogram};
pub use error::{Error, Result};
pub use model::{Channel, MeasurementModel, MeasurementRecord, ModelKind, SufficientStats};
pub use sum::CompensatedSum;

/// Floating-point scalar the library is generic over (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// Converts a count into this scalar type.
    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }
}

impl<T> Real for T where
    T: Float + FloatConst + FromPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
}

pub type ToaModel64 = toa::ToaModel<f64>;
pub type ToaConfig64 = toa::ToaConfig<f64>;
pub type ToaStats64 = toa::ToaStats<f64>;
pub type ToaPosterior64 = toa::ToaPosterior<f64>;
pub type HomodyneModel64 = homodyne::HomodyneModel<f64>;
pub type HomodyneStats64 = homodyne::HomodyneStats<f64>;
pub type HomodynePosterior64 = homodyne::HomodynePosterior<f64>;
pub type SamplePair64 = homodyne::SamplePair<f64>;
pub type BinningConfig64 = BinningConfig<f64>;
pub type BinAssignment64 = BinAssignment<f64>;
pub type MeasurementRecord64 = MeasurementRecord<f64>;
pub type EvalDomain64 = special::EvalDomain<f64>;
