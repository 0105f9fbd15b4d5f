//! The interface between the model-agnostic binning engine and a concrete
//! measurement model.

use std::fmt::Debug;

use rayon::prelude::*;

use crate::{Real, Result};

/// Which physical model a record was produced by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// Photon time-of-arrival intervals, in seconds.
    Toa,
    /// Vacuum homodyne quadrature values, dimensionless.
    Homodyne,
}

impl ModelKind {
    pub fn units(self) -> &'static str {
        match self {
            ModelKind::Toa => "seconds",
            ModelKind::Homodyne => "dimensionless",
        }
    }
}

/// Ordered real-valued samples tagged with the model that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord<T> {
    pub kind: ModelKind,
    pub samples: Vec<T>,
}

impl<T> MeasurementRecord<T> {
    pub fn new(kind: ModelKind, samples: Vec<T>) -> Self {
        MeasurementRecord { kind, samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// The variable a symbol was derived from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    /// The single transformed variable of a one-sample model, or a raw sample
    /// under conventional binning.
    Primary,
    /// Box-Muller radial variable `u₁` (parameter dependent).
    Radius,
    /// Box-Muller angular variable `u₂` (parameter free).
    Angle,
}

impl Channel {
    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Primary => "primary",
            Channel::Radius => "radius",
            Channel::Angle => "angle",
        }
    }
}

/// Commutative monoid summary of a record.
pub trait SufficientStats<T>: Copy + Default + Debug + Send + Sync {
    /// Number of samples folded in.
    fn count(&self) -> usize;
    fn merge(&self, other: &Self) -> Self;
}

/// What a model says about one conversion variable of one unit.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome<T> {
    /// Posterior probability of each of the `N` bins.
    Probabilities(Vec<T>),
    /// Parameter-free variable, already binned.
    Exact(usize),
    /// No conversion possible (degenerate sample or no proper posterior yet).
    Rejected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conversion<T> {
    pub channel: Channel,
    pub outcome: Outcome<T>,
}

const REDUCTION_CHUNK: usize = 1 << 14;

pub trait MeasurementModel<T: Real>: Sync {
    type Stats: SufficientStats<T>;

    fn kind(&self) -> ModelKind;

    /// Folds one sample into `stats`.
    fn observe(&self, stats: &mut Self::Stats, x: T) -> Result<()>;

    /// Sufficient statistics of a whole record. Chunks are reduced in
    /// parallel and merged in a fixed order, so the result does not depend
    /// on thread scheduling.
    fn accumulate(&self, samples: &[T]) -> Result<Self::Stats> {
        let partials = samples
            .par_chunks(REDUCTION_CHUNK)
            .map(|chunk| {
                let mut s = Self::Stats::default();
                for &x in chunk {
                    self.observe(&mut s, x)?;
                }
                Ok(s)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(partials
            .iter()
            .fold(Self::Stats::default(), |acc, s| acc.merge(s)))
    }

    /// Maximum likelihood estimate of the model parameter.
    fn point_estimate(&self, stats: &Self::Stats) -> Result<T>;

    /// Inverse CDF of a single sample at a fixed parameter value.
    fn quantile(&self, param: T, u: T) -> T;

    /// Whether `stats` define a proper posterior.
    fn posterior_ready(&self, stats: &Self::Stats) -> bool;

    /// Minimum statistics count for [`Self::posterior_ready`] to be possible.
    fn min_posterior_count(&self) -> usize;

    /// Number of consecutive samples consumed per conversion unit.
    fn unit_len(&self) -> usize;

    /// Conversions for one unit, in emission order. Posterior-dependent
    /// channels come back as [`Outcome::Rejected`] when `stats` are not
    /// ready yet.
    fn convert_unit(&self, unit: &[T], stats: &Self::Stats, bins: usize)
        -> Result<Vec<Conversion<T>>>;
}
