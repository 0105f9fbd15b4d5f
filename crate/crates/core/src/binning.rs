//! Model-agnostic binning: equiprobable edges for the conventional method,
//! the acceptance/rejection test for the Bayesian method, the batch and
//! online pipelines, and bit packing.

use rayon::prelude::*;

use crate::model::{Channel, Conversion, MeasurementModel, MeasurementRecord, Outcome};
use crate::{Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    ConventionalMle,
    Bayesian,
}

/// Bit depth, acceptance probability and conversion method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinningConfig<T> {
    bit_depth: u32,
    acceptance_prob: T,
    method: Method,
}

impl<T: Real> BinningConfig<T> {
    pub const MAX_BIT_DEPTH: u32 = 16;

    /// `acceptance_prob` must lie in (0.5, 1] so that at most one bin can pass.
    pub fn new(bit_depth: u32, acceptance_prob: T, method: Method) -> Result<Self> {
        if !(1..=Self::MAX_BIT_DEPTH).contains(&bit_depth) {
            return Err(Error::contract(
                "BinningConfig",
                format!("bit_depth must be in 1..=16, got {bit_depth}"),
            ));
        }
        check_acceptance_prob(acceptance_prob)?;
        Ok(BinningConfig {
            bit_depth,
            acceptance_prob,
            method,
        })
    }

    pub fn bit_depth(&self) -> u32 {
        self.bit_depth
    }

    pub fn bin_count(&self) -> usize {
        1usize << self.bit_depth
    }

    pub fn acceptance_prob(&self) -> T {
        self.acceptance_prob
    }

    pub fn method(&self) -> Method {
        self.method
    }
}

fn check_acceptance_prob<T: Real>(pa: T) -> Result<()> {
    if !(pa > T::lit(0.5) && pa <= T::one()) {
        return Err(Error::contract(
            "acceptance_prob",
            format!("P_a must be in (0.5, 1], got {pa:?}"),
        ));
    }
    Ok(())
}

/// Per-measurement outcome of the conversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinAssignment<T> {
    /// Index of the (first) sample the conversion variable came from.
    pub measurement_index: usize,
    pub channel: Channel,
    pub bin_index: u32,
    pub bin_probability: T,
    pub accepted: bool,
}

/// Converted symbols in emission order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SymbolStream {
    pub bit_depth: u32,
    pub symbols: Vec<u32>,
    pub total_input: usize,
    pub accepted_count: usize,
}

impl SymbolStream {
    pub fn empty(bit_depth: u32) -> Self {
        SymbolStream {
            bit_depth,
            ..Default::default()
        }
    }

    pub fn acceptance_fraction(&self) -> f64 {
        if self.total_input == 0 {
            0.0
        } else {
            self.accepted_count as f64 / self.total_input as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput<T, S> {
    pub stream: SymbolStream,
    pub assignments: Vec<BinAssignment<T>>,
    pub stats: S,
    /// Parameter used for conventional binning.
    pub parameter: Option<T>,
}

impl<T: Copy, S> PipelineOutput<T, S> {
    /// Accepted symbols that came from one channel, in emission order.
    pub fn symbols_on(&self, channel: Channel) -> Vec<u32> {
        self.assignments
            .iter()
            .filter(|a| a.accepted && a.channel == channel)
            .map(|a| a.bin_index)
            .collect()
    }
}

/// Bin edges `e_k = inverse_cdf(k / n)` for `k = 0..=n`.
pub fn equiprobable_edges<T: Real>(inverse_cdf: impl Fn(T) -> T, n: usize) -> Result<Vec<T>> {
    if n < 2 {
        return Err(Error::contract(
            "equiprobable_edges",
            format!("need at least 2 bins, got {n}"),
        ));
    }
    let nf = T::count(n);
    let edges: Vec<T> = (0..=n).map(|k| inverse_cdf(T::count(k) / nf)).collect();
    let monotone = edges.iter().all(|e| !e.is_nan()) && edges.windows(2).all(|w| w[0] < w[1]);
    if !monotone {
        return Err(Error::contract(
            "equiprobable_edges",
            "inverse CDF samples are not strictly increasing",
        ));
    }
    Ok(edges)
}

/// Index `i` with `e_i <= x < e_{i+1}`; the last bin is closed at `+∞`.
pub fn assign_conventional<T: Real>(x: T, edges: &[T]) -> Result<usize> {
    if edges.len() < 3 {
        return Err(Error::contract("assign_conventional", "need at least 2 bins"));
    }
    if x.is_nan() || x < edges[0] {
        return Err(Error::OutOfRange {
            value: x.to_f64().unwrap_or(f64::NAN),
            lowest: edges[0].to_f64().unwrap_or(f64::NAN),
        });
    }
    let interior = &edges[1..edges.len() - 1];
    Ok(interior.partition_point(|&e| e <= x))
}

/// Result of the acceptance test on one probability vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict<T> {
    pub bin_index: usize,
    pub bin_probability: T,
    pub accepted: bool,
}

/// Picks the most probable bin (lowest index on ties) and accepts it iff its
/// probability reaches `pa`.
pub fn accept_reject<T: Real>(bin_probs: &[T], pa: T) -> Result<Verdict<T>> {
    check_acceptance_prob(pa)?;
    if bin_probs.is_empty() {
        return Err(Error::contract("accept_reject", "empty probability vector"));
    }
    let sum: T = bin_probs.iter().copied().sum();
    if !((sum - T::one()).abs() <= T::lit(1e-6)) {
        return Err(Error::Normalization {
            sum: sum.to_f64().unwrap_or(f64::NAN),
        });
    }
    let mut best = 0;
    for (j, &p) in bin_probs.iter().enumerate().skip(1) {
        if p > bin_probs[best] {
            best = j;
        }
    }
    let p = bin_probs[best];
    Ok(Verdict {
        bin_index: best,
        bin_probability: p,
        accepted: p >= pa,
    })
}

fn settle<T: Real>(
    index: usize,
    conversions: Vec<Conversion<T>>,
    pa: T,
) -> Result<Vec<BinAssignment<T>>> {
    conversions
        .into_iter()
        .map(|c| {
            let (bin_index, bin_probability, accepted) = match c.outcome {
                Outcome::Probabilities(probs) => {
                    let v = accept_reject(&probs, pa)?;
                    (v.bin_index as u32, v.bin_probability, v.accepted)
                }
                Outcome::Exact(bin) => (bin as u32, T::one(), true),
                Outcome::Rejected => (0, T::zero(), false),
            };
            Ok(BinAssignment {
                measurement_index: index,
                channel: c.channel,
                bin_index,
                bin_probability,
                accepted,
            })
        })
        .collect()
}

fn collect_stream<T>(bit_depth: u32, total_input: usize, log: &[BinAssignment<T>]) -> SymbolStream {
    let symbols: Vec<u32> = log
        .iter()
        .filter(|a| a.accepted)
        .map(|a| a.bin_index)
        .collect();
    SymbolStream {
        bit_depth,
        accepted_count: symbols.len(),
        symbols,
        total_input,
    }
}

fn check_kind<T: Real, M: MeasurementModel<T>>(
    record: &MeasurementRecord<T>,
    model: &M,
) -> Result<()> {
    if record.kind != model.kind() {
        return Err(Error::ModelMismatch {
            record: record.kind,
            model: model.kind(),
        });
    }
    Ok(())
}

/// Batch conversion of a whole record.
///
/// Bayesian: statistics over the full record (rejected samples included),
/// then every unit is converted against that one posterior. Conventional:
/// equiprobable bins under the maximum likelihood estimate, every sample is
/// assigned.
pub fn run_pipeline<T: Real, M: MeasurementModel<T>>(
    record: &MeasurementRecord<T>,
    model: &M,
    config: &BinningConfig<T>,
) -> Result<PipelineOutput<T, M::Stats>> {
    check_kind(record, model)?;
    match config.method() {
        Method::ConventionalMle => {
            if record.is_empty() {
                return Ok(PipelineOutput {
                    stream: SymbolStream::empty(config.bit_depth()),
                    assignments: Vec::new(),
                    stats: M::Stats::default(),
                    parameter: None,
                });
            }
            let stats = model.accumulate(&record.samples)?;
            let estimate = model.point_estimate(&stats)?;
            let mut out = run_with_parameter(record, model, config.bit_depth(), estimate)?;
            out.stats = stats;
            Ok(out)
        }
        Method::Bayesian => {
            let stats = model.accumulate(&record.samples)?;
            if !model.posterior_ready(&stats) {
                return Err(Error::InsufficientData {
                    op: "run_pipeline",
                    needed: model.min_posterior_count(),
                    have: record.len(),
                });
            }
            let bins = config.bin_count();
            let pa = config.acceptance_prob();
            let width = model.unit_len();
            let per_unit = record
                .samples
                .par_chunks_exact(width)
                .enumerate()
                .map(|(u, unit)| {
                    let conv = model.convert_unit(unit, &stats, bins)?;
                    settle(u * width, conv, pa)
                })
                .collect::<Result<Vec<_>>>()?;
            let assignments: Vec<_> = per_unit.into_iter().flatten().collect();
            let stream = collect_stream(config.bit_depth(), record.len(), &assignments);
            Ok(PipelineOutput {
                stream,
                assignments,
                stats,
                parameter: None,
            })
        }
    }
}

/// Conventional binning at a caller-supplied parameter value (for example
/// the true simulation parameter).
pub fn run_with_parameter<T: Real, M: MeasurementModel<T>>(
    record: &MeasurementRecord<T>,
    model: &M,
    bit_depth: u32,
    parameter: T,
) -> Result<PipelineOutput<T, M::Stats>> {
    check_kind(record, model)?;
    let config = BinningConfig::new(bit_depth, T::one(), Method::ConventionalMle)?;
    let edges = equiprobable_edges(|u| model.quantile(parameter, u), config.bin_count())?;
    let assignments = record
        .samples
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            assign_conventional(x, &edges).map(|bin| BinAssignment {
                measurement_index: i,
                channel: Channel::Primary,
                bin_index: bin as u32,
                bin_probability: T::one(),
                accepted: true,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let stats = model.accumulate(&record.samples)?;
    let stream = collect_stream(bit_depth, record.len(), &assignments);
    Ok(PipelineOutput {
        stream,
        assignments,
        stats,
        parameter: Some(parameter),
    })
}

/// Sequential conversion where unit `i` is judged against the posterior of
/// units `0..i` only, and then folded into the statistics.
pub fn run_online<T: Real, M: MeasurementModel<T>>(
    record: &MeasurementRecord<T>,
    model: &M,
    config: &BinningConfig<T>,
) -> Result<PipelineOutput<T, M::Stats>> {
    check_kind(record, model)?;
    if config.method() != Method::Bayesian {
        return Err(Error::contract(
            "run_online",
            "online updating only applies to the bayesian method",
        ));
    }
    if record.is_empty() {
        return Err(Error::InsufficientData {
            op: "run_online",
            needed: model.min_posterior_count(),
            have: 0,
        });
    }
    let bins = config.bin_count();
    let pa = config.acceptance_prob();
    let width = model.unit_len();
    let mut stats = M::Stats::default();
    let mut assignments = Vec::new();
    let mut units = record.samples.chunks_exact(width);
    for (u, unit) in units.by_ref().enumerate() {
        let conv = model.convert_unit(unit, &stats, bins)?;
        assignments.extend(settle(u * width, conv, pa)?);
        for &x in unit {
            model.observe(&mut stats, x)?;
        }
    }
    for &x in units.remainder() {
        model.observe(&mut stats, x)?;
    }
    let stream = collect_stream(config.bit_depth(), record.len(), &assignments);
    Ok(PipelineOutput {
        stream,
        assignments,
        stats,
        parameter: None,
    })
}

fn check_bit_depth(op: &'static str, bit_depth: u32) -> Result<()> {
    if !(1..=16).contains(&bit_depth) {
        return Err(Error::contract(
            op,
            format!("bit depth must be in 1..=16, got {bit_depth}"),
        ));
    }
    Ok(())
}

/// Packs `b`-bit symbols MSB first; the final byte is zero-padded on the
/// right.
pub fn pack_bits(stream: &SymbolStream) -> Result<Vec<u8>> {
    let b = stream.bit_depth;
    check_bit_depth("pack_bits", b)?;
    let mut out = Vec::with_capacity((stream.symbols.len() * b as usize).div_ceil(8));
    let mut acc: u32 = 0;
    let mut filled: u32 = 0;
    for &s in &stream.symbols {
        if s >> b != 0 {
            return Err(Error::contract(
                "pack_bits",
                format!("symbol {s} does not fit in {b} bits"),
            ));
        }
        acc = (acc << b) | s;
        filled += b;
        while filled >= 8 {
            filled -= 8;
            out.push((acc >> filled) as u8);
        }
        acc &= (1 << filled) - 1;
    }
    if filled > 0 {
        out.push((acc << (8 - filled)) as u8);
    }
    Ok(out)
}

/// Inverse of [`pack_bits`] for a known symbol count.
pub fn unpack_bits(bytes: &[u8], bit_depth: u32, count: usize) -> Result<Vec<u32>> {
    check_bit_depth("unpack_bits", bit_depth)?;
    let needed = (count * bit_depth as usize).div_ceil(8);
    if bytes.len() < needed {
        return Err(Error::contract(
            "unpack_bits",
            format!("{count} symbols need {needed} bytes, got {}", bytes.len()),
        ));
    }
    let mut out = Vec::with_capacity(count);
    let mut acc: u32 = 0;
    let mut filled: u32 = 0;
    let mut bytes = bytes.iter();
    while out.len() < count {
        while filled < bit_depth {
            acc = (acc << 8) | u32::from(*bytes.next().expect("length checked above"));
            filled += 8;
        }
        filled -= bit_depth;
        out.push((acc >> filled) & ((1 << bit_depth) - 1));
        acc &= (1 << filled) - 1;
    }
    Ok(out)
}
