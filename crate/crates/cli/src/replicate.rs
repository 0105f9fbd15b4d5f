//! Desk-scale replication of the reference time-of-arrival experiment and
//! the simulated homodyne experiment.

use std::fmt::Write as _;

use anyhow::Result;
use bayesbin::diagnostics::DiagnosticsReport;
use bayesbin::{
    run_pipeline, run_with_parameter, BinningConfig64, Channel, HomodyneModel64,
    MeasurementRecord64, Method, ModelKind, SymbolHistogram, ToaConfig64, ToaModel64,
};
use serde::Serialize;

use crate::config::{REFERENCE_TAU_A, REFERENCE_THETA};

pub const TOA_FILTERED: usize = 221_890;
pub const TOA_RAW: usize = 256_000;
pub const TOA_BITS: [u32; 3] = [4, 7, 8];
pub const HOMODYNE_SAMPLES: usize = 50_000;
pub const HOMODYNE_SIGMA_VAC: f64 = 1.0;
pub const HOMODYNE_SIGMA_E: f64 = 0.1;
pub const HOMODYNE_BITS: [u32; 2] = [6, 7];
pub const ACCEPTANCE_PROB: f64 = 0.95;

/// Reference accepted counts and per-bit entropies `(bits, accepted,
/// bayesian H, conventional H)` of the time-of-arrival experiment.
pub const TOA_REFERENCE: [(u32, usize, f64, f64); 3] = [
    (4, 215_538, 0.999914, 0.999966),
    (7, 172_736, 0.997237, 0.999314),
    (8, 122_927, 0.981067, 0.998070),
];

/// Reference per-bit entropies `(bits, bayesian H)` of the homodyne
/// experiment.
pub const HOMODYNE_REFERENCE: [(u32, f64); 2] = [(6, 0.9945876), (7, 0.8668848)];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub bits: u32,
    /// `bayesian`, `conventional` (at the estimate) or `conventional-true`.
    pub method: &'static str,
    /// `all`, `radius` or `angle`.
    pub stream: &'static str,
    pub total_input: usize,
    pub accepted: usize,
    pub acceptance_fraction: f64,
    pub entropy_per_bit: f64,
    pub kl_to_uniform_bits: f64,
    pub chi_square_p_value: Option<f64>,
    pub reference_accepted: Option<usize>,
    pub reference_entropy_per_bit: Option<f64>,
    /// Symbol counts per bin.
    #[serde(skip)]
    pub counts: Vec<u64>,
}

fn row(
    bits: u32,
    method: &'static str,
    stream: &'static str,
    hist: &SymbolHistogram,
    total_input: usize,
) -> Result<Row> {
    let d = DiagnosticsReport::from_histogram(hist, bits, total_input)?;
    Ok(Row {
        bits,
        method,
        stream,
        total_input,
        accepted: d.accepted,
        acceptance_fraction: d.acceptance_fraction,
        entropy_per_bit: d.entropy_per_bit,
        kl_to_uniform_bits: d.kl_to_uniform_bits,
        chi_square_p_value: d.chi_square.map(|c| c.p_value),
        reference_accepted: None,
        reference_entropy_per_bit: None,
        counts: hist.counts.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AfterpulseCheck {
    pub raw_samples: usize,
    pub afterpulse_fraction: f64,
    pub retained: usize,
    pub removed: usize,
    pub reference_retained: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToaReplication {
    pub seed: u64,
    pub samples: usize,
    pub theta: f64,
    pub tau_a: f64,
    pub acceptance_prob: f64,
    pub theta_mle: f64,
    pub afterpulse: AfterpulseCheck,
    pub rows: Vec<Row>,
}

impl ToaReplication {
    pub fn find(&self, bits: u32, method: &str) -> &Row {
        self.rows
            .iter()
            .find(|r| r.bits == bits && r.method == method)
            .expect("row present for every configured depth and method")
    }
}

pub fn replicate_toa(seed: u64) -> Result<ToaReplication> {
    let model = ToaModel64::new(ToaConfig64::new(REFERENCE_TAU_A, 0.0)?);
    let samples = model.simulate(TOA_FILTERED, REFERENCE_THETA, seed)?;
    let record = MeasurementRecord64::new(ModelKind::Toa, samples);

    let frac = 1.0 - TOA_FILTERED as f64 / TOA_RAW as f64;
    let raw = model.simulate_with_afterpulses(TOA_RAW, REFERENCE_THETA, frac, seed.wrapping_add(1))?;
    let (kept, removed) = model.filter_afterpulse(&raw);
    let afterpulse = AfterpulseCheck {
        raw_samples: TOA_RAW,
        afterpulse_fraction: frac,
        retained: kept.len(),
        removed,
        reference_retained: TOA_FILTERED,
    };

    let mut rows = Vec::new();
    let mut theta_mle = f64::NAN;
    for (bits, ref_acc, ref_bayes, ref_conv) in TOA_REFERENCE {
        let cfg = BinningConfig64::new(bits, ACCEPTANCE_PROB, Method::Bayesian)?;
        let bayes = run_pipeline(&record, &model, &cfg)?;
        let mut r = row(bits, "bayesian", "all", &SymbolHistogram::from_stream(&bayes.stream)?, record.len())?;
        r.reference_accepted = Some(ref_acc);
        r.reference_entropy_per_bit = Some(ref_bayes);
        rows.push(r);

        let cfg = BinningConfig64::new(bits, ACCEPTANCE_PROB, Method::ConventionalMle)?;
        let conv = run_pipeline(&record, &model, &cfg)?;
        theta_mle = conv.parameter.unwrap_or(f64::NAN);
        let mut r = row(bits, "conventional", "all", &SymbolHistogram::from_stream(&conv.stream)?, record.len())?;
        r.reference_accepted = Some(TOA_FILTERED);
        r.reference_entropy_per_bit = Some(ref_conv);
        rows.push(r);

        let truth = run_with_parameter(&record, &model, bits, REFERENCE_THETA)?;
        rows.push(row(
            bits,
            "conventional-true",
            "all",
            &SymbolHistogram::from_stream(&truth.stream)?,
            record.len(),
        )?);
    }
    Ok(ToaReplication {
        seed,
        samples: record.len(),
        theta: REFERENCE_THETA,
        tau_a: REFERENCE_TAU_A,
        acceptance_prob: ACCEPTANCE_PROB,
        theta_mle,
        afterpulse,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomodyneReplication {
    pub seed: u64,
    pub samples: usize,
    pub sigma_vac: f64,
    pub sigma_e: f64,
    pub acceptance_prob: f64,
    pub variance_mle: f64,
    pub rows: Vec<Row>,
}

impl HomodyneReplication {
    pub fn find(&self, bits: u32, method: &str, stream: &str) -> &Row {
        self.rows
            .iter()
            .find(|r| r.bits == bits && r.method == method && r.stream == stream)
            .expect("row present for every configured depth, method and stream")
    }
}

pub fn replicate_homodyne(seed: u64) -> Result<HomodyneReplication> {
    let model = HomodyneModel64::new();
    let samples = model.simulate(HOMODYNE_SAMPLES, HOMODYNE_SIGMA_VAC, HOMODYNE_SIGMA_E, seed)?;
    let record = MeasurementRecord64::new(ModelKind::Homodyne, samples);
    let pairs = record.len() / 2;
    let true_variance = HOMODYNE_SIGMA_VAC.powi(2) + HOMODYNE_SIGMA_E.powi(2);

    let mut rows = Vec::new();
    let mut variance_mle = f64::NAN;
    for (bits, ref_h) in HOMODYNE_REFERENCE {
        let cfg = BinningConfig64::new(bits, ACCEPTANCE_PROB, Method::Bayesian)?;
        let bayes = run_pipeline(&record, &model, &cfg)?;
        let radius = SymbolHistogram::from_symbols(&bayes.symbols_on(Channel::Radius), bits)?;
        let mut r = row(bits, "bayesian", "radius", &radius, pairs)?;
        r.reference_entropy_per_bit = Some(ref_h);
        rows.push(r);
        let angle = SymbolHistogram::from_symbols(&bayes.symbols_on(Channel::Angle), bits)?;
        rows.push(row(bits, "bayesian", "angle", &angle, pairs)?);
        let all = SymbolHistogram::from_stream(&bayes.stream)?;
        rows.push(row(bits, "bayesian", "all", &all, record.len())?);

        let cfg = BinningConfig64::new(bits, ACCEPTANCE_PROB, Method::ConventionalMle)?;
        let conv = run_pipeline(&record, &model, &cfg)?;
        variance_mle = conv.parameter.unwrap_or(f64::NAN);
        rows.push(row(bits, "conventional", "all", &SymbolHistogram::from_stream(&conv.stream)?, record.len())?);

        let truth = run_with_parameter(&record, &model, bits, true_variance)?;
        rows.push(row(
            bits,
            "conventional-true",
            "all",
            &SymbolHistogram::from_stream(&truth.stream)?,
            record.len(),
        )?);
    }
    Ok(HomodyneReplication {
        seed,
        samples: record.len(),
        sigma_vac: HOMODYNE_SIGMA_VAC,
        sigma_e: HOMODYNE_SIGMA_E,
        acceptance_prob: ACCEPTANCE_PROB,
        variance_mle,
        rows,
    })
}

fn fmt_opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_owned(), |v| v.to_string())
}

/// Fixed-width text table of replication rows.
pub fn table(rows: &[Row]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>4}  {:<17} {:<6} {:>8} {:>8} {:>9} {:>10} {:>10} {:>10}",
        "bits", "method", "stream", "total", "accepted", "fraction", "H/bit", "ref acc", "ref H/bit"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:>4}  {:<17} {:<6} {:>8} {:>8} {:>9.6} {:>10.6} {:>10} {:>10}",
            r.bits,
            r.method,
            r.stream,
            r.total_input,
            r.accepted,
            r.acceptance_fraction,
            r.entropy_per_bit,
            fmt_opt(r.reference_accepted),
            fmt_opt(r.reference_entropy_per_bit),
        );
    }
    out
}

pub fn rows_csv(rows: &[Row]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(w.into_inner()?)
}

/// `bin,<method>/<stream>...` probability table for one bit depth.
pub fn histogram_csv(rows: &[Row], bits: u32) -> String {
    let cols: Vec<&Row> = rows.iter().filter(|r| r.bits == bits).collect();
    let mut out = String::from("bin");
    for c in &cols {
        let _ = write!(out, ",{}/{}", c.method, c.stream);
    }
    out.push('\n');
    for j in 0..1usize << bits {
        let _ = write!(out, "{j}");
        for c in &cols {
            let total: u64 = c.counts.iter().sum();
            let p = if total == 0 { 0.0 } else { c.counts[j] as f64 / total as f64 };
            let _ = write!(out, ",{p}");
        }
        out.push('\n');
    }
    out
}
