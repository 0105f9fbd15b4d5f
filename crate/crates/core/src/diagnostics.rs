//! Uniformity and bias measures for symbol streams and bin pmfs.

use std::fmt::Write as _;

use crate::binning::SymbolStream;
use crate::special;
use crate::{Error, Real, Result};

/// Symbol counts over `2^b` bins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolHistogram {
    pub counts: Vec<u64>,
    pub total: u64,
}

impl SymbolHistogram {
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::contract("SymbolHistogram", "need at least 2 bins"));
        }
        let total = counts.iter().sum();
        Ok(SymbolHistogram { counts, total })
    }

    pub fn from_symbols(symbols: &[u32], bit_depth: u32) -> Result<Self> {
        if !(1..=16).contains(&bit_depth) {
            return Err(Error::contract(
                "SymbolHistogram",
                format!("bit depth {bit_depth} outside 1..=16"),
            ));
        }
        let mut counts = vec![0u64; 1 << bit_depth];
        for &s in symbols {
            let slot = counts.get_mut(s as usize).ok_or_else(|| {
                Error::contract(
                    "SymbolHistogram",
                    format!("symbol {s} does not fit in {bit_depth} bits"),
                )
            })?;
            *slot += 1;
        }
        Self::from_counts(counts)
    }

    pub fn from_stream(stream: &SymbolStream) -> Result<Self> {
        Self::from_symbols(&stream.symbols, stream.bit_depth)
    }

    pub fn bin_count(&self) -> usize {
        self.counts.len()
    }

    /// Plug-in probabilities.
    pub fn pmf(&self) -> Result<Vec<f64>> {
        if self.total == 0 {
            return Err(Error::InsufficientData {
                op: "histogram pmf",
                needed: 1,
                have: 0,
            });
        }
        let t = self.total as f64;
        Ok(self.counts.iter().map(|&c| c as f64 / t).collect())
    }

    /// `bin,count,probability` rows with a header line.
    pub fn to_csv(&self) -> String {
        let t = self.total.max(1) as f64;
        let mut out = String::from("bin,count,probability\n");
        for (j, &c) in self.counts.iter().enumerate() {
            let _ = writeln!(out, "{j},{c},{}", c as f64 / t);
        }
        out
    }
}

fn entropy_bits(pmf: &[f64]) -> f64 {
    -pmf.iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}

/// Total Shannon entropy of the histogram, in bits.
pub fn shannon_entropy_bits(hist: &SymbolHistogram) -> Result<f64> {
    Ok(entropy_bits(&hist.pmf()?))
}

/// Shannon entropy divided by `log₂ N`: 1 for an exactly uniform histogram.
pub fn shannon_entropy_per_bit(hist: &SymbolHistogram) -> Result<f64> {
    let h = shannon_entropy_bits(hist)?;
    Ok(h / (hist.bin_count() as f64).log2())
}

/// `D_KL(p || U(N))` in bits, for a pmf normalized to within `1e-9`.
pub fn kl_to_uniform<T: Real>(pmf: &[T]) -> Result<T> {
    if pmf.len() < 2 {
        return Err(Error::contract("kl_to_uniform", "need at least 2 bins"));
    }
    let sum: T = pmf.iter().copied().sum();
    if !((sum - T::one()).abs() <= T::lit(1e-9)) || pmf.iter().any(|&p| p < T::zero()) {
        return Err(Error::Normalization {
            sum: sum.to_f64().unwrap_or(f64::NAN),
        });
    }
    let n = T::count(pmf.len());
    let kl = pmf
        .iter()
        .filter(|&&p| p > T::zero())
        .map(|&p| p * (p * n).log2())
        .fold(T::zero(), |a, b| a + b);
    Ok(kl.max(T::zero()))
}

pub fn kl_to_uniform_hist(hist: &SymbolHistogram) -> Result<f64> {
    kl_to_uniform(&hist.pmf()?)
}

/// Pmf of exponential data with rate `theta_used` over the `n` bins that are
/// equiprobable at rate `theta_true`:
/// `p_i = ((N-i)/N)^r - ((N-i-1)/N)^r`, `r = theta_used / theta_true`.
pub fn mismatch_pmf<T: Real>(theta_used: T, theta_true: T, n: usize) -> Result<Vec<T>> {
    if !(theta_used > T::zero()) || !(theta_true > T::zero()) {
        return Err(Error::domain(
            "mismatch_pmf",
            format!("rates must be positive, got {theta_used:?} and {theta_true:?}"),
        ));
    }
    if n < 2 {
        return Err(Error::contract("mismatch_pmf", "need at least 2 bins"));
    }
    let r = theta_used / theta_true;
    let nf = T::count(n);
    Ok((0..n)
        .map(|i| {
            let hi = T::count(n - i) / nf;
            let lo = T::count(n - i - 1) / nf;
            hi.powf(r) - lo.powf(r)
        })
        .collect())
}

/// Pmfs and KL divergences for the rate mismatch example at `N = 4`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasDemo {
    pub theta_low: f64,
    pub theta_high: f64,
    /// Rate `theta_low` used while `theta_high` is true.
    pub underestimated: Vec<f64>,
    /// Rate `theta_high` used while `theta_low` is true.
    pub overestimated: Vec<f64>,
    pub kl_underestimated_bits: f64,
    pub kl_overestimated_bits: f64,
}

impl BiasDemo {
    pub fn to_csv(&self) -> String {
        let n = self.underestimated.len();
        let mut out = String::from("bin,uniform,underestimated,overestimated\n");
        for k in 0..n {
            let _ = writeln!(
                out,
                "{k},{},{},{}",
                1.0 / n as f64,
                self.underestimated[k],
                self.overestimated[k]
            );
        }
        out
    }
}

pub fn bias_demo() -> BiasDemo {
    bias_demo_with(1.8, 2.0, 4).expect("fixed demo parameters are valid")
}

pub fn bias_demo_with(theta_low: f64, theta_high: f64, n: usize) -> Result<BiasDemo> {
    let underestimated = mismatch_pmf(theta_low, theta_high, n)?;
    let overestimated = mismatch_pmf(theta_high, theta_low, n)?;
    Ok(BiasDemo {
        theta_low,
        theta_high,
        kl_underestimated_bits: kl_to_uniform(&underestimated)?,
        kl_overestimated_bits: kl_to_uniform(&overestimated)?,
        underestimated,
        overestimated,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square test of the histogram against the uniform
/// distribution. Requires at least 5 expected counts per bin.
pub fn chi_square_uniformity(hist: &SymbolHistogram) -> Result<ChiSquare> {
    let n = hist.bin_count();
    let needed = 5 * n;
    if (hist.total as usize) < needed {
        return Err(Error::InsufficientData {
            op: "chi_square_uniformity",
            needed,
            have: hist.total as usize,
        });
    }
    let expected = hist.total as f64 / n as f64;
    let statistic: f64 = hist
        .counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    let dof = n - 1;
    let p_value = special::reg_upper_incomplete_gamma(dof as f64 / 2.0, statistic / 2.0)?;
    Ok(ChiSquare {
        statistic,
        dof,
        p_value,
    })
}

/// Headline numbers for one symbol stream.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub bit_depth: u32,
    pub entropy_per_bit: f64,
    pub entropy_bits: f64,
    pub kl_to_uniform_bits: f64,
    pub acceptance_fraction: f64,
    pub accepted: usize,
    pub total_input: usize,
    /// `None` when the stream is too short for the chi-square rule of thumb.
    pub chi_square: Option<ChiSquare>,
}

impl DiagnosticsReport {
    /// Report for a stream; an empty stream yields zero entropy and no
    /// chi-square result.
    pub fn from_stream(stream: &SymbolStream) -> Result<Self> {
        let hist = SymbolHistogram::from_stream(stream)?;
        Self::from_histogram(&hist, stream.bit_depth, stream.total_input)
    }

    pub fn from_histogram(hist: &SymbolHistogram, bit_depth: u32, total_input: usize) -> Result<Self> {
        let accepted = hist.total as usize;
        let (entropy_bits, entropy_per_bit, kl) = if hist.total == 0 {
            (0.0, 0.0, 0.0)
        } else {
            (
                shannon_entropy_bits(hist)?,
                shannon_entropy_per_bit(hist)?,
                kl_to_uniform_hist(hist)?,
            )
        };
        let chi_square = match chi_square_uniformity(hist) {
            Ok(c) => Some(c),
            Err(Error::InsufficientData { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok(DiagnosticsReport {
            bit_depth,
            entropy_per_bit,
            entropy_bits,
            kl_to_uniform_bits: kl,
            acceptance_fraction: if total_input == 0 {
                0.0
            } else {
                accepted as f64 / total_input as f64
            },
            accepted,
            total_input,
            chi_square,
        })
    }
}
