//! Vacuum homodyne quadrature model.
//!
//! Samples are `N(0, σ²)` with unknown `σ`. With a flat prior on `σ` the
//! posterior depends on the data through `(n, X = Σ x²)` only. Consecutive
//! samples are paired and split Box-Muller style into a radial variable
//! `u₁ = exp(-s / 2σ²)` (`s = x₁² + x₂²`), which depends on `σ` and goes
//! through the acceptance test, and an angular variable `u₂` that does not
//! depend on `σ` and is binned directly.

use crate::model::{Channel, Conversion, MeasurementModel, ModelKind, Outcome, SufficientStats};
use crate::rng::SampleSource;
use crate::special::{self, reg_gamma_pq};
use crate::{CompensatedSum, Error, Real, Result};

/// `(n, X)` with `X = Σ x²`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HomodyneStats<T> {
    n: usize,
    sum_sq: CompensatedSum<T>,
}

impl<T: Real> HomodyneStats<T> {
    pub fn from_samples(samples: &[T]) -> Self {
        samples.iter().fold(Self::default(), |s, &x| s.update(x))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sum_sq(&self) -> T {
        self.sum_sq.value()
    }

    pub fn update(&self, x: T) -> Self {
        let mut out = *self;
        out.n += 1;
        out.sum_sq.add(x * x);
        out
    }
}

impl<T: Real> SufficientStats<T> for HomodyneStats<T> {
    fn count(&self) -> usize {
        self.n
    }

    fn merge(&self, other: &Self) -> Self {
        HomodyneStats {
            n: self.n + other.n,
            sum_sq: self.sum_sq.merge(&other.sum_sq),
        }
    }
}

/// Posterior over `σ` under a flat prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomodynePosterior<T> {
    pub n: usize,
    pub sum_sq: T,
}

impl<T: Real> HomodynePosterior<T> {
    pub fn from_stats(stats: &HomodyneStats<T>) -> Result<Self> {
        if stats.n < 2 {
            return Err(Error::InsufficientData {
                op: "homodyne posterior",
                needed: 2,
                have: stats.n,
            });
        }
        let x = stats.sum_sq();
        if !(x > T::zero()) {
            return Err(Error::domain("homodyne posterior", "all samples are zero"));
        }
        Ok(HomodynePosterior { n: stats.n, sum_sq: x })
    }

    /// Gamma shape `(n - 1) / 2` of `X / 2σ²`.
    pub fn shape(&self) -> T {
        T::count(self.n - 1) * T::lit(0.5)
    }

    pub fn mode(&self) -> T {
        (self.sum_sq / T::count(self.n)).sqrt()
    }

    pub fn log_density(&self, sigma: T) -> Result<T> {
        if !(sigma > T::zero()) {
            return Ok(T::neg_infinity());
        }
        let k = self.shape();
        let n = T::count(self.n);
        Ok(k * self.sum_sq.ln()
            - self.sum_sq / (T::lit(2.0) * sigma * sigma)
            - (k - T::one()) * T::LN_2()
            - special::log_gamma(k)?
            - n * sigma.ln())
    }

    pub fn density(&self, sigma: T) -> Result<T> {
        self.log_density(sigma).map(T::exp)
    }
}

/// Two consecutive quadrature samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePair<T> {
    pub x1: T,
    pub x2: T,
}

impl<T: Real> SamplePair<T> {
    pub fn new(x1: T, x2: T) -> Self {
        SamplePair { x1, x2 }
    }

    /// `x₁² + x₂²`.
    pub fn s(&self) -> T {
        self.x1 * self.x1 + self.x2 * self.x2
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.s() > T::zero())
    }

    fn checked_s(&self, op: &'static str) -> Result<T> {
        let s = self.s();
        if !(s > T::zero()) || !s.is_finite() {
            return Err(Error::domain(op, "degenerate pair with x1 = x2 = 0"));
        }
        Ok(s)
    }
}

/// Consecutive non-overlapping pairs; returns them with the number of
/// trailing samples dropped (0 or 1). Degenerate pairs are kept and can be
/// recognised with [`SamplePair::is_degenerate`].
pub fn pair_samples<T: Real>(samples: &[T]) -> (Vec<SamplePair<T>>, usize) {
    let chunks = samples.chunks_exact(2);
    let dropped = chunks.remainder().len();
    let pairs = chunks.map(|c| SamplePair::new(c[0], c[1])).collect();
    (pairs, dropped)
}

/// Parameter-free angular variable in [0, 1):
/// `((atan2(x₂, x₁) + π) / 2π) mod 1`.
pub fn u2<T: Real>(pair: &SamplePair<T>) -> Result<T> {
    pair.checked_s("homodyne u2")?;
    let u = (pair.x2.atan2(pair.x1) + T::PI()) / T::TAU();
    Ok(if u >= T::one() { u - T::one() } else { u })
}

/// Radial variable `exp(-s / 2σ²)`.
pub fn u1<T: Real>(pair: &SamplePair<T>, sigma: T) -> Result<T> {
    if !(sigma > T::zero()) {
        return Err(Error::domain("homodyne u1", format!("sigma = {sigma:?}")));
    }
    let s = pair.checked_s("homodyne u1")?;
    Ok((-s / (T::lit(2.0) * sigma * sigma)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HomodyneModel<T> {
    _scalar: std::marker::PhantomData<T>,
}

impl<T: Real> HomodyneModel<T> {
    pub fn new() -> Self {
        HomodyneModel {
            _scalar: std::marker::PhantomData,
        }
    }

    /// `N(0, σ²)` density.
    pub fn pdf(&self, x: T, sigma: T) -> Result<T> {
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(Error::domain("homodyne pdf", format!("sigma = {sigma:?}")));
        }
        let z = x / sigma;
        Ok((-(z * z) * T::lit(0.5)).exp() / (sigma * T::TAU().sqrt()))
    }

    /// Maximum likelihood variance `X / n`.
    pub fn mle(&self, stats: &HomodyneStats<T>) -> Result<T> {
        if stats.n == 0 {
            return Err(Error::InsufficientData {
                op: "homodyne mle",
                needed: 1,
                have: 0,
            });
        }
        Ok(stats.sum_sq() / T::count(stats.n))
    }

    pub fn posterior(&self, stats: &HomodyneStats<T>) -> Result<HomodynePosterior<T>> {
        HomodynePosterior::from_stats(stats)
    }

    pub fn posterior_density(&self, sigma: T, stats: &HomodyneStats<T>) -> Result<T> {
        self.posterior(stats)?.density(sigma)
    }

    /// Density of `u₁` for one pair under the posterior.
    pub fn g_u1(&self, u: T, pair: &SamplePair<T>, stats: &HomodyneStats<T>) -> Result<T> {
        let post = self.posterior(stats)?;
        let s = pair.checked_s("homodyne g_u1")?;
        if u.is_nan() || u < T::zero() || u > T::one() {
            return Err(Error::domain("homodyne g_u1", format!("u = {u:?}")));
        }
        if u == T::zero() || u == T::one() {
            return Ok(T::zero());
        }
        let k = post.shape();
        let r = post.sum_sq / s;
        let t = -u.ln();
        let log_g = k * r.ln() + (k - T::one()) * t.ln() - (r - T::one()) * t
            - special::log_gamma(k)?;
        Ok(log_g.exp())
    }

    /// Posterior probability of `u₁` in each of `bins` equal sub-intervals.
    ///
    /// `-ln u₁` is decreasing in `u₁`, so bin `j` (1-based) maps to the
    /// gamma interval `[r·(-ln(j/N)), r·(-ln((j-1)/N))]`, `r = X / s`.
    pub fn bin_probabilities_u1(
        &self,
        pair: &SamplePair<T>,
        bins: usize,
        stats: &HomodyneStats<T>,
    ) -> Result<Vec<T>> {
        if bins < 2 {
            return Err(Error::contract(
                "homodyne bin_probabilities_u1",
                "need at least 2 bins",
            ));
        }
        let post = self.posterior(stats)?;
        let s = pair.checked_s("homodyne bin_probabilities_u1")?;
        let k = post.shape();
        let r = post.sum_sq / s;
        let nf = T::count(bins);
        // Walk from the top bin (gamma argument 0) downwards so each edge is
        // evaluated once.
        let mut probs = vec![T::zero(); bins];
        let mut lo_x = T::zero();
        let mut lo = (T::zero(), T::one());
        for j in (1..=bins).rev() {
            let hi_x = if j == 1 {
                T::infinity()
            } else {
                -r * (T::count(j - 1) / nf).ln()
            };
            let hi = reg_gamma_pq(k, hi_x)?;
            probs[j - 1] = special::diff_from_pq(k, lo_x, lo, hi);
            lo_x = hi_x;
            lo = hi;
        }
        Ok(probs)
    }

    /// `n` samples `v + e` with `v ~ N(0, σ_vac²)` and `e ~ N(0, σ_e²)` drawn
    /// as two independent sets from one seeded stream.
    pub fn simulate(&self, n: usize, sigma_vac: T, sigma_e: T, seed: u64) -> Result<Vec<T>> {
        if !(sigma_vac > T::zero()) || !sigma_vac.is_finite() {
            return Err(Error::domain(
                "homodyne simulate",
                format!("sigma_vac = {sigma_vac:?}"),
            ));
        }
        if !(sigma_e >= T::zero()) || !sigma_e.is_finite() {
            return Err(Error::domain(
                "homodyne simulate",
                format!("sigma_e = {sigma_e:?}"),
            ));
        }
        let sv = sigma_vac.to_f64().unwrap_or(f64::NAN);
        let se = sigma_e.to_f64().unwrap_or(f64::NAN);
        let mut src = SampleSource::new(seed);
        let vacuum: Vec<f64> = (0..n).map(|_| sv * src.std_normal()).collect();
        let samples = vacuum
            .into_iter()
            .map(|v| T::lit(v + se * src.std_normal()))
            .collect();
        Ok(samples)
    }
}

fn angle_bin<T: Real>(u: T, bins: usize) -> usize {
    (u * T::count(bins))
        .floor()
        .to_usize()
        .unwrap_or(0)
        .min(bins - 1)
}

impl<T: Real> MeasurementModel<T> for HomodyneModel<T> {
    type Stats = HomodyneStats<T>;

    fn kind(&self) -> ModelKind {
        ModelKind::Homodyne
    }

    fn observe(&self, stats: &mut HomodyneStats<T>, x: T) -> Result<()> {
        if !x.is_finite() {
            return Err(Error::domain("homodyne update", format!("sample {x:?}")));
        }
        *stats = stats.update(x);
        Ok(())
    }

    /// Variance estimate `σ̂²`.
    fn point_estimate(&self, stats: &HomodyneStats<T>) -> Result<T> {
        self.mle(stats)
    }

    fn quantile(&self, variance: T, u: T) -> T {
        special::std_normal_quantile(u).unwrap_or(T::nan()) * variance.sqrt()
    }

    fn posterior_ready(&self, stats: &HomodyneStats<T>) -> bool {
        stats.n >= 2 && stats.sum_sq() > T::zero()
    }

    fn min_posterior_count(&self) -> usize {
        2
    }

    fn unit_len(&self) -> usize {
        2
    }

    fn convert_unit(
        &self,
        unit: &[T],
        stats: &HomodyneStats<T>,
        bins: usize,
    ) -> Result<Vec<Conversion<T>>> {
        let pair = SamplePair::new(unit[0], unit[1]);
        if pair.is_degenerate() {
            return Ok(vec![
                Conversion {
                    channel: Channel::Radius,
                    outcome: Outcome::Rejected,
                },
                Conversion {
                    channel: Channel::Angle,
                    outcome: Outcome::Rejected,
                },
            ]);
        }
        let radius = if self.posterior_ready(stats) {
            Outcome::Probabilities(self.bin_probabilities_u1(&pair, bins, stats)?)
        } else {
            Outcome::Rejected
        };
        let angle = Outcome::Exact(angle_bin(u2(&pair)?, bins));
        Ok(vec![
            Conversion {
                channel: Channel::Radius,
                outcome: radius,
            },
            Conversion {
                channel: Channel::Angle,
                outcome: angle,
            },
        ])
    }
}
