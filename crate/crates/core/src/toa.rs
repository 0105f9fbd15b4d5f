//! Photon time-of-arrival model.
//!
//! Inter-arrival times `τ` follow an exponential law with rate `θ` shifted by
//! the afterpulsing dead time `τ_a`: `f(τ | θ) = θ exp(-θ (τ - τ_a))`. Under a
//! flat prior on `θ` the posterior after `n` samples is
//! `Gamma(shape = n + 1, rate = S)` with `S = Σ (τ_k - τ_a)`, and the
//! integral transform `u = 1 - exp(-θ (τ - τ_a))` turns that posterior into
//! per-bin probabilities expressible through `P(n + 1, ·)`.

use crate::model::{Channel, Conversion, MeasurementModel, ModelKind, Outcome, SufficientStats};
use crate::rng::SampleSource;
use crate::special::{self, reg_gamma_pq};
use crate::{CompensatedSum, Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToaConfig<T> {
    /// Afterpulsing dead time, seconds.
    pub tau_a: T,
    /// Timing jitter standard deviation, seconds. Only used by
    /// [`ToaModel::pdf_with_jitter`] and the simulator.
    pub jitter_sigma: T,
}

impl<T: Real> ToaConfig<T> {
    pub fn new(tau_a: T, jitter_sigma: T) -> Result<Self> {
        if !tau_a.is_finite() || tau_a < T::zero() {
            return Err(Error::domain("ToaConfig", format!("tau_a = {tau_a:?}")));
        }
        if !jitter_sigma.is_finite() || jitter_sigma < T::zero() {
            return Err(Error::domain(
                "ToaConfig",
                format!("jitter_sigma = {jitter_sigma:?}"),
            ));
        }
        Ok(ToaConfig {
            tau_a,
            jitter_sigma,
        })
    }
}

/// `(n, S)` with `S = Σ (τ_k - τ_a)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ToaStats<T> {
    n: usize,
    offset_sum: CompensatedSum<T>,
}

impl<T: Real> ToaStats<T> {
    /// Statistics from already-shifted offsets `τ_k - τ_a`.
    pub fn from_offsets(offsets: impl IntoIterator<Item = T>) -> Self {
        let mut n = 0;
        let offset_sum = offsets
            .into_iter()
            .inspect(|_| n += 1)
            .collect::<CompensatedSum<T>>();
        ToaStats { n, offset_sum }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Total offset `S`, seconds.
    pub fn offset_sum(&self) -> T {
        self.offset_sum.value()
    }

    /// Returns the statistics with one more sample folded in.
    pub fn update(&self, tau: T, config: &ToaConfig<T>) -> Result<Self> {
        let mut out = *self;
        out.push(tau, config)?;
        Ok(out)
    }

    pub fn push(&mut self, tau: T, config: &ToaConfig<T>) -> Result<()> {
        if tau.is_nan() || tau < config.tau_a {
            return Err(Error::domain(
                "toa update",
                format!("sample {tau:?} below tau_a = {:?}", config.tau_a),
            ));
        }
        self.n += 1;
        self.offset_sum.add(tau - config.tau_a);
        Ok(())
    }
}

impl<T: Real> SufficientStats<T> for ToaStats<T> {
    fn count(&self) -> usize {
        self.n
    }

    fn merge(&self, other: &Self) -> Self {
        ToaStats {
            n: self.n + other.n,
            offset_sum: self.offset_sum.merge(&other.offset_sum),
        }
    }
}

/// `Gamma(shape, rate)` posterior over the click rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToaPosterior<T> {
    pub shape: T,
    pub rate: T,
}

impl<T: Real> ToaPosterior<T> {
    pub fn mean(&self) -> T {
        self.shape / self.rate
    }

    pub fn mode(&self) -> T {
        (self.shape - T::one()) / self.rate
    }

    pub fn log_density(&self, theta: T) -> Result<T> {
        if !(theta > T::zero()) {
            return Ok(T::neg_infinity());
        }
        Ok(self.shape * self.rate.ln() + (self.shape - T::one()) * theta.ln()
            - self.rate * theta
            - special::log_gamma(self.shape)?)
    }

    pub fn density(&self, theta: T) -> Result<T> {
        self.log_density(theta).map(T::exp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToaModel<T> {
    pub config: ToaConfig<T>,
}

impl<T: Real> ToaModel<T> {
    pub fn new(config: ToaConfig<T>) -> Self {
        ToaModel { config }
    }

    fn offset(&self, op: &'static str, tau: T) -> Result<T> {
        if tau.is_nan() || tau < self.config.tau_a {
            return Err(Error::domain(
                op,
                format!("sample {tau:?} below tau_a = {:?}", self.config.tau_a),
            ));
        }
        Ok(tau - self.config.tau_a)
    }

    fn check_rate(op: &'static str, theta: T) -> Result<()> {
        if !(theta > T::zero()) || !theta.is_finite() {
            return Err(Error::domain(op, format!("rate {theta:?} must be positive")));
        }
        Ok(())
    }

    /// `θ exp(-θ (τ - τ_a))`.
    pub fn pdf(&self, tau: T, theta: T) -> Result<T> {
        Self::check_rate("toa pdf", theta)?;
        let d = self.offset("toa pdf", tau)?;
        Ok(theta * (-theta * d).exp())
    }

    /// Density of the recorded interval `τ_r = τ + ε` with `ε ~ N(0, σ_j²)`:
    /// the exponential convolved with the jitter,
    /// `θ exp(-θ d + σ_j²θ²/2) Φ(d/σ_j - σ_j θ)` with `d = τ_r - τ_a`.
    pub fn pdf_with_jitter(&self, tau_r: T, theta: T) -> Result<T> {
        let sigma = self.config.jitter_sigma;
        if sigma == T::zero() {
            return self.pdf(tau_r, theta);
        }
        Self::check_rate("toa pdf_with_jitter", theta)?;
        if !tau_r.is_finite() {
            return Err(Error::domain("toa pdf_with_jitter", format!("tau_r = {tau_r:?}")));
        }
        let d = tau_r - self.config.tau_a;
        let z = d / sigma - sigma * theta;
        let phi = special::std_normal_cdf(z)?;
        if phi == T::zero() {
            return Ok(T::zero());
        }
        let log_env = -theta * d + sigma * sigma * theta * theta * T::lit(0.5);
        Ok(theta * (log_env + phi.ln()).exp())
    }

    /// Keeps the samples with `τ >= τ_a`, in order; returns them with the
    /// number removed.
    pub fn filter_afterpulse(&self, samples: &[T]) -> (Vec<T>, usize) {
        let kept: Vec<T> = samples
            .iter()
            .copied()
            .filter(|&t| t >= self.config.tau_a)
            .collect();
        let removed = samples.len() - kept.len();
        (kept, removed)
    }

    /// Maximum likelihood rate `n / S`.
    pub fn mle(&self, stats: &ToaStats<T>) -> Result<T> {
        if stats.n == 0 {
            return Err(Error::InsufficientData {
                op: "toa mle",
                needed: 1,
                have: 0,
            });
        }
        let s = stats.offset_sum();
        if !(s > T::zero()) {
            return Err(Error::domain("toa mle", "all samples sit exactly at tau_a"));
        }
        Ok(T::count(stats.n) / s)
    }

    pub fn posterior(&self, stats: &ToaStats<T>) -> Result<ToaPosterior<T>> {
        if stats.n == 0 {
            return Err(Error::InsufficientData {
                op: "toa posterior",
                needed: 1,
                have: 0,
            });
        }
        let s = stats.offset_sum();
        if !(s > T::zero()) {
            return Err(Error::domain(
                "toa posterior",
                "all samples sit exactly at tau_a",
            ));
        }
        Ok(ToaPosterior {
            shape: T::count(stats.n + 1),
            rate: s,
        })
    }

    /// `u = 1 - exp(-θ (τ - τ_a))`.
    pub fn u_transform(&self, theta: T, tau: T) -> Result<T> {
        if theta.is_nan() || theta < T::zero() {
            return Err(Error::domain("toa u_transform", format!("rate {theta:?}")));
        }
        let d = self.offset("toa u_transform", tau)?;
        Ok(-(-theta * d).exp_m1())
    }

    fn measurement_offset(&self, op: &'static str, tau_i: T) -> Result<T> {
        let d = self.offset(op, tau_i)?;
        if d == T::zero() {
            return Err(Error::domain(
                op,
                "degenerate measurement at tau_a: u is 0 for every rate",
            ));
        }
        Ok(d)
    }

    /// Density of `u` for measurement `τ_i` under the posterior.
    pub fn g_u(&self, u: T, tau_i: T, stats: &ToaStats<T>) -> Result<T> {
        let post = self.posterior(stats)?;
        let d = self.measurement_offset("toa g_u", tau_i)?;
        if u.is_nan() || u < T::zero() || u > T::one() {
            return Err(Error::domain("toa g_u", format!("u = {u:?}")));
        }
        if u == T::zero() || u == T::one() {
            return Ok(T::zero());
        }
        let k = post.rate / d;
        let t = -(-u).ln_1p();
        let n = post.shape - T::one();
        let log_g = post.shape * k.ln() + n * t.ln() - (k - T::one()) * t
            - special::log_gamma(post.shape)?;
        Ok(log_g.exp())
    }

    /// `P(u <= c)` for measurement `τ_i` under the posterior.
    pub fn g_u_cdf(&self, c: T, tau_i: T, stats: &ToaStats<T>) -> Result<T> {
        let post = self.posterior(stats)?;
        let d = self.measurement_offset("toa g_u_cdf", tau_i)?;
        if c.is_nan() || c < T::zero() || c > T::one() {
            return Err(Error::domain("toa g_u_cdf", format!("c = {c:?}")));
        }
        let x = post.rate * -(-c).ln_1p() / d;
        special::reg_lower_incomplete_gamma(post.shape, x)
    }

    /// Posterior probability that `u(θ | τ_i)` lands in each of `bins` equal
    /// sub-intervals of [0, 1].
    pub fn bin_probabilities(&self, tau_i: T, bins: usize, stats: &ToaStats<T>) -> Result<Vec<T>> {
        if bins < 2 {
            return Err(Error::contract("toa bin_probabilities", "need at least 2 bins"));
        }
        let post = self.posterior(stats)?;
        let d = self.measurement_offset("toa bin_probabilities", tau_i)?;
        let scale = post.rate / d;
        let nf = T::count(bins);
        let arg = |j: usize| {
            if j == bins {
                T::infinity()
            } else {
                scale * -(-(T::count(j) / nf)).ln_1p()
            }
        };
        let mut probs = Vec::with_capacity(bins);
        let mut lo_x = T::zero();
        let mut lo = (T::zero(), T::one());
        for j in 1..=bins {
            let hi_x = arg(j);
            let hi = reg_gamma_pq(post.shape, hi_x)?;
            probs.push(special::diff_from_pq(post.shape, lo_x, lo, hi));
            lo_x = hi_x;
            lo = hi;
        }
        Ok(probs)
    }

    /// `n` intervals `τ = τ_a + Exp(θ)` drawn by inversion, plus
    /// `N(0, σ_j²)` jitter when `σ_j > 0`.
    pub fn simulate(&self, n: usize, theta: T, seed: u64) -> Result<Vec<T>> {
        self.simulate_with_afterpulses(n, theta, T::zero(), seed)
    }

    /// Like [`Self::simulate`], but each event is replaced with probability
    /// `afterpulse_fraction` by a spurious click uniform on `[0, τ_a)`.
    pub fn simulate_with_afterpulses(
        &self,
        n: usize,
        theta: T,
        afterpulse_fraction: T,
        seed: u64,
    ) -> Result<Vec<T>> {
        Self::check_rate("toa simulate", theta)?;
        if !(afterpulse_fraction >= T::zero() && afterpulse_fraction < T::one()) {
            return Err(Error::domain(
                "toa simulate",
                format!("afterpulse fraction {afterpulse_fraction:?} outside [0, 1)"),
            ));
        }
        let to_f64 = |v: T| v.to_f64().unwrap_or(f64::NAN);
        let rate = to_f64(theta);
        let tau_a = to_f64(self.config.tau_a);
        let sigma = to_f64(self.config.jitter_sigma);
        let frac = to_f64(afterpulse_fraction);
        let mut src = SampleSource::new(seed);
        let samples = (0..n)
            .map(|_| {
                let tau = if frac > 0.0 && src.uniform() < frac {
                    tau_a * src.uniform()
                } else {
                    let mut t = tau_a + src.exponential(rate);
                    if sigma > 0.0 {
                        t += sigma * src.std_normal();
                    }
                    t
                };
                T::lit(tau)
            })
            .collect();
        Ok(samples)
    }
}

impl<T: Real> MeasurementModel<T> for ToaModel<T> {
    type Stats = ToaStats<T>;

    fn kind(&self) -> ModelKind {
        ModelKind::Toa
    }

    fn observe(&self, stats: &mut ToaStats<T>, x: T) -> Result<()> {
        stats.push(x, &self.config)
    }

    fn point_estimate(&self, stats: &ToaStats<T>) -> Result<T> {
        self.mle(stats)
    }

    fn quantile(&self, theta: T, u: T) -> T {
        self.config.tau_a - (-u).ln_1p() / theta
    }

    fn posterior_ready(&self, stats: &ToaStats<T>) -> bool {
        stats.n >= 1 && stats.offset_sum() > T::zero()
    }

    fn min_posterior_count(&self) -> usize {
        1
    }

    fn unit_len(&self) -> usize {
        1
    }

    fn convert_unit(
        &self,
        unit: &[T],
        stats: &ToaStats<T>,
        bins: usize,
    ) -> Result<Vec<Conversion<T>>> {
        let tau = unit[0];
        let d = self.offset("toa convert", tau)?;
        let outcome = if d == T::zero() || !self.posterior_ready(stats) {
            Outcome::Rejected
        } else {
            Outcome::Probabilities(self.bin_probabilities(tau, bins, stats)?)
        };
        Ok(vec![Conversion {
            channel: Channel::Primary,
            outcome,
        }])
    }
}
