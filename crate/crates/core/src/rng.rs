use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

/// Seeded sample source shared by the simulators.
pub(crate) struct SampleSource {
    rng: ChaCha20Rng,
}

impl SampleSource {
    pub(crate) fn new(seed: u64) -> Self {
        SampleSource {
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    /// Uniform on [0, 1).
    pub(crate) fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Exponential with the given rate, by inversion.
    pub(crate) fn exponential(&mut self, rate: f64) -> f64 {
        -(-self.uniform()).ln_1p() / rate
    }

    pub(crate) fn std_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}
