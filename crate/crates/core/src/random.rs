use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier recorded in output metadata for every seeded draw.
pub const RNG_ALGORITHM: &str = "chacha20-rand_chacha-0.9/poisson-rand_distr-0.5";

/// A seed for the ChaCha20 counter-mode generator. Same seed, same samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomStream {
    pub seed: u64,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        RandomStream { seed }
    }

    pub fn algorithm(&self) -> &'static str {
        RNG_ALGORITHM
    }

    pub fn rng(&self) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(self.seed)
    }

    /// Independent child stream, e.g. one per post-selection point.
    pub fn derive(&self, index: u64) -> RandomStream {
        // splitmix64 finaliser
        let mut z = self.seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        RandomStream { seed: z ^ (z >> 31) }
    }

    /// `n` independent standard-normal draws scaled by `sigma`.
    pub fn gaussian(&self, n: usize, sigma: f64) -> Vec<f64> {
        let mut rng = self.rng();
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        (0..n).map(|_| sigma * normal.sample(&mut rng)).collect()
    }
}

/// Independent Poisson draws with the given per-cell means, in row-major order.
pub fn poisson_sample(mean: &Array2<f64>, stream: RandomStream) -> Result<Array2<u64>> {
    if let Some(bad) = mean.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
        return Err(Error::contract(format!(
            "Poisson means must be finite and >= 0, found {bad}"
        )));
    }
    let mut rng = stream.rng();
    let mut out = Array2::zeros(mean.dim());
    for (o, &m) in out.iter_mut().zip(mean.iter()) {
        if m > 0.0 {
            let d = Poisson::new(m).map_err(|e| Error::contract(format!("Poisson mean {m}: {e}")))?;
            *o = d.sample(&mut rng) as u64;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_means_give_zero_counts() {
        let m = Array2::zeros((4, 5));
        let c = poisson_sample(&m, RandomStream::new(1)).unwrap();
        assert!(c.iter().all(|&v| v == 0));
    }

    #[test]
    fn large_mean_concentrates() {
        let mut m = Array2::zeros((2, 2));
        m[[0, 1]] = 1e6;
        for seed in 0..20 {
            let c = poisson_sample(&m, RandomStream::new(seed)).unwrap();
            assert!((c[[0, 1]] as f64 - 1e6).abs() < 5.0 * 1e3);
        }
    }

    #[test]
    fn monte_carlo_mean_of_25() {
        let m = Array2::from_elem((1, 1), 25.0);
        let total: u64 = (0..10_000u64)
            .map(|s| poisson_sample(&m, RandomStream::new(s)).unwrap()[[0, 0]])
            .sum();
        let mean = total as f64 / 1e4;
        assert!((mean - 25.0).abs() < 0.5, "{mean}");
    }

    #[test]
    fn negative_mean_is_rejected() {
        let m = Array2::from_elem((1, 2), -1.0);
        assert!(matches!(
            poisson_sample(&m, RandomStream::new(0)),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn same_seed_same_samples() {
        let m = Array2::from_shape_fn((8, 8), |(i, j)| (i * 8 + j) as f64);
        let a = poisson_sample(&m, RandomStream::new(42)).unwrap();
        let b = poisson_sample(&m, RandomStream::new(42)).unwrap();
        let c = poisson_sample(&m, RandomStream::new(43)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
