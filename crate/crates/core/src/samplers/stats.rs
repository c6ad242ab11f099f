use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of batches used for batch-means standard errors.
pub const BATCHES: usize = 32;

/// Run length and seed of one Markov chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub seed: u64,
    /// Sweeps discarded before the first sample.
    pub burn_in: usize,
    pub samples: usize,
    /// Sweeps between consecutive samples.
    pub thinning: usize,
}

impl ChainSpec {
    pub fn new(seed: u64, burn_in: usize, samples: usize, thinning: usize) -> Self {
        ChainSpec {
            seed,
            burn_in,
            samples,
            thinning,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 || self.thinning == 0 {
            return Err(Error::Argument("samples and thinning must be positive".into()));
        }
        Ok(())
    }

    /// Generator for stream `stream` of this chain's seed.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// Mean of a time series with an autocorrelation-aware standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub ess: f64,
    pub n: usize,
}

impl Estimate {
    /// A quantity known without sampling error.
    pub fn exact(x: f64, n: usize) -> Self {
        Estimate {
            mean: x,
            std_error: 0.0,
            ess: n as f64,
            n,
        }
    }

    /// Batch means over [`BATCHES`] batches for the error; the effective
    /// sample size uses the initial positive sequence of autocorrelations.
    pub fn from_series(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Estimate {
                mean: f64::NAN,
                std_error: f64::NAN,
                ess: 0.0,
                n: 0,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        if var == 0.0 || xs.iter().all(|&x| x == xs[0]) {
            return Estimate::exact(xs[0], n);
        }
        let ess = initial_positive_ess(xs, mean, var);
        let std_error = if n >= 2 * BATCHES {
            let size = n / BATCHES;
            let means: Vec<f64> = (0..BATCHES)
                .map(|b| xs[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
                .collect();
            let m = means.iter().sum::<f64>() / BATCHES as f64;
            let v = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
            (v / BATCHES as f64).sqrt()
        } else {
            (var / ess).sqrt()
        };
        Estimate {
            mean,
            std_error,
            ess,
            n,
        }
    }

    /// `|mean − x| ≤ k·SE`, with exact equality accepted when SE is zero.
    pub fn within(&self, x: f64, k: f64) -> bool {
        (self.mean - x).abs() <= k * self.std_error + 1e-12
    }
}

fn initial_positive_ess(xs: &[f64], mean: f64, var: f64) -> f64 {
    let n = xs.len();
    let acf = |k: usize| -> f64 {
        let mut s = 0.0;
        for i in 0..n - k {
            s += (xs[i] - mean) * (xs[i + k] - mean);
        }
        s / (n as f64 * var)
    };
    let mut tau = -1.0;
    let mut m = 0;
    while 2 * m + 1 < n {
        let pair = acf(2 * m) + acf(2 * m + 1);
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        m += 1;
    }
    (n as f64 / tau.max(1e-12)).clamp(1.0, n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn independent_draws_have_full_ess() {
        let mut rng = ChainSpec::new(3, 0, 1, 1).rng(0);
        let xs: Vec<f64> = (0..20000).map(|_| rng.random::<f64>()).collect();
        let e = Estimate::from_series(&xs);
        assert!(e.ess > 15000.0 && e.ess <= 20000.0, "{e:?}");
        assert!(e.within(0.5, 4.0));
        let naive = (1.0 / 12.0 / 20000.0f64).sqrt();
        assert!((e.std_error / naive - 1.0).abs() < 0.5);
    }

    #[test]
    fn correlated_series_shrinks_ess() {
        let mut rng = ChainSpec::new(5, 0, 1, 1).rng(0);
        let mut x = 0.0;
        let xs: Vec<f64> = (0..20000)
            .map(|_| {
                x = 0.9 * x + rng.random::<f64>() - 0.5;
                x
            })
            .collect();
        let e = Estimate::from_series(&xs);
        // AR(1) with ρ = 0.9 has τ = 19
        assert!(e.ess > 500.0 && e.ess < 2000.0, "{e:?}");
    }

    #[test]
    fn constant_series() {
        let e = Estimate::from_series(&[2.0; 100]);
        assert_eq!(e.std_error, 0.0);
        assert_eq!(e.mean, 2.0);
    }
}
