//! Pairwise ranking accuracy, exact and by Monte Carlo.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `ψ(x, y) = 1` when `x` and `y` are both nonzero with the same sign.
#[inline]
pub fn psi(x: f64, y: f64) -> f64 {
    if x * y > 0.0 {
        1.0
    } else {
        0.0
    }
}

fn check(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::InvalidArgument(
            "accuracy needs at least two ranked points".into(),
        ));
    }
    Ok(())
}

/// Fraction of unordered pairs ordered the same way by `a` and `b`. A tie in
/// either vector counts as disagreement.
pub fn accuracy_exact(a: &[f64], b: &[f64]) -> Result<f64> {
    check(a, b)?;
    let n = a.len();
    let agree: u64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let (ai, bi) = (a[i], b[i]);
            a[i + 1..]
                .iter()
                .zip(&b[i + 1..])
                .filter(|(&aj, &bj)| (ai - aj) * (bi - bj) > 0.0)
                .count() as u64
        })
        .sum();
    Ok(agree as f64 / (n as f64 * (n as f64 - 1.0) / 2.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    /// Half-width of the normal-approximation 95% interval for the mean.
    pub ci95: f64,
    pub std_error: f64,
    /// One estimate per repetition.
    pub estimates: Vec<f64>,
}

impl MonteCarloEstimate {
    pub fn from_estimates(estimates: Vec<f64>) -> Self {
        let (mean, sd) = mean_sd(&estimates);
        let std_error = sd / (estimates.len() as f64).sqrt();
        Self {
            mean,
            ci95: 1.96 * std_error,
            std_error,
            estimates,
        }
    }
}

/// Mean and sample standard deviation; the deviation is zero for fewer than
/// two values.
pub(crate) fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Averages `ψ` over `pairs` uniformly drawn ordered pairs `i ≠ j`, repeated
/// `reps` times. Repetition `r` draws from its own stream of `seed`, so the
/// result does not depend on the thread count.
pub fn accuracy_montecarlo(
    a: &[f64],
    b: &[f64],
    pairs: usize,
    reps: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    check(a, b)?;
    if pairs == 0 || reps == 0 {
        return Err(Error::InvalidArgument(
            "pairs and reps must both be at least 1".into(),
        ));
    }
    let n = a.len();
    let estimates = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(rep as u64);
            let mut agree = 0u64;
            for _ in 0..pairs {
                let i = rng.random_range(0..n);
                let mut j = rng.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                if (a[i] - a[j]) * (b[i] - b[j]) > 0.0 {
                    agree += 1;
                }
            }
            agree as f64 / pairs as f64
        })
        .collect();
    Ok(MonteCarloEstimate::from_estimates(estimates))
}
