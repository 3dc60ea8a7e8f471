//! Two scalar regression models with closed-form conditional expectations.
//!
//! In both, `X` is standard normal and `W` is independent zero-mean Gaussian
//! noise with variance [`NOISE_VAR`].
//!
//! * [`SignedSquare`]: `Y = sign(X) X² + W`, so `E[Y | X = x] = sign(x) x²`.
//! * [`Indicator`]: `Y = 1{-1 ≤ X + W ≤ 1}`, so `E[Y | X = x]` is a difference
//!   of two normal CDFs.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::estimator::PairedDataset;
use crate::links::sign;
use crate::oracle::normal_cdf;
use crate::rng;

pub const NOISE_VAR: f64 = 0.1;

/// Draws `n` pairs `(X, W)`; `X` and `W` use separate substreams.
fn draw_inputs(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut xr = rng::substream(seed, "data/x");
    let mut wr = rng::substream(seed, "data/w");
    let xs = (0..n).map(|_| xr.sample(StandardNormal)).collect();
    let ws = (0..n)
        .map(|_| NOISE_VAR.sqrt() * wr.sample::<f64, _>(StandardNormal))
        .collect();
    (xs, ws)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SignedSquare;

impl SignedSquare {
    pub fn mean(x: f64) -> f64 {
        sign(x) * x * x
    }

    pub fn exact(&self, x: f64) -> f64 {
        Self::mean(x)
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<PairedDataset> {
        let (xs, ws) = draw_inputs(n, seed);
        let ys: Vec<f64> = xs.iter().zip(&ws).map(|(&x, &w)| Self::mean(x) + w).collect();
        PairedDataset::from_scalars(&ys, &xs)
    }

    /// `P(Y ≤ y | X = x)`.
    pub fn cond_cdf(&self, y: f64, x: f64) -> f64 {
        normal_cdf((y - Self::mean(x)) / NOISE_VAR.sqrt())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Indicator;

impl Indicator {
    pub fn exact(&self, x: f64) -> f64 {
        let sd = NOISE_VAR.sqrt();
        normal_cdf((1.0 - x) / sd) - normal_cdf((-1.0 - x) / sd)
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<PairedDataset> {
        let (xs, ws) = draw_inputs(n, seed);
        let ys: Vec<f64> = xs.iter().zip(&ws).map(|(&x, &w)| Self::indicator(x + w)).collect();
        PairedDataset::from_scalars(&ys, &xs)
    }

    pub fn indicator(v: f64) -> f64 {
        if (-1.0..=1.0).contains(&v) {
            1.0
        } else {
            0.0
        }
    }

    /// `P(Y ≤ y | X = x)` of the Bernoulli response.
    pub fn cond_cdf(&self, y: f64, x: f64) -> f64 {
        let p = self.exact(x);
        let mut f = 0.0;
        if y >= 0.0 {
            f += 1.0 - p;
        }
        if y >= 1.0 {
            f += p;
        }
        f
    }

    /// `P(X + W ≤ v | X = x)`, for evaluating `E[1{-1 ≤ V ≤ 1} | X]` with `V = X + W`.
    pub fn sum_cdf(&self, v: f64, x: f64) -> f64 {
        normal_cdf((v - x) / NOISE_VAR.sqrt())
    }

    /// Density of `V = X + W` given `X = x`.
    pub fn sum_pdf(&self, v: f64, x: f64) -> f64 {
        let sd = NOISE_VAR.sqrt();
        crate::oracle::normal_pdf((v - x) / sd) / sd
    }
}
