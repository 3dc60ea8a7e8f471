//! Power-normalized gradient step and batch scheduling.
//!
//! Each gradient component is divided by the square root of its exponentially
//! windowed power: `P ← λ P + (1 - λ) g²`, `θ ← θ - μ g / sqrt(c + P)`.
//! There is no first-moment estimate and no bias correction; on the first
//! step the powers are set to `g²` directly.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::net::{GradientSet, ShallowNet};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerNormConfig {
    /// Step size μ.
    pub mu: f64,
    /// Forgetting factor λ in `[0, 1)`.
    pub lambda: f64,
    /// Denominator regularizer `c > 0`.
    pub c: f64,
}

impl Default for PowerNormConfig {
    fn default() -> Self {
        Self {
            mu: 0.001,
            lambda: 0.99,
            c: 0.001,
        }
    }
}

impl PowerNormConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidParameter(format!("mu must be positive, got {}", self.mu)));
        }
        if !(0.0..1.0).contains(&self.lambda) {
            return Err(Error::InvalidParameter(format!(
                "lambda must lie in [0, 1), got {}",
                self.lambda
            )));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidParameter(format!("c must be positive, got {}", self.c)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerNormState {
    pub config: PowerNormConfig,
    pub powers: GradientSet,
    pub initialized: bool,
}

impl PowerNormState {
    pub fn new(net: &ShallowNet, config: PowerNormConfig) -> Self {
        Self {
            config,
            powers: GradientSet::zeros_like(net),
            initialized: false,
        }
    }

    /// Applies one normalized step to `net` in place.
    pub fn step(&mut self, net: &mut ShallowNet, grads: &GradientSet) {
        let PowerNormConfig { mu, lambda, c } = self.config;
        let first = !self.initialized;
        let power_blocks = [
            &mut self.powers.w_in[..],
            &mut self.powers.b_in[..],
            &mut self.powers.w_out[..],
            std::slice::from_mut(&mut self.powers.b_out),
        ];
        let grad_blocks = [
            &grads.w_in[..],
            &grads.b_in[..],
            &grads.w_out[..],
            std::slice::from_ref(&grads.b_out),
        ];
        for ((params, powers), g) in net.blocks_mut().into_iter().zip(power_blocks).zip(grad_blocks) {
            debug_assert_eq!(params.len(), g.len());
            for ((theta, p), &g) in params.iter_mut().zip(powers.iter_mut()).zip(g) {
                *p = if first {
                    g * g
                } else {
                    lambda * *p + (1.0 - lambda) * g * g
                };
                *theta -= mu * (g / (c + *p).sqrt());
            }
        }
        self.initialized = true;
    }
}

/// How training samples are grouped into updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchMode {
    /// Every sample in every iteration (GD).
    FullBatch,
    /// One sample per iteration, cycling through the data (SGD).
    SingleSample,
    /// Contiguous blocks of `m` samples, wrapping around the data.
    MiniBatch(usize),
}

impl fmt::Display for BatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BatchMode::FullBatch => f.write_str("full"),
            BatchMode::SingleSample => f.write_str("single"),
            BatchMode::MiniBatch(m) => write!(f, "mini:{m}"),
        }
    }
}

impl FromStr for BatchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "full" | "full-batch" | "gd" => Ok(BatchMode::FullBatch),
            "single" | "single-sample" | "sgd" => Ok(BatchMode::SingleSample),
            other => {
                let m = other
                    .strip_prefix("mini:")
                    .or_else(|| other.strip_prefix("mini-batch:"))
                    .and_then(|m| m.parse::<usize>().ok())
                    .ok_or_else(|| Error::InvalidParameter(format!("unknown batch mode `{s}`")))?;
                Ok(BatchMode::MiniBatch(m))
            }
        }
    }
}

/// Indices used at iteration `t` (zero based) for a dataset of size `n`.
pub fn schedule(mode: BatchMode, n: usize, t: usize) -> Vec<usize> {
    assert!(n >= 1, "empty dataset");
    match mode {
        BatchMode::FullBatch => (0..n).collect(),
        BatchMode::SingleSample => vec![t % n],
        BatchMode::MiniBatch(m) => {
            assert!((1..=n).contains(&m), "mini-batch size must lie in 1..=n");
            (0..m).map(|i| (t * m + i) % n).collect()
        }
    }
}

/// [`schedule`] with optional per-epoch reshuffling of the sample order.
#[derive(Debug, Clone)]
pub struct Scheduler {
    mode: BatchMode,
    n: usize,
    shuffle_seed: Option<u64>,
    epoch: usize,
    order: Vec<usize>,
}

impl Scheduler {
    pub fn new(mode: BatchMode, n: usize, shuffle_seed: Option<u64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyDataset("training"));
        }
        if let BatchMode::MiniBatch(m) = mode {
            if !(1..=n).contains(&m) {
                return Err(Error::InvalidParameter(format!(
                    "mini-batch size {m} must lie in 1..={n}"
                )));
            }
        }
        let mut s = Self {
            mode,
            n,
            shuffle_seed,
            epoch: 0,
            order: (0..n).collect(),
        };
        s.reshuffle();
        Ok(s)
    }

    fn reshuffle(&mut self) {
        if let Some(seed) = self.shuffle_seed {
            self.order = (0..self.n).collect();
            let mut r = rng::substream(seed, &format!("shuffle/{}", self.epoch));
            self.order.shuffle(&mut r);
        }
    }

    pub fn mode(&self) -> BatchMode {
        self.mode
    }

    pub fn indices(&mut self, t: usize) -> Vec<usize> {
        if self.shuffle_seed.is_none() || self.mode == BatchMode::FullBatch {
            return schedule(self.mode, self.n, t);
        }
        let m = match self.mode {
            BatchMode::MiniBatch(m) => m,
            _ => 1,
        };
        (0..m)
            .map(|i| {
                let pos = t * m + i;
                let epoch = pos / self.n;
                if epoch != self.epoch {
                    self.epoch = epoch;
                    self.reshuffle();
                }
                self.order[pos % self.n]
            })
            .collect()
    }
}
