//! Scalar AR(1) dynamics `X_t = r X_{t-1} + m + sqrt(s) W_t` and trajectory generation.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::estimator::PairedDataset;
use crate::oracle::{normal_cdf, normal_pdf};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar1Model {
    /// AR coefficient.
    pub r: f64,
    /// Drift.
    pub m: f64,
    /// Innovation variance.
    pub s: f64,
}

impl Ar1Model {
    pub fn new(r: f64, m: f64, s: f64) -> Result<Self> {
        if !(r.is_finite() && m.is_finite()) {
            return Err(Error::InvalidParameter("AR(1) coefficients must be finite".into()));
        }
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "innovation variance must be positive, got {s}"
            )));
        }
        Ok(Self { r, m, s })
    }

    /// Successor of `x` for the standard normal innovation `w`.
    pub fn step(&self, x: f64, w: f64) -> f64 {
        self.r * x + self.s.sqrt() * w + self.m
    }

    /// `P(X_{t+1} ≤ y | X_t = x)`.
    pub fn transition_cdf(&self, y: f64, x: f64) -> f64 {
        normal_cdf((y - self.r * x - self.m) / self.s.sqrt())
    }

    pub fn transition_pdf(&self, y: f64, x: f64) -> f64 {
        let sd = self.s.sqrt();
        normal_pdf((y - self.r * x - self.m) / sd) / sd
    }

    /// Mean and variance of the stationary law.
    pub fn stationary(&self) -> Result<(f64, f64)> {
        if self.r.abs() >= 1.0 {
            return Err(Error::NonStationary(self.r));
        }
        Ok((self.m / (1.0 - self.r), self.s / (1.0 - self.r * self.r)))
    }

    /// Runs the recursion from `x0` with the given innovations.
    pub fn propagate(&self, x0: f64, noise: &[f64]) -> Vec<f64> {
        let mut states = Vec::with_capacity(noise.len() + 1);
        states.push(x0);
        let mut x = x0;
        for &w in noise {
            x = self.step(x, w);
            states.push(x);
        }
        states
    }
}

/// Initial state of a simulated trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Start {
    Fixed(f64),
    /// Draw from the stationary law.
    Stationary,
}

/// `n + 1` states of the chain; the draws come from the `ar1` substream of `seed`.
pub fn simulate_ar1(model: &Ar1Model, n: usize, start: Start, seed: u64) -> Result<Vec<f64>> {
    let mut rng = rng::substream(seed, "ar1");
    let x0 = match start {
        Start::Fixed(x) => x,
        Start::Stationary => {
            let (mean, var) = model.stationary()?;
            let w: f64 = rng.sample(StandardNormal);
            mean + var.sqrt() * w
        }
    };
    let noise: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    Ok(model.propagate(x0, &noise))
}

/// Trajectory driven by model `actions[t]` at step `t` (zero-based indices).
///
/// Uses the same substream and draw order as [`simulate_ar1`] with a fixed start.
pub fn simulate_controlled(models: &[Ar1Model], actions: &[usize], x0: f64, seed: u64) -> Result<Vec<f64>> {
    if let Some(&index) = actions.iter().find(|&&a| a >= models.len()) {
        return Err(Error::BadActionIndex {
            index,
            actions: models.len(),
        });
    }
    let mut rng = rng::substream(seed, "ar1");
    let mut states = Vec::with_capacity(actions.len() + 1);
    let mut x = x0;
    states.push(x);
    for &a in actions {
        let w: f64 = rng.sample(StandardNormal);
        x = models[a].step(x, w);
        states.push(x);
    }
    Ok(states)
}

/// `n` actions drawn uniformly from `0..k` using the `actions` substream.
pub fn random_actions(k: usize, n: usize, seed: u64) -> Vec<usize> {
    assert!(k >= 1, "need at least one action");
    let mut rng = rng::substream(seed, "actions");
    (0..n).map(|_| rng.random_range(0..k)).collect()
}

/// Overlapping consecutive pairs: `X_i = x_i`, `Y_i = x_{i+1}`.
pub fn transitions(trajectory: &[f64]) -> Result<PairedDataset> {
    if trajectory.len() < 2 {
        return Err(Error::EmptyDataset("transitions"));
    }
    PairedDataset::from_scalars(&trajectory[1..], &trajectory[..trajectory.len() - 1])
}

/// Consecutive pairs labeled with the action that produced each transition.
pub fn labeled_transitions(trajectory: &[f64], actions: &[usize]) -> Result<PairedDataset> {
    if trajectory.len() != actions.len() + 1 {
        return Err(Error::SizeMismatch {
            left: trajectory.len(),
            right: actions.len() + 1,
        });
    }
    transitions(trajectory)?.with_labels(actions.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_noise_recursion() {
        let model = Ar1Model::new(0.0, 1.0, 1.0).unwrap();
        let states = model.propagate(5.0, &[0.0; 4]);
        assert_eq!(states, vec![5.0, 1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn alternating_actions_without_noise() {
        let up = Ar1Model::new(0.8, 1.0, 1.0).unwrap();
        let down = Ar1Model::new(0.8, -1.0, 1.0).unwrap();
        let s1 = up.step(0.0, 0.0);
        let s2 = down.step(s1, 0.0);
        assert_eq!(s1, 1.0);
        assert!((s2 + 0.2).abs() < 1e-15);
    }

    #[test]
    fn same_seed_same_trajectory() {
        let model = Ar1Model::new(0.9, 0.0, 5.0).unwrap();
        let a = simulate_ar1(&model, 50, Start::Stationary, 11).unwrap();
        let b = simulate_ar1(&model, 50, Start::Stationary, 11).unwrap();
        let c = simulate_ar1(&model, 50, Start::Stationary, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 51);
    }

    #[test]
    fn stationary_variance() {
        let model = Ar1Model::new(0.9, 0.0, 5.0).unwrap();
        let xs = simulate_ar1(&model, 500, Start::Stationary, 3).unwrap();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        let target = 5.0 / (1.0 - 0.81);
        assert!((var - target).abs() < 0.3 * target, "variance {var}");
    }

    #[test]
    fn non_stationary_start_is_rejected() {
        let model = Ar1Model::new(1.0, 0.0, 1.0).unwrap();
        assert_eq!(
            simulate_ar1(&model, 3, Start::Stationary, 0).unwrap_err(),
            Error::NonStationary(1.0)
        );
        assert!(simulate_ar1(&model, 3, Start::Fixed(0.0), 0).is_ok());
    }

    #[test]
    fn single_model_control_matches_plain_simulation() {
        let model = Ar1Model::new(0.5, 0.3, 2.0).unwrap();
        let plain = simulate_ar1(&model, 40, Start::Fixed(1.5), 8).unwrap();
        let controlled = simulate_controlled(&[model], &[0; 40], 1.5, 8).unwrap();
        assert_eq!(plain, controlled);
    }

    #[test]
    fn bad_action_index() {
        let model = Ar1Model::new(0.5, 0.0, 1.0).unwrap();
        assert_eq!(
            simulate_controlled(&[model, model], &[0, 2], 0.0, 1).unwrap_err(),
            Error::BadActionIndex { index: 2, actions: 2 }
        );
    }

    #[test]
    fn uniform_actions_split_evenly() {
        let actions = random_actions(2, 1000, 5);
        let ones = actions.iter().filter(|&&a| a == 1).count();
        // Binomial(1000, 1/2) has standard deviation about 15.8.
        assert!((ones as f64 - 500.0).abs() < 5.0 * 15.82, "{ones}");
        let model = Ar1Model::new(0.8, 1.0, 1.0).unwrap();
        let traj = simulate_controlled(&[model, model], &actions, 0.0, 5).unwrap();
        let parts = labeled_transitions(&traj, &actions).unwrap().split_by_label(2).unwrap();
        assert_eq!(parts[1].as_ref().unwrap().len(), ones);
        assert_eq!(parts[0].as_ref().unwrap().len(), 1000 - ones);
    }

    #[test]
    fn transitions_pair_consecutive_states() {
        let data = transitions(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(data.xs(), &[vec![1.0], vec![2.0]]);
        assert_eq!(data.ys(), &[vec![2.0], vec![3.0]]);
        assert!(transitions(&[1.0]).is_err());
    }

    #[test]
    fn transition_density_matches_cdf_slope() {
        let model = Ar1Model::new(0.9, 0.2, 5.0).unwrap();
        let (x, y, h) = (1.3, 0.4, 1e-5);
        let slope = (model.transition_cdf(y + h, x) - model.transition_cdf(y - h, x)) / (2.0 * h);
        assert!((slope - model.transition_pdf(y, x)).abs() < 1e-8);
    }
}
