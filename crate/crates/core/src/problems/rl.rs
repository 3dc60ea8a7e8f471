//! Discounted control over `K` AR(1) models.
//!
//! `U^j(s) = E^j[R(S') + γ max_ℓ U^ℓ(S') | S = s]` is the value of taking
//! action `j` in state `s` and acting optimally afterwards.

use std::fmt;
use std::sync::Arc;

use log::warn;

use super::ar1::Ar1Model;
use super::costs::reward;
use super::stopping::transition_matrix;
use crate::error::{Error, Result};
use crate::estimator::{train_system, PairedDataset, SystemComponent, TrainConfig, TrainedEstimator};
use crate::links::{LinkFamily, RangeInterval};
use crate::net::ShallowNet;
use crate::oracle::{min_max, sup_diff, Grid1D, QuadMatrix};

pub type RewardFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct RlSpec {
    pub actions: Vec<Ar1Model>,
    pub reward: RewardFn,
    pub gamma: f64,
}

impl fmt::Debug for RlSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RlSpec")
            .field("actions", &self.actions)
            .field("gamma", &self.gamma)
            .finish_non_exhaustive()
    }
}

impl RlSpec {
    pub fn new(actions: Vec<Ar1Model>, reward: RewardFn, gamma: f64) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::InvalidParameter("at least one action is required".into()));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidParameter(format!(
                "gamma must lie in [0, 1), got {gamma}"
            )));
        }
        Ok(Self { actions, reward, gamma })
    }

    /// Two models with `r = 0.8`, unit noise and drifts `+1` and `-1`; [`reward`]; `γ = 0.8`.
    pub fn reference() -> Self {
        Self {
            actions: vec![
                Ar1Model { r: 0.8, m: 1.0, s: 1.0 },
                Ar1Model {
                    r: 0.8,
                    m: -1.0,
                    s: 1.0,
                },
            ],
            reward: Arc::new(reward),
            gamma: 0.8,
        }
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    /// `R(y) + γ max_ℓ u_ℓ`.
    pub fn target(&self, y: f64, u: &[f64]) -> f64 {
        (self.reward)(y) + self.gamma * max_of(u)
    }
}

fn max_of(u: &[f64]) -> f64 {
    u.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Index of the largest value; ties go to the smallest index.
pub fn argmax_action(values: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = j;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct RlNumeric {
    pub grid: Grid1D,
    /// One vector per action.
    pub values: Vec<Vec<f64>>,
    /// Sup-norm change over all actions per iteration.
    pub residuals: Vec<f64>,
    /// `(min, max)` of each action's iterate: `ranges[t][j]`.
    pub ranges: Vec<Vec<(f64, f64)>>,
    pub lower_tail: f64,
    pub upper_tail: f64,
}

impl RlNumeric {
    pub fn optimal_action(&self, k: usize) -> usize {
        let v: Vec<f64> = self.values.iter().map(|u| u[k]).collect();
        argmax_action(&v)
    }
}

pub fn transition_matrices(spec: &RlSpec, grid: &Grid1D) -> Result<Vec<QuadMatrix>> {
    spec.actions.iter().map(|m| transition_matrix(m, grid)).collect()
}

/// Iterates `U^j_t = F^j (R + γ max_ℓ U^ℓ_{t-1})` from zero.
pub fn solve_rl_numeric(spec: &RlSpec, grid: &Grid1D, iters: usize) -> Result<RlNumeric> {
    let fs = transition_matrices(spec, grid)?;
    let refs: Vec<&QuadMatrix> = fs.iter().collect();
    solve_rl_with_matrices(spec, &refs, iters)
}

/// [`solve_rl_numeric`] with prebuilt square transition matrices, one per action.
pub fn solve_rl_with_matrices(spec: &RlSpec, fs: &[&QuadMatrix], iters: usize) -> Result<RlNumeric> {
    let k = spec.num_actions();
    if fs.len() != k {
        return Err(Error::Shape {
            expected: k,
            actual: fs.len(),
        });
    }
    let grid = fs[0].y_grid().clone();
    for f in fs {
        if f.y_grid() != &grid || f.x_grid() != &grid {
            return Err(Error::InvalidParameter(
                "transition matrices must share one square grid".into(),
            ));
        }
    }
    let xs = grid.points();
    let n = xs.len();
    let r: Vec<f64> = xs.iter().map(|&x| (spec.reward)(x)).collect();
    let mut current = vec![vec![0.0; n]; k];
    let mut next = vec![vec![0.0; n]; k];
    let mut h = vec![0.0; n];
    let mut point = vec![0.0; k];
    let mut residuals = Vec::with_capacity(iters);
    let mut ranges = Vec::with_capacity(iters);
    for t in 0..iters {
        for idx in 0..n {
            for (p, u) in point.iter_mut().zip(&current) {
                *p = u[idx];
            }
            h[idx] = r[idx] + spec.gamma * max_of(&point);
        }
        for (f, out) in fs.iter().zip(next.iter_mut()) {
            f.apply_into(&h, out);
            if out.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteIterate { iteration: t + 1 });
            }
        }
        let residual = current
            .iter()
            .zip(&next)
            .map(|(a, b)| sup_diff(a, b))
            .fold(0.0, f64::max);
        residuals.push(residual);
        ranges.push(next.iter().map(|u| min_max(u)).collect());
        std::mem::swap(&mut current, &mut next);
    }
    let lower_tail = fs.iter().map(|f| f.lower_tail()).fold(0.0, f64::max);
    let upper_tail = fs.iter().map(|f| f.upper_tail()).fold(0.0, f64::max);
    Ok(RlNumeric {
        grid,
        values: current,
        residuals,
        ranges,
        lower_tail,
        upper_tail,
    })
}

/// Closure membership up to rounding in the bound `r / (1 - γ)`.
fn covers(range: &RangeInterval, v: f64) -> bool {
    let tol = 1e-12 * v.abs().max(1.0);
    range.closure_contains(v) || range.closure_contains(v - tol) || range.closure_contains(v + tol)
}

/// One trained network per action.
#[derive(Debug, Clone, PartialEq)]
pub struct RlEstimate {
    pub estimators: Vec<TrainedEstimator>,
}

impl RlEstimate {
    /// `ω_j(u_j(s))` for every action `j`.
    pub fn values(&self, s: f64) -> Vec<f64> {
        self.estimators.iter().map(|e| e.predict_scalar(s)).collect()
    }

    /// Zero-based best action; ties go to the smallest index.
    pub fn optimal_action(&self, s: f64) -> usize {
        argmax_action(&self.values(s))
    }
}

/// Trains one network per action on its own labeled transitions. All networks
/// see targets `R(S') + γ max_ℓ ω_ℓ(u_ℓ(S'))` computed from the previous iterate.
pub fn solve_rl_datadriven(
    data: &PairedDataset,
    spec: &RlSpec,
    links: &[LinkFamily],
    nets: Vec<ShallowNet>,
    config: &TrainConfig,
) -> Result<RlEstimate> {
    let k = spec.num_actions();
    if links.len() != k {
        return Err(Error::Shape {
            expected: k,
            actual: links.len(),
        });
    }
    if nets.len() != k {
        return Err(Error::Shape {
            expected: k,
            actual: nets.len(),
        });
    }
    let parts = data.split_by_label(k)?;
    let missing: Vec<usize> = parts
        .iter()
        .enumerate()
        .filter(|(_, p)| p.is_none())
        .map(|(j, _)| j)
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingActionData(missing));
    }

    let rewards: Vec<f64> = data.ys().iter().map(|y| (spec.reward)(y[0])).collect();
    let (r_lo, r_hi) = min_max(&rewards);
    let (lo, hi) = (r_lo / (1.0 - spec.gamma), r_hi / (1.0 - spec.gamma));
    for link in links {
        let range = link.range();
        if !(covers(&range, lo) && covers(&range, hi)) {
            let err = Error::RangeViolation {
                count: 1,
                first: vec![],
                range: range.to_string(),
            };
            if config.strict_range {
                return Err(err);
            }
            warn!("{err}; value bounds [{lo}, {hi}] are not covered by link {link}");
        }
    }

    let components: Vec<SystemComponent> = parts
        .into_iter()
        .zip(links)
        .zip(nets)
        .map(|((data, &link), net)| SystemComponent {
            data: data.expect("checked above"),
            link,
            net,
        })
        .collect();
    let estimators = train_system(components, |_, y, est| spec.target(y[0], est), config)?;
    Ok(RlEstimate { estimators })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_ties_go_to_first() {
        assert_eq!(argmax_action(&[1.0, 1.0]), 0);
        assert_eq!(argmax_action(&[1.0, 2.0, 2.0]), 1);
        assert_eq!(argmax_action(&[3.0]), 0);
    }

    #[test]
    fn constant_reward_geometric_value() {
        let spec = RlSpec::new(vec![Ar1Model::new(0.5, 0.0, 1.0).unwrap()], Arc::new(|_| 0.3), 0.5).unwrap();
        let grid = Grid1D::uniform(-10.0, 10.0, 200).unwrap();
        let sol = solve_rl_numeric(&spec, &grid, 80).unwrap();
        for v in &sol.values[0] {
            assert!((v - 0.6).abs() < 1e-12);
        }
    }

    #[test]
    fn gamma_is_validated() {
        let m = Ar1Model::new(0.5, 0.0, 1.0).unwrap();
        assert!(RlSpec::new(vec![m], Arc::new(reward), 1.0).is_err());
        assert!(RlSpec::new(vec![], Arc::new(reward), 0.5).is_err());
    }

    #[test]
    fn missing_action_data() {
        let spec = RlSpec::reference();
        let data = PairedDataset::from_scalars(&[0.0, 1.0], &[1.0, 2.0])
            .unwrap()
            .with_labels(vec![0, 0])
            .unwrap();
        let link = LinkFamily::c1(1.0, 5.0).unwrap();
        let err = solve_rl_datadriven(
            &data,
            &spec,
            &[link, link],
            vec![ShallowNet::zeros(2, 1), ShallowNet::zeros(2, 1)],
            &TrainConfig::default(),
        )
        .unwrap_err();
        assert_eq!(err, Error::MissingActionData(vec![1]));
    }
}
