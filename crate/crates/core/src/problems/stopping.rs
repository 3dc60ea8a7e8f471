//! Markov optimal stopping with stopping cost `p`, sampling cost `q` and discount `α`.
//!
//! The optimal expected cost-to-go `U(x) = E[min(p(Y), q(Y) + α U(Y)) | X = x]`
//! is solved on a grid by quadrature and from a trajectory by training.

use std::fmt;
use std::sync::Arc;

use log::warn;

use super::ar1::{transitions, Ar1Model};
use super::costs::{sampcost, stopcost};
use super::ValueSource;
use crate::error::{Error, Result};
use crate::estimator::{train_system, SystemComponent, TrainConfig, TrainedEstimator};
use crate::links::LinkFamily;
use crate::net::ShallowNet;
use crate::oracle::{build_cdf_matrix, min_max, sup_diff, Grid1D, QuadMatrix};

pub type CostFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct StoppingSpec {
    pub dynamics: Ar1Model,
    pub p: CostFn,
    pub q: CostFn,
    pub alpha: f64,
}

impl fmt::Debug for StoppingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StoppingSpec")
            .field("dynamics", &self.dynamics)
            .field("alpha", &self.alpha)
            .finish_non_exhaustive()
    }
}

impl StoppingSpec {
    pub fn new(dynamics: Ar1Model, p: CostFn, q: CostFn, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in [0, 1], got {alpha}"
            )));
        }
        Ok(Self { dynamics, p, q, alpha })
    }

    /// AR(1) with `r = 0.9`, `s = 5`, no drift, [`stopcost`], constant sampling cost 0.1, `α = 1`.
    pub fn reference() -> Self {
        Self {
            dynamics: Ar1Model { r: 0.9, m: 0.0, s: 5.0 },
            p: Arc::new(stopcost),
            q: Arc::new(sampcost),
            alpha: 1.0,
        }
    }

    /// `min(p(y), q(y) + α u)`.
    pub fn target(&self, y: f64, u: f64) -> f64 {
        (self.p)(y).min((self.q)(y) + self.alpha * u)
    }
}

/// Quadrature solution on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppingNumeric {
    pub grid: Grid1D,
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// Sup-norm change per iteration.
    pub residuals: Vec<f64>,
    /// `(min, max)` of each iterate.
    pub ranges: Vec<(f64, f64)>,
    pub lower_tail: f64,
    pub upper_tail: f64,
}

impl StoppingNumeric {
    /// `q + U` at the grid points.
    pub fn q_plus_u(&self) -> Vec<f64> {
        self.q.iter().zip(&self.u).map(|(q, u)| q + u).collect()
    }
}

/// Clamped CDF-stencil transition matrix on the square grid.
pub fn transition_matrix(model: &Ar1Model, grid: &Grid1D) -> Result<QuadMatrix> {
    build_cdf_matrix(|y, x| model.transition_cdf(y, x), grid, grid, true)
}

/// Iterates `U_t = F · min(P, Q + α U_{t-1})` from `U_0 = P`.
pub fn solve_stopping_numeric(spec: &StoppingSpec, grid: &Grid1D, iters: usize) -> Result<StoppingNumeric> {
    let f = transition_matrix(&spec.dynamics, grid)?;
    solve_stopping_with_matrix(spec, &f, iters)
}

/// [`solve_stopping_numeric`] with a prebuilt square transition matrix.
pub fn solve_stopping_with_matrix(spec: &StoppingSpec, f: &QuadMatrix, iters: usize) -> Result<StoppingNumeric> {
    let grid = f.y_grid().clone();
    if f.x_grid() != &grid {
        return Err(Error::InvalidParameter("transition matrix must be square".into()));
    }
    let xs = grid.points();
    let p: Vec<f64> = xs.iter().map(|&x| (spec.p)(x)).collect();
    let q: Vec<f64> = xs.iter().map(|&x| (spec.q)(x)).collect();
    let mut u = p.clone();
    let mut next = vec![0.0; xs.len()];
    let mut h = vec![0.0; xs.len()];
    let mut residuals = Vec::with_capacity(iters);
    let mut ranges = Vec::with_capacity(iters);
    for t in 0..iters {
        for k in 0..xs.len() {
            h[k] = p[k].min(q[k] + spec.alpha * u[k]);
        }
        f.apply_into(&h, &mut next);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteIterate { iteration: t + 1 });
        }
        residuals.push(sup_diff(&u, &next));
        ranges.push(min_max(&next));
        std::mem::swap(&mut u, &mut next);
    }
    Ok(StoppingNumeric {
        grid,
        u,
        p,
        q,
        residuals,
        ranges,
        lower_tail: f.lower_tail(),
        upper_tail: f.upper_tail(),
    })
}

/// Trains `ω(u(x))` to approximate `U(x)` from one trajectory, recomputing the
/// targets `min(p(Y), q(Y) + α ω(u(Y)))` from the current network every iteration.
pub fn solve_stopping_datadriven(
    trajectory: &[f64],
    spec: &StoppingSpec,
    link: LinkFamily,
    net0: ShallowNet,
    config: &TrainConfig,
) -> Result<TrainedEstimator> {
    let data = transitions(trajectory)?;
    let ps: Vec<f64> = data.ys().iter().map(|y| (spec.p)(y[0])).collect();
    let (lo, hi) = min_max(&ps);
    let range = link.range();
    if !(range.closure_contains(lo) && range.closure_contains(hi)) {
        let first: Vec<usize> = ps
            .iter()
            .enumerate()
            .filter(|(_, &p)| !range.closure_contains(p))
            .map(|(i, _)| i)
            .collect();
        let err = Error::RangeViolation {
            count: first.len(),
            first: first.into_iter().take(10).collect(),
            range: range.to_string(),
        };
        if config.strict_range {
            return Err(err);
        }
        warn!("{err}; stopping costs [{lo}, {hi}] are not covered by the link range");
    }
    let component = SystemComponent { data, link, net: net0 };
    let mut trained = train_system(vec![component], |_, y, est| spec.target(y[0], est[0]), config)?;
    Ok(trained.remove(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Stop,
    Continue,
}

/// Stop iff `p(x) ≤ q(x) + α U(x)`.
pub fn stopping_rule(source: &dyn ValueSource, spec: &StoppingSpec, x: f64) -> StopDecision {
    if (spec.p)(x) <= (spec.q)(x) + spec.alpha * source.value(x) {
        StopDecision::Stop
    } else {
        StopDecision::Continue
    }
}
