//! Concrete problems: regression examples, optimal stopping and discounted control.

pub mod ar1;
pub mod costs;
pub mod regression;
pub mod rl;
pub mod stopping;

use crate::error::{Error, Result};
use crate::estimator::TrainedEstimator;
use crate::oracle::Grid1D;

pub use ar1::{labeled_transitions, random_actions, simulate_ar1, simulate_controlled, transitions, Ar1Model, Start};
pub use costs::{reward, sampcost, stopcost};
pub use regression::{Indicator, SignedSquare};
pub use rl::{argmax_action, solve_rl_datadriven, solve_rl_numeric, RlEstimate, RlNumeric, RlSpec};
pub use stopping::{
    solve_stopping_datadriven, solve_stopping_numeric, stopping_rule, StopDecision, StoppingNumeric, StoppingSpec,
};

/// Anything that can report an estimated value function at a state.
pub trait ValueSource {
    fn value(&self, x: f64) -> f64;
}

impl ValueSource for TrainedEstimator {
    fn value(&self, x: f64) -> f64 {
        self.predict_scalar(x)
    }
}

/// Grid samples with piecewise-linear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedValue {
    grid: Grid1D,
    values: Vec<f64>,
}

impl TabulatedValue {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        Ok(Self { grid, values })
    }
}

impl ValueSource for TabulatedValue {
    fn value(&self, x: f64) -> f64 {
        self.grid.interpolate(&self.values, x)
    }
}
