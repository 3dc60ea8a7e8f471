//! Conditional expectations, likelihood ratios and fixed-point systems of
//! conditional expectations estimated from samples with shallow ReLU networks.
//!
//! A trainer minimizes the sample cost `c(Y) φ(u(X)) + d(Y) ψ(u(X))` over the
//! network output `u`. The link pair `(φ, ψ)` is chosen so that the minimizer
//! satisfies `ω(u(x)) = E[d(Y) | X = x] / E[c(Y) | X = x]`, with `ω` mapping
//! onto the known range of the target.

pub mod error;
pub mod estimator;
pub mod links;
pub mod net;
pub mod optim;
pub mod oracle;
pub mod problems;
pub mod rng;

pub use error::{Error, Result};
pub use estimator::{
    train_cond_density_ratio, train_cond_expectation, train_likelihood_ratio, train_system, CondRatioEstimator, LrMode,
    PairedDataset, SystemComponent, TrainConfig, TrainedEstimator,
};
pub use links::{FamilyId, LinkFamily, RangeInterval};
pub use net::{GradientSet, ShallowNet};
pub use optim::{BatchMode, PowerNormConfig, PowerNormState};
pub use oracle::{Grid1D, QuadMatrix};
