//! Data-driven trainers.
//!
//! Every trainer minimizes a sample average of `c φ(u) + d ψ(u)` over the
//! network parameters. The gradient of a sample with target `d` and weight `c`
//! is `(d - c ω(u)) ρ(u) ∇u`, so at the optimum `ω(u(x))` estimates
//! `E[d(Y) | X = x] / E[c(Y) | X = x]`.

use log::warn;

use crate::error::{Error, Result};
use crate::links::LinkFamily;
use crate::net::{GradientSet, ShallowNet};
use crate::optim::{BatchMode, PowerNormConfig, PowerNormState, Scheduler};

/// Ordered `(y, x)` pairs with an optional label per pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedDataset {
    ys: Vec<Vec<f64>>,
    xs: Vec<Vec<f64>>,
    labels: Option<Vec<usize>>,
}

impl PairedDataset {
    pub fn new(ys: Vec<Vec<f64>>, xs: Vec<Vec<f64>>) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::EmptyDataset("pairs"));
        }
        if ys.len() != xs.len() {
            return Err(Error::SizeMismatch {
                left: ys.len(),
                right: xs.len(),
            });
        }
        check_uniform_dim(&xs)?;
        check_uniform_dim(&ys)?;
        Ok(Self { ys, xs, labels: None })
    }

    /// Pairs of scalars.
    pub fn from_scalars(ys: &[f64], xs: &[f64]) -> Result<Self> {
        Self::new(
            ys.iter().map(|&y| vec![y]).collect(),
            xs.iter().map(|&x| vec![x]).collect(),
        )
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::SizeMismatch {
                left: labels.len(),
                right: self.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn xs(&self) -> &[Vec<f64>] {
        &self.xs
    }

    pub fn ys(&self) -> &[Vec<f64>] {
        &self.ys
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn x_dim(&self) -> usize {
        self.xs[0].len()
    }

    /// Splits a labeled dataset into `k` per-label datasets, preserving order.
    /// Labels with no pairs come back as `None`.
    pub fn split_by_label(&self, k: usize) -> Result<Vec<Option<PairedDataset>>> {
        let labels = self
            .labels
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("dataset has no labels".into()))?;
        let mut buckets: Vec<(Vec<Vec<f64>>, Vec<Vec<f64>>)> = vec![(Vec::new(), Vec::new()); k];
        for ((y, x), &label) in self.ys.iter().zip(&self.xs).zip(labels) {
            if label >= k {
                return Err(Error::BadActionIndex {
                    index: label,
                    actions: k,
                });
            }
            buckets[label].0.push(y.clone());
            buckets[label].1.push(x.clone());
        }
        Ok(buckets
            .into_iter()
            .map(|(ys, xs)| PairedDataset::new(ys, xs).ok())
            .collect())
    }
}

fn check_uniform_dim(points: &[Vec<f64>]) -> Result<()> {
    if let Some(first) = points.first() {
        for p in points {
            if p.len() != first.len() {
                return Err(Error::Shape {
                    expected: first.len(),
                    actual: p.len(),
                });
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub iters: usize,
    pub optim: PowerNormConfig,
    pub mode: BatchMode,
    /// Reshuffle the sample order every epoch (single-sample and mini-batch modes).
    pub shuffle_seed: Option<u64>,
    /// Reject targets outside the link range instead of only warning.
    pub strict_range: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iters: 2000,
            optim: PowerNormConfig::default(),
            mode: BatchMode::FullBatch,
            shuffle_seed: None,
            strict_range: true,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        self.optim.validate()?;
        if self.iters == 0 {
            return Err(Error::InvalidParameter("iteration count must be positive".into()));
        }
        Ok(())
    }
}

/// A trained network together with its link.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedEstimator {
    pub net: ShallowNet,
    pub link: LinkFamily,
    pub config: TrainConfig,
    /// Cost at the returned parameters.
    pub final_cost: f64,
    /// Cost before each update, one entry per iteration.
    pub cost_history: Vec<f64>,
}

impl TrainedEstimator {
    /// `ω(u(x))`.
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.link.omega(self.predict_raw(x))
    }

    /// Raw network output `u(x)`.
    pub fn predict_raw(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.net.dim(), "input dimension mismatch");
        self.net.eval(x)
    }

    pub fn predict_scalar(&self, x: f64) -> f64 {
        self.predict(&[x])
    }
}

fn range_precheck(link: &LinkFamily, targets: &[f64], strict: bool) -> Result<()> {
    let range = link.range();
    let offending: Vec<usize> = targets
        .iter()
        .enumerate()
        .filter(|(_, &d)| !range.contains(d))
        .map(|(i, _)| i)
        .collect();
    if offending.is_empty() {
        return Ok(());
    }
    let err = Error::RangeViolation {
        count: offending.len(),
        first: offending.iter().copied().take(10).collect(),
        range: range.to_string(),
    };
    if strict {
        Err(err)
    } else {
        warn!("{err}; continuing because strict range checking is off");
        Ok(())
    }
}

/// Sample average of `c φ(u) + d ψ(u)`.
pub fn empirical_cost(link: &LinkFamily, outputs: &[f64], targets: &[f64], weights: Option<&[f64]>) -> f64 {
    let n = outputs.len() as f64;
    let total: f64 = outputs
        .iter()
        .zip(targets)
        .enumerate()
        .map(|(i, (&u, &d))| link.cost(u, weights.map_or(1.0, |w| w[i]), d))
        .sum();
    total / n
}

/// Summed gradient `Σ_i (d_i - c_i ω(u_i)) ρ(u_i) ∇u(x_i)` over `indices`.
pub fn ce_gradient<X: AsRef<[f64]>>(
    net: &ShallowNet,
    link: &LinkFamily,
    xs: &[X],
    targets: &[f64],
    weights: Option<&[f64]>,
    indices: &[usize],
) -> GradientSet {
    let mut grad = GradientSet::zeros_like(net);
    for &i in indices {
        let x = xs[i].as_ref();
        let u = net.eval(x);
        let c = weights.map_or(1.0, |w| w[i]);
        let coeff = (targets[i] - c * link.omega(u)) * link.rho(u);
        net.accumulate_grad(x, coeff, &mut grad);
    }
    grad
}

fn fit_targets(
    xs: &[Vec<f64>],
    targets: &[f64],
    weights: Option<&[f64]>,
    link: LinkFamily,
    mut net: ShallowNet,
    config: &TrainConfig,
) -> Result<TrainedEstimator> {
    let mut state = PowerNormState::new(&net, config.optim);
    let mut scheduler = Scheduler::new(config.mode, xs.len(), config.shuffle_seed)?;
    let mut history = Vec::with_capacity(config.iters);
    let mut outputs = vec![0.0; xs.len()];
    for t in 0..config.iters {
        for (o, x) in outputs.iter_mut().zip(xs) {
            *o = net.eval(x);
        }
        let cost = empirical_cost(&link, &outputs, targets, weights);
        if !cost.is_finite() {
            return Err(Error::NonFiniteCost { iteration: t + 1 });
        }
        history.push(cost);
        let indices = scheduler.indices(t);
        let grad = ce_gradient(&net, &link, xs, targets, weights, &indices);
        state.step(&mut net, &grad);
    }
    let outputs: Vec<f64> = xs.iter().map(|x| net.eval(x)).collect();
    let final_cost = empirical_cost(&link, &outputs, targets, weights);
    if !final_cost.is_finite() {
        return Err(Error::NonFiniteCost {
            iteration: config.iters + 1,
        });
    }
    Ok(TrainedEstimator {
        net,
        link,
        config: config.clone(),
        final_cost,
        cost_history: history,
    })
}

fn check_net_dim(net: &ShallowNet, dim: usize) -> Result<()> {
    if net.dim() != dim {
        return Err(Error::Shape {
            expected: dim,
            actual: net.dim(),
        });
    }
    Ok(())
}

/// Estimates `E[d(Y) | X] / E[c(Y) | X]` (plain `E[d(Y) | X]` when `c_fn` is `None`).
pub fn train_cond_expectation(
    data: &PairedDataset,
    d_fn: impl Fn(&[f64]) -> f64,
    c_fn: Option<&dyn Fn(&[f64]) -> f64>,
    link: LinkFamily,
    net0: ShallowNet,
    config: &TrainConfig,
) -> Result<TrainedEstimator> {
    config.validate()?;
    check_net_dim(&net0, data.x_dim())?;
    let targets: Vec<f64> = data.ys().iter().map(|y| d_fn(y)).collect();
    let weights = match c_fn {
        Some(c) => {
            let w: Vec<f64> = data.ys().iter().map(|y| c(y)).collect();
            if let Some(i) = w.iter().position(|&c| !(c > 0.0 && c.is_finite())) {
                return Err(Error::InvalidParameter(format!(
                    "weight c(Y) must be positive, got {} at index {i}",
                    w[i]
                )));
            }
            Some(w)
        }
        None => {
            range_precheck(&link, &targets, config.strict_range)?;
            None
        }
    };
    fit_targets(data.xs(), &targets, weights.as_deref(), link, net0, config)
}

/// Update rule for likelihood-ratio training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LrMode {
    /// Full-batch averages over both datasets.
    Gd,
    /// Both datasets mixed into one stream by a seeded per-epoch permutation;
    /// each iteration applies the update matching the sample's label.
    LabeledSgd { seed: u64 },
    /// One sample from each dataset per iteration; needs equal sizes.
    PairedSgd,
}

/// Cost `(1/n_g) Σ w_i φ(u(g_i)) + (1/n_f) Σ ψ(u(f_j))`.
fn two_sample_cost(link: &LinkFamily, net: &ShallowNet, g: &[Vec<f64>], g_weights: &[f64], f: &[Vec<f64>]) -> f64 {
    let g_term: f64 = g
        .iter()
        .zip(g_weights)
        .map(|(x, &w)| w * link.phi(net.eval(x)))
        .sum::<f64>()
        / g.len() as f64;
    let f_term: f64 = f.iter().map(|x| link.psi(net.eval(x))).sum::<f64>() / f.len() as f64;
    g_term + f_term
}

/// Minimizes `E_g[w(X) φ(u(X))] + E_f[ψ(u(X))]`, so `ω(u) → (f / g) / w`.
fn fit_two_sample(
    g: &[Vec<f64>],
    g_weights: &[f64],
    f: &[Vec<f64>],
    link: LinkFamily,
    mut net: ShallowNet,
    config: &TrainConfig,
    mode: LrMode,
) -> Result<TrainedEstimator> {
    let (ng, nf) = (g.len(), f.len());
    let g_coeff = |net: &ShallowNet, i: usize, scale: f64| {
        let u = net.eval(&g[i]);
        -g_weights[i] * link.omega(u) * link.rho(u) * scale
    };
    let f_coeff = |net: &ShallowNet, j: usize, scale: f64| link.rho(net.eval(&f[j])) * scale;

    let mut state = PowerNormState::new(&net, config.optim);
    let mut mixed = match mode {
        LrMode::LabeledSgd { seed } => Some(Scheduler::new(BatchMode::SingleSample, ng + nf, Some(seed))?),
        _ => None,
    };
    let mut history = Vec::with_capacity(config.iters);
    for t in 0..config.iters {
        let cost = two_sample_cost(&link, &net, g, g_weights, f);
        if !cost.is_finite() {
            return Err(Error::NonFiniteCost { iteration: t + 1 });
        }
        history.push(cost);
        let mut grad = GradientSet::zeros_like(&net);
        match mode {
            LrMode::Gd => {
                for i in 0..ng {
                    let c = g_coeff(&net, i, 1.0 / ng as f64);
                    net.accumulate_grad(&g[i], c, &mut grad);
                }
                for j in 0..nf {
                    let c = f_coeff(&net, j, 1.0 / nf as f64);
                    net.accumulate_grad(&f[j], c, &mut grad);
                }
            }
            LrMode::LabeledSgd { .. } => {
                let k = mixed.as_mut().expect("scheduler").indices(t)[0];
                if k < ng {
                    let c = g_coeff(&net, k, 1.0 / ng as f64);
                    net.accumulate_grad(&g[k], c, &mut grad);
                } else {
                    let j = k - ng;
                    let c = f_coeff(&net, j, 1.0 / nf as f64);
                    net.accumulate_grad(&f[j], c, &mut grad);
                }
            }
            LrMode::PairedSgd => {
                let i = t % ng;
                let cg = g_coeff(&net, i, 1.0);
                let cf = f_coeff(&net, i, 1.0);
                net.accumulate_grad(&g[i], cg, &mut grad);
                net.accumulate_grad(&f[i], cf, &mut grad);
            }
        }
        state.step(&mut net, &grad);
    }
    let final_cost = two_sample_cost(&link, &net, g, g_weights, f);
    if !final_cost.is_finite() {
        return Err(Error::NonFiniteCost {
            iteration: config.iters + 1,
        });
    }
    Ok(TrainedEstimator {
        net,
        link,
        config: config.clone(),
        final_cost,
        cost_history: history,
    })
}

/// Estimates the likelihood ratio `f(x) / g(x)` from samples of each density.
///
/// With `B1` and `a = 0` the raw output `u(x)` estimates `log(f(x) / g(x))`.
pub fn train_likelihood_ratio(
    data_g: &[Vec<f64>],
    data_f: &[Vec<f64>],
    link: LinkFamily,
    net0: ShallowNet,
    config: &TrainConfig,
    mode: LrMode,
) -> Result<TrainedEstimator> {
    config.validate()?;
    if data_g.is_empty() {
        return Err(Error::EmptyDataset("g"));
    }
    if data_f.is_empty() {
        return Err(Error::EmptyDataset("f"));
    }
    if mode == LrMode::PairedSgd && data_g.len() != data_f.len() {
        return Err(Error::SizeMismatch {
            left: data_g.len(),
            right: data_f.len(),
        });
    }
    check_uniform_dim(data_g)?;
    check_uniform_dim(data_f)?;
    check_net_dim(&net0, data_g[0].len())?;
    check_net_dim(&net0, data_f[0].len())?;
    let ones = vec![1.0; data_g.len()];
    fit_two_sample(data_g, &ones, data_f, link, net0, config, mode)
}

/// Two-stage estimate of `f(y | x) / g(y | x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CondRatioEstimator {
    /// Stage one: `f(x) / g(x)` on the `x` marginals.
    pub marginal: TrainedEstimator,
    /// Stage two: network over the concatenated input `(y, x)`.
    pub joint: TrainedEstimator,
}

impl CondRatioEstimator {
    pub fn predict(&self, y: &[f64], x: &[f64]) -> f64 {
        self.joint.predict(&concat(y, x))
    }

    pub fn predict_raw(&self, y: &[f64], x: &[f64]) -> f64 {
        self.joint.predict_raw(&concat(y, x))
    }
}

fn concat(y: &[f64], x: &[f64]) -> Vec<f64> {
    y.iter().chain(x).copied().collect()
}

/// Trains `L(x) = f(x)/g(x)` on the `x` marginals, then minimizes
/// `E_g[L(X) φ(u(Y, X))] + E_f[ψ(u(Y, X))]` so that `ω(u(y, x)) ≈ f(y|x) / g(y|x)`.
///
/// `net_joint0` takes the concatenated input `(y, x)`. Both stages run with
/// full-batch updates.
pub fn train_cond_density_ratio(
    data_g: &PairedDataset,
    data_f: &PairedDataset,
    link_marginal: LinkFamily,
    link_joint: LinkFamily,
    net_marginal0: ShallowNet,
    net_joint0: ShallowNet,
    config: &TrainConfig,
) -> Result<CondRatioEstimator> {
    let marginal = train_likelihood_ratio(
        data_g.xs(),
        data_f.xs(),
        link_marginal,
        net_marginal0,
        config,
        LrMode::Gd,
    )?;
    let ratios: Vec<f64> = data_g.xs().iter().map(|x| marginal.predict(x)).collect();
    let mut g_inputs = Vec::with_capacity(data_g.len());
    let mut g_weights = Vec::with_capacity(data_g.len());
    let mut dropped = 0usize;
    for ((y, x), &l) in data_g.ys().iter().zip(data_g.xs()).zip(&ratios) {
        if l.is_finite() {
            g_inputs.push(concat(y, x));
            g_weights.push(l);
        } else {
            dropped += 1;
        }
    }
    if dropped > 0 {
        warn!("{dropped} stage-one likelihood ratio estimates are non-finite; those g samples are skipped");
    }
    if g_inputs.is_empty() {
        return Err(Error::EmptyDataset("g (after dropping non-finite ratios)"));
    }
    let f_inputs: Vec<Vec<f64>> = data_f.ys().iter().zip(data_f.xs()).map(|(y, x)| concat(y, x)).collect();
    check_net_dim(&net_joint0, f_inputs[0].len())?;
    let joint = fit_two_sample(
        &g_inputs,
        &g_weights,
        &f_inputs,
        link_joint,
        net_joint0,
        config,
        LrMode::Gd,
    )?;
    Ok(CondRatioEstimator { marginal, joint })
}

/// One unknown of a fixed-point system: its dataset, link and starting network.
#[derive(Debug, Clone)]
pub struct SystemComponent {
    pub data: PairedDataset,
    pub link: LinkFamily,
    pub net: ShallowNet,
}

/// Data-driven solution of `U^j(x) = E^j[h^j(Y, U^1(Y), .., U^K(Y)) | X = x]`.
///
/// `target(j, y, estimates)` evaluates `h^j` where `estimates[ℓ]` is the current
/// `ω_ℓ(u_ℓ(y))`. Targets are recomputed from the previous parameters at every
/// iteration.
///
/// With `BatchMode::FullBatch` (or `MiniBatch`) every network steps once per
/// iteration from the same previous parameters. With `BatchMode::SingleSample`
/// all labeled pairs are mixed into one stream and each iteration updates only
/// the network that owns the current pair; the order is permuted per epoch
/// when `shuffle_seed` is set.
pub fn train_system<H>(
    components: Vec<SystemComponent>,
    target: H,
    config: &TrainConfig,
) -> Result<Vec<TrainedEstimator>>
where
    H: Fn(usize, &[f64], &[f64]) -> f64,
{
    config.validate()?;
    if components.is_empty() {
        return Err(Error::InvalidParameter("system needs at least one component".into()));
    }
    let k = components.len();
    for c in &components {
        check_net_dim(&c.net, c.data.x_dim())?;
    }
    let mut nets: Vec<ShallowNet> = components.iter().map(|c| c.net.clone()).collect();
    let links: Vec<LinkFamily> = components.iter().map(|c| c.link).collect();
    let mut states: Vec<PowerNormState> = nets.iter().map(|n| PowerNormState::new(n, config.optim)).collect();
    let mut histories: Vec<Vec<f64>> = vec![Vec::with_capacity(config.iters); k];

    let evaluate_targets = |nets: &[ShallowNet], j: usize| -> Vec<f64> {
        let mut estimates = vec![0.0; k];
        components[j]
            .data
            .ys()
            .iter()
            .map(|y| {
                for (e, (net, link)) in estimates.iter_mut().zip(nets.iter().zip(&links)) {
                    *e = link.omega(net.eval(y));
                }
                target(j, y, &estimates)
            })
            .collect()
    };

    let mixed_sgd = config.mode == BatchMode::SingleSample;
    let mut schedulers = if mixed_sgd {
        Vec::new()
    } else {
        components
            .iter()
            .map(|c| Scheduler::new(config.mode, c.data.len(), config.shuffle_seed))
            .collect::<Result<Vec<_>>>()?
    };
    // (component, index) pairs of the mixed stream, in label order.
    let stream: Vec<(usize, usize)> = if mixed_sgd {
        components
            .iter()
            .enumerate()
            .flat_map(|(j, c)| (0..c.data.len()).map(move |i| (j, i)))
            .collect()
    } else {
        Vec::new()
    };
    let mut stream_scheduler = if mixed_sgd {
        Some(Scheduler::new(
            BatchMode::SingleSample,
            stream.len(),
            config.shuffle_seed,
        )?)
    } else {
        None
    };

    for t in 0..config.iters {
        let targets: Vec<Vec<f64>> = (0..k).map(|j| evaluate_targets(&nets, j)).collect();
        for j in 0..k {
            let xs = components[j].data.xs();
            let outputs: Vec<f64> = xs.iter().map(|x| nets[j].eval(x)).collect();
            let cost = empirical_cost(&links[j], &outputs, &targets[j], None);
            if !cost.is_finite() {
                return Err(Error::NonFiniteCost { iteration: t + 1 });
            }
            histories[j].push(cost);
        }
        if let Some(sched) = stream_scheduler.as_mut() {
            let (j, i) = stream[sched.indices(t)[0]];
            let grad = ce_gradient(&nets[j], &links[j], components[j].data.xs(), &targets[j], None, &[i]);
            states[j].step(&mut nets[j], &grad);
        } else {
            let grads: Vec<GradientSet> = (0..k)
                .map(|j| {
                    let idx = schedulers[j].indices(t);
                    ce_gradient(&nets[j], &links[j], components[j].data.xs(), &targets[j], None, &idx)
                })
                .collect();
            for ((net, state), grad) in nets.iter_mut().zip(states.iter_mut()).zip(&grads) {
                state.step(net, grad);
            }
        }
    }

    let final_targets: Vec<Vec<f64>> = (0..k).map(|j| evaluate_targets(&nets, j)).collect();
    nets.into_iter()
        .zip(links)
        .zip(histories)
        .enumerate()
        .map(|(j, ((net, link), history))| {
            let outputs: Vec<f64> = components[j].data.xs().iter().map(|x| net.eval(x)).collect();
            let final_cost = empirical_cost(&link, &outputs, &final_targets[j], None);
            if !final_cost.is_finite() {
                return Err(Error::NonFiniteCost {
                    iteration: config.iters + 1,
                });
            }
            Ok(TrainedEstimator {
                net,
                link,
                config: config.clone(),
                final_cost,
                cost_history: history,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short_config(iters: usize) -> TrainConfig {
        TrainConfig {
            iters,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn predict_on_zero_network() {
        let est = |link| TrainedEstimator {
            net: ShallowNet::zeros(3, 1),
            link,
            config: TrainConfig::default(),
            final_cost: 0.0,
            cost_history: vec![],
        };
        assert_eq!(est(LinkFamily::a1()).predict(&[0.4]), 0.0);
        assert_eq!(est(LinkFamily::c1(0.0, 1.0).unwrap()).predict(&[0.4]), 0.5);
        assert_eq!(est(LinkFamily::b1(0.0).unwrap()).predict(&[0.4]), 1.0);
    }

    #[test]
    fn dataset_validation() {
        assert!(matches!(
            PairedDataset::from_scalars(&[], &[]),
            Err(Error::EmptyDataset(_))
        ));
        assert!(PairedDataset::from_scalars(&[1.0], &[1.0, 2.0]).is_err());
        assert!(PairedDataset::new(vec![vec![1.0], vec![2.0]], vec![vec![1.0], vec![2.0, 3.0]]).is_err());
    }

    #[test]
    fn split_by_label_preserves_order() {
        let data = PairedDataset::from_scalars(&[1.0, 2.0, 3.0, 4.0], &[0.1, 0.2, 0.3, 0.4])
            .unwrap()
            .with_labels(vec![1, 0, 1, 1])
            .unwrap();
        let parts = data.split_by_label(3).unwrap();
        assert_eq!(parts[0].as_ref().unwrap().ys(), &[vec![2.0]]);
        assert_eq!(parts[1].as_ref().unwrap().xs(), &[vec![0.1], vec![0.3], vec![0.4]]);
        assert!(parts[2].is_none());
        assert!(data.split_by_label(1).is_err());
    }

    #[test]
    fn range_violation_lists_indices() {
        let data = PairedDataset::from_scalars(&[0.5, 1.0, 0.0, 0.3], &[0.0, 1.0, 2.0, 3.0]).unwrap();
        let link = LinkFamily::c1(0.0, 1.0).unwrap();
        let err =
            train_cond_expectation(&data, |y| y[0], None, link, ShallowNet::zeros(2, 1), &short_config(3)).unwrap_err();
        match err {
            Error::RangeViolation { count, first, .. } => {
                assert_eq!(count, 2);
                assert_eq!(first, vec![1, 2]);
            }
            other => panic!("unexpected {other:?}"),
        }
        let lenient = TrainConfig {
            strict_range: false,
            ..short_config(3)
        };
        assert!(train_cond_expectation(&data, |y| y[0], None, link, ShallowNet::zeros(2, 1), &lenient).is_ok());
    }

    #[test]
    fn non_finite_cost_aborts() {
        // A3 grows exponentially, so a large output bias overflows the cost.
        let data = PairedDataset::from_scalars(&[1.0], &[0.0]).unwrap();
        let net = ShallowNet::from_parts(1, vec![0.0], vec![0.0], vec![0.0], 2000.0).unwrap();
        let err = train_cond_expectation(&data, |y| y[0], None, LinkFamily::a3(), net, &short_config(5)).unwrap_err();
        assert_eq!(err, Error::NonFiniteCost { iteration: 1 });
    }

    #[test]
    fn nonpositive_weight_is_rejected() {
        let data = PairedDataset::from_scalars(&[1.0, -1.0], &[0.0, 1.0]).unwrap();
        let c = |y: &[f64]| y[0];
        let err = train_cond_expectation(
            &data,
            |_| 1.0,
            Some(&c),
            LinkFamily::a1(),
            ShallowNet::zeros(1, 1),
            &short_config(2),
        );
        assert!(matches!(err, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn full_batch_gradient_is_sum_of_single_samples() {
        let net = ShallowNet::init(12, 1, 4);
        let link = LinkFamily::c1(-0.5, 2.0).unwrap();
        let xs: Vec<Vec<f64>> = (0..9).map(|i| vec![-1.0 + 0.25 * i as f64]).collect();
        let targets: Vec<f64> = (0..9).map(|i| 0.1 * i as f64).collect();
        let all: Vec<usize> = (0..9).collect();
        let full = ce_gradient(&net, &link, &xs, &targets, None, &all);
        let mut summed = GradientSet::zeros_like(&net);
        for i in 0..9 {
            summed.add_assign(&ce_gradient(&net, &link, &xs, &targets, None, &[i]));
        }
        for (a, b) in full.to_flat().iter().zip(summed.to_flat()) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn likelihood_ratio_input_checks() {
        let g = vec![vec![0.0], vec![1.0]];
        let f = vec![vec![0.5]];
        let link = LinkFamily::b1(0.0).unwrap();
        let net = ShallowNet::zeros(2, 1);
        let cfg = short_config(2);
        assert_eq!(
            train_likelihood_ratio(&[], &f, link, net.clone(), &cfg, LrMode::Gd).unwrap_err(),
            Error::EmptyDataset("g")
        );
        assert_eq!(
            train_likelihood_ratio(&g, &[], link, net.clone(), &cfg, LrMode::Gd).unwrap_err(),
            Error::EmptyDataset("f")
        );
        assert!(matches!(
            train_likelihood_ratio(&g, &f, link, net.clone(), &cfg, LrMode::PairedSgd),
            Err(Error::SizeMismatch { .. })
        ));
        assert!(train_likelihood_ratio(&g, &f, link, net, &cfg, LrMode::LabeledSgd { seed: 1 }).is_ok());
    }

    #[test]
    fn cost_history_has_one_entry_per_iteration() {
        let data = PairedDataset::from_scalars(&[0.2, 0.4, 0.6], &[0.0, 0.5, 1.0]).unwrap();
        let est = train_cond_expectation(
            &data,
            |y| y[0],
            None,
            LinkFamily::a1(),
            ShallowNet::init(4, 1, 0),
            &short_config(17),
        )
        .unwrap();
        assert_eq!(est.cost_history.len(), 17);
        assert!(est.final_cost.is_finite());
    }
}
