//! Experiment runners. Each produces a curve table, an optional cost table and
//! a few report lines; [`run`] writes them next to the manifest.

use std::fs;
use std::sync::Arc;

use log::{info, warn};
use rand::Rng;
use rand_distr::StandardNormal;

use condexp::estimator::TrainedEstimator;
use condexp::oracle::{build_cdf_matrix, cond_expectation_numeric};
use condexp::problems::regression::{Indicator, SignedSquare};
use condexp::problems::rl::solve_rl_with_matrices;
use condexp::problems::stopping::{solve_stopping_with_matrix, transition_matrix};
use condexp::problems::{
    labeled_transitions, random_actions, reward, simulate_ar1, simulate_controlled, solve_rl_datadriven,
    solve_stopping_datadriven, stopcost, Ar1Model, RlSpec, Start, StoppingSpec,
};
use condexp::{
    rng, train_cond_expectation, train_likelihood_ratio, Grid1D, LinkFamily, PairedDataset, QuadMatrix, ShallowNet,
};

use crate::config::{Experiment, RunConfig};
use crate::error::{CliError, CliResult};
use crate::table::Table;

/// Everything one run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub curve: Table,
    pub cost: Option<Table>,
    /// Human-readable summary lines.
    pub report: Vec<String>,
}

/// Runs the experiment and writes `curve.csv`, `cost.csv` and `manifest.txt` under `config.out`.
pub fn run(config: &RunConfig) -> CliResult<RunOutput> {
    let output = execute(config)?;
    fs::create_dir_all(&config.out).map_err(|e| CliError::io(format!("creating {}", config.out.display()), e))?;
    output.curve.write(&config.out.join("curve.csv"))?;
    if let Some(cost) = &output.cost {
        cost.write(&config.out.join("cost.csv"))?;
    }
    let manifest = config.out.join("manifest.txt");
    fs::write(&manifest, config.manifest()).map_err(|e| CliError::io(format!("writing {}", manifest.display()), e))?;
    Ok(output)
}

/// Runs the experiment without touching the filesystem.
pub fn execute(config: &RunConfig) -> CliResult<RunOutput> {
    config.validate()?;
    info!("running {} with seed {}", config.experiment, config.seed);
    match config.experiment {
        Experiment::CeA => regression(
            config,
            |x| SignedSquare.exact(x),
            SignedSquare.sample(config.samples, config.seed)?,
        ),
        Experiment::CeB => regression(
            config,
            |x| Indicator.exact(x),
            Indicator.sample(config.samples, config.seed)?,
        ),
        Experiment::Stopping => stopping(config),
        Experiment::Rl => control(config),
        Experiment::Lr => likelihood_ratio(config),
        Experiment::OracleCheck => oracle_check(config),
    }
}

/// Column suffixes for the links: the family id, or the full spelling when ids repeat.
fn link_labels(links: &[LinkFamily]) -> Vec<String> {
    let ids: Vec<String> = links.iter().map(|l| l.id().to_string()).collect();
    let unique = (1..ids.len()).all(|i| !ids[..i].contains(&ids[i]));
    if unique {
        ids
    } else {
        links.iter().map(|l| l.to_string()).collect()
    }
}

fn cost_table(names: &[String], estimators: &[&TrainedEstimator]) -> Table {
    let iters = estimators[0].cost_history.len();
    let mut table = Table::new();
    table.push_integer("iteration", (1..=iters).map(|t| t as f64).collect());
    for (name, e) in names.iter().zip(estimators) {
        table.push(format!("cost_{name}"), e.cost_history.clone());
    }
    table
}

fn rmse(a: &[f64], b: &[f64]) -> f64 {
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (sum / a.len() as f64).sqrt()
}

fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Largest mass that one transition from a grid state inside the evaluation
/// interval puts outside the quadrature grid.
fn reported_tail(model: &Ar1Model, grid: &Grid1D, eval: &Grid1D) -> f64 {
    let (y_lo, y_hi) = grid.bounds();
    let (x_lo, x_hi) = eval.bounds();
    grid.points()
        .iter()
        .filter(|&&x| x_lo <= x && x <= x_hi)
        .map(|&x| model.transition_cdf(y_lo, x).max(1.0 - model.transition_cdf(y_hi, x)))
        .fold(0.0, f64::max)
}

fn check_tail(config: &RunConfig, model: &Ar1Model, grid: &Grid1D) -> CliResult<f64> {
    let tail = reported_tail(model, grid, &config.eval.build()?);
    if tail > config.tail_tol {
        let err = condexp::Error::TailMass {
            mass: tail,
            tolerance: config.tail_tol,
        };
        if config.strict_range {
            return Err(err.into());
        }
        warn!("{err}");
    }
    Ok(tail)
}

fn regression(config: &RunConfig, exact: impl Fn(f64) -> f64, data: PairedDataset) -> CliResult<RunOutput> {
    let train = config.train_config();
    let xs = config.eval.build()?.points().to_vec();
    let truth: Vec<f64> = xs.iter().map(|&x| exact(x)).collect();
    let labels = link_labels(&config.links);
    let mut curve = Table::new();
    curve.push("x", xs.clone());
    curve.push("exact", truth.clone());
    let mut estimators = Vec::with_capacity(config.links.len());
    let mut report = Vec::new();
    for (link, label) in config.links.iter().zip(&labels) {
        let net0 = ShallowNet::init(config.hidden, 1, config.seed);
        let est = train_cond_expectation(&data, |y| y[0], None, *link, net0, &train)?;
        let values: Vec<f64> = xs.iter().map(|&x| est.predict_scalar(x)).collect();
        report.push(format!(
            "est_{label} rmse={:.6e} final_cost={:.6e}",
            rmse(&values, &truth),
            est.final_cost
        ));
        curve.push(format!("est_{label}"), values);
        estimators.push(est);
    }
    let refs: Vec<&TrainedEstimator> = estimators.iter().collect();
    Ok(RunOutput {
        curve,
        cost: Some(cost_table(&labels, &refs)),
        report,
    })
}

fn stopping(config: &RunConfig) -> CliResult<RunOutput> {
    let spec = StoppingSpec::new(
        config.ar,
        Arc::new(stopcost),
        Arc::new({
            let q = config.qcost;
            move |_| q
        }),
        config.alpha,
    )?;
    let grid = config.grid.build()?;
    let tail = check_tail(config, &spec.dynamics, &grid)?;
    let f = transition_matrix(&spec.dynamics, &grid)?;
    let numeric = solve_stopping_with_matrix(&spec, &f, config.numeric_iters)?;
    drop(f);

    let trajectory = simulate_ar1(&spec.dynamics, config.samples, Start::Stationary, config.seed)?;
    let train = config.train_config();
    let labels = link_labels(&config.links);
    let xs = config.eval.build()?.points().to_vec();
    let mut curve = Table::new();
    curve.push("x", xs.clone());
    curve.push("p", xs.iter().map(|&x| (spec.p)(x)).collect());
    let q_plus_u: Vec<f64> = xs
        .iter()
        .map(|&x| (spec.q)(x) + numeric.grid.interpolate(&numeric.u, x))
        .collect();
    curve.push("qU_numeric", q_plus_u.clone());
    let (lo, hi) = numeric.ranges.last().copied().unwrap_or((f64::NAN, f64::NAN));
    let mut report = vec![format!(
        "numeric residual={:.6e} range=[{lo:.6}, {hi:.6}] tail={tail:.3e}",
        numeric.residuals.last().copied().unwrap_or(f64::NAN),
    )];
    let mut estimators = Vec::with_capacity(config.links.len());
    for (link, label) in config.links.iter().zip(&labels) {
        let net0 = ShallowNet::init(config.hidden, 1, config.seed);
        let est = solve_stopping_datadriven(&trajectory, &spec, *link, net0, &train)?;
        let values: Vec<f64> = xs.iter().map(|&x| (spec.q)(x) + est.predict_scalar(x)).collect();
        report.push(format!("qU_{label} rmse_vs_numeric={:.6e}", rmse(&values, &q_plus_u)));
        curve.push(format!("qU_{label}"), values);
        estimators.push(est);
    }
    let refs: Vec<&TrainedEstimator> = estimators.iter().collect();
    Ok(RunOutput {
        curve,
        cost: Some(cost_table(&labels, &refs)),
        report,
    })
}

fn control(config: &RunConfig) -> CliResult<RunOutput> {
    let spec = RlSpec::new(config.actions.clone(), Arc::new(reward), config.gamma)?;
    let k = spec.num_actions();
    let grid = config.grid.build()?;
    let mut tail = 0.0f64;
    for model in &spec.actions {
        tail = tail.max(check_tail(config, model, &grid)?);
    }
    let matrices = spec
        .actions
        .iter()
        .map(|m| transition_matrix(m, &grid))
        .collect::<condexp::Result<Vec<_>>>()?;
    let refs: Vec<&QuadMatrix> = matrices.iter().collect();
    let numeric = solve_rl_with_matrices(&spec, &refs, config.numeric_iters)?;
    drop(matrices);

    let actions = random_actions(k, config.samples, config.seed);
    let trajectory = simulate_controlled(&spec.actions, &actions, 0.0, config.seed)?;
    let data = labeled_transitions(&trajectory, &actions)?;
    let links: Vec<LinkFamily> = if config.links.len() == 1 {
        vec![config.links[0]; k]
    } else {
        config.links.clone()
    };
    let mut init = rng::substream(config.seed, "net-init");
    let nets: Vec<ShallowNet> = (0..k)
        .map(|_| ShallowNet::init_with(config.hidden, 1, &mut init))
        .collect();
    let estimate = solve_rl_datadriven(&data, &spec, &links, nets, &config.train_config())?;

    let xs = config.eval.build()?.points().to_vec();
    let mut curve = Table::new();
    curve.push("s", xs.clone());
    let mut num_columns = Vec::with_capacity(k);
    for (j, values) in numeric.values.iter().enumerate() {
        let col: Vec<f64> = xs.iter().map(|&s| numeric.grid.interpolate(values, s)).collect();
        curve.push(format!("U{}_num", j + 1), col.clone());
        num_columns.push(col);
    }
    let est_values: Vec<Vec<f64>> = xs.iter().map(|&s| estimate.values(s)).collect();
    let mut report = vec![format!(
        "numeric residual={:.6e} tail={tail:.3e}",
        numeric.residuals.last().copied().unwrap_or(f64::NAN),
    )];
    for j in 0..k {
        let col: Vec<f64> = est_values.iter().map(|v| v[j]).collect();
        report.push(format!(
            "U{}_est maxabs_vs_numeric={:.6e}",
            j + 1,
            max_abs(&col, &num_columns[j])
        ));
        curve.push(format!("U{}_est", j + 1), col);
    }
    curve.push_integer(
        "action",
        xs.iter().map(|&s| (estimate.optimal_action(s) + 1) as f64).collect(),
    );
    let names: Vec<String> = (1..=k).map(|j| format!("U{j}")).collect();
    let refs: Vec<&TrainedEstimator> = estimate.estimators.iter().collect();
    Ok(RunOutput {
        curve,
        cost: Some(cost_table(&names, &refs)),
        report,
    })
}

fn likelihood_ratio(config: &RunConfig) -> CliResult<RunOutput> {
    let mut g_rng = rng::substream(config.seed, "lr/g");
    let mut f_rng = rng::substream(config.seed, "lr/f");
    let g: Vec<Vec<f64>> = (0..config.samples)
        .map(|_| vec![g_rng.sample(StandardNormal)])
        .collect();
    let f: Vec<Vec<f64>> = (0..config.samples)
        .map(|_| vec![config.shift + f_rng.sample::<f64, _>(StandardNormal)])
        .collect();
    let train = config.train_config();
    let mode = config.lr_mode.resolve(config.seed);
    let shift = config.shift;
    let xs = config.eval.build()?.points().to_vec();
    let truth: Vec<f64> = xs.iter().map(|&x| shift * x - 0.5 * shift * shift).collect();
    let labels = link_labels(&config.links);
    let mut curve = Table::new();
    curve.push("x", xs.clone());
    curve.push("exact", truth.clone());
    let mut estimators = Vec::with_capacity(config.links.len());
    let mut report = Vec::new();
    for (link, label) in config.links.iter().zip(&labels) {
        let net0 = ShallowNet::init(config.hidden, 1, config.seed);
        let est = train_likelihood_ratio(&g, &f, *link, net0, &train, mode)?;
        let values: Vec<f64> = xs.iter().map(|&x| est.predict_scalar(x).ln()).collect();
        report.push(format!("est_{label} rmse={:.6e}", rmse(&values, &truth)));
        curve.push(format!("est_{label}"), values);
        estimators.push(est);
    }
    let refs: Vec<&TrainedEstimator> = estimators.iter().collect();
    Ok(RunOutput {
        curve,
        cost: Some(cost_table(&labels, &refs)),
        report,
    })
}

/// Quadrature against the closed forms of both regression models.
fn oracle_check(config: &RunConfig) -> CliResult<RunOutput> {
    let xs_grid = config.eval.build()?;
    let xs = xs_grid.points().to_vec();
    let mut curve = Table::new();
    curve.push("x", xs.clone());
    let mut report = Vec::new();
    let mut failures = Vec::new();
    let cases: [(&str, condexp::Grid1D, &dyn Fn(f64, f64) -> f64, &dyn Fn(f64) -> f64); 2] = [
        ("a", config.grid.build()?, &|y, x| SignedSquare.cond_cdf(y, x), &|x| {
            SignedSquare.exact(x)
        }),
        ("b", config.grid_b.build()?, &|y, x| Indicator.cond_cdf(y, x), &|x| {
            Indicator.exact(x)
        }),
    ];
    for (name, y_grid, cdf, exact) in cases {
        let f = build_cdf_matrix(cdf, &y_grid, &xs_grid, true)?;
        let numeric = cond_expectation_numeric(&f, y_grid.points())?;
        let truth: Vec<f64> = xs.iter().map(|&x| exact(x)).collect();
        let err = max_abs(&numeric, &truth);
        let row_dev = f.max_row_sum_deviation();
        report.push(format!(
            "example {name}: max_abs_error={err:.6e} lower_tail={:.6e} upper_tail={:.6e} row_sum_deviation={row_dev:.6e}",
            f.lower_tail(),
            f.upper_tail()
        ));
        if f.max_tail() > config.tail_tol {
            failures.push(format!(
                "example {name} tail mass {:.3e} exceeds {:.3e}",
                f.max_tail(),
                config.tail_tol
            ));
        }
        if row_dev > 1e-12 {
            failures.push(format!("example {name} row sums deviate by {row_dev:.3e}"));
        }
        if !(err <= config.check_tol) {
            failures.push(format!(
                "example {name} error {err:.3e} exceeds {:.3e}",
                config.check_tol
            ));
        }
        curve.push(format!("exact_{name}"), truth);
        curve.push(format!("numeric_{name}"), numeric);
    }
    if !failures.is_empty() {
        for line in &report {
            println!("{line}");
        }
        return Err(CliError::Check(failures.join("; ")));
    }
    Ok(RunOutput {
        curve,
        cost: None,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::GridSpec;

    #[test]
    fn labels_fall_back_to_full_spelling() {
        let links = [LinkFamily::a1(), LinkFamily::c1(0.0, 1.0).unwrap()];
        assert_eq!(link_labels(&links), vec!["A1", "C1"]);
        let twice = [LinkFamily::c1(0.0, 1.0).unwrap(), LinkFamily::c1(0.0, 2.0).unwrap()];
        assert_eq!(link_labels(&twice), vec!["C1:0:1", "C1:0:2"]);
    }

    #[test]
    fn small_ce_a_run_has_expected_columns() {
        let mut c = RunConfig::defaults(Experiment::CeA);
        c.samples = 30;
        c.hidden = 5;
        c.iters = 20;
        c.eval = GridSpec::new(-2.0, 2.0, 11);
        let out = execute(&c).unwrap();
        assert_eq!(out.curve.names(), ["x", "exact", "est_A1", "est_A2", "est_A3"]);
        assert_eq!(out.curve.rows(), 11);
        let cost = out.cost.unwrap();
        assert_eq!(cost.rows(), 20);
        assert_eq!(cost.names()[0], "iteration");
        assert_eq!(execute(&c).unwrap().curve.to_csv(), out.curve.to_csv());
    }

    #[test]
    fn strict_tail_check_rejects_narrow_grid() {
        let mut c = RunConfig::defaults(Experiment::Stopping);
        c.grid = GridSpec::new(-22.0, 22.0, 50);
        c.numeric_iters = 2;
        let err = execute(&c).unwrap_err();
        assert_eq!(err.category(), "TailMassWarning");
        c.strict_range = false;
        c.samples = 20;
        c.hidden = 3;
        c.iters = 2;
        c.eval = GridSpec::new(-5.0, 5.0, 5);
        c.links = vec![LinkFamily::c1(0.2, 1.0).unwrap()];
        assert!(execute(&c).is_ok());
    }

    #[test]
    fn only_reported_rows_count_towards_the_tail() {
        let model = Ar1Model::new(0.9, 0.0, 5.0).unwrap();
        let grid = Grid1D::uniform(-30.0, 30.0, 601).unwrap();
        let wide = Grid1D::uniform(-30.0, 30.0, 3).unwrap();
        let reported = Grid1D::uniform(-20.0, 20.0, 3).unwrap();
        assert!(reported_tail(&model, &grid, &wide) > 0.05);
        assert!(reported_tail(&model, &grid, &reported) < 1e-7);
    }

    #[test]
    fn oracle_check_fails_on_coarse_grid() {
        let mut c = RunConfig::defaults(Experiment::OracleCheck);
        c.grid = GridSpec::new(-6.0, 6.0, 40);
        c.grid_b = GridSpec::new(-2.0, 2.0, 40);
        c.eval = GridSpec::new(-2.0, 2.0, 21);
        assert_eq!(execute(&c).unwrap_err().category(), "CheckFailed");
    }
}
