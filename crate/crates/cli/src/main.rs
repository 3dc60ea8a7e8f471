use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use condexp_cli::{compare, resolve_config, CliError, CliResult, CompareSpec, Experiment, Interval, Metric, Table};

#[derive(Parser)]
#[command(name = "condexp", version, about = "Data-driven conditional expectation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Signed-square regression with the unbounded links.
    CeA(RunArgs),
    /// Indicator regression, unbounded vs range-aware link.
    CeB(RunArgs),
    /// Optimal stopping of an AR(1) process.
    Stopping(RunArgs),
    /// Discounted control over AR(1) models.
    Rl(RunArgs),
    /// Likelihood ratio between two Gaussians.
    Lr(RunArgs),
    /// Quadrature against closed-form conditional expectations.
    OracleCheck(RunArgs),
    /// Error metric between two curve files sharing their grid column.
    Compare(CompareArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat key = value file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    seed: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    samples: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    hidden: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    iters: Option<String>,
    /// Comma-separated links, e.g. `A1,C1:-0.01:1.01`.
    #[arg(long, allow_hyphen_values = true)]
    link: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    creg: Option<String>,
    /// `full`, `single` or `mini:m`.
    #[arg(long, allow_hyphen_values = true)]
    mode: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    shuffle: Option<String>,
    /// Range and tail-mass checks fail the run instead of warning.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    strict_range: Option<String>,
    /// Quadrature grid `lo:hi:n`.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    grid_b: Option<String>,
    /// Evaluation grid `lo:hi:n`.
    #[arg(long, allow_hyphen_values = true)]
    eval: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    numeric_iters: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    tail_tol: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    check_tol: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<String>,
    /// Stopping dynamics `r:m:s`.
    #[arg(long, allow_hyphen_values = true)]
    ar: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    qcost: Option<String>,
    /// Comma-separated `r:m:s` models, one per action.
    #[arg(long, allow_hyphen_values = true)]
    actions: Option<String>,
    /// `gd`, `labeled-sgd` or `paired-sgd`.
    #[arg(long, allow_hyphen_values = true)]
    lr_mode: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    shift: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn overrides(&self) -> Vec<(String, String)> {
        let pairs: [(&str, &Option<String>); 24] = [
            ("seed", &self.seed),
            ("samples", &self.samples),
            ("hidden", &self.hidden),
            ("iters", &self.iters),
            ("link", &self.link),
            ("mu", &self.mu),
            ("lambda", &self.lambda),
            ("creg", &self.creg),
            ("mode", &self.mode),
            ("shuffle", &self.shuffle),
            ("strict-range", &self.strict_range),
            ("grid", &self.grid),
            ("grid-b", &self.grid_b),
            ("eval", &self.eval),
            ("numeric-iters", &self.numeric_iters),
            ("tail-tol", &self.tail_tol),
            ("check-tol", &self.check_tol),
            ("alpha", &self.alpha),
            ("gamma", &self.gamma),
            ("ar", &self.ar),
            ("qcost", &self.qcost),
            ("actions", &self.actions),
            ("lr-mode", &self.lr_mode),
            ("shift", &self.shift),
        ];
        let mut out: Vec<(String, String)> = pairs
            .iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect();
        if let Some(path) = &self.out {
            out.push(("out".to_string(), path.display().to_string()));
        }
        out
    }
}

#[derive(Args)]
struct CompareArgs {
    curve: PathBuf,
    reference: PathBuf,
    /// Column of the curve file.
    #[arg(long)]
    col: String,
    /// Column of the reference file; defaults to `--col`.
    #[arg(long, allow_hyphen_values = true)]
    ref_col: Option<String>,
    /// Restrict to grid values in `lo:hi`.
    #[arg(long, allow_hyphen_values = true)]
    interval: Option<String>,
    #[arg(long, default_value = "rmse")]
    metric: String,
    /// Fail unless the metric is at most this value.
    #[arg(long)]
    threshold: Option<f64>,
}

fn run_experiment(experiment: Experiment, args: &RunArgs) -> CliResult<()> {
    let config = resolve_config(experiment, args.config.as_deref(), &args.overrides())?;
    let output = condexp_cli::run(&config)?;
    for line in &output.report {
        println!("{line}");
    }
    println!("wrote {}", config.out.display());
    Ok(())
}

fn run_compare(args: &CompareArgs) -> CliResult<()> {
    let spec = CompareSpec {
        column: args.col.clone(),
        ref_column: args.ref_col.clone().unwrap_or_else(|| args.col.clone()),
        interval: args.interval.as_deref().map(str::parse::<Interval>).transpose()?,
        metric: args.metric.parse::<Metric>()?,
    };
    let value = compare(&Table::read(&args.curve)?, &Table::read(&args.reference)?, &spec)?;
    println!("{}={value:.6e}", spec.metric);
    if let Some(threshold) = args.threshold {
        if !(value <= threshold) {
            return Err(CliError::Check(format!(
                "{} {value:.6e} exceeds {threshold:.6e}",
                spec.metric
            )));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error: ConfigError: {first}");
            return ExitCode::from(2);
        }
    };
    let result = match &cli.command {
        Command::CeA(a) => run_experiment(Experiment::CeA, a),
        Command::CeB(a) => run_experiment(Experiment::CeB, a),
        Command::Stopping(a) => run_experiment(Experiment::Stopping, a),
        Command::Rl(a) => run_experiment(Experiment::Rl, a),
        Command::Lr(a) => run_experiment(Experiment::Lr, a),
        Command::OracleCheck(a) => run_experiment(Experiment::OracleCheck, a),
        Command::Compare(a) => run_compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("error: {}: {message}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
