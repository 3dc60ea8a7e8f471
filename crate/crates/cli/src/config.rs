//! Resolved run configuration.
//!
//! Every setting has a per-experiment default, can be overridden by a flat
//! `key = value` file, and then by command-line flags. Keys match flag names.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use condexp::optim::BatchMode;
use condexp::problems::Ar1Model;
use condexp::{LinkFamily, LrMode, PowerNormConfig, TrainConfig};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    CeA,
    CeB,
    Stopping,
    Rl,
    Lr,
    OracleCheck,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::CeA,
        Experiment::CeB,
        Experiment::Stopping,
        Experiment::Rl,
        Experiment::Lr,
        Experiment::OracleCheck,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::CeA => "ce-a",
            Experiment::CeB => "ce-b",
            Experiment::Stopping => "stopping",
            Experiment::Rl => "rl",
            Experiment::Lr => "lr",
            Experiment::OracleCheck => "oracle-check",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| CliError::Config(format!("unknown experiment `{s}`")))
    }
}

/// `lo:hi:n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl GridSpec {
    pub const fn new(lo: f64, hi: f64, n: usize) -> Self {
        Self { lo, hi, n }
    }

    pub fn build(&self) -> CliResult<condexp::Grid1D> {
        Ok(condexp::Grid1D::uniform(self.lo, self.hi, self.n)?)
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.n)
    }
}

impl FromStr for GridSpec {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let bad = || CliError::Config(format!("grid `{s}` is not of the form lo:hi:n"));
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].parse().map_err(|_| bad())?;
        let n: usize = parts[2].parse().map_err(|_| bad())?;
        if !(lo < hi) || n < 2 {
            return Err(CliError::Config(format!("grid `{s}` needs lo < hi and n ≥ 2")));
        }
        Ok(Self { lo, hi, n })
    }
}

/// Likelihood-ratio update rule as written in configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LrModeSpec {
    Gd,
    LabeledSgd,
    PairedSgd,
}

impl LrModeSpec {
    pub fn resolve(self, seed: u64) -> LrMode {
        match self {
            LrModeSpec::Gd => LrMode::Gd,
            LrModeSpec::LabeledSgd => LrMode::LabeledSgd { seed },
            LrModeSpec::PairedSgd => LrMode::PairedSgd,
        }
    }
}

impl fmt::Display for LrModeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LrModeSpec::Gd => "gd",
            LrModeSpec::LabeledSgd => "labeled-sgd",
            LrModeSpec::PairedSgd => "paired-sgd",
        })
    }
}

impl FromStr for LrModeSpec {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "gd" => Ok(LrModeSpec::Gd),
            "labeled-sgd" => Ok(LrModeSpec::LabeledSgd),
            "paired-sgd" => Ok(LrModeSpec::PairedSgd),
            _ => Err(CliError::Config(format!("unknown lr mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub samples: usize,
    pub hidden: usize,
    pub iters: usize,
    pub links: Vec<LinkFamily>,
    pub mu: f64,
    pub lambda: f64,
    pub creg: f64,
    pub mode: BatchMode,
    pub shuffle: bool,
    pub strict_range: bool,
    /// Quadrature grid of the numeric solution.
    pub grid: GridSpec,
    /// Second quadrature grid, used by `oracle-check` for the indicator model.
    pub grid_b: GridSpec,
    /// Points at which curves are reported.
    pub eval: GridSpec,
    pub numeric_iters: usize,
    pub tail_tol: f64,
    /// Largest accepted quadrature error in `oracle-check`.
    pub check_tol: f64,
    pub alpha: f64,
    pub gamma: f64,
    /// Stopping dynamics.
    pub ar: Ar1Model,
    /// Sampling cost per observation.
    pub qcost: f64,
    /// One AR(1) model per action.
    pub actions: Vec<Ar1Model>,
    pub lr_mode: LrModeSpec,
    /// Mean of the second Gaussian in the likelihood-ratio experiment.
    pub shift: f64,
    pub out: PathBuf,
}

/// Keys accepted in config files and as flags, in manifest order.
pub const KEYS: [&str; 27] = [
    "seed",
    "samples",
    "hidden",
    "iters",
    "link",
    "mu",
    "lambda",
    "creg",
    "mode",
    "shuffle",
    "strict-range",
    "grid",
    "grid-b",
    "eval",
    "numeric-iters",
    "tail-tol",
    "check-tol",
    "alpha",
    "gamma",
    "ar",
    "qcost",
    "actions",
    "lr-mode",
    "shift",
    "out",
    "experiment",
    "config",
];

impl RunConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let base = RunConfig {
            experiment,
            seed: 1,
            samples: 200,
            hidden: 50,
            iters: 2000,
            links: vec![LinkFamily::a1()],
            mu: 0.001,
            lambda: 0.99,
            creg: 0.001,
            mode: BatchMode::FullBatch,
            shuffle: false,
            strict_range: true,
            grid: GridSpec::new(-6.0, 6.0, 5000),
            grid_b: GridSpec::new(-2.0, 2.0, 5000),
            eval: GridSpec::new(-2.0, 2.0, 201),
            numeric_iters: 1000,
            tail_tol: 1e-4,
            check_tol: 1e-3,
            alpha: 1.0,
            gamma: 0.8,
            ar: Ar1Model { r: 0.9, m: 0.0, s: 5.0 },
            qcost: 0.1,
            actions: vec![
                Ar1Model { r: 0.8, m: 1.0, s: 1.0 },
                Ar1Model {
                    r: 0.8,
                    m: -1.0,
                    s: 1.0,
                },
            ],
            lr_mode: LrModeSpec::Gd,
            shift: 1.0,
            out: PathBuf::from("out").join(experiment.as_str()),
        };
        match experiment {
            Experiment::CeA => RunConfig {
                links: vec![LinkFamily::a1(), LinkFamily::a2(), LinkFamily::a3()],
                ..base
            },
            Experiment::CeB => RunConfig {
                links: vec![LinkFamily::a1(), LinkFamily::c1(-0.01, 1.01).expect("valid range")],
                grid: GridSpec::new(-2.0, 2.0, 5000),
                ..base
            },
            Experiment::Stopping => RunConfig {
                samples: 500,
                hidden: 100,
                links: vec![LinkFamily::a1(), LinkFamily::c1(0.2, 1.0).expect("valid range")],
                grid: GridSpec::new(-30.0, 30.0, 5000),
                eval: GridSpec::new(-20.0, 20.0, 501),
                ..base
            },
            Experiment::Rl => RunConfig {
                samples: 1000,
                hidden: 100,
                links: vec![LinkFamily::c1(1.0, 5.0).expect("valid range")],
                creg: 0.1,
                grid: GridSpec::new(-20.0, 20.0, 5000),
                eval: GridSpec::new(-5.0, 5.0, 501),
                ..base
            },
            Experiment::Lr => RunConfig {
                samples: 5000,
                links: vec![LinkFamily::b1(0.0).expect("valid range")],
                eval: GridSpec::new(-1.0, 2.0, 301),
                ..base
            },
            Experiment::OracleCheck => RunConfig {
                eval: GridSpec::new(-2.0, 2.0, 5000),
                ..base
            },
        }
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let value = value.trim();
        match key {
            "seed" => self.seed = parse(key, value)?,
            "samples" => self.samples = positive(key, parse(key, value)?)?,
            "hidden" => self.hidden = positive(key, parse(key, value)?)?,
            "iters" => self.iters = positive(key, parse(key, value)?)?,
            "link" => {
                self.links = value
                    .split(',')
                    .map(|l| l.trim().parse::<LinkFamily>().map_err(CliError::from))
                    .collect::<CliResult<_>>()?;
                if self.links.is_empty() {
                    return Err(CliError::Config("at least one link is required".into()));
                }
            }
            "mu" => self.mu = parse(key, value)?,
            "lambda" => self.lambda = parse(key, value)?,
            "creg" => self.creg = parse(key, value)?,
            "mode" => self.mode = value.parse().map_err(CliError::from)?,
            "shuffle" => self.shuffle = parse_bool(key, value)?,
            "strict-range" => self.strict_range = parse_bool(key, value)?,
            "grid" => self.grid = value.parse()?,
            "grid-b" => self.grid_b = value.parse()?,
            "eval" => self.eval = value.parse()?,
            "numeric-iters" => self.numeric_iters = positive(key, parse(key, value)?)?,
            "tail-tol" => self.tail_tol = parse(key, value)?,
            "check-tol" => self.check_tol = parse(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "gamma" => self.gamma = parse(key, value)?,
            "ar" => self.ar = parse_model(value)?,
            "qcost" => self.qcost = parse(key, value)?,
            "actions" => {
                self.actions = value.split(',').map(parse_model).collect::<CliResult<_>>()?;
            }
            "lr-mode" => self.lr_mode = value.parse()?,
            "shift" => self.shift = parse(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "experiment" => {
                let e: Experiment = value.parse()?;
                if e != self.experiment {
                    return Err(CliError::Config(format!(
                        "config is for `{e}` but the subcommand is `{}`",
                        self.experiment
                    )));
                }
            }
            _ => return Err(CliError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies a flat `key = value` file. Blank lines and `#` comments are ignored.
    pub fn apply_file(&mut self, path: &Path) -> CliResult<()> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
        self.apply_text(&text)
    }

    pub fn apply_text(&mut self, text: &str) -> CliResult<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> CliResult<()> {
        self.optimizer().validate()?;
        if !(self.tail_tol > 0.0) || !(self.check_tol > 0.0) {
            return Err(CliError::Config("tolerances must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(CliError::Config("alpha must lie in [0, 1]".into()));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(CliError::Config("gamma must lie in [0, 1)".into()));
        }
        if self.actions.is_empty() {
            return Err(CliError::Config("at least one action model is required".into()));
        }
        if self.experiment == Experiment::Rl && !(self.links.len() == 1 || self.links.len() == self.actions.len()) {
            return Err(CliError::Config(format!(
                "rl needs one link or one per action ({}), got {}",
                self.actions.len(),
                self.links.len()
            )));
        }
        if self.experiment == Experiment::Stopping && self.samples < 1 {
            return Err(CliError::Config("stopping needs at least one transition".into()));
        }
        Ok(())
    }

    pub fn optimizer(&self) -> PowerNormConfig {
        PowerNormConfig {
            mu: self.mu,
            lambda: self.lambda,
            c: self.creg,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            iters: self.iters,
            optim: self.optimizer(),
            mode: self.mode,
            shuffle_seed: self.shuffle.then_some(self.seed),
            strict_range: self.strict_range,
        }
    }

    /// `key=value` lines for every resolved setting, in a fixed order.
    pub fn manifest(&self) -> String {
        let links: Vec<String> = self.links.iter().map(|l| l.to_string()).collect();
        let actions: Vec<String> = self.actions.iter().map(format_model).collect();
        let mut lines = vec![
            format!("experiment={}", self.experiment),
            format!("seed={}", self.seed),
            format!("samples={}", self.samples),
            format!("hidden={}", self.hidden),
            format!("iters={}", self.iters),
            format!("link={}", links.join(",")),
            format!("mu={}", self.mu),
            format!("lambda={}", self.lambda),
            format!("creg={}", self.creg),
            format!("mode={}", self.mode),
            format!("shuffle={}", self.shuffle),
            format!("strict-range={}", self.strict_range),
            format!("grid={}", self.grid),
            format!("grid-b={}", self.grid_b),
            format!("eval={}", self.eval),
            format!("numeric-iters={}", self.numeric_iters),
            format!("tail-tol={}", self.tail_tol),
            format!("check-tol={}", self.check_tol),
            format!("alpha={}", self.alpha),
            format!("gamma={}", self.gamma),
            format!("ar={}", format_model(&self.ar)),
            format!("qcost={}", self.qcost),
            format!("actions={}", actions.join(",")),
            format!("lr-mode={}", self.lr_mode),
            format!("shift={}", self.shift),
            format!("out={}", self.out.display()),
            format!("version={}", env!("CARGO_PKG_VERSION")),
            format!("generator={}", condexp::rng::GENERATOR),
        ];
        lines.push(String::new());
        lines.join("\n")
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> CliResult<T> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("invalid value `{value}` for `{key}`")))
}

fn positive(key: &str, v: usize) -> CliResult<usize> {
    if v == 0 {
        Err(CliError::Config(format!("`{key}` must be positive")))
    } else {
        Ok(v)
    }
}

fn parse_bool(key: &str, value: &str) -> CliResult<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(CliError::Config(format!("invalid boolean `{value}` for `{key}`"))),
    }
}

/// `r:m:s`.
fn parse_model(value: &str) -> CliResult<Ar1Model> {
    let parts: Vec<&str> = value.trim().split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Config(format!(
            "AR(1) model `{value}` is not of the form r:m:s"
        )));
    }
    let r = parse("ar", parts[0])?;
    let m = parse("ar", parts[1])?;
    let s = parse("ar", parts[2])?;
    Ok(Ar1Model::new(r, m, s)?)
}

fn format_model(m: &Ar1Model) -> String {
    format!("{}:{}:{}", m.r, m.m, m.s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiment_defaults() {
        let s = RunConfig::defaults(Experiment::Stopping);
        assert_eq!(s.samples, 500);
        assert_eq!(s.hidden, 100);
        assert_eq!(s.grid, GridSpec::new(-30.0, 30.0, 5000));
        let r = RunConfig::defaults(Experiment::Rl);
        assert_eq!(r.creg, 0.1);
        assert_eq!(r.links, vec![LinkFamily::c1(1.0, 5.0).unwrap()]);
        let c = RunConfig::defaults(Experiment::CeB);
        assert_eq!(c.links[1], LinkFamily::c1(-0.01, 1.01).unwrap());
        assert_eq!(c.eval, GridSpec::new(-2.0, 2.0, 201));
    }

    #[test]
    fn file_overrides() {
        let mut c = RunConfig::defaults(Experiment::CeA);
        c.apply_text("# comment\nseed = 7\nlink = A1, C1:-1:2\n\ngrid=-3:3:11 # trailing\nshuffle=true\n")
            .unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.links.len(), 2);
        assert_eq!(c.grid, GridSpec::new(-3.0, 3.0, 11));
        assert!(c.shuffle);
        assert_eq!(c.train_config().shuffle_seed, Some(7));
    }

    #[test]
    fn rejects_bad_input() {
        let mut c = RunConfig::defaults(Experiment::CeA);
        assert!(matches!(c.set("nope", "1"), Err(CliError::Config(_))));
        assert!(c.set("samples", "0").is_err());
        assert!(c.set("grid", "1:0:5").is_err());
        assert!(c.set("experiment", "rl").is_err());
        assert!(c.apply_text("seed 3").is_err());
        assert!(c.set("link", "C1:2:1").is_err());
    }

    #[test]
    fn manifest_reparses() {
        let mut c = RunConfig::defaults(Experiment::Rl);
        c.set("actions", "0.5:1:2,0.5:-1:2,0.1:0:1").unwrap();
        c.set("link", "C1:1:5").unwrap();
        let manifest = c.manifest();
        let mut again = RunConfig::defaults(Experiment::Rl);
        let settings: String = manifest
            .lines()
            .filter(|l| !l.starts_with("version=") && !l.starts_with("generator="))
            .map(|l| format!("{l}\n"))
            .collect();
        again.apply_text(&settings).unwrap();
        assert_eq!(again, c);
    }
}
