//! Error metrics between two curve files that share their first (grid) column.

use std::fmt;
use std::str::FromStr;

use crate::error::{CliError, CliResult};
use crate::table::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Rmse,
    MaxAbs,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Rmse => "rmse",
            Metric::MaxAbs => "maxabs",
        })
    }
}

impl FromStr for Metric {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "rmse" => Ok(Metric::Rmse),
            "maxabs" => Ok(Metric::MaxAbs),
            _ => Err(CliError::Config(format!(
                "unknown metric `{s}` (expected rmse or maxabs)"
            ))),
        }
    }
}

/// Closed interval `lo:hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

impl FromStr for Interval {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let bad = || CliError::Config(format!("interval `{s}` is not of the form lo:hi"));
        let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        if !(lo <= hi) {
            return Err(bad());
        }
        Ok(Self { lo, hi })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareSpec {
    pub column: String,
    pub ref_column: String,
    pub interval: Option<Interval>,
    pub metric: Metric,
}

fn named<'a>(table: &'a Table, name: &str, which: &str) -> CliResult<&'a [f64]> {
    table
        .column(name)
        .ok_or_else(|| CliError::Config(format!("{which} file has no column `{name}`")))
}

fn same_point(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// The metric over rows whose grid value lies in the interval.
pub fn compare(curve: &Table, reference: &Table, spec: &CompareSpec) -> CliResult<f64> {
    if curve.names().is_empty() || reference.names().is_empty() {
        return Err(CliError::Csv("file has no columns".into()));
    }
    let grid = curve.column_at(0);
    let ref_grid = reference.column_at(0);
    for row in 0..grid.len().max(ref_grid.len()) {
        match (grid.get(row), ref_grid.get(row)) {
            (Some(&a), Some(&b)) if same_point(a, b) => {}
            (a, b) => {
                let show = |v: Option<&f64>| v.map_or_else(|| "missing".to_string(), |v| v.to_string());
                return Err(CliError::GridMismatch {
                    row: row + 1,
                    left: show(a),
                    right: show(b),
                });
            }
        }
    }
    let values = named(curve, &spec.column, "curve")?;
    let reference_values = named(reference, &spec.ref_column, "reference")?;
    let diffs: Vec<f64> = grid
        .iter()
        .zip(values.iter().zip(reference_values))
        .filter(|(x, _)| spec.interval.map_or(true, |i| i.contains(**x)))
        .map(|(_, (a, b))| a - b)
        .collect();
    if diffs.is_empty() {
        return Err(CliError::Config("no grid points fall inside the interval".into()));
    }
    Ok(match spec.metric {
        Metric::Rmse => (diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64).sqrt(),
        Metric::MaxAbs => diffs.iter().map(|d| d.abs()).fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(shift: f64) -> Table {
        let xs: Vec<f64> = (0..=10).map(|i| -1.0 + 0.2 * i as f64).collect();
        let mut t = Table::new();
        t.push("x", xs.clone());
        t.push("y", xs.iter().map(|x| x * x + shift).collect());
        t
    }

    fn spec(metric: Metric) -> CompareSpec {
        CompareSpec {
            column: "y".into(),
            ref_column: "y".into(),
            interval: None,
            metric,
        }
    }

    #[test]
    fn identical_files_give_zero() {
        assert_eq!(compare(&curve(0.0), &curve(0.0), &spec(Metric::Rmse)).unwrap(), 0.0);
    }

    #[test]
    fn constant_shift() {
        let d = compare(&curve(0.25), &curve(0.0), &spec(Metric::MaxAbs)).unwrap();
        assert!((d - 0.25).abs() < 1e-15);
        let r = compare(&curve(0.25), &curve(0.0), &spec(Metric::Rmse)).unwrap();
        assert!((r - 0.25).abs() < 1e-15);
    }

    #[test]
    fn interval_selects_rows() {
        let mut a = curve(0.0);
        let b = curve(0.0);
        let mut y = a.column("y").unwrap().to_vec();
        y[0] += 5.0;
        a = {
            let mut t = Table::new();
            t.push("x", a.column("x").unwrap().to_vec());
            t.push("y", y);
            t
        };
        let mut s = spec(Metric::MaxAbs);
        s.interval = Some("-0.5:1".parse().unwrap());
        assert_eq!(compare(&a, &b, &s).unwrap(), 0.0);
        s.interval = None;
        assert!((compare(&a, &b, &s).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn grid_mismatch() {
        let mut other = Table::new();
        other.push("x", vec![0.0, 1.0]);
        other.push("y", vec![0.0, 1.0]);
        let err = compare(&curve(0.0), &other, &spec(Metric::Rmse)).unwrap_err();
        assert!(matches!(err, CliError::GridMismatch { row: 1, .. }));
        assert_eq!(err.category(), "GridMismatch");
    }

    #[test]
    fn parse_errors() {
        assert!("rmse".parse::<Metric>().is_ok());
        assert!("l2".parse::<Metric>().is_err());
        assert!("2:1".parse::<Interval>().is_err());
        assert!("-2:2".parse::<Interval>().is_ok());
    }
}
