//! Quadrature reference solutions for scalar conditional expectations.
//!
//! When the conditional law of `Y` given `X` is known, `E[d(Y) | X = x_i]` is
//! approximated by a row of a quadrature matrix applied to the sampled values
//! `d(y_j)`. The same matrices drive a fixed-point iteration for systems of
//! conditional-expectation equations.

use std::fmt;

use log::{debug, warn};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Tail mass above which matrix builders log a warning.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-4;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Strictly increasing, finite sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    points: Vec<f64>,
}

impl Grid1D {
    /// `n` evenly spaced points from `lo` to `hi`, both included.
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 2 points, got {n}"
            )));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidParameter(format!("invalid grid interval [{lo}, {hi}]")));
        }
        let last = (n - 1) as f64;
        let points = (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * (i as f64 / last)
                }
            })
            .collect();
        Self::from_points(points)
    }

    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("grid is empty".into()));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter("grid points must be finite".into()));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "grid points must be strictly increasing".into(),
            ));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.points[0], self.points[self.points.len() - 1])
    }

    /// Piecewise-linear interpolation of `values` sampled on this grid,
    /// held constant outside the grid.
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        assert_eq!(values.len(), self.len(), "values do not match the grid");
        let p = &self.points;
        if x <= p[0] {
            return values[0];
        }
        if x >= p[p.len() - 1] {
            return values[p.len() - 1];
        }
        let k = p.partition_point(|&q| q <= x);
        let (x0, x1) = (p[k - 1], p[k]);
        let w = (x - x0) / (x1 - x0);
        values[k - 1] + w * (values[k] - values[k - 1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadKind {
    CdfStencil,
    PdfTrapezoid,
}

impl fmt::Display for QuadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QuadKind::CdfStencil => "cdf-stencil",
            QuadKind::PdfTrapezoid => "pdf-trapezoid",
        })
    }
}

/// Dense row-major quadrature matrix; row `i` belongs to `x_i`, column `j` to `y_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadMatrix {
    entries: Vec<f64>,
    x_grid: Grid1D,
    y_grid: Grid1D,
    kind: QuadKind,
    lower_tail: f64,
    upper_tail: f64,
}

impl QuadMatrix {
    pub fn rows(&self) -> usize {
        self.x_grid.len()
    }

    pub fn cols(&self) -> usize {
        self.y_grid.len()
    }

    pub fn kind(&self) -> QuadKind {
        self.kind
    }

    pub fn x_grid(&self) -> &Grid1D {
        &self.x_grid
    }

    pub fn y_grid(&self) -> &Grid1D {
        &self.y_grid
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.cols();
        &self.entries[i * n..(i + 1) * n]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols() + j]
    }

    /// Largest conditional mass below the first `y` point over all rows.
    /// For the trapezoid matrix this is the largest row-sum shortfall.
    pub fn lower_tail(&self) -> f64 {
        self.lower_tail
    }

    /// Largest conditional mass above the last `y` point over all rows.
    /// For the trapezoid matrix this is the largest row-sum excess.
    pub fn upper_tail(&self) -> f64 {
        self.upper_tail
    }

    pub fn max_tail(&self) -> f64 {
        self.lower_tail.max(self.upper_tail)
    }

    pub fn max_row_sum_deviation(&self) -> f64 {
        (0..self.rows())
            .map(|i| (self.row(i).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn check_tail(&self, tolerance: f64) -> Result<()> {
        let mass = self.max_tail();
        if mass > tolerance {
            Err(Error::TailMass { mass, tolerance })
        } else {
            Ok(())
        }
    }

    /// `F · d`.
    pub fn apply(&self, d: &[f64]) -> Result<Vec<f64>> {
        if d.len() != self.cols() {
            return Err(Error::Shape {
                expected: self.cols(),
                actual: d.len(),
            });
        }
        let mut out = vec![0.0; self.rows()];
        self.apply_into(d, &mut out);
        Ok(out)
    }

    pub(crate) fn apply_into(&self, d: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), d);
        }
    }
}

/// Dot product with a fixed summation order (eight interleaved partial sums).
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}

/// Central-difference CDF stencil. With `clamp`, each row's CDF is forced to
/// 0 at the first and 1 at the last `y` point, which makes rows sum to one.
/// Tail masses are measured before clamping.
pub fn build_cdf_matrix(
    cond_cdf: impl Fn(f64, f64) -> f64,
    y_grid: &Grid1D,
    x_grid: &Grid1D,
    clamp: bool,
) -> Result<QuadMatrix> {
    let n = y_grid.len();
    if n < 2 {
        return Err(Error::InvalidParameter("y grid needs at least 2 points".into()));
    }
    let ys = y_grid.points();
    let mut entries = vec![0.0; x_grid.len() * n];
    let mut cdf = vec![0.0; n];
    let (mut lower_tail, mut upper_tail) = (0.0f64, 0.0f64);
    for (i, &x) in x_grid.points().iter().enumerate() {
        for (c, &y) in cdf.iter_mut().zip(ys) {
            *c = cond_cdf(y, x);
        }
        lower_tail = lower_tail.max(cdf[0]);
        upper_tail = upper_tail.max(1.0 - cdf[n - 1]);
        if clamp {
            cdf[0] = 0.0;
            cdf[n - 1] = 1.0;
        }
        let row = &mut entries[i * n..(i + 1) * n];
        row[0] = 0.5 * (cdf[1] - cdf[0]);
        for j in 1..n - 1 {
            row[j] = 0.5 * (cdf[j + 1] - cdf[j - 1]);
        }
        row[n - 1] = 0.5 * (cdf[n - 1] - cdf[n - 2]);
    }
    if entries.iter().any(|&e| !(e >= 0.0)) {
        return Err(Error::InvalidParameter(
            "conditional CDF must be nondecreasing in y and finite".into(),
        ));
    }
    let matrix = QuadMatrix {
        entries,
        x_grid: x_grid.clone(),
        y_grid: y_grid.clone(),
        kind: QuadKind::CdfStencil,
        lower_tail,
        upper_tail,
    };
    if clamp {
        if matrix.max_tail() > DEFAULT_TAIL_TOLERANCE {
            debug!(
                "clamped rows absorb tail mass up to {:.3e}; see QuadMatrix::check_tail",
                matrix.max_tail()
            );
        }
    } else {
        warn_tail(&matrix);
    }
    Ok(matrix)
}

/// Trapezoid weights: entry `j` of row `i` is `f(y_j | x_i)` times half the
/// width of the two intervals adjacent to `y_j`.
pub fn build_pdf_matrix(cond_pdf: impl Fn(f64, f64) -> f64, y_grid: &Grid1D, x_grid: &Grid1D) -> Result<QuadMatrix> {
    let n = y_grid.len();
    if n < 2 {
        return Err(Error::InvalidParameter("y grid needs at least 2 points".into()));
    }
    let ys = y_grid.points();
    let half_widths: Vec<f64> = (0..n)
        .map(|j| {
            let left = if j > 0 { ys[j] - ys[j - 1] } else { 0.0 };
            let right = if j + 1 < n { ys[j + 1] - ys[j] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect();
    let mut entries = vec![0.0; x_grid.len() * n];
    let (mut shortfall, mut excess) = (0.0f64, 0.0f64);
    for (i, &x) in x_grid.points().iter().enumerate() {
        let row = &mut entries[i * n..(i + 1) * n];
        for (j, e) in row.iter_mut().enumerate() {
            let f = cond_pdf(ys[j], x);
            if !(f >= 0.0 && f.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "conditional pdf must be finite and nonnegative, got {f} at (y={}, x={x})",
                    ys[j]
                )));
            }
            *e = f * half_widths[j];
        }
        let sum: f64 = row.iter().sum();
        shortfall = shortfall.max(1.0 - sum);
        excess = excess.max(sum - 1.0);
    }
    let matrix = QuadMatrix {
        entries,
        x_grid: x_grid.clone(),
        y_grid: y_grid.clone(),
        kind: QuadKind::PdfTrapezoid,
        lower_tail: shortfall.max(0.0),
        upper_tail: excess.max(0.0),
    };
    warn_tail(&matrix);
    Ok(matrix)
}

fn warn_tail(matrix: &QuadMatrix) {
    if matrix.max_tail() > DEFAULT_TAIL_TOLERANCE {
        warn!(
            "{} matrix leaves probability mass outside the y grid: lower {:.3e}, upper {:.3e}",
            matrix.kind, matrix.lower_tail, matrix.upper_tail
        );
    }
}

/// `F · D`, the quadrature estimate of `E[d(Y) | X = x_i]` for every row.
pub fn cond_expectation_numeric(f: &QuadMatrix, d_values: &[f64]) -> Result<Vec<f64>> {
    f.apply(d_values)
}

/// Iterates and residuals of a fixed-point run.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointSolution {
    /// Final vector per unknown.
    pub values: Vec<Vec<f64>>,
    /// Sup-norm change over all unknowns, one entry per iteration.
    pub residuals: Vec<f64>,
    /// `(min, max)` of each unknown at each iteration: `ranges[t][j]`.
    pub ranges: Vec<Vec<(f64, f64)>>,
}

pub(crate) fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
        (lo.min(x), hi.max(x))
    })
}

pub(crate) fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Jacobi iteration `U^j_t = F^j · H^j(U^1_{t-1}, .., U^K_{t-1})` where
/// `H^j` evaluates `h^j(y_k, [U^1_k, .., U^K_k])` at every grid point.
///
/// All matrices must be square on one common grid.
pub fn fixed_point_solve(
    f_list: &[&QuadMatrix],
    h_list: &[&dyn Fn(f64, &[f64]) -> f64],
    u0_list: &[Vec<f64>],
    iters: usize,
) -> Result<FixedPointSolution> {
    let k = f_list.len();
    if k == 0 {
        return Err(Error::InvalidParameter("fixed-point system is empty".into()));
    }
    if h_list.len() != k {
        return Err(Error::Shape {
            expected: k,
            actual: h_list.len(),
        });
    }
    if u0_list.len() != k {
        return Err(Error::Shape {
            expected: k,
            actual: u0_list.len(),
        });
    }
    let grid = f_list[0].y_grid();
    let n = grid.len();
    for f in f_list {
        if f.y_grid() != grid || f.x_grid() != grid {
            return Err(Error::InvalidParameter(
                "fixed-point matrices must share one square grid".into(),
            ));
        }
    }
    for u in u0_list {
        if u.len() != n {
            return Err(Error::Shape {
                expected: n,
                actual: u.len(),
            });
        }
    }
    let ys = grid.points();
    let mut current: Vec<Vec<f64>> = u0_list.to_vec();
    let mut next: Vec<Vec<f64>> = vec![vec![0.0; n]; k];
    let mut h_values = vec![0.0; n];
    let mut point = vec![0.0; k];
    let mut residuals = Vec::with_capacity(iters);
    let mut ranges = Vec::with_capacity(iters);
    for t in 0..iters {
        for j in 0..k {
            for (idx, hv) in h_values.iter_mut().enumerate() {
                for (p, u) in point.iter_mut().zip(&current) {
                    *p = u[idx];
                }
                *hv = h_list[j](ys[idx], &point);
            }
            f_list[j].apply_into(&h_values, &mut next[j]);
            if next[j].iter().any(|v| !v.is_finite()) {
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
    Ok(FixedPointSolution {
        values: current,
        residuals,
        ranges,
    })
}
