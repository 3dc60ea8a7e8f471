//! Single-hidden-layer ReLU network with hand-written gradients.
//!
//! `u(x) = b_out + Σ_l w_out[l] · relu(w_in[l]·x + b_in[l])`

use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::links::FamilyId;
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct ShallowNet {
    hidden: usize,
    dim: usize,
    /// Hidden weights, `hidden × dim`, row-major.
    w_in: Vec<f64>,
    b_in: Vec<f64>,
    w_out: Vec<f64>,
    b_out: f64,
}

/// Gradient accumulator with the same blocks as [`ShallowNet`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub w_in: Vec<f64>,
    pub b_in: Vec<f64>,
    pub w_out: Vec<f64>,
    pub b_out: f64,
}

impl GradientSet {
    pub fn zeros(hidden: usize, dim: usize) -> Self {
        Self {
            w_in: vec![0.0; hidden * dim],
            b_in: vec![0.0; hidden],
            w_out: vec![0.0; hidden],
            b_out: 0.0,
        }
    }

    pub fn zeros_like(net: &ShallowNet) -> Self {
        Self::zeros(net.hidden, net.dim)
    }

    pub fn len(&self) -> usize {
        self.w_in.len() + self.b_in.len() + self.w_out.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_zero(&self) -> bool {
        self.b_out == 0.0 && self.w_in.iter().chain(&self.b_in).chain(&self.w_out).all(|&g| g == 0.0)
    }

    /// Flat copy in block order `w_in, b_in, w_out, b_out`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        out.extend_from_slice(&self.w_in);
        out.extend_from_slice(&self.b_in);
        out.extend_from_slice(&self.w_out);
        out.push(self.b_out);
        out
    }

    pub fn add_assign(&mut self, other: &GradientSet) {
        add_into(&mut self.w_in, &other.w_in);
        add_into(&mut self.b_in, &other.b_in);
        add_into(&mut self.w_out, &other.w_out);
        self.b_out += other.b_out;
    }

    pub fn norm(&self) -> f64 {
        self.to_flat().iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

impl ShallowNet {
    /// All-zero network.
    pub fn zeros(hidden: usize, dim: usize) -> Self {
        Self {
            hidden,
            dim,
            w_in: vec![0.0; hidden * dim],
            b_in: vec![0.0; hidden],
            w_out: vec![0.0; hidden],
            b_out: 0.0,
        }
    }

    pub fn from_parts(dim: usize, w_in: Vec<f64>, b_in: Vec<f64>, w_out: Vec<f64>, b_out: f64) -> Result<Self> {
        let hidden = b_in.len();
        if hidden == 0 || dim == 0 {
            return Err(Error::InvalidParameter(
                "hidden size and input dimension must be positive".into(),
            ));
        }
        if w_in.len() != hidden * dim {
            return Err(Error::Shape {
                expected: hidden * dim,
                actual: w_in.len(),
            });
        }
        if w_out.len() != hidden {
            return Err(Error::Shape {
                expected: hidden,
                actual: w_out.len(),
            });
        }
        let net = Self {
            hidden,
            dim,
            w_in,
            b_in,
            w_out,
            b_out,
        };
        if !net.is_finite() {
            return Err(Error::InvalidParameter("network parameters must be finite".into()));
        }
        Ok(net)
    }

    /// Random initialization from the `net-init` substream of `seed`.
    pub fn init(hidden: usize, dim: usize, seed: u64) -> Self {
        Self::init_with(hidden, dim, &mut rng::substream(seed, "net-init"))
    }

    /// Weights i.i.d. `N(0, 1) / sqrt(hidden)`, biases zero.
    pub fn init_with<R: Rng + ?Sized>(hidden: usize, dim: usize, rng: &mut R) -> Self {
        assert!(hidden >= 1 && dim >= 1, "hidden size and dimension must be positive");
        let scale = 1.0 / (hidden as f64).sqrt();
        let mut draw = || rng.sample::<f64, _>(StandardNormal) * scale;
        let w_in = (0..hidden * dim).map(|_| draw()).collect();
        let w_out = (0..hidden).map(|_| draw()).collect();
        Self {
            hidden,
            dim,
            w_in,
            b_in: vec![0.0; hidden],
            w_out,
            b_out: 0.0,
        }
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn w_in(&self) -> &[f64] {
        &self.w_in
    }

    pub fn b_in(&self) -> &[f64] {
        &self.b_in
    }

    pub fn w_out(&self) -> &[f64] {
        &self.w_out
    }

    pub fn b_out(&self) -> f64 {
        self.b_out
    }

    pub fn is_finite(&self) -> bool {
        self.b_out.is_finite()
            && self
                .w_in
                .iter()
                .chain(&self.b_in)
                .chain(&self.w_out)
                .all(|v| v.is_finite())
    }

    /// Mutable parameter blocks in the order `w_in, b_in, w_out, b_out`.
    pub(crate) fn blocks_mut(&mut self) -> [&mut [f64]; 4] {
        [
            &mut self.w_in,
            &mut self.b_in,
            &mut self.w_out,
            std::slice::from_mut(&mut self.b_out),
        ]
    }

    /// Flat copy in block order `w_in, b_in, w_out, b_out`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        out.extend_from_slice(&self.w_in);
        out.extend_from_slice(&self.b_in);
        out.extend_from_slice(&self.w_out);
        out.push(self.b_out);
        out
    }

    /// Inverse of [`ShallowNet::to_flat`] for a network of the same shape.
    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::Shape {
                expected: self.num_params(),
                actual: flat.len(),
            });
        }
        let (w_in, rest) = flat.split_at(self.w_in.len());
        let (b_in, rest) = rest.split_at(self.hidden);
        let (w_out, rest) = rest.split_at(self.hidden);
        self.w_in.copy_from_slice(w_in);
        self.b_in.copy_from_slice(b_in);
        self.w_out.copy_from_slice(w_out);
        self.b_out = rest[0];
        Ok(())
    }

    pub fn num_params(&self) -> usize {
        self.hidden * (self.dim + 2) + 1
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Shape {
                expected: self.dim,
                actual: x.len(),
            });
        }
        Ok(())
    }

    #[inline]
    fn pre_activation(&self, l: usize, x: &[f64]) -> f64 {
        let row = &self.w_in[l * self.dim..(l + 1) * self.dim];
        row.iter().zip(x).fold(self.b_in[l], |acc, (w, xi)| acc + w * xi)
    }

    /// Output `u(x)` without a dimension check.
    #[inline]
    pub(crate) fn eval(&self, x: &[f64]) -> f64 {
        let mut out = self.b_out;
        for l in 0..self.hidden {
            let z = self.pre_activation(l, x);
            if z > 0.0 {
                out += self.w_out[l] * z;
            }
        }
        out
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.eval(x))
    }

    pub fn forward_batch<X: AsRef<[f64]>>(&self, xs: &[X]) -> Result<Vec<f64>> {
        xs.iter().map(|x| self.forward(x.as_ref())).collect()
    }

    /// `Σ_i coeffs[i] · ∇_θ u(xs[i])`, accumulated in input order.
    ///
    /// The ReLU subgradient at exactly zero is taken to be zero.
    pub fn weighted_grad<X: AsRef<[f64]>>(&self, xs: &[X], coeffs: &[f64]) -> Result<GradientSet> {
        if xs.len() != coeffs.len() {
            return Err(Error::Shape {
                expected: xs.len(),
                actual: coeffs.len(),
            });
        }
        let mut grad = GradientSet::zeros_like(self);
        for (x, &c) in xs.iter().zip(coeffs) {
            let x = x.as_ref();
            self.check_dim(x)?;
            self.accumulate_grad(x, c, &mut grad);
        }
        Ok(grad)
    }

    #[inline]
    pub(crate) fn accumulate_grad(&self, x: &[f64], coeff: f64, grad: &mut GradientSet) {
        grad.b_out += coeff;
        for l in 0..self.hidden {
            let z = self.pre_activation(l, x);
            if z > 0.0 {
                grad.w_out[l] += coeff * z;
                let back = coeff * self.w_out[l];
                grad.b_in[l] += back;
                let row = &mut grad.w_in[l * self.dim..(l + 1) * self.dim];
                for (g, xi) in row.iter_mut().zip(x) {
                    *g += back * xi;
                }
            }
        }
    }

    /// Writes the checkpoint format: four `key=value` header lines
    /// (`L`, `d`, `seed`, `family`) followed by one parameter per line in
    /// block order `w_in, b_in, w_out, b_out`.
    pub fn write_checkpoint<W: Write>(&self, seed: u64, family: FamilyId, mut w: W) -> std::io::Result<()> {
        writeln!(w, "L={}", self.hidden)?;
        writeln!(w, "d={}", self.dim)?;
        writeln!(w, "seed={seed}")?;
        writeln!(w, "family={family}")?;
        for v in self.to_flat() {
            writeln!(w, "{v:.16e}")?;
        }
        Ok(())
    }

    pub fn read_checkpoint<R: BufRead>(r: R) -> Result<(ShallowNet, u64, FamilyId)> {
        let bad = |msg: &str| Error::InvalidParameter(format!("checkpoint: {msg}"));
        let mut lines = r.lines().map(|l| l.map_err(|e| bad(&e.to_string())));
        let mut header = |key: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| bad("truncated header"))??;
            line.strip_prefix(&format!("{key}="))
                .map(str::to_owned)
                .ok_or_else(|| bad(&format!("expected `{key}=`")))
        };
        let hidden: usize = header("L")?.parse().map_err(|_| bad("bad L"))?;
        let dim: usize = header("d")?.parse().map_err(|_| bad("bad d"))?;
        let seed: u64 = header("seed")?.parse().map_err(|_| bad("bad seed"))?;
        let family: FamilyId = header("family")?.parse()?;
        let values = lines
            .filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()))
            .map(|l| l.and_then(|s| s.trim().parse::<f64>().map_err(|_| bad("bad value"))))
            .collect::<Result<Vec<f64>>>()?;
        if hidden == 0 || dim == 0 {
            return Err(bad("zero size"));
        }
        let mut net = ShallowNet::zeros(hidden, dim);
        net.set_flat(&values)?;
        Ok((net, seed, family))
    }
}
