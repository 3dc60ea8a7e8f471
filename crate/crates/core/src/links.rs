//! Link families `(ω, ρ, φ, ψ)`.
//!
//! A link family pairs a strictly increasing output map `ω` with a strictly
//! negative weight `ρ`. The cost functions `φ`, `ψ` are antiderivatives with
//! `ψ' = ρ` and `φ' = -ω ρ`, so for any target `r` inside the range of `ω` the
//! scalar problem `min_u φ(u) + r ψ(u)` has its unique minimizer at `ω(u) = r`.
//! Trainers only need `ω` and `ρ`; `φ` and `ψ` are used to report costs.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// An interval of the extended real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeInterval {
    pub lower: f64,
    pub upper: f64,
    pub lower_closed: bool,
    pub upper_closed: bool,
}

impl RangeInterval {
    pub fn open(lower: f64, upper: f64) -> Self {
        debug_assert!(lower < upper);
        Self {
            lower,
            upper,
            lower_closed: false,
            upper_closed: false,
        }
    }

    pub fn real_line() -> Self {
        Self::open(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn contains(&self, v: f64) -> bool {
        if v.is_nan() {
            return false;
        }
        let above = if self.lower_closed {
            v >= self.lower
        } else {
            v > self.lower
        };
        let below = if self.upper_closed {
            v <= self.upper
        } else {
            v < self.upper
        };
        above && below
    }

    /// Membership in the closure of the interval.
    pub fn closure_contains(&self, v: f64) -> bool {
        !v.is_nan() && v >= self.lower && v <= self.upper
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.is_finite() && self.upper.is_finite()
    }
}

impl fmt::Display for RangeInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = if self.lower_closed { '[' } else { '(' };
        let close = if self.upper_closed { ']' } else { ')' };
        write!(f, "{open}{}, {}{close}", self.lower, self.upper)
    }
}

/// The seven published families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyId {
    A1,
    A2,
    A3,
    B1,
    B2,
    C1,
    C2,
}

impl FamilyId {
    pub const ALL: [FamilyId; 7] = [
        FamilyId::A1,
        FamilyId::A2,
        FamilyId::A3,
        FamilyId::B1,
        FamilyId::B2,
        FamilyId::C1,
        FamilyId::C2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FamilyId::A1 => "A1",
            FamilyId::A2 => "A2",
            FamilyId::A3 => "A3",
            FamilyId::B1 => "B1",
            FamilyId::B2 => "B2",
            FamilyId::C1 => "C1",
            FamilyId::C2 => "C2",
        }
    }
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FamilyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FamilyId::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown link family `{s}`")))
    }
}

/// A link family together with its range parameters.
///
/// `a` is used by the B and C families, `b` only by the C families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkFamily {
    id: FamilyId,
    a: f64,
    b: f64,
}

impl LinkFamily {
    pub fn new(id: FamilyId, a: f64, b: f64) -> Result<Self> {
        let uses_a = matches!(id, FamilyId::B1 | FamilyId::B2 | FamilyId::C1 | FamilyId::C2);
        let uses_b = matches!(id, FamilyId::C1 | FamilyId::C2);
        if uses_a && !a.is_finite() {
            return Err(Error::InvalidParameter(format!("{id}: a must be finite")));
        }
        if uses_b && !(b.is_finite() && a < b) {
            return Err(Error::InvalidParameter(format!(
                "{id}: requires finite a < b, got a = {a}, b = {b}"
            )));
        }
        // Unused parameters are normalized so equality and display stay meaningful.
        Ok(Self {
            id,
            a: if uses_a { a } else { 0.0 },
            b: if uses_b { b } else { 0.0 },
        })
    }

    pub fn a1() -> Self {
        Self::new(FamilyId::A1, 0.0, 0.0).unwrap()
    }

    pub fn a2() -> Self {
        Self::new(FamilyId::A2, 0.0, 0.0).unwrap()
    }

    pub fn a3() -> Self {
        Self::new(FamilyId::A3, 0.0, 0.0).unwrap()
    }

    pub fn b1(a: f64) -> Result<Self> {
        Self::new(FamilyId::B1, a, 0.0)
    }

    pub fn b2(a: f64) -> Result<Self> {
        Self::new(FamilyId::B2, a, 0.0)
    }

    pub fn c1(a: f64, b: f64) -> Result<Self> {
        Self::new(FamilyId::C1, a, b)
    }

    pub fn c2(a: f64, b: f64) -> Result<Self> {
        Self::new(FamilyId::C2, a, b)
    }

    pub fn id(&self) -> FamilyId {
        self.id
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Range of `ω`. The B and C ranges are treated as open.
    pub fn range(&self) -> RangeInterval {
        match self.id {
            FamilyId::A1 | FamilyId::A2 | FamilyId::A3 => RangeInterval::real_line(),
            FamilyId::B1 | FamilyId::B2 => RangeInterval::open(self.a, f64::INFINITY),
            FamilyId::C1 | FamilyId::C2 => RangeInterval::open(self.a, self.b),
        }
    }

    pub fn omega(&self, z: f64) -> f64 {
        match self.id {
            FamilyId::A1 => z,
            FamilyId::A2 => z.sinh(),
            FamilyId::A3 => sign(z) * z.abs().exp_m1(),
            FamilyId::B1 | FamilyId::B2 => self.a + z.exp(),
            FamilyId::C1 | FamilyId::C2 => self.a + (self.b - self.a) * sigmoid(z),
        }
    }

    pub fn rho(&self, z: f64) -> f64 {
        match self.id {
            FamilyId::A1 => -1.0,
            FamilyId::A2 | FamilyId::A3 => -(-0.5 * z.abs()).exp(),
            FamilyId::B1 => -sigmoid(-z),
            FamilyId::B2 => -(-0.5 * z).exp(),
            FamilyId::C1 => -sigmoid(z),
            FamilyId::C2 => -(-z).exp(),
        }
    }

    pub fn phi(&self, z: f64) -> f64 {
        let (a, b) = (self.a, self.b);
        match self.id {
            FamilyId::A1 => 0.5 * z * z,
            FamilyId::A2 => (0.5 * z.abs()).exp_m1() + (-1.5 * z.abs()).exp_m1() / 3.0,
            FamilyId::A3 => 4.0 * (0.5 * z).cosh(),
            FamilyId::B1 => softplus(z) - a * softplus(-z),
            FamilyId::B2 => -2.0 * a * (-0.5 * z).exp() + 2.0 * (0.5 * z).exp(),
            FamilyId::C1 => (b - a) * sigmoid(-z) + b * softplus(z),
            // (b - a) log(e^z / (1 + e^z)) - a e^{-z}
            FamilyId::C2 => -(b - a) * softplus(-z) - a * (-z).exp(),
        }
    }

    pub fn psi(&self, z: f64) -> f64 {
        match self.id {
            FamilyId::A1 => -z,
            FamilyId::A2 | FamilyId::A3 => 2.0 * sign(z) * (-0.5 * z.abs()).exp_m1(),
            FamilyId::B1 => softplus(-z),
            FamilyId::B2 => 2.0 * (-0.5 * z).exp(),
            FamilyId::C1 => -softplus(z),
            FamilyId::C2 => (-z).exp(),
        }
    }

    /// Per-sample cost `c φ(u) + d ψ(u)`.
    pub fn cost(&self, u: f64, c: f64, d: f64) -> f64 {
        c * self.phi(u) + d * self.psi(u)
    }

    /// Returns `u*` with `ω(u*) = r`, the minimizer of `φ(u) + r ψ(u)`.
    ///
    /// The bracket starts at `[-1, 1]` and doubles until `ω` straddles `r`,
    /// then bisects on the sign of `ω(u) - r` down to floating-point resolution.
    pub fn scalar_minimizer(&self, r: f64) -> Result<f64> {
        let range = self.range();
        if !r.is_finite() || !range.contains(r) {
            return Err(Error::Range {
                value: r,
                range: range.to_string(),
            });
        }
        const MAX_DOUBLINGS: usize = 200;
        let mut lo = -1.0_f64;
        let mut hi = 1.0_f64;
        let mut doublings = 0;
        while self.omega(lo) > r && doublings < MAX_DOUBLINGS {
            hi = lo;
            lo *= 2.0;
            doublings += 1;
        }
        doublings = 0;
        while self.omega(hi) < r && doublings < MAX_DOUBLINGS {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
        }
        if self.omega(lo) > r || self.omega(hi) < r {
            return Err(Error::Range {
                value: r,
                range: range.to_string(),
            });
        }
        let mut best = if (self.omega(lo) - r).abs() <= (self.omega(hi) - r).abs() {
            lo
        } else {
            hi
        };
        for _ in 0..4096 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let value = self.omega(mid);
            if (value - r).abs() < (self.omega(best) - r).abs() {
                best = mid;
            }
            if value == r {
                return Ok(mid);
            }
            if value < r {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(best)
    }
}

impl fmt::Display for LinkFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.id {
            FamilyId::A1 | FamilyId::A2 | FamilyId::A3 => write!(f, "{}", self.id),
            FamilyId::B1 | FamilyId::B2 => write!(f, "{}:{}", self.id, self.a),
            FamilyId::C1 | FamilyId::C2 => write!(f, "{}:{}:{}", self.id, self.a, self.b),
        }
    }
}

/// Parses `ID[:a[:b]]`, e.g. `A1`, `B1:0`, `C1:-0.01:1.01`.
///
/// Missing parameters default to `a = 0`, `b = 1`.
impl FromStr for LinkFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let id: FamilyId = parts.next().unwrap_or_default().parse()?;
        let mut number = |default: f64| -> Result<f64> {
            match parts.next() {
                None => Ok(default),
                Some(p) => p
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidParameter(format!("bad link parameter `{p}` in `{s}`"))),
            }
        };
        let a = number(0.0)?;
        let b = number(1.0)?;
        if parts.next().is_some() {
            return Err(Error::InvalidParameter(format!("too many fields in link `{s}`")));
        }
        LinkFamily::new(id, a, b)
    }
}

/// `sign` with `sign(0) = 0`.
pub fn sign(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else if z < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_families() -> Vec<LinkFamily> {
        vec![
            LinkFamily::a1(),
            LinkFamily::a2(),
            LinkFamily::a3(),
            LinkFamily::b1(0.0).unwrap(),
            LinkFamily::b1(0.7).unwrap(),
            LinkFamily::b2(0.0).unwrap(),
            LinkFamily::b2(-1.5).unwrap(),
            LinkFamily::c1(0.0, 1.0).unwrap(),
            LinkFamily::c1(0.2, 1.0).unwrap(),
            LinkFamily::c2(0.0, 1.0).unwrap(),
            LinkFamily::c2(-0.01, 1.01).unwrap(),
        ]
    }

    #[test]
    fn omega_examples() {
        assert_eq!(LinkFamily::a1().omega(0.0), 0.0);
        assert_eq!(LinkFamily::c1(0.0, 1.0).unwrap().omega(0.0), 0.5);
        assert!((LinkFamily::a2().omega(1.0) - 1.175201193643801).abs() < 1e-12);
        assert_eq!(LinkFamily::a2().omega(0.0), 0.0);
        assert_eq!(LinkFamily::a3().omega(0.0), 0.0);
    }

    #[test]
    fn rho_examples() {
        assert_eq!(LinkFamily::a1().rho(7.0), -1.0);
        assert_eq!(LinkFamily::a2().rho(0.0), -1.0);
        assert_eq!(LinkFamily::b1(0.0).unwrap().rho(0.0), -0.5);
    }

    #[test]
    fn phi_psi_examples() {
        let a1 = LinkFamily::a1();
        assert_eq!(a1.phi(2.0), 2.0);
        assert_eq!(a1.psi(2.0), -2.0);
        assert_eq!(LinkFamily::a3().phi(0.0), 4.0);
        let c1 = LinkFamily::c1(0.0, 1.0).unwrap();
        assert!((c1.psi(0.0) + std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn minimizer_examples() {
        assert!((LinkFamily::a1().scalar_minimizer(0.7).unwrap() - 0.7).abs() < 1e-12);
        let b1 = LinkFamily::b1(0.0).unwrap();
        assert!((b1.scalar_minimizer(2.0).unwrap() - std::f64::consts::LN_2).abs() < 1e-10);
        let c1 = LinkFamily::c1(0.0, 1.0).unwrap();
        assert!(c1.scalar_minimizer(0.5).unwrap().abs() < 1e-10);
    }

    #[test]
    fn minimizer_rejects_targets_outside_range() {
        let c1 = LinkFamily::c1(0.2, 1.0).unwrap();
        assert!(matches!(c1.scalar_minimizer(1.0), Err(Error::Range { .. })));
        assert!(matches!(c1.scalar_minimizer(0.1), Err(Error::Range { .. })));
        let b2 = LinkFamily::b2(0.0).unwrap();
        assert!(b2.scalar_minimizer(-0.3).is_err());
        assert!(LinkFamily::a1().scalar_minimizer(f64::NAN).is_err());
    }

    #[test]
    fn b1_grid_search_oracle() {
        // Brute force of φ(z) + 2 ψ(z) for B1 with a = 0.
        let b1 = LinkFamily::b1(0.0).unwrap();
        let (mut best_z, mut best) = (0.0, f64::INFINITY);
        for k in -30000..=30000 {
            let z = k as f64 * 1e-4;
            let v = b1.phi(z) + 2.0 * b1.psi(z);
            if v < best {
                best = v;
                best_z = z;
            }
        }
        let u = b1.scalar_minimizer(2.0).unwrap();
        assert!((best_z - u).abs() <= 1e-4);
    }

    #[test]
    fn ranges() {
        assert_eq!(LinkFamily::a2().range(), RangeInterval::real_line());
        let b1 = LinkFamily::b1(0.3).unwrap();
        assert!(b1.range().contains(0.31) && !b1.range().contains(0.3));
        let c2 = LinkFamily::c2(0.2, 1.0).unwrap();
        assert!(!c2.range().contains(1.0));
        assert!(c2.range().closure_contains(1.0));
        assert!(LinkFamily::c1(1.0, 1.0).is_err());
        assert!(LinkFamily::c1(2.0, 1.0).is_err());
    }

    #[test]
    fn parse_link_spec() {
        let l: LinkFamily = "C1:-0.01:1.01".parse().unwrap();
        assert_eq!(l, LinkFamily::c1(-0.01, 1.01).unwrap());
        let l: LinkFamily = "b1".parse().unwrap();
        assert_eq!(l, LinkFamily::b1(0.0).unwrap());
        assert_eq!("A2".parse::<LinkFamily>().unwrap(), LinkFamily::a2());
        assert!("D1".parse::<LinkFamily>().is_err());
        assert!("C1:1:0".parse::<LinkFamily>().is_err());
        assert!("C1:0:1:2".parse::<LinkFamily>().is_err());
        assert_eq!(LinkFamily::c1(0.2, 1.0).unwrap().to_string(), "C1:0.2:1");
    }

    #[test]
    fn monotone_and_negative_on_dense_grid() {
        for link in all_families() {
            let mut prev = f64::NEG_INFINITY;
            for k in 0..=10_000 {
                let z = -20.0 + 40.0 * k as f64 / 10_000.0;
                let w = link.omega(z);
                assert!(w > prev, "{link}: omega not increasing at {z}");
                assert!(link.rho(z) < 0.0, "{link}: rho not negative at {z}");
                prev = w;
            }
        }
    }

    #[test]
    fn derivative_identities() {
        let h = 1e-6;
        for link in all_families() {
            for k in -40..=40 {
                if k == 0 {
                    continue;
                }
                let z = k as f64 * 0.25;
                let dphi = (link.phi(z + h) - link.phi(z - h)) / (2.0 * h);
                let dpsi = (link.psi(z + h) - link.psi(z - h)) / (2.0 * h);
                let wr = link.omega(z) * link.rho(z);
                let r = link.rho(z);
                assert!(
                    (dphi + wr).abs() <= 1e-5 * (1.0 + wr.abs()),
                    "{link}: phi' mismatch at {z}: {dphi} vs {}",
                    -wr
                );
                assert!(
                    (dpsi - r).abs() <= 1e-5 * (1.0 + r.abs()),
                    "{link}: psi' mismatch at {z}"
                );
            }
        }
    }

    #[test]
    fn closed_interval_display() {
        let r = RangeInterval {
            lower: 0.0,
            upper: 1.0,
            lower_closed: true,
            upper_closed: false,
        };
        assert_eq!(r.to_string(), "[0, 1)");
        assert!(r.contains(0.0) && !r.contains(1.0));
    }
}
