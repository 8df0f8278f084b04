//! Integer combinatorics of the m-Kronecker quiver `Θ(m)` (two vertices `x`, `y`
//! and `m` arrows `y → x`) and of the star quiver `B(q, m)`.
//!
//! Everything here is exact integer arithmetic.

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimension vector `(a, b)` of `Θ(m)`: `a` at the sink `x`, `b` at the source `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DimVec2 {
    pub a: u64,
    pub b: u64,
}

impl DimVec2 {
    pub const fn new(a: u64, b: u64) -> Self {
        Self { a, b }
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0 && self.b == 0
    }

    pub fn gcd(&self) -> u64 {
        self.a.gcd(&self.b)
    }

    /// The indivisible vector on the same ray (the input itself when zero).
    pub fn primitive(&self) -> Self {
        let d = self.gcd();
        if d == 0 {
            *self
        } else {
            Self::new(self.a / d, self.b / d)
        }
    }

    pub fn scale(&self, k: u64) -> Self {
        Self::new(self.a * k, self.b * k)
    }
}

impl std::ops::Add for DimVec2 {
    type Output = DimVec2;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.a + rhs.a, self.b + rhs.b)
    }
}

impl std::fmt::Display for DimVec2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.a, self.b)
    }
}

/// Dimension vector of the star quiver `B(q, m)`: `x` at the centre and one
/// entry per arm `y_1, …, y_q`. Representations of interest have every arm
/// entry in `{0, 1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StarDimVec {
    pub x: u64,
    pub arms: Vec<u64>,
}

impl StarDimVec {
    pub fn new(x: u64, arms: Vec<u64>) -> Self {
        Self { x, arms }
    }

    /// The full vector `(p, 1, …, 1)` with `q` arms.
    pub fn full(p: u64, q: usize) -> Self {
        Self::new(p, vec![1; q])
    }

    /// `(x, e_j)` with `q` arms.
    pub fn arm(x: u64, q: usize, j: usize) -> Self {
        let mut arms = vec![0; q];
        arms[j] = 1;
        Self::new(x, arms)
    }

    pub fn arm_total(&self) -> u64 {
        self.arms.iter().sum()
    }
}

impl std::fmt::Display for StarDimVec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}", self.x)?;
        for a in &self.arms {
            write!(f, ",{a}")?;
        }
        f.write_str(")")
    }
}

/// A dimension vector on either of the two quivers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DimVector {
    Kronecker(DimVec2),
    Star(StarDimVec),
}

impl DimVector {
    /// Total dimension at the sink `x` and summed over the source vertices.
    pub fn totals(&self) -> (u64, u64) {
        match self {
            DimVector::Kronecker(v) => (v.a, v.b),
            DimVector::Star(v) => (v.x, v.arm_total()),
        }
    }
}

impl std::fmt::Display for DimVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DimVector::Kronecker(v) => v.fmt(f),
            DimVector::Star(v) => v.fmt(f),
        }
    }
}

/// Weight `σ = (sx, sy)` on the vertices of `Θ(m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Weight2 {
    pub sx: i64,
    pub sy: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RootClass {
    Real,
    Isotropic,
    ImaginaryNonIsotropic,
    NotRoot,
}

/// Euler form of `Θ(m)`: `⟨β,γ⟩ = β_a γ_a + β_b γ_b − m β_b γ_a`.
pub fn euler_form(m: u64, beta: DimVec2, gamma: DimVec2) -> i64 {
    let (ba, bb) = (beta.a as i64, beta.b as i64);
    let (ga, gb) = (gamma.a as i64, gamma.b as i64);
    ba * ga + bb * gb - (m as i64) * bb * ga
}

/// The Tits form `q(β) = a² + b² − m·a·b`.
pub fn tits_form(m: u64, beta: DimVec2) -> i64 {
    euler_form(m, beta, beta)
}

pub fn classify_root(m: u64, beta: DimVec2) -> Result<RootClass> {
    if beta.is_zero() {
        return Err(Error::ZeroVector);
    }
    Ok(match tits_form(m, beta) {
        1 => RootClass::Real,
        0 => RootClass::Isotropic,
        v if v < 0 => RootClass::ImaginaryNonIsotropic,
        _ => RootClass::NotRoot,
    })
}

/// Schur roots of `Θ(m)`: every non-isotropic imaginary root, and the
/// indivisible real and isotropic roots.
pub fn is_schur_root(m: u64, beta: DimVec2) -> Result<bool> {
    Ok(match classify_root(m, beta)? {
        RootClass::ImaginaryNonIsotropic => true,
        RootClass::Real | RootClass::Isotropic => beta.gcd() == 1,
        RootClass::NotRoot => false,
    })
}

/// The indivisible weight vanishing on `(p, q)` that admits semi-invariants:
/// `σ = (−q/d, p/d)` with `d = gcd(p, q)`.
pub fn canonical_weight(p: u64, q: u64) -> Weight2 {
    let d = p.gcd(&q).max(1);
    Weight2 {
        sx: -((q / d) as i64),
        sy: (p / d) as i64,
    }
}

pub fn weight_value(sigma: Weight2, beta: DimVec2) -> i64 {
    sigma.sx * beta.a as i64 + sigma.sy * beta.b as i64
}

/// `σ = (−q′, p′, …, p′)` on `B(q, m)` evaluated at a star dimension vector.
pub fn star_weight_value(p: u64, q: u64, beta: &StarDimVec) -> i64 {
    let w = canonical_weight(p, q);
    w.sx * beta.x as i64 + w.sy * beta.arm_total() as i64
}
