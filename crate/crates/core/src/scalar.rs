//! The ground field of a representation: real or complex double precision.
//!
//! Every numerical routine in the crate is generic over [`Field`], so the same
//! code path serves `Mat_{p,q}(ℝ)^m` and `Mat_{p,q}(ℂ)^m`.

use nalgebra::ComplexField;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Runtime tag for the two supported ground fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Real,
    Complex,
}

impl std::fmt::Display for FieldKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FieldKind::Real => f.write_str("real"),
            FieldKind::Complex => f.write_str("complex"),
        }
    }
}

/// A scalar type usable as the ground field `K` of a representation.
pub trait Field: ComplexField<RealField = f64> + Copy + Send + Sync + 'static {
    const KIND: FieldKind;

    fn to_c64(self) -> Complex64;

    /// Projects a complex number into the field. For `f64` the imaginary part
    /// is dropped, so callers must only pass values known to be real.
    fn from_c64(z: Complex64) -> Self;

    fn from_parts(re: f64, im: f64) -> Self;

    /// A standard Gaussian draw: `N(0,1)` over ℝ, `(N(0,1) + iN(0,1))/√2` over ℂ.
    fn sample_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Field for f64 {
    const KIND: FieldKind = FieldKind::Real;

    #[inline]
    fn to_c64(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }

    #[inline]
    fn from_c64(z: Complex64) -> Self {
        z.re
    }

    #[inline]
    fn from_parts(re: f64, _im: f64) -> Self {
        re
    }

    fn sample_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}

impl Field for Complex64 {
    const KIND: FieldKind = FieldKind::Complex;

    #[inline]
    fn to_c64(self) -> Complex64 {
        self
    }

    #[inline]
    fn from_c64(z: Complex64) -> Self {
        z
    }

    #[inline]
    fn from_parts(re: f64, im: f64) -> Self {
        Complex64::new(re, im)
    }

    fn sample_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }
}
