//! Maximum likelihood thresholds for matrix normal and proportional
//! covariance models via quiver representations.
//!
//! A sample of `m` matrices `Y_i ∈ K^{p×q}` is a representation of the
//! `m`-Kronecker quiver (matrix normal model) or, read column by column, of a
//! star quiver (proportional covariance model). The crate provides the exact
//! combinatorial classification ([`thresholds`], [`quiver`], [`candec`]), the
//! numerical stability tests behind it ([`stability`]), a flip-flop MLE solver
//! ([`mle`]) and a sweep harness comparing the two ([`harness`]).

pub mod candec;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod mle;
pub mod quiver;
pub mod rep;
pub mod scalar;
pub mod seeding;
pub mod stability;
pub mod thresholds;

pub use candec::{candec_kronecker, candec_star, decompose_representation, scale_candec, CanDec, Exactness};
pub use error::{Error, Result};
pub use nalgebra::DMatrix;
pub use harness::{dkh_table, run_sweep, SweepConfig, SweepReport};
pub use mle::{classify_empirical, flip_flop, log_likelihood, uniqueness_probe, ConcentrationPair, MleResult, MleStatus};
pub use quiver::{DimVec2, DimVector, RootClass, StarDimVec};
pub use rep::{AnyRep, RepInput, RepTuple};
pub use scalar::{Field, FieldKind};
pub use stability::{classify_stability, QuiverKind, StabilityLevel, StabilityVerdict};
pub use thresholds::{classify, thresholds, MleBehavior, Model, ThresholdReport};

/// Real sample tuple.
pub type RealRep = RepTuple<f64>;
/// Complex sample tuple.
pub type ComplexRep = RepTuple<num_complex::Complex64>;
