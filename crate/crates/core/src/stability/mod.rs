//! Stability of sample tuples under `SL_p × SL_q` (left-right action, the
//! m-Kronecker quiver) and `SL_p × ST_q` (left action with a diagonal torus on
//! the right, the star quiver).
//!
//! * [`end_algebra`] / [`stabilizer_dimension`]: endomorphisms and the Lie
//!   algebra of the stabilizer, as numerical nullspaces.
//! * [`scaling_semistability`]: alternating row/column normalization.
//! * [`star_exact_stability`]: exact rank-based decision for the star quiver.
//! * [`build_one_ps`] / [`verify_one_ps`]: Hilbert–Mumford certificates.

mod endo;
mod one_ps;
mod scaling;
mod star;
mod verdict;

pub use endo::{end_algebra, end_algebra_kind, stabilizer_dimension, stabilizer_dimension_kind, EndAlgebra};
pub use one_ps::{
    build_one_ps, certify_instability, destabilizing_witness, verify_one_ps, OnePSCertificate, Witness,
};
pub use scaling::{scaling_semistability, scaling_semistability_kind, ScalingOptions};
pub use star::{star_exact_stability, STAR_ENUMERATION_LIMIT};
pub use verdict::{classify_stability, Certificate, Diagnostics, StabilityLevel, StabilityVerdict};

use serde::{Deserialize, Serialize};

/// Which quiver (equivalently, which group) a tuple is read against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QuiverKind {
    /// `Θ(m)`, group `SL_p × SL_q`.
    Kronecker,
    /// `B(q, m)`, group `SL_p × ST_q`.
    Star,
}

impl From<crate::thresholds::Model> for QuiverKind {
    fn from(model: crate::thresholds::Model) -> Self {
        match model {
            crate::thresholds::Model::MatrixNormal => QuiverKind::Kronecker,
            crate::thresholds::Model::ProportionalCovariance => QuiverKind::Star,
        }
    }
}

/// Singular values below `TAU_RANK · σ_max` count as zero.
pub const TAU_RANK: f64 = 1e-8;
/// Relative residual accepted for `A·Y_i = Y_i·B` and for subrepresentations.
pub const TAU_END: f64 = 1e-8;
/// Relative norm collapse that certifies a blow-down to the origin.
pub const TAU_COLLAPSE: f64 = 1e-12;
/// Entries below `TAU_BLOCK · ‖Y‖` count as structural zeros.
pub const TAU_BLOCK: f64 = 1e-8;
