use rand::Rng;
use serde::Serialize;

use super::{
    certify_instability, scaling_semistability_kind, stabilizer_dimension_kind, star_exact_stability,
    OnePSCertificate, QuiverKind, ScalingOptions,
};
use crate::candec::decompose_representation;
use crate::error::Result;
use crate::quiver::{canonical_weight, star_weight_value, weight_value, DimVector};
use crate::rep::RepTuple;
use crate::scalar::Field;

/// Ordered `Unstable < Semistable < Polystable < Stable`.
///
/// `Semistable` means "semistable, not known to be polystable" unless the
/// verdict says `polystability_decided`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum StabilityLevel {
    Unstable,
    Semistable,
    Polystable,
    Stable,
}

impl std::fmt::Display for StabilityLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StabilityLevel::Unstable => "unstable",
            StabilityLevel::Semistable => "semistable",
            StabilityLevel::Polystable => "polystable",
            StabilityLevel::Stable => "stable",
        })
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Diagnostics {
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub imbalance: Option<f64>,
    /// `ln(‖g·Y·h⁻¹‖² / ‖Y‖²)` along the normalization path.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_norm_ratio: Option<f64>,
    /// Condition number of the accumulated scaling matrices.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scaling_condition: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(bound = "", rename_all = "snake_case")]
pub enum Certificate<T: Field> {
    OnePs(OnePSCertificate<T>),
    /// Arms `S` (0-based) whose columns span a space of dimension `rank`.
    Subset {
        arms: Vec<usize>,
        rank: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        one_ps: Option<OnePSCertificate<T>>,
    },
    /// Dimension vectors of a direct-sum splitting into stable summands.
    Summands(Vec<DimVector>),
}

#[derive(Debug, Clone, Serialize)]
#[serde(bound = "")]
pub struct StabilityVerdict<T: Field> {
    pub level: StabilityLevel,
    pub polystability_decided: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate<T>>,
    pub diagnostics: Diagnostics,
}

impl<T: Field> StabilityVerdict<T> {
    pub fn is_unstable(&self) -> bool {
        self.level == StabilityLevel::Unstable
    }

    /// The Hilbert–Mumford certificate carried by the verdict, if any.
    pub fn one_ps(&self) -> Option<&OnePSCertificate<T>> {
        match &self.certificate {
            Some(Certificate::OnePs(c)) => Some(c),
            Some(Certificate::Subset { one_ps, .. }) => one_ps.as_ref(),
            _ => None,
        }
    }
}

fn weight_of(p: usize, q: usize, dim: &DimVector) -> i64 {
    match dim {
        DimVector::Kronecker(v) => weight_value(canonical_weight(p as u64, q as u64), *v),
        DimVector::Star(v) => star_weight_value(p as u64, q as u64, v),
    }
}

/// Full stability verdict.
///
/// The star quiver is decided exactly. For the Kronecker quiver, scaling
/// decides semistability; an unstable verdict is equipped with a one-parameter
/// subgroup when a destabilizing summand can be found, and the polystable and
/// stable levels are only granted when the tuple splits into summands that are
/// each semistable, parallel to `(p, q)` and have trivial stabilizer.
pub fn classify_stability<T: Field, R: Rng + ?Sized>(
    y: &RepTuple<T>,
    kind: QuiverKind,
    opts: &ScalingOptions,
    rng: &mut R,
) -> Result<StabilityVerdict<T>> {
    if kind == QuiverKind::Star {
        return star_exact_stability(y);
    }
    let mut verdict = scaling_semistability_kind(y, kind, opts)?;
    if verdict.is_unstable() {
        if verdict.certificate.is_none() {
            if let Ok(cert) = certify_instability(y, kind, rng) {
                verdict.certificate = Some(Certificate::OnePs(cert));
            }
        }
        return Ok(verdict);
    }

    let split = match decompose_representation(y, kind, rng) {
        Ok(s) => s,
        Err(_) => return Ok(verdict),
    };
    let (p, q) = (y.p(), y.q());
    if split.summands.iter().any(|s| weight_of(p, q, &s.dim) != 0) {
        return Ok(verdict);
    }
    for summand in &split.summands {
        let piece = match summand.restrict(y) {
            Some(piece) => piece,
            None => return Ok(verdict),
        };
        let piece_ok = scaling_semistability_kind(&piece, kind, opts)
            .map(|v| !v.is_unstable())
            .unwrap_or(false);
        if !piece_ok || stabilizer_dimension_kind(&piece, kind) != 0 {
            return Ok(verdict);
        }
    }
    verdict.polystability_decided = true;
    if split.summands.len() == 1 {
        verdict.level = StabilityLevel::Stable;
    } else {
        verdict.level = StabilityLevel::Polystable;
        verdict.certificate = Some(Certificate::Summands(
            split.summands.iter().map(|s| s.dim.clone()).collect(),
        ));
    }
    Ok(verdict)
}
