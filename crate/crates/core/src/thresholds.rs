//! Closed-form sample-size classification and maximum-likelihood thresholds
//! for the matrix normal model `M(p,q)` and the proportional-covariance model
//! `N(p,q)`.

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::quiver::{tits_form, DimVec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    #[serde(rename = "mnm")]
    MatrixNormal,
    #[serde(rename = "propcov")]
    ProportionalCovariance,
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Model::MatrixNormal => f.write_str("mnm"),
            Model::ProportionalCovariance => f.write_str("propcov"),
        }
    }
}

/// What happens to the likelihood for `m` samples. The variants are ordered
/// by strength: `LikelihoodUnbounded < MleExistsNotAlmostSurelyUnique < MleExistsUniqueAS`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MleBehavior {
    LikelihoodUnbounded,
    MleExistsNotAlmostSurelyUnique,
    MleExistsUniqueAS,
}

impl std::fmt::Display for MleBehavior {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MleBehavior::LikelihoodUnbounded => "unbounded",
            MleBehavior::MleExistsNotAlmostSurelyUnique => "exists-not-unique",
            MleBehavior::MleExistsUniqueAS => "exists-unique",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MnmVerdict {
    pub behavior: MleBehavior,
    /// Set only for `(p,q,m) = (2,2,2)`: over ℝ the uniquely solvable samples
    /// form a full-dimensional but non-dense set, so neither uniqueness nor
    /// non-uniqueness holds generically.
    pub indeterminate_real_case: bool,
    /// True when the verdict holds for every sample, not only almost surely.
    pub holds_for_all_inputs: bool,
}

impl MnmVerdict {
    fn new(behavior: MleBehavior) -> Self {
        Self {
            behavior,
            indeterminate_real_case: false,
            holds_for_all_inputs: behavior == MleBehavior::LikelihoodUnbounded,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub p: u64,
    pub q: u64,
    pub mlt_b: u64,
    pub mlt_e: u64,
    pub mlt_u: u64,
    pub model: Model,
}

pub fn classify_mnm(p: u64, q: u64, m: u64) -> MnmVerdict {
    let d = p.gcd(&q) as i64;
    let form = tits_form(m, DimVec2::new(p, q));
    let mut verdict = if form < 0 {
        MnmVerdict::new(MleBehavior::MleExistsUniqueAS)
    } else if form == 0 || form == d * d {
        if d == 1 {
            MnmVerdict::new(MleBehavior::MleExistsUniqueAS)
        } else {
            MnmVerdict::new(MleBehavior::MleExistsNotAlmostSurelyUnique)
        }
    } else {
        MnmVerdict::new(MleBehavior::LikelihoodUnbounded)
    };
    verdict.indeterminate_real_case = (p, q, m) == (2, 2, 2);
    verdict
}

pub fn thresholds_mnm(p: u64, q: u64) -> ThresholdReport {
    let report = |b, u| ThresholdReport {
        p,
        q,
        mlt_b: b,
        mlt_e: b,
        mlt_u: u,
        model: Model::MatrixNormal,
    };
    if p == q {
        return if p == 1 { report(1, 1) } else { report(1, 3) };
    }
    let d = p.gcd(&q);
    let numerator = p * p + q * q - d * d;
    let pq = p * q;
    if numerator % pq == 0 {
        let r = numerator / pq;
        if d == 1 {
            report(r, r)
        } else {
            report(r, r + 1)
        }
    } else {
        let c = (p * p + q * q).div_ceil(pq);
        report(c, c)
    }
}

/// Proportional covariance: `mq < p` is unbounded for every sample, `mq = p`
/// admits an MLE that is a.s. unique only for `q = 1`, `mq > p` is a.s. unique.
pub fn classify_propcov(p: u64, q: u64, m: u64) -> MnmVerdict {
    let mq = m * q;
    if mq < p {
        MnmVerdict::new(MleBehavior::LikelihoodUnbounded)
    } else if mq == p {
        if q == 1 {
            MnmVerdict::new(MleBehavior::MleExistsUniqueAS)
        } else {
            MnmVerdict::new(MleBehavior::MleExistsNotAlmostSurelyUnique)
        }
    } else {
        MnmVerdict::new(MleBehavior::MleExistsUniqueAS)
    }
}

pub fn thresholds_propcov(p: u64, q: u64) -> ThresholdReport {
    let report = |b, u| ThresholdReport {
        p,
        q,
        mlt_b: b,
        mlt_e: b,
        mlt_u: u,
        model: Model::ProportionalCovariance,
    };
    if p % q == 0 {
        let r = p / q;
        if q == 1 {
            report(r, r)
        } else {
            report(r, r + 1)
        }
    } else {
        let c = p.div_ceil(q);
        report(c, c)
    }
}

pub fn classify(model: Model, p: u64, q: u64, m: u64) -> MnmVerdict {
    match model {
        Model::MatrixNormal => classify_mnm(p, q, m),
        Model::ProportionalCovariance => classify_propcov(p, q, m),
    }
}

pub fn thresholds(model: Model, p: u64, q: u64) -> ThresholdReport {
    match model {
        Model::MatrixNormal => thresholds_mnm(p, q),
        Model::ProportionalCovariance => thresholds_propcov(p, q),
    }
}
