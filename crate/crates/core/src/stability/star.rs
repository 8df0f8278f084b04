//! Exact stability for the star quiver `B(q, m)` with dimension vector
//! `(p, 1, …, 1)` and weight `σ = (−q′, p′, …, p′)`.
//!
//! Every arm is one-dimensional, so a subrepresentation is determined by a
//! set of arms `S` together with a subspace of `K^p` containing the images of
//! their arrows. The smallest such subspace has dimension
//! `d_S = rank[Y_i e_j : j ∈ S, i ≤ m]`, and `σ` is largest there. Hence `Y`
//! is semistable iff `q·d_S ≥ p·|S|` for every `S`, and stable iff the
//! inequality is strict for every nonempty proper `S`.

use nalgebra::DMatrix;

use super::one_ps::build_one_ps;
use super::verdict::{Certificate, Diagnostics, StabilityLevel, StabilityVerdict};
use super::TAU_RANK;
use crate::error::{Error, Result};
use crate::linalg;
use crate::quiver::{DimVector, StarDimVec};
use crate::rep::RepTuple;
use crate::scalar::Field;

pub const STAR_ENUMERATION_LIMIT: usize = 22;

struct ArmRanks {
    q: usize,
    ranks: Vec<usize>,
}

impl ArmRanks {
    fn compute<T: Field>(y: &RepTuple<T>, blocks: &[DMatrix<T>]) -> Self {
        let (p, q, m) = (y.p(), y.q(), y.m());
        let all = linalg::hstack(p, &blocks.iter().collect::<Vec<_>>());
        let tol = TAU_RANK * linalg::largest_singular_value(&all);
        let mut ranks = vec![0; 1 << q];
        for mask in 1usize..(1 << q) {
            let chosen: Vec<&DMatrix<T>> = (0..q).filter(|j| mask >> j & 1 == 1).map(|j| &blocks[j]).collect();
            let sub = linalg::hstack(p, &chosen);
            ranks[mask] = if sub.nrows() <= sub.ncols() {
                linalg::rank_abs(&sub, tol)
            } else {
                linalg::rank_abs(&sub.adjoint(), tol)
            };
            debug_assert!(ranks[mask] <= p.min(m * chosen.len()));
        }
        Self { q, ranks }
    }

    fn full(&self) -> usize {
        (1 << self.q) - 1
    }

    fn rank(&self, mask: usize) -> usize {
        self.ranks[mask]
    }
}

fn arms_of(mask: usize, q: usize) -> Vec<usize> {
    (0..q).filter(|j| mask >> j & 1 == 1).collect()
}

fn size(mask: usize) -> usize {
    mask.count_ones() as usize
}

/// Nonempty proper submasks of `mask`.
fn proper_submasks(mask: usize) -> impl Iterator<Item = usize> {
    let mut sub = mask;
    std::iter::from_fn(move || {
        sub = (sub.wrapping_sub(1)) & mask;
        (sub != 0).then_some(sub)
    })
}

/// Splits a tight arm set into arm sets carrying stable summands, or `None`
/// when no direct-sum splitting into stable pieces exists.
fn stable_partition(ranks: &ArmRanks, p: usize, q: usize, mask: usize) -> Option<Vec<usize>> {
    let tight = |s: usize| q * ranks.rank(s) == p * size(s);
    let mut any_tight = false;
    for sub in proper_submasks(mask) {
        if !tight(sub) {
            continue;
        }
        any_tight = true;
        let rest = mask & !sub;
        if tight(rest) && ranks.rank(sub) + ranks.rank(rest) == ranks.rank(mask) {
            let mut left = stable_partition(ranks, p, q, sub)?;
            left.extend(stable_partition(ranks, p, q, rest)?);
            return Some(left);
        }
    }
    if any_tight {
        None
    } else {
        Some(vec![mask])
    }
}

pub fn star_exact_stability<T: Field>(y: &RepTuple<T>) -> Result<StabilityVerdict<T>> {
    let (p, q) = (y.p(), y.q());
    if q > STAR_ENUMERATION_LIMIT {
        return Err(Error::EnumerationLimit {
            q,
            limit: STAR_ENUMERATION_LIMIT,
        });
    }
    let blocks: Vec<DMatrix<T>> = (0..q).map(|j| y.arm_block(j)).collect();
    let ranks = ArmRanks::compute(y, &blocks);
    let diagnostics = Diagnostics {
        iterations: ranks.ranks.len() - 1,
        ..Diagnostics::default()
    };

    // most violated inequality first, smallest mask on ties
    let witness = (1..=ranks.full())
        .map(|s| (p * size(s)) as i64 - (q * ranks.rank(s)) as i64)
        .enumerate()
        .filter(|&(_, gap)| gap > 0)
        .max_by_key(|&(s, gap)| (gap, std::cmp::Reverse(s)))
        .map(|(s, _)| s + 1);

    if let Some(mask) = witness {
        let arms = arms_of(mask, q);
        let chosen: Vec<&DMatrix<T>> = arms.iter().map(|&j| &blocks[j]).collect();
        let span = linalg::hstack(p, &chosen);
        let tol = TAU_RANK * linalg::largest_singular_value(&span).max(f64::MIN_POSITIVE);
        let u = linalg::column_space_abs(&span, tol);
        let mut w = DMatrix::zeros(q, arms.len());
        for (c, &j) in arms.iter().enumerate() {
            w[(j, c)] = T::one();
        }
        let one_ps = build_one_ps(y, &u, &w).ok();
        return Ok(StabilityVerdict {
            level: StabilityLevel::Unstable,
            polystability_decided: true,
            certificate: Some(Certificate::Subset {
                rank: ranks.rank(mask),
                arms,
                one_ps,
            }),
            diagnostics,
        });
    }

    let full = ranks.full();
    let verdict = |level, certificate| StabilityVerdict {
        level,
        polystability_decided: true,
        certificate,
        diagnostics: diagnostics.clone(),
    };
    Ok(match stable_partition(&ranks, p, q, full) {
        Some(parts) if parts.len() == 1 => verdict(StabilityLevel::Stable, None),
        Some(parts) => {
            let dims = parts
                .iter()
                .map(|&s| {
                    let arms = (0..q).map(|j| (s >> j & 1) as u64).collect();
                    DimVector::Star(StarDimVec::new(ranks.rank(s) as u64, arms))
                })
                .collect();
            verdict(StabilityLevel::Polystable, Some(Certificate::Summands(dims)))
        }
        None => verdict(StabilityLevel::Semistable, None),
    })
}
