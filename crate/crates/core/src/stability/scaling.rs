//! Alternating row/column normalization ("operator scaling").
//!
//! With the total mass fixed at `N = m·p·q`, the left step replaces `Y_i` by
//! `√(N/p)·S^{-1/2}·Y_i` with `S = Σ Y_i Y_i†`, the right step by
//! `√(N/q)·Y_i·T^{-1/2}` with `T = Σ Y_i† Y_i` (only its diagonal for the
//! star quiver). Up to scalars each step is the norm-minimizing element of
//! `SL_p` (resp. `SL_q`, `ST_q`), and its norm reduction is
//! `p·det(S)^{1/p} / tr S ≤ 1`. Accumulating these ratios tracks the norm of
//! the determinant-one orbit point, which tends to zero exactly for tuples in
//! the null cone.

use nalgebra::DMatrix;

use super::verdict::{Diagnostics, StabilityLevel, StabilityVerdict};
use super::{QuiverKind, TAU_COLLAPSE};
use crate::error::{Error, Result};
use crate::linalg;
use crate::rep::RepTuple;
use crate::scalar::Field;

/// Eigenvalue ratio below which a Gram matrix is treated as singular.
const GRAM_SINGULAR: f64 = 1e-14;

#[derive(Debug, Clone, Copy)]
pub struct ScalingOptions {
    /// Semistable once the imbalance drops below this; `None` means `1e-8·N²`.
    pub eps: Option<f64>,
    pub max_iter: usize,
    /// Unstable once the orbit norm ratio drops below this.
    pub collapse: f64,
}

impl Default for ScalingOptions {
    fn default() -> Self {
        Self {
            eps: None,
            max_iter: 10_000,
            collapse: TAU_COLLAPSE,
        }
    }
}

fn imbalance<T: Field>(s: &DMatrix<T>, t: &DMatrix<T>, n: f64, kind: QuiverKind) -> f64 {
    let (p, q) = (s.nrows(), t.nrows());
    let left = (s - DMatrix::<T>::identity(p, p) * T::from_real(n / p as f64)).norm_squared();
    let right = match kind {
        QuiverKind::Kronecker => {
            (t - DMatrix::<T>::identity(q, q) * T::from_real(n / q as f64)).norm_squared()
        }
        QuiverKind::Star => (0..q).map(|j| (t[(j, j)].real() - n / q as f64).powi(2)).sum(),
    };
    left + right
}

fn condition<T: Field>(m: &DMatrix<T>) -> f64 {
    let sv = linalg::singular_values(m);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

pub fn scaling_semistability<T: Field>(
    y: &RepTuple<T>,
    opts: &ScalingOptions,
) -> Result<StabilityVerdict<T>> {
    scaling_semistability_kind(y, QuiverKind::Kronecker, opts)
}

pub fn scaling_semistability_kind<T: Field>(
    y: &RepTuple<T>,
    kind: QuiverKind,
    opts: &ScalingOptions,
) -> Result<StabilityVerdict<T>> {
    let (p, q, m) = (y.p(), y.q(), y.m());
    let n = (m * p * q) as f64;
    let eps = opts.eps.unwrap_or(1e-8 * n * n);
    let log_collapse = opts.collapse.ln();

    let verdict = |level, iterations, imbalance, log_ratio, g: &DMatrix<T>, h: &DMatrix<T>| StabilityVerdict {
        level,
        polystability_decided: false,
        certificate: None,
        diagnostics: Diagnostics {
            iterations,
            imbalance: Some(imbalance),
            log_norm_ratio: Some(log_ratio),
            scaling_condition: Some(condition(g).max(condition(h))),
        },
    };

    let mut g_acc = DMatrix::<T>::identity(p, p);
    let mut h_acc = DMatrix::<T>::identity(q, q);
    if y.is_zero() {
        return Ok(verdict(StabilityLevel::Unstable, 0, n * n, f64::NEG_INFINITY, &g_acc, &h_acc));
    }
    let mut z = y.scaled(n.sqrt() / y.norm());
    let mut log_ratio = 0.0;
    let mut ds = f64::INFINITY;

    for it in 0..opts.max_iter {
        let s = z.row_gram();
        let t = z.col_gram();
        ds = imbalance(&s, &t, n, kind);
        if ds < eps {
            return Ok(verdict(StabilityLevel::Semistable, it, ds, log_ratio, &g_acc, &h_acc));
        }

        let s_eig = linalg::hermitian_eigenvalues(&s);
        let (lo, hi) = (s_eig[0], s_eig[p - 1]);
        if lo <= GRAM_SINGULAR * hi {
            return Ok(verdict(StabilityLevel::Unstable, it, ds, f64::NEG_INFINITY, &g_acc, &h_acc));
        }
        let tr: f64 = s_eig.iter().sum();
        log_ratio += (p as f64).ln() + s_eig.iter().map(|l| l.ln()).sum::<f64>() / p as f64 - tr.ln();
        let g = linalg::hermitian_apply(&s, |l| (n / p as f64 / l).sqrt());
        z = z.map(|yi| &g * yi);
        g_acc = &g * g_acc;

        let t = z.col_gram();
        let h = match kind {
            QuiverKind::Kronecker => {
                let t_eig = linalg::hermitian_eigenvalues(&t);
                let (lo, hi) = (t_eig[0], t_eig[q - 1]);
                if lo <= GRAM_SINGULAR * hi {
                    return Ok(verdict(StabilityLevel::Unstable, it, ds, f64::NEG_INFINITY, &g_acc, &h_acc));
                }
                let tr: f64 = t_eig.iter().sum();
                log_ratio +=
                    (q as f64).ln() + t_eig.iter().map(|l| l.ln()).sum::<f64>() / q as f64 - tr.ln();
                linalg::hermitian_apply(&t, |l| (n / q as f64 / l).sqrt())
            }
            QuiverKind::Star => {
                let d: Vec<f64> = (0..q).map(|j| t[(j, j)].real()).collect();
                let hi = d.iter().copied().fold(0.0, f64::max);
                if d.iter().any(|&x| x <= GRAM_SINGULAR * hi) {
                    return Ok(verdict(StabilityLevel::Unstable, it, ds, f64::NEG_INFINITY, &g_acc, &h_acc));
                }
                let tr: f64 = d.iter().sum();
                log_ratio += (q as f64).ln() + d.iter().map(|l| l.ln()).sum::<f64>() / q as f64 - tr.ln();
                let scales: Vec<f64> = d.iter().map(|&x| (n / q as f64 / x).sqrt()).collect();
                linalg::diag_real(&scales)
            }
        };
        z = z.map(|yi| yi * &h);
        h_acc *= &h;

        if log_ratio < log_collapse {
            return Ok(verdict(StabilityLevel::Unstable, it + 1, ds, log_ratio, &g_acc, &h_acc));
        }
    }
    Err(Error::Inconclusive {
        iterations: opts.max_iter,
        imbalance: ds,
        log_norm_ratio: log_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn run<T: Field>(y: &RepTuple<T>) -> StabilityLevel {
        scaling_semistability(y, &ScalingOptions::default()).unwrap().level
    }

    #[test]
    fn zero_tuple_is_unstable() {
        let y = RepTuple::<f64>::zeros(3, 2, 2);
        assert_eq!(run(&y), StabilityLevel::Unstable);
    }

    #[test]
    fn dkh_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..5 {
            let unstable = RepTuple::<f64>::gaussian(7, 4, 2, &mut rng);
            assert_eq!(run(&unstable), StabilityLevel::Unstable);
            let stable = RepTuple::<f64>::gaussian(5, 4, 2, &mut rng);
            assert_eq!(run(&stable), StabilityLevel::Semistable);
        }
    }

    #[test]
    fn complex_example_from_block_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let y = RepTuple::<Complex64>::gaussian(4, 7, 2, &mut rng);
        assert_eq!(run(&y), StabilityLevel::Unstable);
        let y = RepTuple::<Complex64>::gaussian(6, 4, 2, &mut rng);
        assert_eq!(run(&y), StabilityLevel::Semistable);
    }

    #[test]
    fn linearly_independent_summands_destabilize() {
        // (1,1) ⊕ (1,2) with m = 2: total (2,3); the (1,2) piece has σ > 0.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let a = RepTuple::<f64>::gaussian(1, 1, 2, &mut rng);
        let b = RepTuple::<f64>::gaussian(1, 2, 2, &mut rng);
        let y = a.direct_sum(&b).unwrap();
        assert_eq!(run(&y), StabilityLevel::Unstable);
    }

    #[test]
    fn star_scaling_only_uses_the_torus() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let opts = ScalingOptions::default();
        let y = RepTuple::<f64>::gaussian(2, 3, 1, &mut rng);
        let v = scaling_semistability_kind(&y, QuiverKind::Star, &opts).unwrap();
        assert_eq!(v.level, StabilityLevel::Semistable);
        let y = RepTuple::<f64>::gaussian(3, 2, 1, &mut rng);
        let v = scaling_semistability_kind(&y, QuiverKind::Star, &opts).unwrap();
        assert_eq!(v.level, StabilityLevel::Unstable);
    }
}
