//! Canonical decompositions of dimension vectors, and numerical
//! Krull–Remak–Schmidt splitting of concrete representations.
//!
//! Closed forms cover the Kronecker cases where `(p, q)` is a multiple of a
//! Schur root, and the star cases `mq ≥ p`. Everything else is answered by
//! splitting generic samples and requiring replicated agreement.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::quiver::{classify_root, is_schur_root, tits_form, DimVec2, DimVector, RootClass, StarDimVec};
use crate::rep::RepTuple;
use crate::scalar::{Field, FieldKind};
use crate::seeding;
use crate::stability::{end_algebra_kind, QuiverKind};

/// Relative eigenvalue clustering tolerance.
pub const TAU_EIG: f64 = 1e-6;
/// Samples that must agree before a numeric canonical decomposition is reported.
pub const GENERIC_AGREEMENT: usize = 5;
const GENERIC_MAX_SAMPLES: usize = 9;
const SPLIT_ATTEMPTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Exactness {
    Exact,
    NumericGeneric,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanDec {
    /// Summand dimension vectors with multiplicities, sorted.
    pub summands: Vec<(DimVector, usize)>,
    pub exactness: Exactness,
    /// Number of agreeing samples behind a numeric result (0 when exact).
    pub confidence: usize,
}

impl CanDec {
    fn exact(summands: Vec<(DimVector, usize)>) -> Self {
        Self {
            summands: normalize(summands),
            exactness: Exactness::Exact,
            confidence: 0,
        }
    }

    /// Multiplicity-weighted totals `(Σ x-dims, Σ y-dims)`.
    pub fn totals(&self) -> (u64, u64) {
        self.summands.iter().fold((0, 0), |(a, b), (d, k)| {
            let (x, y) = d.totals();
            (a + x * *k as u64, b + y * *k as u64)
        })
    }

    pub fn summand_count(&self) -> usize {
        self.summands.iter().map(|(_, k)| k).sum()
    }
}

impl std::fmt::Display for CanDec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, (d, k)) in self.summands.iter().enumerate() {
            if i > 0 {
                f.write_str(" ⊕ ")?;
            }
            if *k == 1 {
                write!(f, "{d}")?;
            } else {
                write!(f, "{d}^{k}")?;
            }
        }
        Ok(())
    }
}

fn normalize(summands: Vec<(DimVector, usize)>) -> Vec<(DimVector, usize)> {
    let mut merged: BTreeMap<DimVector, usize> = BTreeMap::new();
    for (d, k) in summands {
        if k > 0 {
            *merged.entry(d).or_default() += k;
        }
    }
    merged.into_iter().collect()
}

/// Multiset of summand dimension vectors.
pub fn dimension_multiset(dims: impl IntoIterator<Item = DimVector>) -> Vec<(DimVector, usize)> {
    normalize(dims.into_iter().map(|d| (d, 1)).collect())
}

fn kron(a: u64, b: u64) -> DimVector {
    DimVector::Kronecker(DimVec2::new(a, b))
}

/// Canonical decomposition of `(p, q)` for `Θ(m)`, using the default seed for
/// the numeric case.
pub fn candec_kronecker(m: u64, p: u64, q: u64) -> Result<CanDec> {
    candec_kronecker_seeded(m, p, q, seeding::DEFAULT_SEED)
}

pub fn candec_kronecker_seeded(m: u64, p: u64, q: u64, seed: u64) -> Result<CanDec> {
    let alpha = DimVec2::new(p, q);
    let d = alpha.gcd();
    let form = tits_form(m, alpha);
    let prim = alpha.primitive();
    if form < 0 {
        Ok(CanDec::exact(vec![(kron(p, q), 1)]))
    } else if form == 0 || form == (d * d) as i64 {
        Ok(CanDec::exact(vec![(kron(prim.a, prim.b), d as usize)]))
    } else {
        numeric_generic_candec(QuiverKind::Kronecker, p as usize, q as usize, m as usize, seed)
    }
}

/// Scales a canonical decomposition by `k`: real and isotropic Schur roots are
/// repeated, non-isotropic imaginary ones are multiplied.
pub fn scale_candec(m: u64, base: &CanDec, k: u64) -> Result<CanDec> {
    if k == 1 {
        return Ok(base.clone());
    }
    let mut out = Vec::with_capacity(base.summands.len());
    for (dim, mult) in &base.summands {
        let DimVector::Kronecker(beta) = dim else {
            return Err(Error::InvalidCanDec {
                summand: dim.to_string(),
            });
        };
        if !is_schur_root(m, *beta)? {
            return Err(Error::InvalidCanDec {
                summand: beta.to_string(),
            });
        }
        match classify_root(m, *beta)? {
            RootClass::ImaginaryNonIsotropic => {
                let s = beta.scale(k * *mult as u64);
                out.push((kron(s.a, s.b), 1));
            }
            _ => out.push((dim.clone(), mult * k as usize)),
        }
    }
    Ok(CanDec {
        summands: normalize(out),
        exactness: base.exactness,
        confidence: base.confidence,
    })
}

/// Canonical decomposition of `(p, 1, …, 1)` on the star quiver `B(q, m)`.
pub fn candec_star(p: u64, q: u64, m: u64) -> Result<CanDec> {
    candec_star_seeded(p, q, m, seeding::DEFAULT_SEED)
}

pub fn candec_star_seeded(p: u64, q: u64, m: u64, seed: u64) -> Result<CanDec> {
    let mq = m * q;
    let qs = q as usize;
    if mq == p {
        Ok(CanDec::exact(
            (0..qs)
                .map(|j| (DimVector::Star(StarDimVec::arm(m, qs, j)), 1))
                .collect(),
        ))
    } else if mq > p {
        Ok(CanDec::exact(vec![(DimVector::Star(StarDimVec::full(p, qs)), 1)]))
    } else {
        numeric_generic_candec(QuiverKind::Star, p as usize, qs, m as usize, seed)
    }
}

/// Splits independent complex Gaussian samples until one dimension multiset
/// has been seen [`GENERIC_AGREEMENT`] times.
pub fn numeric_generic_candec(kind: QuiverKind, p: usize, q: usize, m: usize, seed: u64) -> Result<CanDec> {
    let mut seen: BTreeMap<Vec<(DimVector, usize)>, usize> = BTreeMap::new();
    for trial in 0..GENERIC_MAX_SAMPLES {
        let mut rng = seeding::rng_for(seed, &[p as u64, q as u64, m as u64, trial as u64]);
        let y = RepTuple::<Complex64>::gaussian(p, q, m, &mut rng);
        let Ok(split) = decompose_representation(&y, kind, &mut rng) else {
            continue;
        };
        let count = seen.entry(split.dimension_multiset()).or_default();
        *count += 1;
        if *count >= GENERIC_AGREEMENT {
            return Ok(CanDec {
                summands: split.dimension_multiset(),
                exactness: Exactness::NumericGeneric,
                confidence: *count,
            });
        }
    }
    Err(Error::AmbiguousSplit {
        reason: format!("no dimension multiset reached {GENERIC_AGREEMENT} agreeing samples: {seen:?}"),
    })
}

/// One indecomposable summand of a concrete tuple. The columns of
/// `row_basis` (`p × a`) and `col_basis` (`q × b`) span its two spaces.
#[derive(Debug, Clone)]
pub struct Summand<T: Field> {
    pub dim: DimVector,
    pub row_basis: DMatrix<T>,
    pub col_basis: DMatrix<T>,
}

impl<T: Field> Summand<T> {
    /// The summand as a tuple in its own coordinates, when both sides are
    /// nonzero. Bases produced by [`decompose_representation`] are orthonormal.
    pub fn restrict(&self, y: &RepTuple<T>) -> Option<RepTuple<T>> {
        let (a, b) = (self.row_basis.ncols(), self.col_basis.ncols());
        if a == 0 || b == 0 {
            return None;
        }
        let ut = self.row_basis.adjoint();
        let mats = y.matrices().iter().map(|yi| &ut * yi * &self.col_basis).collect();
        RepTuple::new(a, b, mats).ok()
    }
}

#[derive(Debug, Clone)]
pub struct SummandSplit<T: Field> {
    pub summands: Vec<Summand<T>>,
    pub field: FieldKind,
}

impl<T: Field> SummandSplit<T> {
    pub fn dimension_multiset(&self) -> Vec<(DimVector, usize)> {
        dimension_multiset(self.summands.iter().map(|s| s.dim.clone()))
    }

    pub fn len(&self) -> usize {
        self.summands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.summands.is_empty()
    }

    /// Largest entry outside the diagonal blocks of `P⁻¹ Y_i Q`, relative to
    /// `‖Y‖`, where `P` and `Q` concatenate the summand bases.
    pub fn block_residual(&self, y: &RepTuple<T>) -> f64 {
        let (p, q) = (y.p(), y.q());
        let rows: Vec<&DMatrix<T>> = self.summands.iter().map(|s| &s.row_basis).collect();
        let cols: Vec<&DMatrix<T>> = self.summands.iter().map(|s| &s.col_basis).collect();
        let pm = linalg::hstack(p, &rows);
        let qm = linalg::hstack(q, &cols);
        let Some(p_inv) = pm.try_inverse() else {
            return f64::INFINITY;
        };
        let mut row_owner = Vec::with_capacity(p);
        let mut col_owner = Vec::with_capacity(q);
        for (k, s) in self.summands.iter().enumerate() {
            row_owner.extend(std::iter::repeat_n(k, s.row_basis.ncols()));
            col_owner.extend(std::iter::repeat_n(k, s.col_basis.ncols()));
        }
        let ny = y.norm().max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for yi in y.matrices() {
            let z = &p_inv * yi * &qm;
            for r in 0..p {
                for c in 0..q {
                    if row_owner[r] != col_owner[c] {
                        worst = worst.max(z[(r, c)].modulus() / ny);
                    }
                }
            }
        }
        worst
    }
}

struct Piece<T: Field> {
    /// Orthonormal basis of the x-space, in ambient coordinates.
    u: DMatrix<T>,
    /// Orthonormal basis of the y-space, in ambient coordinates.
    w: DMatrix<T>,
}

/// Splits `Y` into indecomposable summands over its own field.
///
/// A random endomorphism `(A, B)` acts on each indecomposable summand with a
/// single eigenvalue (over ℝ: a single conjugate pair), and distinct summands
/// generically get distinct eigenvalues, so grouping the joint spectrum of
/// `A` and `B` into clusters and taking generalized eigenspaces splits `Y`.
/// Pieces are split again until their endomorphisms are local.
pub fn decompose_representation<T: Field, R: Rng + ?Sized>(
    y: &RepTuple<T>,
    kind: QuiverKind,
    rng: &mut R,
) -> Result<SummandSplit<T>> {
    let (p, q) = (y.p(), y.q());
    let root = Piece {
        u: DMatrix::identity(p, p),
        w: DMatrix::identity(q, q),
    };
    let mut done = Vec::new();
    let mut stack = vec![root];
    while let Some(piece) = stack.pop() {
        let (a, b) = (piece.u.ncols(), piece.w.ncols());
        if a == 0 || b == 0 {
            done.extend(split_trivial(&piece));
            continue;
        }
        let ut = piece.u.adjoint();
        let mats = y.matrices().iter().map(|yi| &ut * yi * &piece.w).collect();
        let sub = RepTuple::new(a, b, mats)?;
        match split_once(&sub, kind, rng)? {
            None => done.push(piece),
            Some(parts) => {
                for (u, w) in parts {
                    stack.push(Piece {
                        u: &piece.u * u,
                        w: &piece.w * w,
                    });
                }
            }
        }
    }
    let mut summands: Vec<Summand<T>> = done
        .into_iter()
        .map(|piece| Summand {
            dim: summand_dim(kind, q, &piece),
            row_basis: piece.u,
            col_basis: piece.w,
        })
        .collect();
    summands.sort_by(|a, b| a.dim.cmp(&b.dim));
    Ok(SummandSplit {
        summands,
        field: T::KIND,
    })
}

fn summand_dim<T: Field>(kind: QuiverKind, q: usize, piece: &Piece<T>) -> DimVector {
    let a = piece.u.ncols() as u64;
    match kind {
        QuiverKind::Kronecker => kron(a, piece.w.ncols() as u64),
        QuiverKind::Star => {
            let arms = (0..q)
                .map(|j| u64::from(piece.w.row(j).iter().any(|x| x.modulus() > 0.5)))
                .collect();
            DimVector::Star(StarDimVec::new(a, arms))
        }
    }
}

/// A piece with one side zero is a sum of simples.
fn split_trivial<T: Field>(piece: &Piece<T>) -> Vec<Piece<T>> {
    let (p, q) = (piece.u.nrows(), piece.w.nrows());
    let mut out = Vec::new();
    for c in 0..piece.u.ncols() {
        out.push(Piece {
            u: piece.u.columns(c, 1).into_owned(),
            w: DMatrix::zeros(q, 0),
        });
    }
    for c in 0..piece.w.ncols() {
        out.push(Piece {
            u: DMatrix::zeros(p, 0),
            w: piece.w.columns(c, 1).into_owned(),
        });
    }
    out
}

struct Cluster {
    a_eigs: Vec<Complex64>,
    b_idx: Vec<usize>,
    b_eigs: Vec<Complex64>,
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    let mut j = i;
    while parent[j] != r {
        let next = parent[j];
        parent[j] = r;
        j = next;
    }
    r
}

fn cluster_spectrum(
    a_eigs: &[Complex64],
    b_eigs: &[Complex64],
    real_field: bool,
) -> std::result::Result<Vec<Cluster>, String> {
    let all: Vec<Complex64> = a_eigs.iter().chain(b_eigs).copied().collect();
    let n = all.len();
    let scale = all.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let tol = TAU_EIG * scale;
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            let close = (all[i] - all[j]).norm() <= tol
                || (real_field && (all[i].conj() - all[j]).norm() <= tol);
            if close {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri] = rj;
            }
        }
    }
    // distinct clusters must be clearly separated
    let margin = TAU_EIG.sqrt() * scale;
    for i in 0..n {
        for j in i + 1..n {
            if find(&mut parent, i) == find(&mut parent, j) {
                continue;
            }
            let mut dist = (all[i] - all[j]).norm();
            if real_field {
                dist = dist.min((all[i].conj() - all[j]).norm());
            }
            if dist < margin {
                return Err(format!("eigenvalues {} and {} are {dist:.2e} apart", all[i], all[j]));
            }
        }
    }
    let mut by_root: BTreeMap<usize, Cluster> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        let c = by_root.entry(r).or_insert_with(|| Cluster {
            a_eigs: Vec::new(),
            b_idx: Vec::new(),
            b_eigs: Vec::new(),
        });
        if i < a_eigs.len() {
            c.a_eigs.push(all[i]);
        } else {
            c.b_idx.push(i - a_eigs.len());
            c.b_eigs.push(all[i]);
        }
    }
    Ok(by_root.into_values().collect())
}

/// Orthonormal basis of the generalized eigenspace of `m` for the given
/// eigenvalues: the nullspace of `∏ (M − λ I)`.
fn generalized_eigenspace<T: Field>(m: &DMatrix<T>, eigs: &[Complex64]) -> std::result::Result<DMatrix<T>, String> {
    let n = m.nrows();
    let k = eigs.len();
    if k == 0 {
        return Ok(DMatrix::zeros(n, 0));
    }
    if k == n {
        return Ok(DMatrix::identity(n, n));
    }
    let mc = linalg::to_complex(m);
    let id = DMatrix::<Complex64>::identity(n, n);
    let prod = eigs
        .iter()
        .fold(id.clone(), |acc, &lambda| acc * (&mc - &id * lambda));
    let prod: DMatrix<T> = linalg::from_complex(&prod);
    let sv = linalg::singular_values(&prod);
    // sv is descending; the last k belong to the eigenspace
    let kept = sv[n - k - 1];
    let dropped = sv[n - k];
    if dropped > 1e-3 * kept {
        return Err(format!("no spectral gap: {dropped:.2e} vs {kept:.2e}"));
    }
    let basis = linalg::nullspace_abs(&prod, (kept * dropped.max(f64::MIN_POSITIVE)).sqrt()).basis;
    if basis.ncols() != k {
        return Err(format!("eigenspace has dimension {} instead of {k}", basis.ncols()));
    }
    Ok(basis)
}

type Split<T> = Vec<(DMatrix<T>, DMatrix<T>)>;

/// One splitting step. `Ok(None)` means the tuple is indecomposable.
fn split_once<T: Field, R: Rng + ?Sized>(
    y: &RepTuple<T>,
    kind: QuiverKind,
    rng: &mut R,
) -> Result<Option<Split<T>>> {
    let end = end_algebra_kind(y, kind);
    if end.dimension <= 1 {
        return Ok(None);
    }
    let (p, q) = (y.p(), y.q());
    let ny = y.norm();
    let real_field = T::KIND == FieldKind::Real;
    let mut last_reason = String::new();
    'attempt: for _ in 0..SPLIT_ATTEMPTS {
        let (a, b) = end.random_element(rng);
        let scale = a.norm().max(b.norm());
        if scale == 0.0 {
            continue;
        }
        let a = a / T::from_real(scale);
        let b = b / T::from_real(scale);
        let Some(a_eigs) = linalg::eigenvalues(&a) else {
            last_reason = "eigenvalue iteration did not converge".into();
            continue;
        };
        let b_eigs = match kind {
            QuiverKind::Kronecker => match linalg::eigenvalues(&b) {
                Some(e) => e,
                None => {
                    last_reason = "eigenvalue iteration did not converge".into();
                    continue;
                }
            },
            QuiverKind::Star => (0..q).map(|j| b[(j, j)].to_c64()).collect(),
        };
        let clusters = match cluster_spectrum(&a_eigs, &b_eigs, real_field) {
            Ok(c) => c,
            Err(reason) => {
                last_reason = reason;
                continue;
            }
        };
        if clusters.len() == 1 {
            return Ok(None);
        }
        let mut parts = Vec::with_capacity(clusters.len());
        for cluster in &clusters {
            let u = match generalized_eigenspace(&a, &cluster.a_eigs) {
                Ok(u) => u,
                Err(reason) => {
                    last_reason = reason;
                    continue 'attempt;
                }
            };
            let w = match kind {
                QuiverKind::Kronecker => match generalized_eigenspace(&b, &cluster.b_eigs) {
                    Ok(w) => w,
                    Err(reason) => {
                        last_reason = reason;
                        continue 'attempt;
                    }
                },
                QuiverKind::Star => {
                    let mut w = DMatrix::zeros(q, cluster.b_idx.len());
                    for (c, &j) in cluster.b_idx.iter().enumerate() {
                        w[(j, c)] = T::one();
                    }
                    w
                }
            };
            // Y_i W ⊆ U
            if w.ncols() > 0 && ny > 0.0 {
                let proj = DMatrix::<T>::identity(p, p) - &u * u.adjoint();
                let leak = y
                    .matrices()
                    .iter()
                    .map(|yi| (&proj * yi * &w).norm())
                    .fold(0.0, f64::max)
                    / ny;
                if leak > 1e-6 {
                    last_reason = format!("summand leaks {leak:.2e} out of its x-space");
                    continue 'attempt;
                }
            }
            parts.push((u, w));
        }
        // the pieces must fill both spaces independently
        let us: Vec<&DMatrix<T>> = parts.iter().map(|(u, _)| u).collect();
        let ws: Vec<&DMatrix<T>> = parts.iter().map(|(_, w)| w).collect();
        for (space, n) in [(linalg::hstack(p, &us), p), (linalg::hstack(q, &ws), q)] {
            let sv = linalg::singular_values(&space);
            if sv.len() != n || sv[n - 1] < 1e-6 * sv[0] {
                last_reason = "summand spaces are not independent".into();
                continue 'attempt;
            }
        }
        return Ok(Some(parts));
    }
    Err(Error::AmbiguousSplit { reason: last_reason })
}
