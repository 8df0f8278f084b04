//! Dense linear-algebra helpers shared by the stability, decomposition and MLE
//! modules. All routines are generic over the ground field.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::scalar::Field;

/// SVD with singular values in descending order and singular vectors that
/// match them.
struct SortedSvd<T: Field> {
    u: DMatrix<T>,
    v_t: DMatrix<T>,
    singular_values: Vec<f64>,
}

/// Relative reconstruction error above which a factorization is rejected.
const SVD_CHECK: f64 = 1e-11;

fn raw_svd<T: Field>(m: &DMatrix<T>) -> (DMatrix<T>, Vec<f64>, DMatrix<T>) {
    let svd = SVD::new_unordered(m.clone(), true, true);
    let sv = svd.singular_values.iter().copied().collect();
    (svd.u.expect("requested"), sv, svd.v_t.expect("requested"))
}

fn reconstruction_error<T: Field>(m: &DMatrix<T>, f: &(DMatrix<T>, Vec<f64>, DMatrix<T>)) -> f64 {
    let mut us = f.0.clone();
    for (k, &s) in f.1.iter().enumerate() {
        us.column_mut(k).scale_mut(s);
    }
    (m - us * &f.2).norm()
}

/// The bidiagonal iteration occasionally returns factors that do not
/// reproduce the input (seen on exactly rank-deficient tall matrices), so the
/// result is checked and recomputed from `m = QR` or a rescaled copy.
fn checked_svd<T: Field>(m: &DMatrix<T>) -> (DMatrix<T>, Vec<f64>, DMatrix<T>) {
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let first = raw_svd(m);
    let mut best_err = reconstruction_error(m, &first);
    if best_err <= SVD_CHECK * scale {
        return first;
    }
    let mut best = first;
    let mut candidates = Vec::new();
    if m.nrows() >= m.ncols() {
        let qr = m.clone().qr();
        let (q, r) = (qr.q(), qr.r());
        let (ur, sv, vt) = raw_svd(&r);
        candidates.push((q * ur, sv, vt));
    } else {
        let (u, sv, vt) = checked_svd(&m.adjoint());
        candidates.push((vt.adjoint(), sv, u.adjoint()));
    }
    for factor in [0.7, 1.3, 0.9] {
        let (u, sv, vt) = raw_svd(&(m * T::from_real(factor)));
        candidates.push((u, sv.into_iter().map(|x| x / factor).collect(), vt));
    }
    for c in candidates {
        let err = reconstruction_error(m, &c);
        if err < best_err {
            best_err = err;
            best = c;
        }
        if best_err <= SVD_CHECK * scale {
            break;
        }
    }
    best
}

fn sorted_svd<T: Field>(m: &DMatrix<T>) -> SortedSvd<T> {
    let (u, sv, v_t) = checked_svd(m);
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    SortedSvd {
        u: DMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]),
        v_t: DMatrix::from_fn(order.len(), v_t.ncols(), |r, c| v_t[(order[r], c)]),
        singular_values: order.iter().map(|&i| sv[i]).collect(),
    }
}

/// Singular values (descending) together with an orthonormal basis of the
/// right nullspace at absolute threshold `abs_tol`.
pub struct NullspaceResult<T: Field> {
    pub basis: DMatrix<T>,
    pub singular_values: Vec<f64>,
}

/// Orthonormal basis (as columns) of `{x : M x = 0}`, deciding rank by
/// singular values `<= abs_tol`.
pub fn nullspace_abs<T: Field>(m: &DMatrix<T>, abs_tol: f64) -> NullspaceResult<T> {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return NullspaceResult {
            basis: DMatrix::zeros(0, 0),
            singular_values: Vec::new(),
        };
    }
    if rows == 0 {
        return NullspaceResult {
            basis: DMatrix::identity(cols, cols),
            singular_values: Vec::new(),
        };
    }
    // Thin SVD only exposes min(rows, cols) right singular vectors; zero rows
    // leave the nullspace unchanged and make the factorization full.
    let padded = if rows < cols {
        let mut pad = DMatrix::zeros(cols, cols);
        pad.rows_mut(0, rows).copy_from(m);
        pad
    } else {
        m.clone()
    };
    let svd = sorted_svd(&padded);
    let v_t = &svd.v_t;
    let sv = svd.singular_values;
    let null_idx: Vec<usize> = (0..sv.len()).filter(|&k| sv[k] <= abs_tol).collect();
    let mut basis = DMatrix::zeros(cols, null_idx.len());
    for (c, &k) in null_idx.iter().enumerate() {
        basis.set_column(c, &v_t.row(k).adjoint());
    }
    NullspaceResult {
        basis,
        singular_values: sv,
    }
}

/// Nullspace with a threshold relative to the largest singular value.
pub fn nullspace<T: Field>(m: &DMatrix<T>, rel_tol: f64) -> DMatrix<T> {
    let smax = largest_singular_value(m);
    nullspace_abs(m, rel_tol * smax).basis
}

pub fn singular_values<T: Field>(m: &DMatrix<T>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    sorted_svd(m).singular_values
}

pub fn largest_singular_value<T: Field>(m: &DMatrix<T>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn rank_abs<T: Field>(m: &DMatrix<T>, abs_tol: f64) -> usize {
    singular_values(m).iter().filter(|&&s| s > abs_tol).count()
}

/// Orthonormal basis of the column space at absolute threshold `abs_tol`.
pub fn column_space_abs<T: Field>(m: &DMatrix<T>, abs_tol: f64) -> DMatrix<T> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let svd = sorted_svd(m);
    let u = &svd.u;
    let r = svd.singular_values.iter().filter(|&&s| s > abs_tol).count();
    u.columns(0, r).into_owned()
}

/// Orthonormalizes the columns of `m` (dropping dependent ones).
pub fn orthonormalize<T: Field>(m: &DMatrix<T>) -> DMatrix<T> {
    let scale = largest_singular_value(m);
    column_space_abs(m, 1e-10 * scale)
}

/// Orthonormal basis of the orthogonal complement of the span of an
/// orthonormal `n × k` basis.
pub fn orth_complement<T: Field>(basis: &DMatrix<T>) -> DMatrix<T> {
    let n = basis.nrows();
    if basis.ncols() == 0 {
        return DMatrix::identity(n, n);
    }
    nullspace_abs(&basis.adjoint(), 1e-10).basis
}

/// Concatenates matrices with the same number of rows side by side.
pub fn hstack<T: Field>(rows: usize, blocks: &[&DMatrix<T>]) -> DMatrix<T> {
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        out.columns_mut(c, b.ncols()).copy_from(*b);
        c += b.ncols();
    }
    out
}

pub fn hermitian_part<T: Field>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.adjoint()) * T::from_real(0.5)
}

/// Eigendecomposition of the Hermitian part of `m`.
pub fn hermitian_eigen<T: Field>(m: &DMatrix<T>) -> SymmetricEigen<T, nalgebra::Dyn> {
    SymmetricEigen::new(hermitian_part(m))
}

/// `f(M)` for a Hermitian matrix via its spectral decomposition.
pub fn hermitian_apply<T: Field>(m: &DMatrix<T>, f: impl Fn(f64) -> f64) -> DMatrix<T> {
    let eig = hermitian_eigen(m);
    let n = m.nrows();
    let mut scaled = eig.eigenvectors.clone();
    for j in 0..n {
        scaled.column_mut(j).scale_mut(f(eig.eigenvalues[j]));
    }
    &scaled * eig.eigenvectors.adjoint()
}

pub fn hermitian_eigenvalues<T: Field>(m: &DMatrix<T>) -> Vec<f64> {
    let mut ev: Vec<f64> = hermitian_eigen(m).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Eigenvalues of a general square matrix, as complex numbers.
pub fn eigenvalues<T: Field>(m: &DMatrix<T>) -> Option<Vec<Complex64>> {
    let n = m.nrows();
    if n == 0 {
        return Some(Vec::new());
    }
    let mc: DMatrix<Complex64> = m.map(|x| x.to_c64());
    // repeated eigenvalues can stall the strictest deflation test
    let schur = Schur::try_new(mc.clone(), f64::EPSILON, 10_000)
        .or_else(|| Schur::try_new(mc, 1e-13, 100_000))?;
    let (_, t) = schur.unpack();
    Some((0..n).map(|i| t[(i, i)]).collect())
}

pub fn to_complex<T: Field>(m: &DMatrix<T>) -> DMatrix<Complex64> {
    m.map(|x| x.to_c64())
}

pub fn from_complex<T: Field>(m: &DMatrix<Complex64>) -> DMatrix<T> {
    m.map(T::from_c64)
}

/// Real part of the trace.
pub fn trace_re<T: Field>(m: &DMatrix<T>) -> f64 {
    (0..m.nrows().min(m.ncols()))
        .map(|i| m[(i, i)].real())
        .sum()
}

/// Diagonal matrix from real entries.
pub fn diag_real<T: Field>(d: &[f64]) -> DMatrix<T> {
    DMatrix::from_diagonal(&DVector::from_iterator(
        d.len(),
        d.iter().map(|&x| T::from_real(x)),
    ))
}

pub fn is_finite<T: Field>(m: &DMatrix<T>) -> bool {
    m.iter().all(|x| {
        let z = x.to_c64();
        z.re.is_finite() && z.im.is_finite()
    })
}

/// Largest modulus of the entries.
pub fn max_abs<T: Field>(m: &DMatrix<T>) -> f64 {
    m.iter().map(|x| x.modulus()).fold(0.0, f64::max)
}

pub fn zeros_like<T: Field>(m: &DMatrix<T>) -> DMatrix<T> {
    DMatrix::from_element(m.nrows(), m.ncols(), T::zero())
}
