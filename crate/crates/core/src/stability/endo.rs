use nalgebra::DMatrix;
use rand::Rng;

use super::{QuiverKind, TAU_RANK};
use crate::linalg;
use crate::rep::RepTuple;
use crate::scalar::Field;

/// Endomorphisms `(A, B)` of a tuple: `A·Y_i = Y_i·B` for every `i`.
///
/// For the star quiver `B` is diagonal (one scalar per arm).
#[derive(Debug, Clone)]
pub struct EndAlgebra<T: Field> {
    pub basis: Vec<(DMatrix<T>, DMatrix<T>)>,
    pub dimension: usize,
}

impl<T: Field> EndAlgebra<T> {
    /// Residual `max_i ‖A Y_i − Y_i B‖ / (‖A‖ + ‖B‖)·‖Y‖` over the basis.
    pub fn max_residual(&self, y: &RepTuple<T>) -> f64 {
        let ny = y.norm().max(f64::MIN_POSITIVE);
        self.basis
            .iter()
            .map(|(a, b)| {
                let scale = (a.norm() + b.norm()).max(f64::MIN_POSITIVE) * ny;
                y.matrices()
                    .iter()
                    .map(|yi| (a * yi - yi * b).norm() / scale)
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// A Gaussian combination of the basis elements.
    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> (DMatrix<T>, DMatrix<T>) {
        let (a0, b0) = &self.basis[0];
        let mut a = linalg::zeros_like(a0);
        let mut b = linalg::zeros_like(b0);
        for (ai, bi) in &self.basis {
            let c = T::sample_gaussian(rng);
            a += ai * c;
            b += bi * c;
        }
        (a, b)
    }
}

/// Number of unknowns on the `y` side.
fn right_unknowns(q: usize, kind: QuiverKind) -> usize {
    match kind {
        QuiverKind::Kronecker => q * q,
        QuiverKind::Star => q,
    }
}

/// Matrix of the linear map `(A, B) ↦ (A Y_i − Y_i B)_i`, with `vec(A)`
/// column-major in the first `p²` coordinates.
fn intertwiner_matrix<T: Field>(y: &RepTuple<T>, kind: QuiverKind) -> DMatrix<T> {
    let (p, q, m) = (y.p(), y.q(), y.m());
    let cols = p * p + right_unknowns(q, kind);
    let mut l = DMatrix::zeros(m * p * q, cols);
    for (i, yi) in y.matrices().iter().enumerate() {
        for c in 0..q {
            for r in 0..p {
                let row = i * p * q + r + c * p;
                for k in 0..p {
                    l[(row, r + k * p)] += yi[(k, c)];
                }
                match kind {
                    QuiverKind::Kronecker => {
                        for k in 0..q {
                            l[(row, p * p + k + c * q)] -= yi[(r, k)];
                        }
                    }
                    QuiverKind::Star => {
                        l[(row, p * p + c)] -= yi[(r, c)];
                    }
                }
            }
        }
    }
    l
}

fn unpack<T: Field>(v: &[T], p: usize, q: usize, kind: QuiverKind) -> (DMatrix<T>, DMatrix<T>) {
    let a = DMatrix::from_column_slice(p, p, &v[..p * p]);
    let b = match kind {
        QuiverKind::Kronecker => DMatrix::from_column_slice(q, q, &v[p * p..]),
        QuiverKind::Star => DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&v[p * p..])),
    };
    (a, b)
}

fn basis_from_nullspace<T: Field>(
    ns: &DMatrix<T>,
    p: usize,
    q: usize,
    kind: QuiverKind,
) -> Vec<(DMatrix<T>, DMatrix<T>)> {
    ns.column_iter()
        .map(|col| {
            let v: Vec<T> = col.iter().copied().collect();
            unpack(&v, p, q, kind)
        })
        .collect()
}

pub fn end_algebra_kind<T: Field>(y: &RepTuple<T>, kind: QuiverKind) -> EndAlgebra<T> {
    let l = intertwiner_matrix(y, kind);
    let ns = linalg::nullspace(&l, TAU_RANK);
    let basis = basis_from_nullspace(&ns, y.p(), y.q(), kind);
    EndAlgebra {
        dimension: basis.len(),
        basis,
    }
}

/// `End(Y)` for the m-Kronecker quiver.
pub fn end_algebra<T: Field>(y: &RepTuple<T>) -> EndAlgebra<T> {
    end_algebra_kind(y, QuiverKind::Kronecker)
}

/// Dimension of `{(A, B) ∈ End(Y) : tr A = 0, tr B = 0}`, the Lie algebra of
/// the stabilizer of `Y` in the determinant-one group.
pub fn stabilizer_dimension_kind<T: Field>(y: &RepTuple<T>, kind: QuiverKind) -> usize {
    let (p, q) = (y.p(), y.q());
    let l = intertwiner_matrix(y, kind);
    let scale = linalg::largest_singular_value(&l).max(1.0);
    let rows = l.nrows();
    let mut aug = l.insert_rows(rows, 2, T::zero());
    for r in 0..p {
        aug[(rows, r + r * p)] = T::from_real(scale);
    }
    for k in 0..q {
        let col = match kind {
            QuiverKind::Kronecker => p * p + k + k * q,
            QuiverKind::Star => p * p + k,
        };
        aug[(rows + 1, col)] = T::from_real(scale);
    }
    linalg::nullspace(&aug, TAU_RANK).ncols()
}

pub fn stabilizer_dimension<T: Field>(y: &RepTuple<T>) -> usize {
    stabilizer_dimension_kind(y, QuiverKind::Kronecker)
}
