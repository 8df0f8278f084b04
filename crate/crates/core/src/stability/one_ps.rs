//! Hilbert–Mumford certificates: a basis change on each side plus integer
//! weights summing to zero, such that every nonzero entry of the transformed
//! tuple has positive degree `row_weight[i] − col_weight[j]`. The
//! one-parameter subgroup `t ↦ (diag(t^row_weights), diag(t^col_weights))`
//! then drives `Y` to the origin as `t → 0`.

use nalgebra::DMatrix;
use num_integer::Integer;
use rand::Rng;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use super::{QuiverKind, TAU_BLOCK, TAU_END};
use crate::candec::decompose_representation;
use crate::error::{Error, Result};
use crate::linalg;
use crate::quiver::{canonical_weight, weight_value, DimVec2, DimVector};
use crate::rep::RepTuple;
use crate::scalar::Field;

#[derive(Debug, Clone, PartialEq)]
pub struct OnePSCertificate<T: Field> {
    /// Columns are the new basis of `K^p`.
    pub row_basis: DMatrix<T>,
    /// Columns are the new basis of `K^q`.
    pub col_basis: DMatrix<T>,
    pub row_weights: Vec<i64>,
    pub col_weights: Vec<i64>,
}

impl<T: Field> OnePSCertificate<T> {
    /// Weight attached to a vector lying in one of the weight spaces, read off
    /// from its coordinates in the column basis.
    pub fn col_weight_of(&self, v: &DMatrix<T>) -> Option<i64> {
        let coords = self.col_basis.clone().try_inverse()? * v;
        let norm = coords.norm();
        let weights: Vec<i64> = (0..coords.nrows())
            .filter(|&i| coords[(i, 0)].modulus() > 1e-10 * norm)
            .map(|i| self.col_weights[i])
            .collect();
        let first = *weights.first()?;
        weights.iter().all(|&w| w == first).then_some(first)
    }
}

fn matrix_json<T: Field>(m: &DMatrix<T>) -> serde_json::Value {
    let part = |f: fn(num_complex::Complex64) -> f64| -> Vec<Vec<f64>> {
        (0..m.nrows())
            .map(|r| (0..m.ncols()).map(|c| f(m[(r, c)].to_c64())).collect())
            .collect()
    };
    match T::KIND {
        crate::scalar::FieldKind::Real => serde_json::json!(part(|z| z.re)),
        crate::scalar::FieldKind::Complex => serde_json::json!({"re": part(|z| z.re), "im": part(|z| z.im)}),
    }
}

impl<T: Field> Serialize for OnePSCertificate<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("OnePSCertificate", 4)?;
        s.serialize_field("row_weights", &self.row_weights)?;
        s.serialize_field("col_weights", &self.col_weights)?;
        s.serialize_field("row_basis", &matrix_json(&self.row_basis))?;
        s.serialize_field("col_basis", &matrix_json(&self.col_basis))?;
        s.end()
    }
}

/// A candidate destabilizing subrepresentation: `U ⊆ K^p` (columns span it)
/// and `W ⊆ K^q` with `Y_i W ⊆ U`.
#[derive(Debug, Clone)]
pub struct Witness<T: Field> {
    pub u: DMatrix<T>,
    pub w: DMatrix<T>,
}

fn subrep_residual<T: Field>(y: &RepTuple<T>, u: &DMatrix<T>, w: &DMatrix<T>) -> f64 {
    let ny = y.norm();
    if ny == 0.0 || w.ncols() == 0 {
        return 0.0;
    }
    let proj = DMatrix::<T>::identity(y.p(), y.p()) - u * u.adjoint();
    y.matrices()
        .iter()
        .map(|yi| (&proj * yi * w).norm())
        .fold(0.0, f64::max)
        / ny
}

fn reduce(weights: &mut [i64]) {
    let g = weights.iter().fold(0i64, |g, &w| g.gcd(&w));
    if g > 1 {
        weights.iter_mut().for_each(|w| *w /= g);
    }
}

/// Builds a one-parameter subgroup from a subrepresentation of dimension
/// `(a, b)` with `σ(a, b) > 0`, where `σ = (−q′, p′)`.
///
/// The weights are `(p−a)q` on `U`, `−aq` off `U`, `(q−b)p` on `W`, `−bp` off
/// `W` (divided by their gcd): both sum to zero and every block that can be
/// nonzero has the common degree `bp − aq > 0`.
pub fn build_one_ps<T: Field>(
    y: &RepTuple<T>,
    u: &DMatrix<T>,
    w: &DMatrix<T>,
) -> Result<OnePSCertificate<T>> {
    let (p, q) = (y.p(), y.q());
    if u.nrows() != p || w.nrows() != q {
        return Err(Error::Shape(format!(
            "witness bases have {} and {} rows, expected {p} and {q}",
            u.nrows(),
            w.nrows()
        )));
    }
    let u = linalg::orthonormalize(u);
    let w = linalg::orthonormalize(w);
    let (a, b) = (u.ncols(), w.ncols());
    let sigma = canonical_weight(p as u64, q as u64);
    let value = weight_value(sigma, DimVec2::new(a as u64, b as u64));
    if value <= 0 {
        return Err(Error::NoDestabilizer { weight: value });
    }
    let residual = subrep_residual(y, &u, &w);
    if residual > TAU_END {
        return Err(Error::NotASubrepresentation { residual });
    }

    let (pi, qi, ai, bi) = (p as i64, q as i64, a as i64, b as i64);
    let mut weights: Vec<i64> = std::iter::repeat_n((pi - ai) * qi, a)
        .chain(std::iter::repeat_n(-ai * qi, p - a))
        .chain(std::iter::repeat_n((qi - bi) * pi, b))
        .chain(std::iter::repeat_n(-bi * pi, q - b))
        .collect();
    reduce(&mut weights);
    let col_weights = weights.split_off(p);

    let row_basis = linalg::hstack(p, &[&u, &linalg::orth_complement(&u)]);
    let col_basis = linalg::hstack(q, &[&w, &linalg::orth_complement(&w)]);
    Ok(OnePSCertificate {
        row_basis,
        col_basis,
        row_weights: weights,
        col_weights,
    })
}

/// Checks a certificate: zero weight sums on both sides, invertible bases, and
/// positive degree on every entry of `P⁻¹ Y_i Q` above `τ_block·‖Y‖`.
pub fn verify_one_ps<T: Field>(y: &RepTuple<T>, cert: &OnePSCertificate<T>) -> bool {
    let (p, q) = (y.p(), y.q());
    if cert.row_basis.shape() != (p, p)
        || cert.col_basis.shape() != (q, q)
        || cert.row_weights.len() != p
        || cert.col_weights.len() != q
    {
        return false;
    }
    if cert.row_weights.iter().sum::<i64>() != 0 || cert.col_weights.iter().sum::<i64>() != 0 {
        return false;
    }
    let Some(p_inv) = cert.row_basis.clone().try_inverse() else {
        return false;
    };
    let threshold = TAU_BLOCK * y.norm();
    y.matrices().iter().all(|yi| {
        let z = &p_inv * yi * &cert.col_basis;
        (0..p).all(|r| {
            (0..q).all(|c| z[(r, c)].modulus() <= threshold || cert.row_weights[r] > cert.col_weights[c])
        })
    })
}

fn weight_of_dim(p: usize, q: usize, dim: &DimVector) -> i64 {
    let (a, b) = dim.totals();
    weight_value(canonical_weight(p as u64, q as u64), DimVec2::new(a, b))
}

/// Finds a destabilizing subrepresentation by splitting `Y` into
/// indecomposable summands and summing those with positive weight.
pub fn destabilizing_witness<T: Field, R: Rng + ?Sized>(
    y: &RepTuple<T>,
    kind: QuiverKind,
    rng: &mut R,
) -> Result<Witness<T>> {
    let (p, q) = (y.p(), y.q());
    if y.is_zero() {
        return Ok(Witness {
            u: DMatrix::zeros(p, 0),
            w: DMatrix::identity(q, q),
        });
    }
    let split = decompose_representation(y, kind, rng)?;
    let positive: Vec<_> = split
        .summands
        .iter()
        .filter(|s| weight_of_dim(p, q, &s.dim) > 0)
        .collect();
    if positive.is_empty() {
        return Err(Error::NoDestabilizer { weight: 0 });
    }
    let u_blocks: Vec<&DMatrix<T>> = positive.iter().map(|s| &s.row_basis).collect();
    let w_blocks: Vec<&DMatrix<T>> = positive.iter().map(|s| &s.col_basis).collect();
    Ok(Witness {
        u: linalg::hstack(p, &u_blocks),
        w: linalg::hstack(q, &w_blocks),
    })
}

/// Witness search followed by [`build_one_ps`] and [`verify_one_ps`].
pub fn certify_instability<T: Field, R: Rng + ?Sized>(
    y: &RepTuple<T>,
    kind: QuiverKind,
    rng: &mut R,
) -> Result<OnePSCertificate<T>> {
    let witness = destabilizing_witness(y, kind, rng)?;
    let cert = build_one_ps(y, &witness.u, &witness.w)?;
    if verify_one_ps(y, &cert) {
        Ok(cert)
    } else {
        Err(Error::AmbiguousSplit {
            reason: "constructed one-parameter subgroup failed verification".into(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// The 4 × 7 block pattern: row 1 in columns 1–2, row 2 in columns 3–4,
    /// rows 3–4 in columns 5–7.
    fn block_pattern<R: Rng>(rng: &mut R) -> RepTuple<f64> {
        let mats = (0..2)
            .map(|_| {
                let mut y = DMatrix::zeros(4, 7);
                for (r, cols) in [(0, 0..2), (1, 2..4), (2, 4..7), (3, 4..7)] {
                    for c in cols {
                        y[(r, c)] = f64::sample_gaussian(rng);
                    }
                }
                y
            })
            .collect();
        RepTuple::new(4, 7, mats).unwrap()
    }

    fn block_cert(row: Vec<i64>, col: Vec<i64>) -> OnePSCertificate<f64> {
        OnePSCertificate {
            row_basis: DMatrix::identity(4, 4),
            col_basis: DMatrix::identity(7, 7),
            row_weights: row,
            col_weights: col,
        }
    }

    #[test]
    fn block_form_weights_verify() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let y = block_pattern(&mut rng);
        let good = block_cert(vec![7, 7, -7, -7], vec![6, 6, 6, 6, -8, -8, -8]);
        assert!(verify_one_ps(&y, &good));
        let flipped = block_cert(vec![-7, -7, 7, 7], vec![-6, -6, -6, -6, 8, 8, 8]);
        assert!(!verify_one_ps(&y, &flipped));
        let zero = block_cert(vec![0; 4], vec![0; 7]);
        assert!(!verify_one_ps(&y, &zero));
    }

    #[test]
    fn build_from_block_witness() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let y = block_pattern(&mut rng);
        let u = DMatrix::identity(4, 4).columns(0, 2).into_owned();
        let w = DMatrix::identity(7, 7).columns(0, 4).into_owned();
        let cert = build_one_ps(&y, &u, &w).unwrap();
        assert_eq!(cert.row_weights, vec![7, 7, -7, -7]);
        assert_eq!(cert.col_weights, vec![6, 6, 6, 6, -8, -8, -8]);
        assert!(verify_one_ps(&y, &cert));
    }

    #[test]
    fn zero_column_witness() {
        let y = RepTuple::from_row_slices(2, 2, &[&[1.0, 0.0, 1.0, 0.0]]).unwrap();
        let u = DMatrix::<f64>::zeros(2, 0);
        let w = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        let cert = build_one_ps(&y, &u, &w).unwrap();
        assert_eq!(cert.row_weights, vec![0, 0]);
        let e1 = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let e2 = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        assert_eq!(cert.col_weight_of(&e1), Some(-1));
        assert_eq!(cert.col_weight_of(&e2), Some(1));
        assert!(verify_one_ps(&y, &cert));
    }

    #[test]
    fn non_destabilizing_witness_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let y = RepTuple::<f64>::gaussian(5, 4, 2, &mut rng);
        // the whole space has weight zero
        let err = build_one_ps(&y, &DMatrix::identity(5, 5), &DMatrix::identity(4, 4)).unwrap_err();
        assert!(matches!(err, Error::NoDestabilizer { weight: 0 }));
    }

    #[test]
    fn non_subrepresentation_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let y = RepTuple::<f64>::gaussian(4, 7, 2, &mut rng);
        let u = DMatrix::identity(4, 4).columns(0, 2).into_owned();
        let w = DMatrix::identity(7, 7).columns(0, 4).into_owned();
        assert!(matches!(
            build_one_ps(&y, &u, &w),
            Err(Error::NotASubrepresentation { .. })
        ));
    }

    #[test]
    fn generic_4_7_certificate() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let y = RepTuple::<Complex64>::gaussian(4, 7, 2, &mut rng);
        let witness = destabilizing_witness(&y, QuiverKind::Kronecker, &mut rng).unwrap();
        // the two (1,2) summands have weight −7 + 8 = 1 each; (2,3) has −2
        assert_eq!((witness.u.ncols(), witness.w.ncols()), (2, 4));
        let cert = build_one_ps(&y, &witness.u, &witness.w).unwrap();
        assert_eq!(cert.row_weights, vec![7, 7, -7, -7]);
        assert_eq!(cert.col_weights, vec![6, 6, 6, 6, -8, -8, -8]);
        assert!(verify_one_ps(&y, &cert));
    }

    #[test]
    fn lin_ind_summands_certificate() {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let a = RepTuple::<f64>::gaussian(1, 1, 2, &mut rng);
        let b = RepTuple::<f64>::gaussian(1, 2, 2, &mut rng);
        let y = a.direct_sum(&b).unwrap();
        // σ = (−3, 2); the (1,2) summand has weight 1 > 0
        let u = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        let w = DMatrix::identity(3, 3).columns(1, 2).into_owned();
        let cert = build_one_ps(&y, &u, &w).unwrap();
        assert!(verify_one_ps(&y, &cert));
        // the (1,1) summand has weight −1 and cannot destabilize on its own
        let u = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let w = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        assert!(matches!(build_one_ps(&y, &u, &w), Err(Error::NoDestabilizer { .. })));
        assert!(certify_instability(&y, QuiverKind::Kronecker, &mut rng).is_ok());
    }
}
