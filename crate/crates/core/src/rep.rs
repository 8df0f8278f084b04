//! Sample tuples `Y = (Y_1, …, Y_m)` of `p × q` matrices. A tuple is at the
//! same time a data set for the Gaussian models and a representation of the
//! m-Kronecker quiver (or, read column by column, of the star quiver).

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Field, FieldKind};

#[derive(Debug, Clone, PartialEq)]
pub struct RepTuple<T: Field> {
    p: usize,
    q: usize,
    matrices: Vec<DMatrix<T>>,
}

impl<T: Field> RepTuple<T> {
    pub fn new(p: usize, q: usize, matrices: Vec<DMatrix<T>>) -> Result<Self> {
        if p == 0 || q == 0 {
            return Err(Error::Shape(format!("p and q must be positive, got ({p},{q})")));
        }
        if matrices.is_empty() {
            return Err(Error::Shape("a tuple needs at least one matrix".into()));
        }
        for (i, y) in matrices.iter().enumerate() {
            if y.shape() != (p, q) {
                return Err(Error::Shape(format!(
                    "matrix {i} has shape {:?}, expected ({p},{q})",
                    y.shape()
                )));
            }
            if !crate::linalg::is_finite(y) {
                return Err(Error::Shape(format!("matrix {i} has non-finite entries")));
            }
        }
        Ok(Self { p, q, matrices })
    }

    /// Builds a tuple from row-major entry slices, one per matrix.
    pub fn from_row_slices(p: usize, q: usize, rows: &[&[T]]) -> Result<Self> {
        let mats = rows
            .iter()
            .map(|s| {
                if s.len() != p * q {
                    Err(Error::Shape(format!("expected {} entries, got {}", p * q, s.len())))
                } else {
                    Ok(DMatrix::from_row_slice(p, q, s))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(p, q, mats)
    }

    pub fn zeros(p: usize, q: usize, m: usize) -> Self {
        Self {
            p,
            q,
            matrices: vec![DMatrix::zeros(p, q); m],
        }
    }

    /// Independent standard Gaussian entries.
    pub fn gaussian<R: Rng + ?Sized>(p: usize, q: usize, m: usize, rng: &mut R) -> Self {
        let matrices = (0..m)
            .map(|_| DMatrix::from_fn(p, q, |_, _| T::sample_gaussian(rng)))
            .collect();
        Self { p, q, matrices }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn m(&self) -> usize {
        self.matrices.len()
    }

    pub fn field(&self) -> FieldKind {
        T::KIND
    }

    pub fn matrices(&self) -> &[DMatrix<T>] {
        &self.matrices
    }

    pub fn matrix(&self, i: usize) -> &DMatrix<T> {
        &self.matrices[i]
    }

    /// `sqrt(Σ_i ‖Y_i‖_F²)`.
    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn norm_squared(&self) -> f64 {
        self.matrices.iter().map(|y| y.norm_squared()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.matrices.iter().all(|y| y.iter().all(|x| x.is_zero()))
    }

    /// `(g Y_i h^{-1})_i` for invertible `g` (p × p) and `h` (q × q).
    pub fn transform(&self, g: &DMatrix<T>, h: &DMatrix<T>) -> Result<Self> {
        let h_inv = h
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Domain("right transform is singular".into()))?;
        Ok(self.map(|y| g * y * &h_inv))
    }

    pub fn map(&self, f: impl Fn(&DMatrix<T>) -> DMatrix<T>) -> Self {
        let matrices: Vec<_> = self.matrices.iter().map(f).collect();
        let (p, q) = matrices[0].shape();
        Self { p, q, matrices }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|y| y * T::from_real(c))
    }

    /// `Σ_i Y_i Y_i†`.
    pub fn row_gram(&self) -> DMatrix<T> {
        self.matrices
            .iter()
            .fold(DMatrix::zeros(self.p, self.p), |acc, y| acc + y * y.adjoint())
    }

    /// `Σ_i Y_i† Y_i`.
    pub fn col_gram(&self) -> DMatrix<T> {
        self.matrices
            .iter()
            .fold(DMatrix::zeros(self.q, self.q), |acc, y| acc + y.adjoint() * y)
    }

    /// The `p × m` matrix whose columns are column `j` of each `Y_i`: the
    /// images of the `m` arrows leaving arm `y_j` of the star quiver.
    pub fn arm_block(&self, j: usize) -> DMatrix<T> {
        let mut out = DMatrix::zeros(self.p, self.m());
        for (i, y) in self.matrices.iter().enumerate() {
            out.set_column(i, &y.column(j));
        }
        out
    }

    /// Block-diagonal direct sum `Y ⊕ Z` (both tuples need the same `m`).
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if self.m() != other.m() {
            return Err(Error::Shape("direct sum needs equal sample counts".into()));
        }
        let (p, q) = (self.p + other.p, self.q + other.q);
        let matrices = self
            .matrices
            .iter()
            .zip(&other.matrices)
            .map(|(a, b)| {
                let mut out = DMatrix::zeros(p, q);
                out.view_mut((0, 0), (self.p, self.q)).copy_from(a);
                out.view_mut((self.p, self.q), (other.p, other.q)).copy_from(b);
                out
            })
            .collect();
        Ok(Self { p, q, matrices })
    }

    pub fn to_complex(&self) -> RepTuple<Complex64> {
        RepTuple {
            p: self.p,
            q: self.q,
            matrices: self.matrices.iter().map(crate::linalg::to_complex).collect(),
        }
    }

    pub fn to_json_input(&self) -> RepInput {
        let rows = |part: fn(Complex64) -> f64| -> Vec<Vec<Vec<f64>>> {
            self.matrices
                .iter()
                .map(|y| {
                    (0..self.p)
                        .map(|r| (0..self.q).map(|c| part(y[(r, c)].to_c64())).collect())
                        .collect()
                })
                .collect()
        };
        RepInput {
            p: self.p,
            q: self.q,
            m: self.m(),
            field: T::KIND,
            matrices: rows(|z| z.re),
            matrices_imag: match T::KIND {
                FieldKind::Real => None,
                FieldKind::Complex => Some(rows(|z| z.im)),
            },
        }
    }
}

/// JSON input format: matrices listed sample by sample, each a list of `p`
/// rows of `q` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepInput {
    pub p: usize,
    pub q: usize,
    pub m: usize,
    pub field: FieldKind,
    pub matrices: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices_imag: Option<Vec<Vec<Vec<f64>>>>,
}

/// A tuple over whichever field the input declared.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyRep {
    Real(RepTuple<f64>),
    Complex(RepTuple<Complex64>),
}

impl AnyRep {
    pub fn field(&self) -> FieldKind {
        match self {
            AnyRep::Real(_) => FieldKind::Real,
            AnyRep::Complex(_) => FieldKind::Complex,
        }
    }

    pub fn to_json_input(&self) -> RepInput {
        match self {
            AnyRep::Real(y) => y.to_json_input(),
            AnyRep::Complex(y) => y.to_json_input(),
        }
    }
}

impl RepInput {
    fn dense<T: Field>(&self, part_im: Option<&Vec<Vec<Vec<f64>>>>) -> Result<Vec<DMatrix<T>>> {
        if self.matrices.len() != self.m {
            return Err(Error::Shape(format!(
                "declared m = {} but {} matrices given",
                self.m,
                self.matrices.len()
            )));
        }
        let mut out = Vec::with_capacity(self.m);
        for (i, mat) in self.matrices.iter().enumerate() {
            let im = part_im.map(|v| v.get(i)).map(|o| {
                o.ok_or_else(|| Error::Shape(format!("matrices_imag is missing matrix {i}")))
            });
            let im = im.transpose()?;
            if mat.len() != self.p {
                return Err(Error::Shape(format!("matrix {i} has {} rows, expected {}", mat.len(), self.p)));
            }
            let mut y = DMatrix::zeros(self.p, self.q);
            for (r, row) in mat.iter().enumerate() {
                if row.len() != self.q {
                    return Err(Error::Shape(format!(
                        "matrix {i} row {r} has {} entries, expected {}",
                        row.len(),
                        self.q
                    )));
                }
                for (c, &re) in row.iter().enumerate() {
                    let imv = match im {
                        Some(imm) => *imm
                            .get(r)
                            .and_then(|row| row.get(c))
                            .ok_or_else(|| Error::Shape(format!("matrices_imag shape mismatch at matrix {i}")))?,
                        None => 0.0,
                    };
                    y[(r, c)] = T::from_parts(re, imv);
                }
            }
            out.push(y);
        }
        Ok(out)
    }

    pub fn to_rep(&self) -> Result<AnyRep> {
        match self.field {
            FieldKind::Real => {
                if self.matrices_imag.is_some() {
                    return Err(Error::Shape("matrices_imag given for a real tuple".into()));
                }
                Ok(AnyRep::Real(RepTuple::new(self.p, self.q, self.dense(None)?)?))
            }
            FieldKind::Complex => Ok(AnyRep::Complex(RepTuple::new(
                self.p,
                self.q,
                self.dense(self.matrices_imag.as_ref())?,
            )?)),
        }
    }
}
