//! Linear subspaces of a register's state space.
//!
//! A subspace is stored as a matrix whose columns form an orthonormal
//! basis. Rank decisions use a relative residual cutoff so the algebra
//! below (complement, intersection, tensor) stays stable.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tolerance::{PROBABILITY_TOL, RANK_REL_TOL};

#[derive(Debug, Clone)]
pub struct Subspace {
    ambient: usize,
    basis: DMatrix<Complex64>,
}

impl Subspace {
    /// Wraps an already orthonormal basis; orthonormality is validated
    /// within 1e-9.
    pub fn new(ambient: usize, basis: DMatrix<Complex64>) -> Result<Self> {
        if basis.nrows() != ambient {
            return Err(Error::DimensionMismatch(format!(
                "basis vectors have {} rows in ambient dimension {}",
                basis.nrows(),
                ambient
            )));
        }
        let gram = basis.adjoint() * &basis;
        for i in 0..gram.nrows() {
            for j in 0..gram.ncols() {
                let expect = if i == j { 1.0 } else { 0.0 };
                if (gram[(i, j)] - Complex64::new(expect, 0.0)).norm() > PROBABILITY_TOL {
                    return Err(Error::InvalidArgument(
                        "subspace basis is not orthonormal".into(),
                    ));
                }
            }
        }
        Ok(Subspace { ambient, basis })
    }

    /// The span of arbitrary (possibly dependent) vectors, orthonormalized.
    pub fn span(ambient: usize, vectors: &[DVector<Complex64>]) -> Result<Self> {
        for v in vectors {
            if v.len() != ambient {
                return Err(Error::DimensionMismatch(format!(
                    "vector of length {} in ambient dimension {}",
                    v.len(),
                    ambient
                )));
            }
        }
        if vectors.is_empty() {
            return Ok(Subspace::zero(ambient));
        }
        let m = DMatrix::from_columns(vectors);
        Ok(Subspace { ambient, basis: orthonormal_column_span(&m) })
    }

    /// Span of the given computational basis vectors.
    pub fn computational(ambient: usize, indices: &[usize]) -> Result<Self> {
        let mut basis = DMatrix::zeros(ambient, indices.len());
        for (col, &i) in indices.iter().enumerate() {
            if i >= ambient {
                return Err(Error::InvalidArgument(format!(
                    "basis index {i} outside dimension {ambient}"
                )));
            }
            basis[(i, col)] = Complex64::ONE;
        }
        Subspace::new(ambient, basis)
    }

    /// The span of a single vector (normalized here).
    pub fn line(v: &DVector<Complex64>) -> Result<Self> {
        let norm = v.norm();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("cannot span a zero vector".into()));
        }
        Ok(Subspace {
            ambient: v.len(),
            basis: DMatrix::from_columns(&[v / Complex64::new(norm, 0.0)]),
        })
    }

    pub fn zero(ambient: usize) -> Self {
        Subspace { ambient, basis: DMatrix::zeros(ambient, 0) }
    }

    pub fn full(ambient: usize) -> Self {
        Subspace { ambient, basis: DMatrix::identity(ambient, ambient) }
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<Complex64> {
        &self.basis
    }

    pub fn projector(&self) -> DMatrix<Complex64> {
        &self.basis * self.basis.adjoint()
    }

    /// Orthogonal complement within the ambient space.
    pub fn complement(&self) -> Subspace {
        if self.dim() == 0 {
            return Subspace::full(self.ambient);
        }
        if self.dim() == self.ambient {
            return Subspace::zero(self.ambient);
        }
        let q = DMatrix::identity(self.ambient, self.ambient) - self.projector();
        // q is a projector: singular values split cleanly at 0 and 1.
        Subspace { ambient: self.ambient, basis: orthonormal_column_span(&q) }
    }

    /// Smallest subspace containing both operands.
    pub fn union(&self, other: &Subspace) -> Result<Subspace> {
        self.check_same_ambient(other)?;
        if self.dim() == 0 {
            return Ok(other.clone());
        }
        if other.dim() == 0 {
            return Ok(self.clone());
        }
        let mut cols: Vec<DVector<Complex64>> = Vec::with_capacity(self.dim() + other.dim());
        for c in self.basis.column_iter().chain(other.basis.column_iter()) {
            cols.push(c.into_owned());
        }
        Subspace::span(self.ambient, &cols)
    }

    /// Exact intersection, computed as the complement of the union of the
    /// complements.
    pub fn intersect(&self, other: &Subspace) -> Result<Subspace> {
        self.check_same_ambient(other)?;
        Ok(self.complement().union(&other.complement())?.complement())
    }

    /// Tensor product; `self` is the more significant factor.
    pub fn tensor(&self, other: &Subspace) -> Subspace {
        Subspace {
            ambient: self.ambient * other.ambient,
            basis: self.basis.kronecker(&other.basis),
        }
    }

    /// Orthogonal projection of a vector onto the subspace.
    pub fn project(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        if self.dim() == 0 {
            return DVector::zeros(self.ambient);
        }
        &self.basis * (self.basis.adjoint() * v)
    }

    /// Norm of the projection; 0 means orthogonal, `|v|` means contained.
    pub fn projection_norm(&self, v: &DVector<Complex64>) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        (self.basis.adjoint() * v).norm()
    }

    pub fn contains_vector(&self, v: &DVector<Complex64>, tol: f64) -> bool {
        (v - self.project(v)).norm() <= tol * v.norm().max(1.0)
    }

    /// True when both subspaces project identically within `tol`.
    pub fn approx_eq(&self, other: &Subspace, tol: f64) -> bool {
        if self.ambient != other.ambient {
            return false;
        }
        let diff = self.projector() - other.projector();
        diff.iter().all(|x| x.norm() <= tol)
    }

    /// True when `self` is contained in `other` within `tol`.
    pub fn contained_in(&self, other: &Subspace, tol: f64) -> bool {
        self.basis
            .column_iter()
            .all(|c| other.contains_vector(&c.into_owned(), tol))
    }

    fn check_same_ambient(&self, other: &Subspace) -> Result<()> {
        if self.ambient != other.ambient {
            return Err(Error::DimensionMismatch(format!(
                "subspaces live in dimensions {} and {}",
                self.ambient, other.ambient
            )));
        }
        Ok(())
    }
}

/// Orthonormal basis of the column span, via SVD with a relative cutoff.
// Pivoted modified Gram-Schmidt with one reorthogonalization pass.
// nalgebra's complex SVD mispairs singular vectors on degenerate
// spectra (projectors are the worst case here), so rank and span are
// extracted by hand. Columns whose residual falls below the relative
// cutoff are treated as dependent.
fn orthonormal_column_span(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let mut residuals: Vec<DVector<Complex64>> =
        (0..m.ncols()).map(|j| m.column(j).into_owned()).collect();
    let scale = residuals.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    let mut basis: Vec<DVector<Complex64>> = Vec::new();
    if scale == 0.0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    while let Some((best, norm)) = residuals
        .iter()
        .map(|r| r.norm())
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
    {
        if norm <= RANK_REL_TOL * scale {
            break;
        }
        let mut v = residuals.swap_remove(best) / Complex64::new(norm, 0.0);
        for b in &basis {
            let overlap = b.dotc(&v);
            v -= b * overlap;
        }
        let renorm = v.norm();
        if renorm <= RANK_REL_TOL {
            continue;
        }
        v /= Complex64::new(renorm, 0.0);
        for r in residuals.iter_mut() {
            let overlap = v.dotc(r);
            *r -= &v * overlap;
        }
        basis.push(v);
    }
    if basis.is_empty() {
        return DMatrix::zeros(m.nrows(), 0);
    }
    DMatrix::from_columns(&basis)
}
