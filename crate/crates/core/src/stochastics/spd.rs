use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Asymmetry (relative to the largest entry) above which construction logs a warning.
const ASYMMETRY_WARN: f64 = 1e-8;

/// Symmetric positive-definite matrix with its Cholesky factor.
///
/// Inputs are symmetrized as `(A + Aᵀ)/2`; positive-definiteness is
/// established by a successful Cholesky factorization.
#[derive(Clone, Debug)]
pub struct SpdMatrix {
    matrix: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl SpdMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::param(format!(
                "SPD matrix must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("SPD matrix has non-finite entries"));
        }
        let scale = matrix.amax().max(f64::MIN_POSITIVE);
        let asym = (&matrix - matrix.transpose()).amax() / scale;
        if asym > ASYMMETRY_WARN {
            log::warn!("symmetrizing matrix with relative asymmetry {asym:.3e}");
        }
        let sym = (&matrix + matrix.transpose()) * 0.5;
        let chol = Cholesky::new(sym.clone())
            .ok_or_else(|| Error::param("matrix is not positive definite (Cholesky failed)"))?;
        Ok(Self { matrix: sym, chol })
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim)).expect("identity is SPD")
    }

    pub fn scaled_identity(dim: usize, scale: f64) -> Result<Self> {
        Self::new(DMatrix::identity(dim, dim) * scale)
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// Lower-triangular factor `L` with `L Lᵀ = Σ`.
    pub fn chol_factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    pub fn cholesky(&self) -> &Cholesky<f64, Dyn> {
        &self.chol
    }

    pub fn ln_det(&self) -> f64 {
        let l = self.chol.l_dirty();
        2.0 * (0..self.dim()).map(|i| l[(i, i)].ln()).sum::<f64>()
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        let inv = self.chol.inverse();
        (&inv + inv.transpose()) * 0.5
    }

    /// Solves `Σ v = b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    /// Squared Mahalanobis norm `bᵀ Σ⁻¹ b`.
    pub fn mahalanobis_sq(&self, b: &DVector<f64>) -> f64 {
        let mut z = b.clone();
        self.chol.l_dirty().solve_lower_triangular_mut(&mut z);
        z.norm_squared()
    }

    /// Principal sub-block over `idx` (rows and columns).
    pub fn sub_block(&self, idx: &[usize]) -> Result<SpdMatrix> {
        let m = DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.matrix[(idx[i], idx[j])]);
        SpdMatrix::new(m)
    }
}

impl PartialEq for SpdMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}

impl Serialize for SpdMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = self.matrix.row_iter().map(|r| r.iter().copied().collect()).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpdMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(serde::de::Error::custom("SPD matrix rows must form a square"));
        }
        let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        SpdMatrix::new(m).map_err(serde::de::Error::custom)
    }
}
