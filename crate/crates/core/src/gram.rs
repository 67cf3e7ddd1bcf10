use nalgebra::DMatrix;

use crate::linalg::{hermiticity_defect, hermitian_spectrum, min_hermitian_eigenvalue, C64, DENSE_EIGEN_LIMIT};

/// A reflection-positivity Gram matrix with its spectral certificate.
#[derive(Debug, Clone)]
pub struct GramReport {
    pub matrix: DMatrix<C64>,
    /// `max |M − M†|`.
    pub hermiticity: f64,
    /// Smallest eigenvalue of `(M + M†)/2`.
    pub min_eigenvalue: f64,
    /// Ascending spectrum of `(M + M†)/2`; empty when the basis is too large
    /// for a dense solve.
    pub spectrum: Vec<f64>,
    pub basis: String,
    /// Relative residuals of the linear solves behind each column.
    pub solver_residuals: Vec<f64>,
}

impl GramReport {
    pub fn from_matrix(matrix: DMatrix<C64>, basis: impl Into<String>, solver_residuals: Vec<f64>) -> Self {
        let hermiticity = hermiticity_defect(&matrix);
        let (spectrum, min_eigenvalue) = if matrix.nrows() <= DENSE_EIGEN_LIMIT {
            let s = hermitian_spectrum(&matrix);
            let min = s.first().copied().unwrap_or(0.0);
            (s, min)
        } else {
            (Vec::new(), min_hermitian_eigenvalue(&matrix))
        };
        GramReport {
            matrix,
            hermiticity,
            min_eigenvalue,
            spectrum,
            basis: basis.into(),
            solver_residuals,
        }
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn max_solver_residual(&self) -> f64 {
        self.solver_residuals.iter().copied().fold(0.0, f64::max)
    }

    /// `min eig ≥ −tolerance`.
    pub fn is_positive(&self, tolerance: f64) -> bool {
        self.min_eigenvalue >= -tolerance
    }
}
