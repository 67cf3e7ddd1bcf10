//! One-particle Osterwalder–Schrader quotient: the positive-time basis modulo
//! the null space of the reflected form.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::gram::GramReport;
use crate::linalg::{hermitian_eigen, max_abs, C64};

/// Largest Hermiticity defect accepted, relative to `max(1, max |M|)`.
pub const HERMITICITY_LIMIT: f64 = 1e-8;

/// Relative rank threshold used when none is given.
pub const DEFAULT_RELATIVE_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct HilbertReport {
    pub basis: String,
    pub basis_size: usize,
    /// Ascending spectrum of the Hermitian part.
    pub spectrum: Vec<f64>,
    pub rank_tolerance: f64,
    pub rank: usize,
    pub null_dimension: usize,
    /// Columns `v_k / √λ_k` over the positive eigenvalues; `Q† M Q = I`.
    pub quotient: DMatrix<C64>,
    /// Orthonormal null-space vectors.
    pub null_space: DMatrix<C64>,
}

impl HilbertReport {
    /// `max |Q† M Q − I|`.
    pub fn quotient_residual(&self, gram: &DMatrix<C64>) -> f64 {
        let q = &self.quotient;
        let eye = DMatrix::<C64>::identity(self.rank, self.rank);
        max_abs(&(q.adjoint() * gram * q - eye))
    }

    /// Orthogonal projector onto the positive subspace.
    pub fn projector(&self, gram: &DMatrix<C64>) -> DMatrix<C64> {
        &self.quotient * self.quotient.adjoint() * gram
    }

    /// Largest `‖M v‖` over the null vectors.
    pub fn null_residual(&self, gram: &DMatrix<C64>) -> f64 {
        (0..self.null_dimension)
            .map(|k| (gram * self.null_space.column(k)).norm())
            .fold(0.0, f64::max)
    }
}

/// Quotients a reflection-positive Gram form by its null space.
///
/// `rank_tol` defaults to `1e−10 · λ_max`. Forms with an eigenvalue below
/// `−rank_tol` are refused.
pub fn os_quotient(gram: &GramReport, rank_tol: Option<f64>) -> Result<HilbertReport> {
    let m = &gram.matrix;
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let scale = max_abs(m).max(1.0);
    if gram.hermiticity > HERMITICITY_LIMIT * scale {
        return Err(Error::NotHermitian {
            defect: gram.hermiticity,
        });
    }
    let (values, vectors) = hermitian_eigen(m);
    let largest = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tolerance = match rank_tol {
        Some(t) if !(t >= 0.0) => return Err(invalid("rank_tol", format!("{t} is negative"))),
        Some(t) => t,
        None => DEFAULT_RELATIVE_RANK_TOL * largest,
    };
    if let Some(&lowest) = values.first() {
        if lowest < -tolerance {
            return Err(Error::NotReflectionPositive {
                eigenvalue: lowest,
                tolerance,
            });
        }
    }
    let n = values.len();
    let positive: Vec<usize> = (0..n).filter(|&k| values[k] > tolerance).collect();
    let null: Vec<usize> = (0..n).filter(|&k| values[k] <= tolerance).collect();
    let quotient = DMatrix::from_fn(n, positive.len(), |i, j| {
        let k = positive[j];
        vectors[(i, k)] / values[k].sqrt()
    });
    let null_space = DMatrix::from_fn(n, null.len(), |i, j| vectors[(i, null[j])]);
    Ok(HilbertReport {
        basis: gram.basis.clone(),
        basis_size: n,
        spectrum: values,
        rank_tolerance: tolerance,
        rank: positive.len(),
        null_dimension: null.len(),
        quotient,
        null_space,
    })
}

/// `c† M c`, the OS norm squared of the section with coefficients `c`.
pub fn one_particle_norm(gram: &GramReport, coeffs: &[C64]) -> Result<f64> {
    if coeffs.len() != gram.size() {
        return Err(Error::DimensionMismatch {
            expected: gram.size(),
            found: coeffs.len(),
        });
    }
    let c = DVector::from_column_slice(coeffs);
    Ok((c.adjoint() * &gram.matrix * &c)[(0, 0)].re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_lattice, build_reflection, LatticeSpec};
    use crate::scalar_rp::{flat_operator, positive_time_sites, rp_gram, rp_gram_fields};
    use crate::SolverConfig;

    fn report(m: DMatrix<C64>) -> GramReport {
        GramReport::from_matrix(m, "fixture", Vec::new())
    }

    #[test]
    fn identity_and_rank_one() {
        let q = os_quotient(&report(DMatrix::identity(4, 4)), None).unwrap();
        assert_eq!((q.rank, q.null_dimension), (4, 0));

        let v = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 2.0), C64::new(-1.0, 1.0)]);
        let m = &v * v.adjoint();
        let q = os_quotient(&report(m.clone()), None).unwrap();
        assert_eq!((q.rank, q.null_dimension), (1, 2));
        assert!(q.quotient_residual(&m) <= 1e-12);
        assert!(q.null_residual(&m) <= 1e-12);
    }

    #[test]
    fn refuses_forms_that_are_not_positive() {
        let mut m = DMatrix::<C64>::identity(3, 3);
        m[(2, 2)] = C64::new(-1e-3, 0.0);
        match os_quotient(&report(m), None) {
            Err(Error::NotReflectionPositive { eigenvalue, .. }) => assert!((eigenvalue + 1e-3).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
        let mut skew = DMatrix::<C64>::identity(2, 2);
        skew[(0, 1)] = C64::new(1e-3, 0.0);
        assert!(matches!(os_quotient(&report(skew), None), Err(Error::NotHermitian { .. })));
        assert!(os_quotient(&report(DMatrix::identity(2, 2)), Some(-1.0)).is_err());
    }

    #[test]
    fn scalar_gram_quotient() {
        let geom = build_lattice(&LatticeSpec::periodic(&[8], 1.0)).unwrap();
        let refl = build_reflection(&geom);
        let op = flat_operator(&geom, 1.0).unwrap();
        let sites = positive_time_sites(&geom, &refl);
        assert_eq!(sites.len(), 3);
        let gram = rp_gram(&op, &refl, &sites, &SolverConfig::default()).unwrap();
        let q = os_quotient(&gram, None).unwrap();
        let above = gram.spectrum.iter().filter(|&&l| l > q.rank_tolerance).count();
        assert_eq!(q.rank, above);
        assert_eq!(q.rank + q.null_dimension, 3);
        let p = q.projector(&gram.matrix);
        assert!(max_abs(&(&p * &p - &p)) <= 1e-12);
        assert!(q.quotient_residual(&gram.matrix) <= 1e-10);
    }

    #[test]
    fn one_particle_norms() {
        let geom = build_lattice(&LatticeSpec::periodic(&[8, 4], 0.5)).unwrap();
        let refl = build_reflection(&geom);
        let op = flat_operator(&geom, 0.8).unwrap();
        let sites = positive_time_sites(&geom, &refl);
        let cfg = SolverConfig::default();
        let gram = rp_gram(&op, &refl, &sites, &cfg).unwrap();
        let zero = vec![C64::new(0.0, 0.0); sites.len()];
        assert_eq!(one_particle_norm(&gram, &zero).unwrap(), 0.0);

        let (values, vectors) = hermitian_eigen(&gram.matrix);
        let top: Vec<C64> = vectors.column(sites.len() - 1).iter().copied().collect();
        assert!((one_particle_norm(&gram, &top).unwrap() - values[sites.len() - 1]).abs() <= 1e-12);

        let coeffs: Vec<C64> = (0..sites.len())
            .map(|i| C64::new((i as f64).sin(), 0.5 * (i as f64).cos()))
            .collect();
        let mut field = vec![C64::new(0.0, 0.0); geom.n_sites()];
        for (c, &s) in coeffs.iter().zip(&sites) {
            field[s] = *c;
        }
        let direct = rp_gram_fields(&op, &refl, &[field], &cfg).unwrap();
        let value = one_particle_norm(&gram, &coeffs).unwrap();
        assert!((value - direct.matrix[(0, 0)].re).abs() <= 1e-10 * value.abs().max(1.0));
        assert!(one_particle_norm(&gram, &coeffs[1..]).is_err());
    }
}
