//! Dirichlet and Neumann covariances on the half lattice `𝒪 = {0 ≤ t ≤ N0 h/2}`.
//!
//! Two independent constructions are provided. The image construction reads
//! `C_D(x, y) = C(x, y) − C(θx, y)` and `C_N(x, y) = C(x, y) + C(θx, y)` off
//! full-lattice covariance solves. The quotient construction restricts the
//! stiffness matrix to the θ-antisymmetric and θ-symmetric subspaces and
//! inverts those blocks directly, never touching the full covariance.
//!
//! Kernels are taken with respect to the metric measure, so
//! `(C f)(x) = Σ_y C(x, y) f(y) μ(y)` and `C(x, y) = K^{-1}(x, y)`.
//!
//! Sign convention: `U_θ C = ½ (C_N − C_D)`. This follows from
//! `C_D = (I − U_θ) C` and `C_N = (I + U_θ) C`; the opposite sign that is
//! sometimes quoted for this identity is inconsistent with those definitions.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{LatticeGeometry, ReflectionStructure};
use crate::linalg::{hermitian_spectrum, max_abs, SolverConfig, C64};
use crate::scalar_rp::{covariance_apply, ScalarOperator};

/// Failing threshold for `min eig(C_N − C_D)`.
pub const MONOTONICITY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct HalfRegion {
    /// Sites of `𝒪`, ascending.
    pub sites: Vec<usize>,
    /// `is_boundary[i]` marks `sites[i] ∈ ∂𝒪`.
    pub is_boundary: Vec<bool>,
}

impl HalfRegion {
    pub fn new(geom: &LatticeGeometry, refl: &ReflectionStructure) -> Self {
        let half = geom.time_extent() as i64 / 2;
        let sites: Vec<usize> = (0..geom.n_sites())
            .filter(|&s| {
                let t = geom.time_label(s);
                (0..=half).contains(&t)
            })
            .collect();
        let is_boundary = sites.iter().map(|&s| refl.is_fixed(s)).collect();
        HalfRegion { sites, is_boundary }
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn boundary(&self) -> impl Iterator<Item = usize> + '_ {
        self.sites
            .iter()
            .zip(&self.is_boundary)
            .filter(|(_, b)| **b)
            .map(|(s, _)| *s)
    }

    pub fn interior(&self) -> impl Iterator<Item = usize> + '_ {
        self.sites
            .iter()
            .zip(&self.is_boundary)
            .filter(|(_, b)| !**b)
            .map(|(s, _)| *s)
    }

    pub fn position(&self, site: usize) -> Option<usize> {
        self.sites.binary_search(&site).ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Construction {
    Image,
    Quotient,
}

#[derive(Debug, Clone)]
pub struct BoundaryCovariances {
    pub cd: DMatrix<C64>,
    pub cn: DMatrix<C64>,
    pub construction: Construction,
    /// Largest relative residual of any covariance solve used.
    pub solver_residual: f64,
}

/// Full-lattice covariance kernel columns `C(·, y)` for every `y ∈ 𝒪`.
fn kernel_columns(op: &ScalarOperator, region: &HalfRegion, cfg: &SolverConfig) -> Result<(Vec<Vec<C64>>, f64)> {
    let n = op.n_sites();
    let solved: Vec<(Vec<C64>, f64)> = region
        .sites
        .par_iter()
        .map(|&y| {
            let mut e = vec![C64::new(0.0, 0.0); n];
            e[y] = C64::new(1.0, 0.0);
            let (u, info) = covariance_apply(op, &e, cfg)?;
            let mu = op.measure()[y];
            Ok((u.into_iter().map(|z| z / mu).collect(), info.residual))
        })
        .collect::<Result<_>>()?;
    let worst = solved.iter().map(|(_, r)| *r).fold(0.0, f64::max);
    Ok((solved.into_iter().map(|(c, _)| c).collect(), worst))
}

pub fn image_covariances(
    op: &ScalarOperator,
    refl: &ReflectionStructure,
    region: &HalfRegion,
    cfg: &SolverConfig,
) -> Result<BoundaryCovariances> {
    let (columns, solver_residual) = kernel_columns(op, region, cfg)?;
    let k = region.len();
    let mut cd = DMatrix::zeros(k, k);
    let mut cn = DMatrix::zeros(k, k);
    for (j, column) in columns.iter().enumerate() {
        for (i, &x) in region.sites.iter().enumerate() {
            let direct = column[x];
            let mirrored = column[refl.image(x)];
            cn[(i, j)] = direct + mirrored;
            // k₋ is symmetric, so it also vanishes for y on the boundary.
            if !region.is_boundary[j] {
                cd[(i, j)] = direct - mirrored;
            }
        }
    }
    Ok(BoundaryCovariances {
        cd,
        cn,
        construction: Construction::Image,
        solver_residual,
    })
}

pub fn quotient_covariances(
    op: &ScalarOperator,
    refl: &ReflectionStructure,
    region: &HalfRegion,
    cfg: &SolverConfig,
) -> Result<BoundaryCovariances> {
    cfg.validate()?;
    let stiffness = op.stiffness();
    let kval = |r: usize, c: usize| stiffness.get(r, c).unwrap_or(0.0);
    let sqrt2 = std::f64::consts::SQRT_2;

    let interior: Vec<usize> = region.interior().collect();
    let antisym = DMatrix::from_fn(interior.len(), interior.len(), |i, j| {
        let (x, y) = (interior[i], interior[j]);
        let (tx, ty) = (refl.image(x), refl.image(y));
        0.5 * (kval(x, y) - kval(x, ty) - kval(tx, y) + kval(tx, ty))
    });

    // Symmetric basis: (e_y + e_θy)/√2 in the interior, e_σ on the boundary.
    let basis = |site_index: usize| -> Vec<(usize, f64)> {
        let s = region.sites[site_index];
        if region.is_boundary[site_index] {
            vec![(s, 1.0)]
        } else {
            vec![(s, 1.0 / sqrt2), (refl.image(s), 1.0 / sqrt2)]
        }
    };
    let k = region.len();
    let sym = DMatrix::from_fn(k, k, |i, j| {
        let mut acc = 0.0;
        for (a, wa) in basis(i) {
            for (b, wb) in basis(j) {
                acc += wa * wb * kval(a, b);
            }
        }
        acc
    });

    let antisym_inv = antisym.cholesky().ok_or(Error::Singular)?.inverse();
    let sym_inv = sym.cholesky().ok_or(Error::Singular)?.inverse();

    let mut cd = DMatrix::zeros(k, k);
    let interior_pos: Vec<usize> = interior.iter().map(|&s| region.position(s).unwrap()).collect();
    for (a, &i) in interior_pos.iter().enumerate() {
        for (b, &j) in interior_pos.iter().enumerate() {
            cd[(i, j)] = C64::new(antisym_inv[(a, b)], 0.0);
        }
    }
    // Map the symmetric-subspace inverse back to the kernel of (I + U_θ)C.
    let eval = |i: usize| if region.is_boundary[i] { 1.0 } else { 1.0 / sqrt2 };
    let lift = |j: usize| if region.is_boundary[j] { 2.0 } else { sqrt2 };
    let cn = DMatrix::from_fn(k, k, |i, j| C64::new(eval(i) * lift(j) * sym_inv[(i, j)], 0.0));

    Ok(BoundaryCovariances {
        cd,
        cn,
        construction: Construction::Quotient,
        solver_residual: 0.0,
    })
}

#[derive(Debug, Clone)]
pub struct MonotonicityReport {
    /// Smallest eigenvalue of the Hermitian part of `C_N − C_D`.
    pub min_eigenvalue: f64,
    pub spectrum: Vec<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn dn_monotonicity(bc: &BoundaryCovariances) -> Result<MonotonicityReport> {
    if bc.cd.shape() != bc.cn.shape() {
        return Err(Error::DimensionMismatch {
            expected: bc.cn.nrows(),
            found: bc.cd.nrows(),
        });
    }
    let spectrum = hermitian_spectrum(&(&bc.cn - &bc.cd));
    let min_eigenvalue = spectrum.first().copied().unwrap_or(0.0);
    Ok(MonotonicityReport {
        min_eigenvalue,
        spectrum,
        tolerance: MONOTONICITY_TOLERANCE,
        pass: min_eigenvalue >= -MONOTONICITY_TOLERANCE,
    })
}

/// `max |[U_θ C](x, y) − ½ (C_N − C_D)(x, y)|` over `𝒪 × 𝒪`, with `U_θ C`
/// recomputed from fresh covariance solves.
pub fn half_difference_residual(
    op: &ScalarOperator,
    refl: &ReflectionStructure,
    region: &HalfRegion,
    bc: &BoundaryCovariances,
    cfg: &SolverConfig,
) -> Result<f64> {
    if bc.cd.nrows() != region.len() || bc.cn.nrows() != region.len() {
        return Err(Error::DimensionMismatch {
            expected: region.len(),
            found: bc.cn.nrows(),
        });
    }
    let (columns, _) = kernel_columns(op, region, cfg)?;
    let k = region.len();
    let reflected = DMatrix::from_fn(k, k, |i, j| columns[j][refl.image(region.sites[i])]);
    let half = (&bc.cn - &bc.cd) * C64::new(0.5, 0.0);
    Ok(max_abs(&(reflected - half)))
}

/// Entrywise distance between two constructions.
pub fn construction_gap(a: &BoundaryCovariances, b: &BoundaryCovariances) -> Result<f64> {
    if a.cd.shape() != b.cd.shape() {
        return Err(Error::DimensionMismatch {
            expected: a.cd.nrows(),
            found: b.cd.nrows(),
        });
    }
    Ok(max_abs(&(&a.cd - &b.cd)).max(max_abs(&(&a.cn - &b.cn))))
}
