//! Scalar covariance `C = (−Δ_g + V)^{-1}` on a reflection-symmetric lattice
//! and its reflection-positivity certificates.
//!
//! The operator is stored through its stiffness matrix `K = diag(μ) L`, which
//! is real symmetric:
//!
//! ```text
//! K(s, s)  = Σ_{s'~s} w(s, s') + μ(s) V(s)
//! K(s, s') = −w(s, s'),   w(s, s') = ½ (μ g^{jj}(s) + μ g^{jj}(s')) / h²
//! ```
//!
//! so `L` is self-adjoint in `⟨u, v⟩_μ = Σ ū v μ` and `C f = K^{-1}(μ f)`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{
    partition_regions, LatticeGeometry, MeasureField, ReflectionStructure, RegionPartition,
    SiteMetric, StaticMetric,
};
use crate::gram::GramReport;
use crate::linalg::{conjugate_gradient, CsrMatrix, SolveInfo, SolverConfig, C64};

/// One complex value per site.
pub type Field = Vec<C64>;

/// Site potential `V = m² + ξ R`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField(pub Vec<f64>);

impl PotentialField {
    /// Constant potential `m²`.
    pub fn mass(geom: &LatticeGeometry, mass: f64) -> Result<Self> {
        Self::new(vec![mass * mass; geom.n_sites()])
    }

    /// `V = m² + ξ R` for a per-site curvature field `R`.
    pub fn with_curvature(mass: f64, xi: f64, curvature: &[f64]) -> Result<Self> {
        Self::new(curvature.iter().map(|r| mass * mass + xi * r).collect())
    }

    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((site, v)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidPotential(format!(
                "V = {v} at site {site}; the curvature bound requires V > 0"
            )));
        }
        Ok(PotentialField(values))
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone)]
pub struct ScalarOperator {
    geom: LatticeGeometry,
    stiffness: CsrMatrix<f64>,
    measure: MeasureField,
    potential: PotentialField,
    /// Edge list `(s, s', axis, w)` over forward links.
    edges: Vec<(usize, usize, usize, f64)>,
}

pub fn assemble_operator(
    geom: &LatticeGeometry,
    metric: &StaticMetric,
    potential: &PotentialField,
) -> Result<ScalarOperator> {
    let sites = metric.to_sites(geom)?;
    assemble_with_site_metric(geom, &sites, potential)
}

/// Assembly from per-site metric data, which need not be time independent.
pub fn assemble_with_site_metric(
    geom: &LatticeGeometry,
    metric: &SiteMetric,
    potential: &PotentialField,
) -> Result<ScalarOperator> {
    let n = geom.n_sites();
    if metric.n_sites() != n {
        return Err(Error::InvalidMetric(format!(
            "metric has {} sites, lattice has {n}",
            metric.n_sites()
        )));
    }
    if potential.0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: potential.0.len(),
        });
    }
    let potential = PotentialField::new(potential.0.clone())?;
    let measure = MeasureField::from_site_metric(geom, metric);
    let h2 = geom.spacing() * geom.spacing();

    let mut edges = Vec::with_capacity(n * geom.dims());
    let mut triplets = Vec::with_capacity(n * (2 * geom.dims() + 1) * 2);
    for s in 0..n {
        triplets.push((s, s, measure[s] * potential.0[s]));
        for axis in 0..geom.dims() {
            if let Some(t) = geom.link(s, axis).forward {
                let w = 0.5 * (measure[s] * metric.inverse(s, axis) + measure[t] * metric.inverse(t, axis)) / h2;
                edges.push((s, t, axis, w));
                triplets.push((s, s, w));
                triplets.push((t, t, w));
                triplets.push((s, t, -w));
                triplets.push((t, s, -w));
            }
        }
    }
    Ok(ScalarOperator {
        geom: geom.clone(),
        stiffness: CsrMatrix::from_triplets(n, n, triplets),
        measure,
        potential,
        edges,
    })
}

impl ScalarOperator {
    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geom
    }

    pub fn measure(&self) -> &MeasureField {
        &self.measure
    }

    pub fn potential(&self) -> &PotentialField {
        &self.potential
    }

    /// `K = diag(μ) L`.
    pub fn stiffness(&self) -> &CsrMatrix<f64> {
        &self.stiffness
    }

    pub fn n_sites(&self) -> usize {
        self.measure.len()
    }

    /// Weighted edges `(s, s', axis, w)`, one per forward link.
    pub fn edges(&self) -> &[(usize, usize, usize, f64)] {
        &self.edges
    }

    /// `L u`.
    pub fn apply(&self, u: &[C64]) -> Field {
        let mut y = self.stiffness.apply(u);
        for (y, mu) in y.iter_mut().zip(self.measure.weights()) {
            *y /= *mu;
        }
        y
    }

    /// `L(r, c)`, zero off the stencil.
    pub fn entry(&self, r: usize, c: usize) -> f64 {
        self.stiffness.get(r, c).unwrap_or(0.0) / self.measure[r]
    }

    /// Dense `L`.
    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = self.stiffness.to_dense();
        for r in 0..self.n_sites() {
            let mu = self.measure[r];
            m.row_mut(r).iter_mut().for_each(|z| *z /= mu);
        }
        m
    }

    /// `⟨u, v⟩_μ`.
    pub fn inner(&self, u: &[C64], v: &[C64]) -> C64 {
        u.iter()
            .zip(v)
            .zip(self.measure.weights())
            .map(|((a, b), mu)| a.conj() * b * *mu)
            .sum()
    }
}

/// Solves `L u = f` to relative `μ`-norm residual `cfg.tolerance`.
pub fn covariance_apply(op: &ScalarOperator, f: &[C64], cfg: &SolverConfig) -> Result<(Field, SolveInfo)> {
    cfg.validate()?;
    if f.len() != op.n_sites() {
        return Err(Error::DimensionMismatch {
            expected: op.n_sites(),
            found: f.len(),
        });
    }
    let rhs: Vec<C64> = f.iter().zip(op.measure.weights()).map(|(f, mu)| f * *mu).collect();
    let inv_mu: Vec<f64> = op.measure.weights().iter().map(|mu| 1.0 / mu).collect();
    conjugate_gradient(|x, y| op.stiffness.mul_vec(x, y), &rhs, Some(&inv_mu), cfg)
}

/// `max |L(θr, θc) − L(r, c)|`, i.e. the entrywise size of `[U_θ, L]`.
pub fn reflection_commutation_residual(op: &ScalarOperator, refl: &ReflectionStructure) -> f64 {
    let mut worst = 0.0f64;
    for (r, c, _) in op.stiffness.triplets() {
        let a = op.entry(r, c);
        let b = op.entry(refl.image(r), refl.image(c));
        worst = worst.max((a - b).abs());
    }
    worst
}

pub(crate) fn check_positive_support(geom: &LatticeGeometry, refl: &ReflectionStructure, site: usize) -> Result<()> {
    let half = geom.time_extent() as i64 / 2;
    if site >= geom.n_sites() || refl.is_fixed(site) {
        return Err(Error::BasisOutsideRegion { site });
    }
    let t = geom.time_label(site);
    if t < 1 || t >= half {
        return Err(Error::BasisOutsideRegion { site });
    }
    Ok(())
}

/// Gram matrix `M_ab = ⟨U_θ e_a, C e_b⟩_μ` over delta functions on the given
/// sites of the positive-time region.
pub fn rp_gram(
    op: &ScalarOperator,
    refl: &ReflectionStructure,
    basis_sites: &[usize],
    cfg: &SolverConfig,
) -> Result<GramReport> {
    for &s in basis_sites {
        check_positive_support(&op.geom, refl, s)?;
    }
    let n = op.n_sites();
    let columns: Vec<(Field, SolveInfo)> = basis_sites
        .par_iter()
        .map(|&b| {
            let mut e = vec![C64::new(0.0, 0.0); n];
            e[b] = C64::new(1.0, 0.0);
            covariance_apply(op, &e, cfg)
        })
        .collect::<Result<_>>()?;
    let k = basis_sites.len();
    let matrix = DMatrix::from_fn(k, k, |a, b| {
        let mirror = refl.image(basis_sites[a]);
        columns[b].0[mirror] * op.measure[mirror]
    });
    let residuals = columns.iter().map(|(_, info)| info.residual).collect();
    Ok(GramReport::from_matrix(
        matrix,
        format!("{k} site deltas with t >= h"),
        residuals,
    ))
}

/// Gram matrix `M_ab = ⟨U_θ f_a, C f_b⟩_μ` for arbitrary fields supported in
/// the positive-time region.
pub fn rp_gram_fields(
    op: &ScalarOperator,
    refl: &ReflectionStructure,
    basis: &[Field],
    cfg: &SolverConfig,
) -> Result<GramReport> {
    for f in basis {
        if f.len() != op.n_sites() {
            return Err(Error::DimensionMismatch {
                expected: op.n_sites(),
                found: f.len(),
            });
        }
        for (s, v) in f.iter().enumerate() {
            if *v != C64::new(0.0, 0.0) {
                check_positive_support(&op.geom, refl, s)?;
            }
        }
    }
    let columns: Vec<(Field, SolveInfo)> =
        basis.par_iter().map(|f| covariance_apply(op, f, cfg)).collect::<Result<_>>()?;
    let mirrored: Vec<Field> = basis.iter().map(|f| refl.apply(f)).collect();
    let k = basis.len();
    let matrix = DMatrix::from_fn(k, k, |a, b| op.inner(&mirrored[a], &columns[b].0));
    let residuals = columns.iter().map(|(_, info)| info.residual).collect();
    Ok(GramReport::from_matrix(matrix, format!("{k} fields supported at t >= h"), residuals))
}

/// Delta basis over every site of the positive-time region.
pub fn positive_time_sites(geom: &LatticeGeometry, refl: &ReflectionStructure) -> Vec<usize> {
    partition_regions(geom, refl).omega_plus
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionIdentity {
    /// `⟨U_θ f, C f⟩_μ`.
    pub lhs: f64,
    /// Twice the discrete action of `u = C f` over `Ω₋ ∪ Σ`.
    pub rhs: f64,
    /// `|lhs − rhs| / |lhs|`.
    pub residual: f64,
}

/// Compares `⟨U_θ f, C f⟩_μ` with twice the Euclidean action of `u = C f`
/// over the closed negative-time region `Ω = Ω₋ ∪ Σ`.
///
/// Edges with both endpoints in `Ω` count fully, edges joining `Σ` to `Ω₊`
/// count with weight ½, and the potential term runs over every site of `Ω`.
pub fn action_identity_residual(
    op: &ScalarOperator,
    refl: &ReflectionStructure,
    partition: &RegionPartition,
    f: &[C64],
    cfg: &SolverConfig,
) -> Result<ActionIdentity> {
    let n = op.n_sites();
    if f.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: f.len() });
    }
    for (s, v) in f.iter().enumerate() {
        if *v != C64::new(0.0, 0.0) {
            check_positive_support(&op.geom, refl, s)?;
        }
    }
    let (u, _) = covariance_apply(op, f, cfg)?;
    let lhs = op.inner(&refl.apply(f), &u).re;

    let mut in_plus = vec![false; n];
    partition.omega_plus.iter().for_each(|&s| in_plus[s] = true);
    let mut on_sigma = vec![false; n];
    partition.sigma.iter().for_each(|&s| on_sigma[s] = true);

    let mut gradient = 0.0;
    for &(s, t, _, w) in &op.edges {
        let weight = match (in_plus[s], in_plus[t]) {
            (false, false) => 1.0,
            (true, false) if on_sigma[t] => 0.5,
            (false, true) if on_sigma[s] => 0.5,
            _ => 0.0,
        };
        if weight > 0.0 {
            gradient += weight * w * (u[s] - u[t]).norm_sqr();
        }
    }
    let potential: f64 = (0..n)
        .filter(|&s| !in_plus[s])
        .map(|s| op.potential.0[s] * u[s].norm_sqr() * op.measure[s])
        .sum();
    let rhs = 2.0 * (gradient + potential);
    let residual = if lhs == 0.0 {
        if rhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (lhs - rhs).abs() / lhs.abs()
    };
    Ok(ActionIdentity { lhs, rhs, residual })
}

/// Convenience: flat metric with constant mass.
pub fn flat_operator(geom: &LatticeGeometry, mass: f64) -> Result<ScalarOperator> {
    assemble_operator(geom, &StaticMetric::flat(geom), &PotentialField::mass(geom, mass)?)
}
