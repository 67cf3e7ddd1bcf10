//! Naive central-difference lattice Dirac operator and the twisted
//! reflection `ϑ = γ₀ ε*`.
//!
//! Spinor fields are stored site-major: entry `site · S + a` holds spinor
//! component `a` at `site`, with `S` the spinor dimension.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::clifford::CliffordRep;
use crate::error::{invalid, Error, Result};
use crate::geometry::{LatticeGeometry, ReflectionStructure};
use crate::gram::GramReport;
use crate::linalg::{conjugate_gradient, dot, CsrMatrix, SolveInfo, SolverConfig, C64};
use crate::scalar_rp::check_positive_support;

pub type SpinorField = Vec<C64>;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// `D̸ = Σ_j γ_j ∂ᶜ_j` with central differences; time links carry `1/√F`
/// for a constant lapse `F`.
#[derive(Debug, Clone)]
pub struct DiracOperator {
    geom: LatticeGeometry,
    rep: CliffordRep,
    lapse: f64,
    matrix: CsrMatrix<C64>,
}

fn sparse_entries(m: &DMatrix<C64>) -> Vec<(usize, usize, C64)> {
    let mut out = Vec::new();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if m[(r, c)] != ZERO {
                out.push((r, c, m[(r, c)]));
            }
        }
    }
    out
}

pub fn assemble_dirac(geom: &LatticeGeometry, rep: &CliffordRep, lapse: f64) -> Result<DiracOperator> {
    if rep.dimension() != geom.dims() {
        return Err(Error::DimensionMismatch {
            expected: geom.dims(),
            found: rep.dimension(),
        });
    }
    if geom.spec().periodic.iter().any(|p| !p) {
        return Err(invalid("lattice", "the Dirac operator needs every axis periodic"));
    }
    if !(lapse > 0.0 && lapse.is_finite()) {
        return Err(invalid("lapse", format!("{lapse} is not a positive constant")));
    }
    let s = rep.spinor_dim();
    let h = geom.spacing();
    let entries: Vec<Vec<(usize, usize, C64)>> = rep.gammas().iter().map(sparse_entries).collect();
    let mut triplets = Vec::new();
    for site in 0..geom.n_sites() {
        for (axis, gamma) in entries.iter().enumerate() {
            let mut scale = 0.5 / h;
            if axis == 0 {
                scale /= lapse.sqrt();
            }
            let link = geom.link(site, axis);
            let (fwd, bwd) = (link.forward.unwrap(), link.backward.unwrap());
            for &(a, b, g) in gamma {
                triplets.push((site * s + a, fwd * s + b, g * scale));
                triplets.push((site * s + a, bwd * s + b, -g * scale));
            }
        }
    }
    let n = geom.n_sites() * s;
    Ok(DiracOperator {
        geom: geom.clone(),
        rep: rep.clone(),
        lapse,
        matrix: CsrMatrix::from_triplets(n, n, triplets),
    })
}

impl DiracOperator {
    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geom
    }

    pub fn rep(&self) -> &CliffordRep {
        &self.rep
    }

    pub fn lapse(&self) -> f64 {
        self.lapse
    }

    pub fn spinor_dim(&self) -> usize {
        self.rep.spinor_dim()
    }

    /// Length of a spinor field, `n_sites · S`.
    pub fn len(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn matrix(&self) -> &CsrMatrix<C64> {
        &self.matrix
    }

    pub fn apply(&self, u: &[C64]) -> SpinorField {
        self.matrix.apply(u)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        self.matrix.to_dense()
    }

    /// `max |D̸ + D̸†|`.
    pub fn skew_residual(&self) -> f64 {
        self.matrix
            .triplets()
            .map(|(r, c, v)| (v + self.matrix.get(c, r).unwrap_or(ZERO).conj()).norm())
            .fold(0.0, f64::max)
    }
}

/// `(ϑ f)(s) = γ₀ f(θ s)`.
#[derive(Debug, Clone)]
pub struct ThetaOperator {
    perm: Vec<usize>,
    gamma0: Vec<(usize, usize, C64)>,
    spinor_dim: usize,
}

pub fn theta_map(geom: &LatticeGeometry, refl: &ReflectionStructure, rep: &CliffordRep) -> Result<ThetaOperator> {
    if refl.permutation().len() != geom.n_sites() {
        return Err(Error::DimensionMismatch {
            expected: geom.n_sites(),
            found: refl.permutation().len(),
        });
    }
    Ok(ThetaOperator {
        perm: refl.permutation().to_vec(),
        gamma0: sparse_entries(rep.gamma(0)),
        spinor_dim: rep.spinor_dim(),
    })
}

impl ThetaOperator {
    pub fn apply(&self, f: &[C64]) -> SpinorField {
        let s = self.spinor_dim;
        let mut out = vec![ZERO; f.len()];
        for (site, &image) in self.perm.iter().enumerate() {
            for &(a, b, g) in &self.gamma0 {
                out[site * s + a] += g * f[image * s + b];
            }
        }
        out
    }

    pub fn to_csr(&self) -> CsrMatrix<C64> {
        let s = self.spinor_dim;
        let n = self.perm.len() * s;
        let triplets = self
            .perm
            .iter()
            .enumerate()
            .flat_map(|(site, &image)| self.gamma0.iter().map(move |&(a, b, g)| (site * s + a, image * s + b, g)))
            .collect();
        CsrMatrix::from_triplets(n, n, triplets)
    }

    /// `max |ϑ D̸ + D̸ ϑ|` over entries, from the exact sparse products.
    pub fn anticommutation_residual(&self, dirac: &DiracOperator) -> f64 {
        let theta = self.to_csr();
        let d = dirac.matrix();
        let mut triplets = Vec::new();
        for r in 0..theta.n_rows() {
            for (k, tv) in theta.row(r) {
                for (c, dv) in d.row(k) {
                    triplets.push((r, c, tv * dv));
                }
            }
            for (k, dv) in d.row(r) {
                for (c, tv) in theta.row(k) {
                    triplets.push((r, c, dv * tv));
                }
            }
        }
        CsrMatrix::from_triplets(theta.n_rows(), theta.n_cols(), triplets)
            .triplets()
            .map(|(_, _, v)| v.norm())
            .fold(0.0, f64::max)
    }
}

/// Solves `(m − D̸) u = f` through the Hermitian positive system
/// `(m² − D̸²) w = f`, `u = (m + D̸) w`. The residual reported is that of the
/// original system, relative to `‖f‖`.
pub fn solve_shifted(dirac: &DiracOperator, mass: f64, f: &[C64], cfg: &SolverConfig) -> Result<(SpinorField, SolveInfo)> {
    if !(mass > 0.0) {
        return Err(invalid("mass", format!("{mass} is not positive")));
    }
    if f.len() != dirac.len() {
        return Err(Error::DimensionMismatch {
            expected: dirac.len(),
            found: f.len(),
        });
    }
    cfg.validate()?;
    let m2 = mass * mass;
    let d = dirac.matrix();
    let (w, info) = conjugate_gradient(
        |x, y| {
            let mut tmp = vec![ZERO; x.len()];
            d.mul_vec(x, &mut tmp);
            d.mul_vec(&tmp, y);
            for (yi, xi) in y.iter_mut().zip(x) {
                *yi = xi * m2 - *yi;
            }
        },
        f,
        None,
        cfg,
    )?;
    let dw = d.apply(&w);
    let u = w.iter().zip(&dw).map(|(wi, di)| wi * mass + di).collect();
    Ok((u, info))
}

/// Support check for a spinor field: every nonzero component must sit on a
/// site with `1 ≤ t < N₀/2`.
fn check_spinor_support(dirac: &DiracOperator, refl: &ReflectionStructure, f: &[C64]) -> Result<()> {
    let s = dirac.spinor_dim();
    for (i, v) in f.iter().enumerate() {
        if *v != ZERO {
            check_positive_support(dirac.geometry(), refl, i / s)?;
        }
    }
    Ok(())
}

/// Gram matrix `M_ab = ⟨ϑ f_a, (m − D̸)^{-1} f_b⟩ hᵈ` over spinor fields
/// supported at positive time.
///
/// The orientation `(m − D̸)^{-1} = −(D̸ − m)^{-1}` is the one whose form is
/// nonnegative in the continuum; see [`dirac_form_sign`].
pub fn dirac_gram_lattice(
    dirac: &DiracOperator,
    mass: f64,
    theta: &ThetaOperator,
    refl: &ReflectionStructure,
    basis: &[SpinorField],
    cfg: &SolverConfig,
) -> Result<GramReport> {
    for f in basis {
        if f.len() != dirac.len() {
            return Err(Error::DimensionMismatch {
                expected: dirac.len(),
                found: f.len(),
            });
        }
        check_spinor_support(dirac, refl, f)?;
    }
    let vol = dirac.geometry().spacing().powi(dirac.geometry().dims() as i32);
    let columns: Vec<(SpinorField, SolveInfo)> = basis
        .par_iter()
        .map(|f| solve_shifted(dirac, mass, f, cfg))
        .collect::<Result<_>>()?;
    let mirrored: Vec<SpinorField> = basis.iter().map(|f| theta.apply(f)).collect();
    let k = basis.len();
    let matrix = DMatrix::from_fn(k, k, |a, b| dot(&mirrored[a], &columns[b].0) * vol);
    let residuals = columns.iter().map(|(_, info)| info.residual).collect();
    Ok(GramReport::from_matrix(
        matrix,
        format!("{k} spinor fields supported at t >= h"),
        residuals,
    ))
}

/// Spinor deltas `e_(site, a)` for every site with `1 ≤ t < N₀/2` and every
/// spinor component.
pub fn positive_spinor_deltas(dirac: &DiracOperator, refl: &ReflectionStructure) -> Vec<SpinorField> {
    let s = dirac.spinor_dim();
    let geom = dirac.geometry();
    crate::geometry::partition_regions(geom, refl)
        .omega_plus
        .iter()
        .flat_map(|&site| {
            (0..s).map(move |a| {
                let mut e = vec![ZERO; geom.n_sites() * s];
                e[site * s + a] = C64::new(1.0, 0.0);
                e
            })
        })
        .collect()
}

/// `⟨ϑ f, (D̸ − m)^{-1} f⟩ hᵈ` in the literal orientation, real part.
pub fn dirac_form_sign(
    dirac: &DiracOperator,
    mass: f64,
    theta: &ThetaOperator,
    f: &[C64],
    cfg: &SolverConfig,
) -> Result<f64> {
    let (u, _) = solve_shifted(dirac, mass, f, cfg)?;
    let vol = dirac.geometry().spacing().powi(dirac.geometry().dims() as i32);
    Ok(-dot(&theta.apply(f), &u).re * vol)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryTerm {
    /// `⟨ϑ f, (m − D̸)^{-1} f⟩ hᵈ` (real part).
    pub gram_value: f64,
    /// `√F Σ_{t=0} |γ⁰ u|² h^{d−1}` with `γ⁰ = F^{-1/2} γ₀`.
    pub boundary_value: f64,
    /// `|gram − boundary| / boundary`.
    pub gap: f64,
    /// Exact lattice flux through the two fixed planes, which reproduces
    /// `gram_value` up to solver error for any `F`.
    pub flux_value: f64,
    pub solver_residual: f64,
}

/// Solves `(m − D̸) u = f` and compares the reflected form with the boundary
/// sum of `|u|²` on the `t = 0` plane.
pub fn boundary_term_check(
    dirac: &DiracOperator,
    mass: f64,
    theta: &ThetaOperator,
    refl: &ReflectionStructure,
    f: &[C64],
    cfg: &SolverConfig,
) -> Result<BoundaryTerm> {
    if f.len() != dirac.len() {
        return Err(Error::DimensionMismatch {
            expected: dirac.len(),
            found: f.len(),
        });
    }
    check_spinor_support(dirac, refl, f)?;
    let (u, info) = solve_shifted(dirac, mass, f, cfg)?;
    let geom = dirac.geometry();
    let gram_value = dot(&theta.apply(f), &u).re * geom.spacing().powi(geom.dims() as i32);
    let boundary_value = boundary_sum(geom, dirac.spinor_dim(), &u, dirac.lapse())?;
    let flux_value = plane_flux(geom, dirac.spinor_dim(), &u, dirac.lapse())?;
    Ok(BoundaryTerm {
        gram_value,
        boundary_value,
        gap: (gram_value - boundary_value).abs() / boundary_value,
        flux_value,
        solver_residual: info.residual,
    })
}

fn check_field(geom: &LatticeGeometry, spinor_dim: usize, u: &[C64], lapse: f64) -> Result<()> {
    if u.len() != geom.n_sites() * spinor_dim {
        return Err(Error::DimensionMismatch {
            expected: geom.n_sites() * spinor_dim,
            found: u.len(),
        });
    }
    if !(lapse > 0.0) {
        return Err(invalid("lapse", format!("{lapse} is not positive")));
    }
    Ok(())
}

/// `√F Σ_{t=0} |γ⁰ u|² h^{d−1}` with `γ⁰ = F^{-1/2} γ₀` the Clifford action
/// of `dt`; equals `Σ_{t=0} |u|² h^{d−1} / √F`.
pub fn boundary_sum(geom: &LatticeGeometry, spinor_dim: usize, u: &[C64], lapse: f64) -> Result<f64> {
    check_field(geom, spinor_dim, u, lapse)?;
    let s = spinor_dim;
    let plane: f64 = (0..geom.n_spatial())
        .map(|x| {
            let site = geom.site_from_time(0, x);
            u[site * s..(site + 1) * s].iter().map(|z| z.norm_sqr()).sum::<f64>()
        })
        .sum();
    Ok(lapse.sqrt() * plane * geom.spacing().powi(geom.dims() as i32 - 1) / lapse)
}

/// Discrete flux of `u` through both fixed planes. Central differences
/// couple each plane to its two neighbours, so the flux through `t = 0` is
/// `Re Σ_x ⟨(u(1) + u(−1))/2, u(0)⟩`; the antipodal plane enters with the
/// opposite sign. For `u = (m − D̸)^{-1} f` with `f` at positive time this
/// equals the reflected form exactly.
pub fn plane_flux(geom: &LatticeGeometry, spinor_dim: usize, u: &[C64], lapse: f64) -> Result<f64> {
    check_field(geom, spinor_dim, u, lapse)?;
    let s = spinor_dim;
    let spinor = |label: i64, x: usize| {
        let site = geom.site_from_time(label, x);
        &u[site * s..(site + 1) * s]
    };
    let through = |label: i64, x: usize| -> f64 {
        let outer = spinor(label + 1, x).iter().zip(spinor(label - 1, x));
        outer
            .zip(spinor(label, x))
            .map(|((a, b), c)| ((a + b).conj() * c).re)
            .sum::<f64>()
            * 0.5
    };
    let far = geom.time_extent() as i64 / 2;
    let flux: f64 = (0..geom.n_spatial()).map(|x| through(0, x) - through(far, x)).sum();
    Ok(flux * geom.spacing().powi(geom.dims() as i32 - 1) / lapse.sqrt())
}
