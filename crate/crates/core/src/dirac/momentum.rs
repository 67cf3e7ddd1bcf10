//! Semi-analytic momentum-space Gram of the reflected Dirac propagator:
//! exact in continuous time, a finite torus of modes in space.
//!
//! With `f̂(t, p⃗) = h^{d−1} Σ_x f(t, x) e^{−i p⃗·x⃗}` and
//! `ĝ(p⃗) = Σ_i e^{−t_i ω} f̂(t_i, p⃗)`, the form is
//!
//! ```text
//! M_ab = c Σ_p⃗ ĝ_a(p⃗)† (B(p⃗)/ω) ĝ_b(p⃗),   c = h² / (2 V_space),
//! B(p⃗) = ω I + η⃗·p⃗ + m γ₀,
//! ```
//!
//! which is the `p₀` contour integral of `γ₀ (D̸ + m) C` evaluated at negative
//! time separation. `B` is the `A` matrix at mass `−m`, with spectrum
//! `{0, 2ω}`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::clifford::CliffordRep;
use crate::error::{invalid, Error, Result};
use crate::geometry::LatticeGeometry;
use crate::gram::GramReport;
use crate::linalg::C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const MODE_CHUNK: usize = 64;

/// Spatial torus modes `p_k = 2πk/(N h)`, `k` in the symmetric range
/// `−N/2 < k ≤ N/2`, stored in FFT order and flattened row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid {
    extent: Vec<usize>,
    spacing: f64,
    mass: f64,
    momenta: Vec<Vec<f64>>,
    omega: Vec<f64>,
}

impl MomentumGrid {
    pub fn new(extent: &[usize], spacing: f64, mass: f64) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(invalid("spacing", format!("{spacing} is not positive")));
        }
        if !(mass > 0.0) {
            return Err(invalid("mass", format!("{mass} is not positive")));
        }
        if extent.contains(&0) {
            return Err(invalid("extent", "every spatial axis needs at least one mode"));
        }
        let n_modes: usize = extent.iter().product();
        let mut momenta = Vec::with_capacity(n_modes);
        for flat in 0..n_modes {
            let mut rest = flat;
            let mut p = vec![0.0; extent.len()];
            for axis in (0..extent.len()).rev() {
                let n = extent[axis];
                let j = rest % n;
                rest /= n;
                let k = if 2 * j > n { j as f64 - n as f64 } else { j as f64 };
                p[axis] = 2.0 * PI * k / (n as f64 * spacing);
            }
            momenta.push(p);
        }
        let omega = momenta
            .iter()
            .map(|p| (p.iter().map(|x| x * x).sum::<f64>() + mass * mass).sqrt())
            .collect();
        Ok(MomentumGrid {
            extent: extent.to_vec(),
            spacing,
            mass,
            momenta,
            omega,
        })
    }

    /// Grid over the spatial axes of a lattice.
    pub fn from_geometry(geom: &LatticeGeometry, mass: f64) -> Result<Self> {
        let extent: Vec<usize> = (1..geom.dims()).map(|a| geom.extent(a)).collect();
        Self::new(&extent, geom.spacing(), mass)
    }

    pub fn extent(&self) -> &[usize] {
        &self.extent
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn n_modes(&self) -> usize {
        self.momenta.len()
    }

    pub fn momentum(&self, mode: usize) -> &[f64] {
        &self.momenta[mode]
    }

    pub fn omega(&self, mode: usize) -> f64 {
        self.omega[mode]
    }

    pub fn spatial_volume(&self) -> f64 {
        self.extent.iter().map(|&n| n as f64 * self.spacing).product()
    }

    /// The constant `c = h² / (2 V_space)` of the chosen Fourier convention.
    pub fn normalization(&self) -> f64 {
        self.spacing * self.spacing / (2.0 * self.spatial_volume())
    }
}

/// One time slice of a test function in momentum space: spinor vectors per
/// mode, mode-major (`mode · S + a`).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSample {
    pub t: f64,
    pub coefficients: Vec<C64>,
}

/// A test function as a list of positive-time slices.
pub type MomentumFunction = Vec<TimeSample>;

/// In-place multidimensional forward DFT of row-major data.
fn fft_nd(data: &mut [C64], shape: &[usize], planner: &mut FftPlanner<f64>) {
    let total: usize = shape.iter().product();
    let mut stride = total;
    for &n in shape {
        stride /= n;
        if n == 1 {
            continue;
        }
        let fft = planner.plan_fft_forward(n);
        let mut line = vec![ZERO; n];
        let block = n * stride;
        for start in (0..total).step_by(block) {
            for offset in 0..stride {
                for (k, z) in line.iter_mut().enumerate() {
                    *z = data[start + offset + k * stride];
                }
                fft.process(&mut line);
                for (k, z) in line.iter().enumerate() {
                    data[start + offset + k * stride] = *z;
                }
            }
        }
    }
}

/// `f̂(p⃗) = h^{d−1} Σ_x f(x) e^{−i p⃗·x⃗}` of one spinor time slice given
/// site-major over the spatial torus.
pub fn spatial_transform(grid: &MomentumGrid, spinor_dim: usize, t: f64, slice: &[C64]) -> Result<TimeSample> {
    let n = grid.n_modes();
    if slice.len() != n * spinor_dim {
        return Err(Error::DimensionMismatch {
            expected: n * spinor_dim,
            found: slice.len(),
        });
    }
    let area = grid.spacing.powi(grid.extent.len() as i32);
    let mut planner = FftPlanner::new();
    let mut coefficients = vec![ZERO; n * spinor_dim];
    let mut component = vec![ZERO; n];
    for a in 0..spinor_dim {
        for (x, z) in component.iter_mut().enumerate() {
            *z = slice[x * spinor_dim + a];
        }
        fft_nd(&mut component, &grid.extent, &mut planner);
        for (mode, z) in component.iter().enumerate() {
            coefficients[mode * spinor_dim + a] = z * area;
        }
    }
    Ok(TimeSample { t, coefficients })
}

/// Momentum-space slices of a lattice spinor field. Only slices with
/// nonzero content are kept; content at `t ≤ 0` is rejected.
pub fn lattice_to_momentum(
    geom: &LatticeGeometry,
    grid: &MomentumGrid,
    spinor_dim: usize,
    field: &[C64],
) -> Result<MomentumFunction> {
    let n_spatial = geom.n_spatial();
    if field.len() != geom.n_sites() * spinor_dim {
        return Err(Error::DimensionMismatch {
            expected: geom.n_sites() * spinor_dim,
            found: field.len(),
        });
    }
    if grid.n_modes() != n_spatial {
        return Err(Error::DimensionMismatch {
            expected: n_spatial,
            found: grid.n_modes(),
        });
    }
    let half = geom.time_extent() as i64 / 2;
    let mut out = Vec::new();
    for label in (-half + 1)..=half {
        let first = geom.site_from_time(label, 0) * spinor_dim;
        let slice = &field[first..first + n_spatial * spinor_dim];
        if slice.iter().all(|z| *z == ZERO) {
            continue;
        }
        if label < 1 || label >= half {
            return Err(Error::BasisOutsideRegion {
                site: geom.site_from_time(label, 0),
            });
        }
        out.push(spatial_transform(grid, spinor_dim, label as f64 * geom.spacing(), slice)?);
    }
    Ok(out)
}

/// `B(p⃗)/ω = I + (η⃗·p⃗ + m γ₀)/ω`.
pub fn reflected_kernel(rep: &CliffordRep, p: &[f64], mass: f64) -> DMatrix<C64> {
    let omega = (p.iter().map(|x| x * x).sum::<f64>() + mass * mass).sqrt();
    let s = rep.spinor_dim();
    let b = DMatrix::<C64>::identity(s, s) * C64::new(omega, 0.0) + rep.omega_matrix(p, -mass);
    b / C64::new(omega, 0.0)
}

/// Number of eigenvalues of `B/ω` above `tol`; equals `S/2` for every mode.
pub fn kernel_rank(rep: &CliffordRep, p: &[f64], mass: f64, tol: f64) -> usize {
    let k = reflected_kernel(rep, p, mass);
    k.symmetric_eigenvalues().iter().filter(|&&l| l > tol).count()
}

fn check_inputs(grid: &MomentumGrid, rep: &CliffordRep, f: &MomentumFunction) -> Result<()> {
    if rep.dimension() != grid.extent.len() + 1 {
        return Err(Error::DimensionMismatch {
            expected: grid.extent.len() + 1,
            found: rep.dimension(),
        });
    }
    let len = grid.n_modes() * rep.spinor_dim();
    for sample in f {
        if !(sample.t > 0.0) {
            return Err(invalid("t", format!("time sample {} is not positive", sample.t)));
        }
        if sample.coefficients.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                found: sample.coefficients.len(),
            });
        }
    }
    Ok(())
}

/// `ĝ(p⃗) = Σ_i e^{−t_i ω} f̂(t_i, p⃗)` for one mode.
fn decayed(grid: &MomentumGrid, f: &MomentumFunction, mode: usize, s: usize) -> DVector<C64> {
    let omega = grid.omega[mode];
    let mut g = DVector::zeros(s);
    for sample in f {
        let w = (-sample.t * omega).exp();
        for a in 0..s {
            g[a] += sample.coefficients[mode * s + a] * w;
        }
    }
    g
}

pub fn dirac_gram_momentum(grid: &MomentumGrid, rep: &CliffordRep, basis: &[MomentumFunction]) -> Result<GramReport> {
    for f in basis {
        check_inputs(grid, rep, f)?;
    }
    let s = rep.spinor_dim();
    let k = basis.len();
    let c = grid.normalization();
    // Fixed chunks summed in order keep the result independent of scheduling.
    let modes: Vec<usize> = (0..grid.n_modes()).collect();
    let partial: Vec<DMatrix<C64>> = modes
        .par_chunks(MODE_CHUNK)
        .map(|chunk| {
            let mut acc = DMatrix::<C64>::zeros(k, k);
            for &mode in chunk {
                let mut g = DMatrix::<C64>::zeros(s, k);
                for (b, f) in basis.iter().enumerate() {
                    g.set_column(b, &decayed(grid, f, mode, s));
                }
                let kernel = reflected_kernel(rep, &grid.momenta[mode], grid.mass);
                acc += g.adjoint() * kernel * g;
            }
            acc
        })
        .collect();
    let matrix = partial.into_iter().fold(DMatrix::zeros(k, k), |a, b| a + b) * C64::new(c, 0.0);
    Ok(GramReport::from_matrix(
        matrix,
        format!("{k} functions on {} spatial modes", grid.n_modes()),
        Vec::new(),
    ))
}

/// `c Σ_p⃗ ‖(B/ω)^{1/2} ĝ(p⃗)‖²`, with the square root taken from the
/// eigendecomposition of each mode's kernel.
pub fn square_form_value(grid: &MomentumGrid, rep: &CliffordRep, f: &MomentumFunction) -> Result<f64> {
    check_inputs(grid, rep, f)?;
    let s = rep.spinor_dim();
    let terms: Vec<f64> = (0..grid.n_modes())
        .into_par_iter()
        .map(|mode| {
            let eig = reflected_kernel(rep, &grid.momenta[mode], grid.mass).symmetric_eigen();
            let roots = eig.eigenvalues.map(|l| C64::new(l.max(0.0).sqrt(), 0.0));
            let root = &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.adjoint();
            (root * decayed(grid, f, mode, s)).norm_squared()
        })
        .collect();
    Ok(grid.normalization() * terms.iter().sum::<f64>())
}
