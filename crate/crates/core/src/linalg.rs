//! Sparse storage, conjugate gradients and Hermitian spectra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

pub type C64 = Complex64;

/// Basis sizes above this use the Lanczos smallest-eigenvalue iteration.
pub const DENSE_EIGEN_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Relative residual tolerance.
    pub tolerance: f64,
    /// Iteration cap; `None` means ten times the system size.
    pub max_iterations: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-12,
            max_iterations: None,
        }
    }
}

impl SolverConfig {
    pub fn with_tolerance(tolerance: f64) -> Self {
        SolverConfig {
            tolerance,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(invalid("tolerance", format!("{} is not in (0, 1)", self.tolerance)));
        }
        if self.max_iterations == Some(0) {
            return Err(invalid("max_iterations", "must be positive"));
        }
        Ok(())
    }

    pub fn iteration_cap(&self, n: usize) -> usize {
        self.max_iterations.unwrap_or(10 * n.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveInfo {
    pub iterations: usize,
    pub residual: f64,
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Copy + Default + std::ops::AddAssign + PartialEq> CsrMatrix<T> {
    /// Builds the matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n_rows: usize, n_cols: usize, mut triplets: Vec<(usize, usize, T)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<T> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            debug_assert!(r < n_rows && c < n_cols);
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n_rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrMatrix {
            n_rows,
            n_cols,
            row_ptr,
            cols,
            vals,
        }
    }
}

impl<T: Copy> CsrMatrix<T> {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> Option<T> {
        self.row(r).find(|&(col, _)| col == c).map(|(_, v)| v)
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n_rows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }
}

impl<T: Copy + Into<C64>> CsrMatrix<T> {
    pub fn mul_vec(&self, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        for (r, yr) in y.iter_mut().enumerate().take(self.n_rows) {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k].into() * x[self.cols[k]];
            }
            *yr = acc;
        }
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.n_rows];
        self.mul_vec(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.n_rows, self.n_cols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v.into();
        }
        m
    }
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn weighted_norm(a: &[C64], weights: Option<&[f64]>) -> f64 {
    match weights {
        Some(w) => a
            .iter()
            .zip(w)
            .map(|(x, w)| w * x.norm_sqr())
            .sum::<f64>()
            .sqrt(),
        None => norm(a),
    }
}

/// Conjugate gradients for a Hermitian positive definite operator.
///
/// Convergence is declared when `‖b − A x‖_w ≤ tol · ‖b‖_w`, where `w` are
/// optional per-entry weights of the residual norm.
pub fn conjugate_gradient(
    apply: impl Fn(&[C64], &mut [C64]),
    rhs: &[C64],
    residual_weights: Option<&[f64]>,
    cfg: &SolverConfig,
) -> Result<(Vec<C64>, SolveInfo)> {
    let n = rhs.len();
    let zero = C64::new(0.0, 0.0);
    let mut x = vec![zero; n];
    let b_norm = weighted_norm(rhs, residual_weights);
    if b_norm == 0.0 {
        return Ok((
            x,
            SolveInfo {
                iterations: 0,
                residual: 0.0,
            },
        ));
    }
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut ap = vec![zero; n];
    let mut rr = dot(&r, &r).re;
    let cap = cfg.iteration_cap(n);
    let mut residual = 1.0;
    for it in 1..=cap {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap).re;
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::Singular);
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += p[i] * alpha;
            r[i] -= ap[i] * alpha;
        }
        let rr_new = dot(&r, &r).re;
        residual = weighted_norm(&r, residual_weights) / b_norm;
        if residual <= cfg.tolerance {
            // Recompute the true residual to guard against drift.
            apply(&x, &mut ap);
            let true_r: Vec<C64> = rhs.iter().zip(&ap).map(|(b, a)| b - a).collect();
            residual = weighted_norm(&true_r, residual_weights) / b_norm;
            if residual <= cfg.tolerance {
                return Ok((
                    x,
                    SolveInfo {
                        iterations: it,
                        residual,
                    },
                ));
            }
            r = true_r;
            rr = dot(&r, &r).re;
            p.copy_from_slice(&r);
            continue;
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + p[i] * beta;
        }
    }
    Err(Error::NotConverged {
        iterations: cap,
        residual,
    })
}

/// `(M + M†)/2`.
pub fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Largest entry modulus.
pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `max |M − M†|` over entries.
pub fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Sorted eigenvalues of the Hermitian part of `m`.
pub fn hermitian_spectrum(m: &DMatrix<C64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut values: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Smallest eigenvalue of the Hermitian part of `m`: dense for moderate
/// sizes, Lanczos with full reorthogonalisation beyond [`DENSE_EIGEN_LIMIT`].
pub fn min_hermitian_eigenvalue(m: &DMatrix<C64>) -> f64 {
    if m.nrows() <= DENSE_EIGEN_LIMIT {
        hermitian_spectrum(m).first().copied().unwrap_or(0.0)
    } else {
        lanczos_smallest(&hermitian_part(m), 1e-10)
    }
}

/// Smallest eigenvalue of a Hermitian matrix by Lanczos iteration.
pub fn lanczos_smallest(a: &DMatrix<C64>, tol: f64) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    // Deterministic, generic start vector.
    let mut v = DVector::from_fn(n, |i, _| {
        let x = (i as f64 + 1.0) * 0.618_033_988_749_895;
        C64::new(1.0 + (x - x.floor()), 0.5 * (3.0 * x).sin())
    });
    v /= C64::new(v.norm(), 0.0);
    let mut basis: Vec<DVector<C64>> = vec![v];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut estimate = f64::INFINITY;
    for k in 0..n {
        let mut w = a * &basis[k];
        let alpha = basis[k].dotc(&w).re;
        alphas.push(alpha);
        // Full reorthogonalisation, applied twice.
        for _ in 0..2 {
            for q in &basis {
                let c = q.dotc(&w);
                w -= q * c;
            }
        }
        let beta = w.norm();
        let m = alphas.len();
        let tri = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                alphas[i]
            } else if i + 1 == j {
                betas[i]
            } else if j + 1 == i {
                betas[j]
            } else {
                0.0
            }
        });
        let eig = tri.symmetric_eigen();
        let (idx, theta) = eig
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let ritz_residual = beta * eig.eigenvectors[(m - 1, idx)].abs();
        estimate = theta;
        if ritz_residual <= tol * scale || beta <= 1e-14 * scale || k + 1 == n {
            break;
        }
        betas.push(beta);
        basis.push(w / C64::new(beta, 0.0));
    }
    estimate
}
