//! Euclidean gamma matrices and the per-momentum `A` matrix of the reflected
//! Dirac propagator.

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::linalg::{hermiticity_defect, hermitian_spectrum, max_abs, C64};

pub const MAX_DIMENSION: usize = 12;

/// Hermitian generators with `{γ_i, γ_j} = 2 δ_ij I`.
#[derive(Debug, Clone, PartialEq)]
pub struct CliffordRep {
    d: usize,
    gammas: Vec<DMatrix<C64>>,
}

fn pauli() -> [DMatrix<C64>; 4] {
    let c = |re: f64, im: f64| C64::new(re, im);
    [
        DMatrix::identity(2, 2),
        DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
        DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
        DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
    ]
}

fn kron_chain(factors: &[&DMatrix<C64>]) -> DMatrix<C64> {
    factors
        .iter()
        .fold(DMatrix::identity(1, 1), |acc, f| acc.kronecker(*f))
}

/// Pauli-chain representation: `γ_{2k} = Z^{⊗k} ⊗ X ⊗ I…`,
/// `γ_{2k+1} = Z^{⊗k} ⊗ Y ⊗ I…` on `⌈d/2⌉` qubits.
pub fn gamma_matrices(d: usize) -> Result<CliffordRep> {
    if !(1..=MAX_DIMENSION).contains(&d) {
        return Err(invalid("d", format!("{d} is outside 1..={MAX_DIMENSION}")));
    }
    let [id, x, y, z] = pauli();
    let qubits = d.div_ceil(2);
    let gammas = (0..d)
        .map(|i| {
            let k = i / 2;
            let middle = if i % 2 == 0 { &x } else { &y };
            let factors: Vec<&DMatrix<C64>> = (0..qubits)
                .map(|q| match q.cmp(&k) {
                    std::cmp::Ordering::Less => &z,
                    std::cmp::Ordering::Equal => middle,
                    std::cmp::Ordering::Greater => &id,
                })
                .collect();
            kron_chain(&factors)
        })
        .collect();
    Ok(CliffordRep { d, gammas })
}

impl CliffordRep {
    /// Wraps arbitrary square matrices; relations are not checked.
    pub fn from_gammas(gammas: Vec<DMatrix<C64>>) -> Result<Self> {
        let n = gammas.first().map(|g| g.nrows()).ok_or_else(|| invalid("gammas", "empty"))?;
        if gammas.iter().any(|g| g.nrows() != n || g.ncols() != n) {
            return Err(invalid("gammas", "matrices must be square and of equal size"));
        }
        Ok(CliffordRep {
            d: gammas.len(),
            gammas,
        })
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn spinor_dim(&self) -> usize {
        self.gammas[0].nrows()
    }

    pub fn gamma(&self, i: usize) -> &DMatrix<C64> {
        &self.gammas[i]
    }

    pub fn gammas(&self) -> &[DMatrix<C64>] {
        &self.gammas
    }

    /// `η_j = i γ_0 γ_j` for `j = 1..d`.
    pub fn eta(&self, j: usize) -> DMatrix<C64> {
        (&self.gammas[0] * &self.gammas[j]) * C64::new(0.0, 1.0)
    }

    /// `Σ_j η_j p_j − m γ_0`.
    pub fn omega_matrix(&self, p: &[f64], mass: f64) -> DMatrix<C64> {
        let mut out = &self.gammas[0] * C64::new(-mass, 0.0);
        for (j, pj) in p.iter().enumerate() {
            out += self.eta(j + 1) * C64::new(*pj, 0.0);
        }
        out
    }
}

/// Largest anticommutator defect plus largest Hermiticity defect.
pub fn clifford_residual(rep: &CliffordRep) -> f64 {
    let n = rep.spinor_dim();
    let id = DMatrix::<C64>::identity(n, n);
    let mut anti = 0.0f64;
    for (i, gi) in rep.gammas.iter().enumerate() {
        for (j, gj) in rep.gammas.iter().enumerate() {
            let mut ac = gi * gj + gj * gi;
            if i == j {
                ac -= &id * C64::new(2.0, 0.0);
            }
            anti = anti.max(max_abs(&ac));
        }
    }
    let herm = rep.gammas.iter().map(hermiticity_defect).fold(0.0, f64::max);
    anti + herm
}

#[derive(Debug, Clone)]
pub struct AMatrixReport {
    pub omega: f64,
    /// Ascending eigenvalues of `A`.
    pub eigenvalues: Vec<f64>,
    /// Eigenvalues below `ω`, which sit at 0.
    pub lower: Vec<f64>,
    /// Eigenvalues above `ω`, which sit at `2ω`.
    pub upper: Vec<f64>,
    /// `max |Ω² − ω² I|`.
    pub omega_residual: f64,
    /// Largest distance of an eigenvalue from its level, relative to `2ω`.
    pub level_deviation: f64,
}

/// `A = ω I + η⃗·p⃗ − m γ_0` with `ω = (p⃗² + m²)^{1/2}`.
pub fn a_matrix(rep: &CliffordRep, p: &[f64], mass: f64) -> Result<AMatrixReport> {
    if !(mass > 0.0) {
        return Err(invalid("mass", format!("{mass} is not positive")));
    }
    if p.len() + 1 != rep.dimension() {
        return Err(Error::DimensionMismatch {
            expected: rep.dimension() - 1,
            found: p.len(),
        });
    }
    let n = rep.spinor_dim();
    let omega = (p.iter().map(|x| x * x).sum::<f64>() + mass * mass).sqrt();
    let big_omega = rep.omega_matrix(p, mass);
    let a = &big_omega + DMatrix::<C64>::identity(n, n) * C64::new(omega, 0.0);
    let defect = hermiticity_defect(&a);
    if defect > 1e-12 * omega.max(1.0) {
        return Err(Error::NotHermitian { defect });
    }
    let omega_residual = max_abs(&(&big_omega * &big_omega - DMatrix::identity(n, n) * C64::new(omega * omega, 0.0)));
    let eigenvalues = hermitian_spectrum(&a);
    let (lower, upper): (Vec<f64>, Vec<f64>) = eigenvalues.iter().partition(|&&x| x < omega);
    let level_deviation = lower
        .iter()
        .map(|x| x.abs())
        .chain(upper.iter().map(|x| (x - 2.0 * omega).abs()))
        .fold(0.0, f64::max)
        / (2.0 * omega);
    Ok(AMatrixReport {
        omega,
        eigenvalues,
        lower,
        upper,
        omega_residual,
        level_deviation,
    })
}
