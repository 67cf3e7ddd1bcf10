//! The two `p₀` integrals that turn the Euclidean propagator into its
//! mixed time–momentum form:
//!
//! ```text
//! I₀(t, ω) = ∫ e^{−i p₀ t} / (p₀² + ω²) dp₀   = π e^{−|t|ω} / ω
//! I₁(t, ω) = ∫ p₀ e^{−i p₀ t} / (p₀² + ω²) dp₀ = −i π sgn(t) e^{−|t|ω}
//! ```
//!
//! `I₁` is odd in `t`; at `t = 0` the integral exists only as a principal
//! value, which vanishes.

use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::linalg::C64;
use crate::quadrature::{integrate_half_line, integrate_oscillatory};

pub fn contour_kernel(t: f64, omega: f64) -> Result<(f64, C64)> {
    if !(omega > 0.0) {
        return Err(invalid("omega", format!("{omega} is not positive")));
    }
    let decay = (-t.abs() * omega).exp();
    let sign = if t > 0.0 {
        1.0
    } else if t < 0.0 {
        -1.0
    } else {
        0.0
    };
    Ok((PI * decay / omega, C64::new(0.0, -PI * sign * decay)))
}

/// Both integrals by direct numerical quadrature over `p₀`.
pub fn contour_quadrature(t: f64, omega: f64) -> Result<(f64, C64)> {
    if !(omega > 0.0) {
        return Err(invalid("omega", format!("{omega} is not positive")));
    }
    let tol = 1e-13;
    if t == 0.0 {
        let even = 2.0 * integrate_half_line(|p| 1.0 / (p * p + omega * omega), tol);
        return Ok((even, C64::new(0.0, 0.0)));
    }
    // The real part of I₀ and imaginary part of I₁ are even integrands in p₀.
    let tau = t.abs();
    let half_period = PI / tau;
    let even = 2.0 * integrate_oscillatory(|p| (p * tau).cos() / (p * p + omega * omega), half_period, 60, tol);
    let odd = 2.0 * integrate_oscillatory(|p| p * (p * tau).sin() / (p * p + omega * omega), half_period, 60, tol);
    Ok((even, C64::new(0.0, -odd * t.signum())))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourCheck {
    pub t: f64,
    pub omega: f64,
    pub closed: (f64, C64),
    pub quadrature: (f64, C64),
    /// Largest relative error of the two integrals (absolute when the
    /// closed form vanishes).
    pub relative_error: f64,
}

pub fn contour_self_test(t: f64, omega: f64) -> Result<ContourCheck> {
    let closed = contour_kernel(t, omega)?;
    let quadrature = contour_quadrature(t, omega)?;
    let rel = |a: C64, b: C64| {
        let scale = a.norm();
        if scale == 0.0 {
            b.norm()
        } else {
            (a - b).norm() / scale
        }
    };
    let relative_error = rel(C64::new(closed.0, 0.0), C64::new(quadrature.0, 0.0)).max(rel(closed.1, quadrature.1));
    Ok(ContourCheck {
        t,
        omega,
        closed,
        quadrature,
        relative_error,
    })
}
