//! Reflection positivity of the Euclidean Dirac propagator: lattice Gram,
//! semi-analytic momentum kernel and the boundary-term identity.

pub mod contour;
pub mod lattice;
pub mod momentum;

pub use contour::{contour_kernel, contour_quadrature, contour_self_test, ContourCheck};
pub use lattice::{
    assemble_dirac, boundary_sum, boundary_term_check, dirac_form_sign, dirac_gram_lattice, plane_flux, positive_spinor_deltas, solve_shifted,
    theta_map, BoundaryTerm, DiracOperator, SpinorField, ThetaOperator,
};
pub use momentum::{
    dirac_gram_momentum, kernel_rank, lattice_to_momentum, reflected_kernel, spatial_transform, square_form_value,
    MomentumFunction, MomentumGrid, TimeSample,
};
