//! Monotone vector fields, Euclidean-ball projections and a deterministic
//! solver for strongly monotone variational inequalities.

mod field;
mod modulus;
mod set;
mod solver;

pub use field::{
    affine_substitution, average_field, uniform_average, AffineField, AffineSubstitution,
    AverageField, FnField, VectorField,
};
pub use modulus::{
    estimate_lipschitz, estimate_modulus, jacobian_modulus, lipschitz_hint,
    min_symmetric_eigenvalue, pair_ratio, JacobianModulus, MonotonicityEstimate,
};
pub use set::{project_ball, Ball, ConvexCompactSet, MEMBERSHIP_TOL};
pub use solver::{
    projected_field_iteration, solve_strongly_monotone_vi, solve_strongly_monotone_vi_from,
    weak_solution_residual, StepRule, ViResidual, ViSolution, DEFAULT_TOL,
};
