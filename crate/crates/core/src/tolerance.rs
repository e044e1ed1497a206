//! Central numeric tolerances. Everything that compares floats pins its
//! tolerance here so the whole crate agrees on what "equal" means.

/// Distribution mass checks, identity checks between analytically equal
/// quantities, and orthonormality validation.
pub const PROBABILITY_TOL: f64 = 1e-9;

/// Relative singular-value cutoff for rank decisions, measured against
/// the largest singular value.
pub const RANK_REL_TOL: f64 = 1e-9;

/// Unitarity and fidelity checks.
pub const FIDELITY_TOL: f64 = 1e-12;

/// Agreement between two independently computed values of the same
/// analytic quantity, such as an overlap checked against its closed
/// form.
pub const IDENTITY_TOL: f64 = 1e-9;

/// Positive-semidefiniteness checks (smallest eigenvalue above `-PSD_TOL`).
pub const PSD_TOL: f64 = 1e-7;

/// Below this, a measurement branch is treated as unreachable and carries
/// no post-state.
pub const ZERO_BRANCH_TOL: f64 = 1e-12;
