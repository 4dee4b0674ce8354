//! Numerical tolerances shared by the library and its tests.

/// Unit norm of state vectors, unit trace of density matrices.
pub const NORM: f64 = 1e-12;
/// Hermiticity residual accepted when wrapping a raw matrix.
pub const HERMITIAN: f64 = 1e-10;
/// `U†U = I` residual.
pub const UNITARY: f64 = 1e-10;
/// Smallest admissible eigenvalue of a density matrix.
pub const PSD_SLACK: f64 = 1e-10;
/// `O² = I` residual for shift generators.
pub const INVOLUTION: f64 = 1e-10;
/// `|sin(2θ)|` or `|sin(θ)|` below this is treated as a pole of the shift rule.
pub const SHIFT_POLE: f64 = 1e-9;
/// Symmetry residual of a Fisher matrix.
pub const FISHER_SYMMETRY: f64 = 1e-9;
/// Smallest admissible eigenvalue of a Fisher matrix.
pub const FISHER_PSD: f64 = 1e-8;
/// Default exclusion threshold for `p_λ + p_λ'` in the mixed-state QFIM.
pub const EIGEN_CUTOFF: f64 = 1e-12;
/// Default floor on outcome probabilities in the classical Fisher matrix.
pub const PROB_FLOOR: f64 = 1e-12;
/// Largest condition number accepted when inverting a Fisher matrix.
pub const MAX_CONDITION: f64 = 1e12;
/// Pauli coefficients below this magnitude are dropped from a decomposition.
pub const PAULI_COEFF: f64 = 1e-14;
