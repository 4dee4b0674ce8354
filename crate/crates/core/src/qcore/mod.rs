//! Dense complex linear algebra for small qubit registers.
//!
//! Everything here is stored densely as `nalgebra` matrices over [`C64`].
//! Qubit 0 is the leftmost Kronecker factor, so the computational basis index
//! of `|q0 q1 … q(n-1)⟩` reads the bits most-significant first.

mod ops;
mod pauli;
mod spectral;

pub use ops::{
    evolve, ghz, DensityMatrix, Evolvable, HermitianOperator, StateVector, UnitaryOperator,
};
pub use pauli::{collective_pauli, embed_single_qubit, pauli_decompose, Axis, Pauli, PauliWord};
pub use spectral::{expm_hermitian, Spectrum};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Number of qubits spanned by a Hilbert space of dimension `dim`.
pub fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::NotQubitDimension(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `[a, b] = ab − ba`.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Largest entrywise modulus of `m − m†`.
pub fn hermitian_residual(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// `tr(a b)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    assert_eq!(a.ncols(), b.nrows());
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub(crate) fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub(crate) fn check_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    Ok(m.nrows())
}
