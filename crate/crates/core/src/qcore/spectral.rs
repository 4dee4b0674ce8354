use nalgebra::DVector;

use super::ops::{HermitianOperator, UnitaryOperator};
use super::{CMatrix, C64};

/// Eigendecomposition `A = V diag(λ) V†` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: DVector<f64>,
    pub vectors: CMatrix,
}

impl Spectrum {
    /// The input must be Hermitian; only the lower triangle is read.
    pub fn of_matrix(m: &CMatrix) -> Self {
        let eig = m.clone().symmetric_eigen();
        Self {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        }
    }

    /// `e^{−iθA}`.
    pub fn exp_neg_i(&self, theta: f64) -> CMatrix {
        self.function(|l| C64::from_polar(1.0, -theta * l))
    }

    /// `V diag(f(λ)) V†`.
    pub fn function(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (mut col, &l) in scaled.column_iter_mut().zip(self.values.iter()) {
            col *= f(l);
        }
        scaled * self.vectors.adjoint()
    }

    pub fn unitary(&self, theta: f64) -> UnitaryOperator {
        UnitaryOperator::from_raw(self.exp_neg_i(theta))
    }
}

/// `e^{−iθH}` via the spectral decomposition of `H`.
pub fn expm_hermitian(h: &HermitianOperator, theta: f64) -> UnitaryOperator {
    h.spectrum().unitary(theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{max_abs, Pauli};
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn sigma_z_quarter_turn() {
        let sz = HermitianOperator::new(Pauli::Z.matrix()).unwrap();
        let u = expm_hermitian(&sz, FRAC_PI_2);
        let expected = CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0.0, -1.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0)],
        );
        assert!(max_abs(&(u.matrix() - expected)) < 1e-15);
    }

    #[test]
    fn zero_angle_is_identity() {
        let h = HermitianOperator::new(Pauli::X.matrix() + Pauli::Y.matrix().scale(0.3)).unwrap();
        let u = expm_hermitian(&h, 0.0);
        assert!(max_abs(&(u.matrix() - CMatrix::identity(2, 2))) < 1e-15);
    }

    #[test]
    fn sigma_x_half_turn_is_minus_identity() {
        let sx = HermitianOperator::new(Pauli::X.matrix()).unwrap();
        let u = expm_hermitian(&sx, PI);
        assert!(max_abs(&(u.matrix() + CMatrix::identity(2, 2))) < 1e-14);
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut m = Pauli::X.matrix();
        m[(0, 1)] = C64::new(2.0, 0.0);
        assert!(matches!(
            HermitianOperator::new(m),
            Err(crate::Error::NotHermitian { .. })
        ));
    }
}
