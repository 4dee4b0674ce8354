use crate::error::{Error, Result};
use crate::qcore::{pauli_decompose, CMatrix, DensityMatrix, HermitianOperator, C64};
use crate::tol;

/// `e^{−iθO} = cos θ·I − i sin θ·O`, valid when `O² = I`.
pub fn shift_gate(o: &CMatrix, theta: f64) -> CMatrix {
    let dim = o.nrows();
    CMatrix::identity(dim, dim).scale(theta.cos()) + o * C64::new(0.0, -theta.sin())
}

/// `[O, ρ]` recovered from the two shifted conjugations
/// `(i / sin 2θ)[e^{−iθO}ρe^{iθO} − e^{iθO}ρe^{−iθO}]`.
pub fn shift_commutator(o: &HermitianOperator, rho: &DensityMatrix, theta: f64) -> Result<CMatrix> {
    if o.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: o.dim(),
            found: rho.dim(),
        });
    }
    let residual = o.involution_residual();
    if residual > tol::INVOLUTION {
        return Err(Error::NotInvolution { residual });
    }
    let sine = (2.0 * theta).sin();
    if sine.abs() <= tol::SHIFT_POLE {
        return Err(Error::ShiftPole { theta, sine });
    }
    let plus = shift_gate(o.matrix(), theta);
    let minus = shift_gate(o.matrix(), -theta);
    let diff = &plus * rho.matrix() * plus.adjoint() - &minus * rho.matrix() * minus.adjoint();
    Ok(diff * C64::new(0.0, 1.0 / sine))
}

/// One involutory piece `c·O` (with `O² = I`) of a derivative generator.
#[derive(Clone, Debug)]
pub struct ShiftTerm {
    pub coeff: f64,
    pub op: CMatrix,
}

/// Splits `∂_j H` into involutions the shift identity can use.
///
/// A generator that already squares to the identity is used whole. Anything
/// else is expanded into Pauli words; the identity component is dropped
/// since it commutes with every state.
pub fn shift_terms(generator: &HermitianOperator) -> Result<Vec<ShiftTerm>> {
    if generator.involution_residual() <= tol::INVOLUTION {
        return Ok(vec![ShiftTerm {
            coeff: 1.0,
            op: generator.matrix().clone(),
        }]);
    }
    let terms = pauli_decompose(generator)?;
    Ok(terms
        .into_iter()
        .map(|(coeff, word)| ShiftTerm {
            coeff,
            op: word.matrix(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{collective_pauli, commutator, max_abs, Axis, Pauli, StateVector};
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn sigma_x_on_ground_state() {
        let sx = HermitianOperator::new(Pauli::X.matrix()).unwrap();
        let rho = StateVector::basis(1, 0).unwrap().to_density();
        let c = shift_commutator(&sx, &rho, FRAC_PI_4).unwrap();
        // |1⟩⟨0| − |0⟩⟨1|
        let expected = CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0.0, 0.0), C64::new(-1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        );
        assert!(max_abs(&(c - expected)) < 1e-15);
    }

    #[test]
    fn commuting_pair_vanishes() {
        let sz = HermitianOperator::new(Pauli::Z.matrix()).unwrap();
        let rho = StateVector::basis(1, 0).unwrap().to_density();
        for theta in [0.1, 0.3, 1.0, 2.0] {
            let c = shift_commutator(&sz, &rho, theta).unwrap();
            assert!(max_abs(&c) < 1e-15);
        }
    }

    #[test]
    fn matches_direct_commutator() {
        let o = HermitianOperator::new(Pauli::Y.matrix()).unwrap();
        let rho = StateVector::from_slice(&[C64::new(0.6, 0.0), C64::new(0.0, 0.8)])
            .unwrap()
            .to_density();
        let via_shift = shift_commutator(&o, &rho, 0.3).unwrap();
        let direct = commutator(o.matrix(), rho.matrix());
        assert!(max_abs(&(via_shift - direct)) < 1e-14);
    }

    #[test]
    fn rejects_non_involution_and_poles() {
        let j = collective_pauli(Axis::X, 2).unwrap();
        let rho = StateVector::basis(2, 0).unwrap().to_density();
        assert!(matches!(
            shift_commutator(&j, &rho, 0.3),
            Err(Error::NotInvolution { .. })
        ));
        let sx = HermitianOperator::new(Pauli::X.matrix()).unwrap();
        let rho1 = StateVector::plus().to_density();
        assert!(matches!(
            shift_commutator(&sx, &rho1, std::f64::consts::FRAC_PI_2),
            Err(Error::ShiftPole { .. })
        ));
    }

    #[test]
    fn term_splitting() {
        let sx = HermitianOperator::new(Pauli::X.matrix()).unwrap();
        assert_eq!(shift_terms(&sx).unwrap().len(), 1);

        let j = collective_pauli(Axis::Z, 3).unwrap();
        let terms = shift_terms(&j).unwrap();
        assert_eq!(terms.len(), 3);
        let rebuilt = terms
            .iter()
            .fold(CMatrix::zeros(8, 8), |acc, t| acc + t.op.scale(t.coeff));
        assert!(max_abs(&(rebuilt - j.matrix())) < 1e-15);

        let proj = HermitianOperator::new(StateVector::plus().projector()).unwrap();
        let terms = shift_terms(&proj).unwrap();
        assert_eq!(terms.len(), 1);
        assert!((terms[0].coeff - 0.5).abs() < 1e-15);
    }
}
