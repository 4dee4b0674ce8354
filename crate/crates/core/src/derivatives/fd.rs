use super::{DerivativeEstimate, DerivativeValue, Method};
use crate::error::{Error, Result};
use crate::hamiltonian::{exact_yj, Model};
use crate::noise::KrausChannel;
use crate::qcore::{commutator, evolve, DensityMatrix, StateVector, C64};

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!("step size must be positive, got {eps}")));
    }
    Ok(())
}

fn shifted(phi: &[f64], j: usize, delta: f64) -> Vec<f64> {
    let mut p = phi.to_vec();
    p[j] += delta;
    p
}

/// Central difference `(|ψ(φ+εe_j)⟩ − |ψ(φ−εe_j)⟩) / 2ε` of the exactly
/// evolved state.
pub fn finite_difference_pure(
    model: &dyn Model,
    psi0: &StateVector,
    j: usize,
    phi: &[f64],
    t: f64,
    eps: f64,
) -> Result<DerivativeEstimate> {
    check_eps(eps)?;
    model.check_params(phi)?;
    model.check_index(j)?;
    let plus = evolve(&model.unitary(t, &shifted(phi, j, eps))?, psi0)?;
    let minus = evolve(&model.unitary(t, &shifted(phi, j, -eps))?, psi0)?;
    let value = (plus.amplitudes() - minus.amplitudes()).unscale(2.0 * eps);
    Ok(DerivativeEstimate::deterministic(DerivativeValue::Vector(value), Method::Fd))
}

/// Central difference of `E[U(t,φ) ρ₀ U(t,φ)†]`, where `E` is the optional
/// channel applied to every qubit.
pub fn finite_difference_mixed(
    model: &dyn Model,
    rho0: &DensityMatrix,
    j: usize,
    phi: &[f64],
    t: f64,
    eps: f64,
    channel: Option<&KrausChannel>,
) -> Result<DerivativeEstimate> {
    check_eps(eps)?;
    model.check_params(phi)?;
    model.check_index(j)?;
    let state = |p: &[f64]| -> Result<_> {
        let rho = evolve(&model.unitary(t, p)?, rho0)?.into_matrix();
        match channel {
            Some(ch) => ch.apply_all_matrix(&rho),
            None => Ok(rho),
        }
    };
    let plus = state(&shifted(phi, j, eps))?;
    let minus = state(&shifted(phi, j, -eps))?;
    let value = (plus - minus).unscale(2.0 * eps);
    Ok(DerivativeEstimate::deterministic(DerivativeValue::Matrix(value), Method::Fd))
}

/// `−iU Y_j |ψ₀⟩` with `Y_j` integrated on `quad_steps` points.
pub fn exact_derivative_pure(
    model: &dyn Model,
    psi0: &StateVector,
    j: usize,
    phi: &[f64],
    t: f64,
    quad_steps: usize,
) -> Result<DerivativeEstimate> {
    let y = exact_yj(model, t, phi, j, quad_steps)?;
    if y.dim() != psi0.dim() {
        return Err(Error::DimensionMismatch {
            expected: y.dim(),
            found: psi0.dim(),
        });
    }
    let u = model.unitary(t, phi)?;
    let value = u.matrix() * (y.matrix() * psi0.amplitudes()) * C64::new(0.0, -1.0);
    Ok(DerivativeEstimate::deterministic(DerivativeValue::Vector(value), Method::Exact))
}

/// `−iU [Y_j, ρ₀] U†`, optionally followed by the channel on every qubit.
pub fn exact_derivative_mixed(
    model: &dyn Model,
    rho0: &DensityMatrix,
    j: usize,
    phi: &[f64],
    t: f64,
    quad_steps: usize,
    channel: Option<&KrausChannel>,
) -> Result<DerivativeEstimate> {
    let y = exact_yj(model, t, phi, j, quad_steps)?;
    if y.dim() != rho0.dim() {
        return Err(Error::DimensionMismatch {
            expected: y.dim(),
            found: rho0.dim(),
        });
    }
    let u = model.unitary(t, phi)?;
    let mut value = u.conjugate_matrix(&commutator(y.matrix(), rho0.matrix())) * C64::new(0.0, -1.0);
    if let Some(ch) = channel {
        value = ch.apply_all_matrix(&value)?;
    }
    Ok(DerivativeEstimate::deterministic(DerivativeValue::Matrix(value), Method::Exact))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{closed_form_yphi, FieldAngleModel, ParamHamiltonian, DEFAULT_QUAD_STEPS};
    use crate::qcore::{max_abs, HermitianOperator, Pauli};

    #[test]
    fn multiplicative_parameter() {
        let sz = HermitianOperator::new(Pauli::Z.matrix()).unwrap();
        let model = ParamHamiltonian::unnamed(vec![sz.clone()]).unwrap();
        let rho0 = StateVector::plus().to_density();
        let fd = finite_difference_mixed(&model, &rho0, 0, &[0.7], 1.0, 1e-5, None).unwrap();
        let u = model.unitary(1.0, &[0.7]).unwrap();
        let exact = u.conjugate_matrix(&commutator(sz.matrix(), rho0.matrix())) * C64::new(0.0, -1.0);
        assert!(max_abs(&(fd.matrix().unwrap() - exact)) < 1e-8);
    }

    #[test]
    fn central_difference_is_second_order() {
        let rho0 = StateVector::plus().to_density();
        let exact = exact_derivative_mixed(&FieldAngleModel, &rho0, 0, &[0.4], 1.3, DEFAULT_QUAD_STEPS, None).unwrap();
        let err = |eps| {
            let fd = finite_difference_mixed(&FieldAngleModel, &rho0, 0, &[0.4], 1.3, eps, None).unwrap();
            max_abs(&(fd.matrix().unwrap() - exact.matrix().unwrap()))
        };
        let ratio = err(1e-2) / err(1e-3);
        assert!((ratio - 100.0).abs() < 5.0, "ratio {ratio}");
    }

    #[test]
    fn field_angle_against_closed_form_generator() {
        let rho0 = StateVector::plus().to_density();
        for (t, phi) in [(1.0, 0.3), (2.5, 1.1), (0.2, -0.7)] {
            let u = FieldAngleModel.unitary(t, &[phi]).unwrap();
            let y = closed_form_yphi(t, phi);
            let exact = u.conjugate_matrix(&commutator(y.matrix(), rho0.matrix())) * C64::new(0.0, -1.0);
            let fd = finite_difference_mixed(&FieldAngleModel, &rho0, 0, &[phi], t, 1e-5, None).unwrap();
            assert!(max_abs(&(fd.matrix().unwrap() - exact)) < 1e-7);
        }
    }

    #[test]
    fn pure_exact_matches_fd() {
        let model = ParamHamiltonian::collective_field(2).unwrap();
        let psi = crate::qcore::ghz(2).unwrap();
        let phi = [0.2, 0.5, -0.3];
        for j in 0..3 {
            let a = exact_derivative_pure(&model, &psi, j, &phi, 1.4, DEFAULT_QUAD_STEPS).unwrap();
            let b = finite_difference_pure(&model, &psi, j, &phi, 1.4, 1e-5).unwrap();
            assert!((a.vector().unwrap() - b.vector().unwrap()).norm() < 1e-8);
        }
    }

    #[test]
    fn rejects_bad_step() {
        let rho0 = StateVector::plus().to_density();
        assert!(finite_difference_mixed(&FieldAngleModel, &rho0, 0, &[0.1], 1.0, 0.0, None).is_err());
        assert!(finite_difference_mixed(&FieldAngleModel, &rho0, 1, &[0.1], 1.0, 1e-5, None).is_err());
    }
}
