use super::{DerivativeEstimate, DerivativeValue, Method};
use crate::error::{Error, Result};
use crate::qcore::{CMatrix, CVector, StateVector};

/// Smallest Trotter order of the form `4k + 1` with `k ≥ 1`.
pub const DEFAULT_TROTTER_STEPS: usize = 5;

fn check_order(m: usize) -> Result<()> {
    if m < 5 || m % 4 != 1 {
        return Err(Error::InvalidArgument(format!(
            "Trotter order must be 4k+1 with k >= 1, got {m}"
        )));
    }
    Ok(())
}

/// `(e^{−i(x/2)σx} e^{−i(z/2)σz})^m`.
pub fn trotter_unitary(x: f64, z: f64, m: usize) -> CMatrix {
    let (cx, sx) = ((x / 2.0).cos(), (x / 2.0).sin());
    let rx = CMatrix::from_row_slice(
        2,
        2,
        &[cx.into(), crate::qcore::C64::new(0.0, -sx), crate::qcore::C64::new(0.0, -sx), cx.into()],
    );
    let rz = CMatrix::from_diagonal(&CVector::from_column_slice(&[
        crate::qcore::C64::from_polar(1.0, -z / 2.0),
        crate::qcore::C64::from_polar(1.0, z / 2.0),
    ]));
    let step = rx * rz;
    (0..m).fold(CMatrix::identity(2, 2), |acc, _| acc * &step)
}

/// Standard parameter-shift derivative of `|ψ(φ)⟩` for the single-qubit
/// field-angle model, evolved through an order-`m` Trotter product.
///
/// With `x = 2t cos φ / m` and `z = 2t sin φ / m`, a `π` shift of either
/// angle yields the corresponding partial derivative, and
/// `∂|ψ⟩ = t[−sin φ U(x+π, z) + cos φ U(x, z+π)]|ψ₀⟩`.
pub fn stand_psr_trotter(psi0: &StateVector, phi: f64, t: f64, m: usize) -> Result<DerivativeEstimate> {
    check_order(m)?;
    if psi0.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: psi0.dim(),
        });
    }
    let mf = m as f64;
    let x = 2.0 * t * phi.cos() / mf;
    let z = 2.0 * t * phi.sin() / mf;
    let psi = psi0.amplitudes();
    let dx = trotter_unitary(x + std::f64::consts::PI, z, m) * psi;
    let dz = trotter_unitary(x, z + std::f64::consts::PI, m) * psi;
    let value = (dx.scale(-phi.sin()) + dz.scale(phi.cos())).scale(t);
    let mut est = DerivativeEstimate::deterministic(DerivativeValue::Vector(value), Method::Stand);
    est.samples = Some(m);
    Ok(est)
}
