//! Single-qubit Kraus channels and the Markovian dephasing model.
//!
//! The dephasing channel with `p(t) = e^{−γt}` is applied once to every qubit
//! after the unitary evolution. Coherences between basis states that differ
//! on a qubit are scaled by `p(t)` for that qubit; populations are untouched.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::Model;
use crate::qcore::{evolve, max_abs, CMatrix, DensityMatrix, C64};
use crate::tol;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KrausChannel {
    operators: Vec<CMatrix>,
    label: String,
}

impl KrausChannel {
    /// Checks `Σ K†K = I` and that every operator acts on one qubit.
    pub fn new(operators: Vec<CMatrix>, label: impl Into<String>) -> Result<Self> {
        if operators.is_empty() {
            return Err(Error::InvalidArgument("channel needs at least one Kraus operator".into()));
        }
        if let Some(k) = operators.iter().find(|k| k.shape() != (2, 2)) {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: k.nrows(),
            });
        }
        let completeness = operators
            .iter()
            .fold(CMatrix::zeros(2, 2), |acc, k| acc + k.adjoint() * k);
        let residual = max_abs(&(completeness - CMatrix::identity(2, 2)));
        if residual > tol::UNITARY {
            return Err(Error::InvalidArgument(format!(
                "Kraus operators are not complete (residual {residual:.3e})"
            )));
        }
        Ok(Self {
            operators,
            label: label.into(),
        })
    }

    pub fn identity() -> Self {
        Self {
            operators: vec![CMatrix::identity(2, 2)],
            label: "identity".into(),
        }
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Applies the channel to `qubit` of an `n`-qubit operator. The map is
    /// linear, so `m` need not be a state.
    pub fn apply_to_qubit(&self, m: &CMatrix, qubit: usize) -> Result<CMatrix> {
        let dim = m.nrows();
        let n = crate::qcore::qubits_for_dim(dim)?;
        if qubit >= n {
            return Err(Error::InvalidArgument(format!(
                "qubit {qubit} out of range for {n} qubits"
            )));
        }
        let shift = n - 1 - qubit;
        let mask = 1usize << shift;
        let mut out = CMatrix::zeros(dim, dim);
        for k in &self.operators {
            for a in 0..dim {
                let (a_rest, a_bit) = (a & !mask, (a >> shift) & 1);
                for b in 0..dim {
                    let (b_rest, b_bit) = (b & !mask, (b >> shift) & 1);
                    let mut acc = C64::new(0.0, 0.0);
                    for ap in 0..2 {
                        let ka = k[(a_bit, ap)];
                        if ka.norm_sqr() == 0.0 {
                            continue;
                        }
                        for bp in 0..2 {
                            let kb = k[(b_bit, bp)].conj();
                            acc += ka * m[(a_rest | (ap << shift), b_rest | (bp << shift))] * kb;
                        }
                    }
                    out[(a, b)] += acc;
                }
            }
        }
        Ok(out)
    }

    /// Applies the channel to every qubit in turn.
    pub fn apply_all_matrix(&self, m: &CMatrix) -> Result<CMatrix> {
        let n = crate::qcore::qubits_for_dim(m.nrows())?;
        (0..n).try_fold(m.clone(), |acc, q| self.apply_to_qubit(&acc, q))
    }
}

/// `K₁ = diag(p, 1)`, `K₂ = diag(√(1−p²), 0)` with `p = e^{−γt}`.
pub fn dephasing_channel(gamma: f64, t: f64) -> Result<KrausChannel> {
    if !(gamma >= 0.0) || !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "dephasing needs gamma >= 0 and t >= 0 (got gamma={gamma}, t={t})"
        )));
    }
    let p = (-gamma * t).exp();
    let k1 = CMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&[
        C64::new(p, 0.0),
        C64::new(1.0, 0.0),
    ]));
    let k2 = CMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&[
        C64::new((1.0 - p * p).max(0.0).sqrt(), 0.0),
        C64::new(0.0, 0.0),
    ]));
    Ok(KrausChannel {
        operators: vec![k1, k2],
        label: format!("dephasing(gamma={gamma},t={t})"),
    })
}

/// Applies a single-qubit channel to every qubit of `rho`.
pub fn apply_channel_all(channel: &KrausChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    let out = channel.apply_all_matrix(rho.matrix())?;
    Ok(DensityMatrix::from_raw(out))
}

/// `E_γ,t[U(t,φ) ρ₀ U(t,φ)†]`.
pub fn noisy_evolved_state(
    model: &dyn Model,
    rho0: &DensityMatrix,
    t: f64,
    phi: &[f64],
    gamma: f64,
) -> Result<DensityMatrix> {
    let channel = dephasing_channel(gamma, t)?;
    let evolved = evolve(&model.unitary(t, phi)?, rho0)?;
    apply_channel_all(&channel, &evolved)
}
