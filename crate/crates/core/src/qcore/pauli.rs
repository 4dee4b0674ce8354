use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ops::HermitianOperator;
use super::{check_square, kron, qubits_for_dim, trace_product, CMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};
use crate::tol;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> CMatrix {
        let i = C64::new(0.0, 1.0);
        let entries = match self {
            Pauli::I => [ONE, ZERO, ZERO, ONE],
            Pauli::X => [ZERO, ONE, ONE, ZERO],
            Pauli::Y => [ZERO, -i, i, ZERO],
            Pauli::Z => [ONE, ZERO, ZERO, -ONE],
        };
        CMatrix::from_row_slice(2, 2, &entries)
    }
}

/// Direction of a single-qubit Pauli operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn pauli(self) -> Pauli {
        match self {
            Axis::X => Pauli::X,
            Axis::Y => Pauli::Y,
            Axis::Z => Pauli::Z,
        }
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(Error::InvalidArgument(format!("unknown axis '{other}'"))),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        };
        f.write_str(c)
    }
}

/// Tensor product of single-qubit Paulis, qubit 0 first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliWord(pub Vec<Pauli>);

impl PauliWord {
    pub fn identity(n_qubits: usize) -> Self {
        Self(vec![Pauli::I; n_qubits])
    }

    /// `σ_axis` on `qubit`, identity elsewhere.
    pub fn single(axis: Axis, qubit: usize, n_qubits: usize) -> Self {
        let mut w = Self::identity(n_qubits);
        w.0[qubit] = axis.pauli();
        w
    }

    pub fn n_qubits(&self) -> usize {
        self.0.len()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|p| *p == Pauli::I)
    }

    pub fn matrix(&self) -> CMatrix {
        self.0
            .iter()
            .fold(CMatrix::identity(1, 1), |acc, p| kron(&acc, &p.matrix()))
    }

    fn from_index(mut index: usize, n_qubits: usize) -> Self {
        let mut word = vec![Pauli::I; n_qubits];
        for slot in word.iter_mut().rev() {
            *slot = Pauli::ALL[index % 4];
            index /= 4;
        }
        Self(word)
    }
}

impl fmt::Display for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "{p:?}")?;
        }
        Ok(())
    }
}

/// Lifts a single-qubit operator onto `qubit` of an `n`-qubit register.
pub fn embed_single_qubit(op: &CMatrix, qubit: usize, n_qubits: usize) -> CMatrix {
    (0..n_qubits).fold(CMatrix::identity(1, 1), |acc, q| {
        if q == qubit {
            kron(&acc, op)
        } else {
            kron(&acc, &CMatrix::identity(2, 2))
        }
    })
}

/// `J_axis = Σ_k σ_axis^{(k)}` on `n` qubits.
pub fn collective_pauli(axis: Axis, n_qubits: usize) -> Result<HermitianOperator> {
    if n_qubits == 0 {
        return Err(Error::ZeroQubits);
    }
    let dim = 1usize << n_qubits;
    let sum = (0..n_qubits).fold(CMatrix::zeros(dim, dim), |acc, k| {
        acc + PauliWord::single(axis, k, n_qubits).matrix()
    });
    HermitianOperator::new(sum)
}

/// Expands a Hermitian operator as `Σ c_w P_w` with real `c_w`.
///
/// The identity word is dropped: it commutes with everything, so it never
/// contributes to a commutator. Coefficients below
/// [`tol::PAULI_COEFF`] are dropped as well.
pub fn pauli_decompose(h: &HermitianOperator) -> Result<Vec<(f64, PauliWord)>> {
    let dim = check_square(h.matrix())?;
    let n = qubits_for_dim(dim)?;
    let mut terms = Vec::new();
    for index in 1..(1usize << (2 * n)) {
        let word = PauliWord::from_index(index, n);
        let c = trace_product(&word.matrix(), h.matrix()).re / dim as f64;
        if c.abs() > tol::PAULI_COEFF {
            terms.push((c, word));
        }
    }
    Ok(terms)
}
