use std::ops::{Add, Mul};

use serde::{Deserialize, Serialize};

use super::spectral::Spectrum;
use super::{check_square, hermitian_residual, max_abs, qubits_for_dim, symmetrize};
use super::{CMatrix, CVector, C64, ONE};
use crate::error::{Error, Result};
use crate::tol;

/// Pure state of an `n`-qubit register.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    amps: CVector,
    n_qubits: usize,
}

impl StateVector {
    /// Wraps amplitudes that are already normalised.
    pub fn new(amps: CVector) -> Result<Self> {
        let n_qubits = qubits_for_dim(amps.len())?;
        let norm = amps.norm();
        if (norm - 1.0).abs() > tol::NORM {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amps, n_qubits })
    }

    /// Normalises `amps` first; rejects the zero vector.
    pub fn normalized(amps: CVector) -> Result<Self> {
        let n_qubits = qubits_for_dim(amps.len())?;
        let norm = amps.norm();
        if norm < 1e-300 {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self {
            amps: amps.unscale(norm),
            n_qubits,
        })
    }

    pub fn from_slice(amps: &[C64]) -> Result<Self> {
        Self::normalized(CVector::from_column_slice(amps))
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::ZeroQubits);
        }
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        let mut amps = CVector::zeros(dim);
        amps[index] = ONE;
        Ok(Self { amps, n_qubits })
    }

    /// `(|0⟩ + |1⟩)/√2`.
    pub fn plus() -> Self {
        let a = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self {
            amps: CVector::from_column_slice(&[a, a]),
            n_qubits: 1,
        }
    }

    pub(crate) fn from_raw(amps: CVector) -> Self {
        let n_qubits = amps.len().trailing_zeros() as usize;
        Self { amps, n_qubits }
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amps
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps.dotc(&other.amps)
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn projector(&self) -> CMatrix {
        &self.amps * self.amps.adjoint()
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            mat: symmetrize(&self.projector()),
            n_qubits: self.n_qubits,
        }
    }
}

/// `(|0…0⟩ + |1…1⟩)/√2`.
pub fn ghz(n_qubits: usize) -> Result<StateVector> {
    if n_qubits == 0 {
        return Err(Error::ZeroQubits);
    }
    let dim = 1usize << n_qubits;
    let a = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut amps = CVector::zeros(dim);
    amps[0] = a;
    amps[dim - 1] = a;
    Ok(StateVector { amps, n_qubits })
}

/// Mixed state of an `n`-qubit register.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    mat: CMatrix,
    n_qubits: usize,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(mat: CMatrix) -> Result<Self> {
        let dim = check_square(&mat)?;
        let n_qubits = qubits_for_dim(dim)?;
        let residual = hermitian_residual(&mat);
        if residual > tol::HERMITIAN {
            return Err(Error::NotHermitian { residual });
        }
        let mat = symmetrize(&mat);
        let trace = mat.trace();
        if (trace.re - 1.0).abs() > tol::NORM || trace.im.abs() > tol::NORM {
            return Err(Error::InvalidDensity(format!("trace {trace} differs from 1")));
        }
        let spectrum = Spectrum::of_matrix(&mat);
        let min = spectrum.values.min();
        if min < -tol::PSD_SLACK {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(Self { mat, n_qubits })
    }

    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::ZeroQubits);
        }
        let dim = 1usize << n_qubits;
        let mat = CMatrix::identity(dim, dim).unscale(dim as f64);
        Ok(Self { mat, n_qubits })
    }

    /// Skips validation. Callers guarantee the matrix came from a CPTP map
    /// applied to a valid state.
    pub(crate) fn from_raw(mat: CMatrix) -> Self {
        let n_qubits = mat.nrows().trailing_zeros() as usize;
        Self {
            mat: symmetrize(&mat),
            n_qubits,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    /// `tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        super::trace_product(&self.mat, &self.mat).re
    }

    pub fn spectrum(&self) -> Spectrum {
        Spectrum::of_matrix(&self.mat)
    }

    /// `tr(ρ A)`.
    pub fn expectation(&self, op: &HermitianOperator) -> f64 {
        super::trace_product(&self.mat, op.matrix()).re
    }
}

/// Dense Hermitian operator; the stored matrix is exactly Hermitian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermitianOperator {
    mat: CMatrix,
}

impl HermitianOperator {
    pub fn new(mat: CMatrix) -> Result<Self> {
        check_square(&mat)?;
        let residual = hermitian_residual(&mat);
        let scale = max_abs(&mat).max(1.0);
        if residual > tol::HERMITIAN * scale {
            return Err(Error::NotHermitian { residual });
        }
        Ok(Self {
            mat: symmetrize(&mat),
        })
    }

    pub(crate) fn from_raw(mat: CMatrix) -> Self {
        Self {
            mat: symmetrize(&mat),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: CMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: CMatrix::identity(dim, dim),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            mat: self.mat.scale(a),
        }
    }

    pub fn spectrum(&self) -> Spectrum {
        Spectrum::of_matrix(&self.mat)
    }

    /// Residual of `A² − I`, used to decide whether the operator generates a
    /// two-point shift rule on its own.
    pub fn involution_residual(&self) -> f64 {
        let sq = &self.mat * &self.mat;
        max_abs(&(sq - CMatrix::identity(self.dim(), self.dim())))
    }

    /// `⟨ψ|A|ψ⟩`.
    pub fn expectation(&self, psi: &StateVector) -> f64 {
        psi.amplitudes().dotc(&(&self.mat * psi.amplitudes())).re
    }
}

impl Add for &HermitianOperator {
    type Output = HermitianOperator;

    fn add(self, rhs: &HermitianOperator) -> HermitianOperator {
        HermitianOperator {
            mat: &self.mat + &rhs.mat,
        }
    }
}

/// Dense unitary operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitaryOperator {
    mat: CMatrix,
}

impl UnitaryOperator {
    pub fn new(mat: CMatrix) -> Result<Self> {
        let dim = check_square(&mat)?;
        let residual = max_abs(&(mat.adjoint() * &mat - CMatrix::identity(dim, dim)));
        if residual > tol::UNITARY {
            return Err(Error::NotUnitary { residual });
        }
        Ok(Self { mat })
    }

    pub(crate) fn from_raw(mat: CMatrix) -> Self {
        Self { mat }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: CMatrix::identity(dim, dim),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            mat: self.mat.adjoint(),
        }
    }

    /// `U A U†` for an arbitrary square matrix.
    pub fn conjugate_matrix(&self, a: &CMatrix) -> CMatrix {
        &self.mat * a * self.mat.adjoint()
    }
}

impl Mul for &UnitaryOperator {
    type Output = UnitaryOperator;

    fn mul(self, rhs: &UnitaryOperator) -> UnitaryOperator {
        UnitaryOperator {
            mat: &self.mat * &rhs.mat,
        }
    }
}

/// States that a unitary can act on.
pub trait Evolvable: Sized {
    fn dim(&self) -> usize;
    fn evolve_by(&self, u: &UnitaryOperator) -> Self;
}

impl Evolvable for StateVector {
    fn dim(&self) -> usize {
        self.amps.len()
    }

    fn evolve_by(&self, u: &UnitaryOperator) -> Self {
        StateVector::from_raw(u.matrix() * &self.amps)
    }
}

impl Evolvable for DensityMatrix {
    fn dim(&self) -> usize {
        self.mat.nrows()
    }

    fn evolve_by(&self, u: &UnitaryOperator) -> Self {
        DensityMatrix::from_raw(u.conjugate_matrix(&self.mat))
    }
}

/// `U|ψ⟩` or `UρU†`.
pub fn evolve<S: Evolvable>(u: &UnitaryOperator, state: &S) -> Result<S> {
    if u.dim() != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            found: state.dim(),
        });
    }
    Ok(state.evolve_by(u))
}

impl Default for HermitianOperator {
    fn default() -> Self {
        Self::zeros(2)
    }
}
