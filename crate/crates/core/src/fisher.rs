//! Quantum and classical Fisher information, symmetric logarithmic
//! derivatives and Cramér-Rao bounds.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::derivatives::PsiSum;
use crate::error::{Error, Result};
use crate::qcore::{CMatrix, CVector, DensityMatrix, HermitianOperator, StateVector, C64};
use crate::tol;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FisherKind {
    Quantum,
    Classical,
}

/// A symmetric positive semidefinite information matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "FisherJson", try_from = "FisherJson")]
pub struct FisherMatrix {
    entries: DMatrix<f64>,
    kind: FisherKind,
    cutoff: f64,
    metadata: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct FisherJson {
    kind: FisherKind,
    d: usize,
    entries: Vec<f64>,
    cutoff: f64,
    #[serde(default)]
    metadata: BTreeMap<String, String>,
}

impl From<FisherMatrix> for FisherJson {
    fn from(f: FisherMatrix) -> Self {
        let d = f.d();
        let entries = (0..d)
            .flat_map(|r| (0..d).map(move |c| (r, c)))
            .map(|(r, c)| f.entries[(r, c)])
            .collect();
        FisherJson {
            kind: f.kind,
            d,
            entries,
            cutoff: f.cutoff,
            metadata: f.metadata,
        }
    }
}

impl TryFrom<FisherJson> for FisherMatrix {
    type Error = Error;

    fn try_from(j: FisherJson) -> Result<Self> {
        if j.entries.len() != j.d * j.d {
            return Err(Error::DimensionMismatch {
                expected: j.d * j.d,
                found: j.entries.len(),
            });
        }
        let mut f = FisherMatrix::new(DMatrix::from_row_slice(j.d, j.d, &j.entries), j.kind, j.cutoff)?;
        f.metadata = j.metadata;
        Ok(f)
    }
}

impl FisherMatrix {
    /// Validates symmetry and positive semidefiniteness, then symmetrizes.
    pub fn new(entries: DMatrix<f64>, kind: FisherKind, cutoff: f64) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                found: entries.ncols(),
            });
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::NumericalGuard("Fisher matrix has non-finite entries".into()));
        }
        let scale = entries.amax().max(1.0);
        let asym = (&entries - entries.transpose()).amax();
        if asym > tol::FISHER_SYMMETRY * scale {
            return Err(Error::NumericalGuard(format!(
                "Fisher matrix is not symmetric (residual {asym:.3e})"
            )));
        }
        let entries = (&entries + entries.transpose()).scale(0.5);
        if entries.nrows() > 0 {
            let min = entries.clone().symmetric_eigenvalues().min();
            if min < -tol::FISHER_PSD * scale {
                return Err(Error::NumericalGuard(format!(
                    "Fisher matrix is not positive semidefinite (eigenvalue {min:.3e})"
                )));
            }
        }
        Ok(Self {
            entries,
            kind,
            cutoff,
            metadata: BTreeMap::new(),
        })
    }

    pub fn with_metadata(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.metadata.insert(key.into(), value.to_string());
        self
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn kind(&self) -> FisherKind {
        self.kind
    }

    pub fn d(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("Fisher matrix serializes")
    }
}

/// `Q_kl = 4 Re[⟨∂_kψ|∂_lψ⟩ − ⟨∂_kψ|ψ⟩⟨ψ|∂_lψ⟩]`.
pub fn qfim_pure(psi: &StateVector, dpsis: &[CVector]) -> Result<FisherMatrix> {
    for d in dpsis {
        if d.len() != psi.dim() {
            return Err(Error::DimensionMismatch {
                expected: psi.dim(),
                found: d.len(),
            });
        }
    }
    let amps = psi.amplitudes();
    let overlaps: Vec<C64> = dpsis.iter().map(|d| d.dotc(amps)).collect();
    let q = DMatrix::from_fn(dpsis.len(), dpsis.len(), |k, l| {
        4.0 * (dpsis[k].dotc(&dpsis[l]) - overlaps[k] * overlaps[l].conj()).re
    });
    FisherMatrix::new(q, FisherKind::Quantum, 0.0)
}

/// QFIM straight from the raw pure-state sums:
/// `Q_kl = t²/(N² sin² tμ) Re[⟨Ψ_k|Ψ_l⟩ − ⟨Ψ_k|ψ⟩⟨ψ|Ψ_l⟩]`.
pub fn qfim_pure_from_raw(psi: &StateVector, sums: &[PsiSum]) -> Result<FisherMatrix> {
    let Some(first) = sums.first() else {
        return FisherMatrix::new(DMatrix::zeros(0, 0), FisherKind::Quantum, 0.0);
    };
    if sums
        .iter()
        .any(|s| s.t != first.t || s.mu != first.mu || s.samples != first.samples)
    {
        return Err(Error::InvalidArgument(
            "raw sums come from different (t, mu, N) settings".into(),
        ));
    }
    for s in sums {
        if s.raw.len() != psi.dim() {
            return Err(Error::DimensionMismatch {
                expected: psi.dim(),
                found: s.raw.len(),
            });
        }
    }
    let amps = psi.amplitudes();
    let weight = 4.0 * first.prefactor().powi(2);
    let overlaps: Vec<C64> = sums.iter().map(|s| s.raw.dotc(amps)).collect();
    let q = DMatrix::from_fn(sums.len(), sums.len(), |k, l| {
        weight * (sums[k].raw.dotc(&sums[l].raw) - overlaps[k] * overlaps[l].conj()).re
    });
    Ok(FisherMatrix::new(q, FisherKind::Quantum, 0.0)?
        .with_metadata("t", first.t)
        .with_metadata("mu", first.mu)
        .with_metadata("N", first.samples))
}

fn check_drhos(rho: &DensityMatrix, drhos: &[CMatrix]) -> Result<()> {
    for d in drhos {
        if d.shape() != (rho.dim(), rho.dim()) {
            return Err(Error::DimensionMismatch {
                expected: rho.dim(),
                found: d.nrows(),
            });
        }
    }
    Ok(())
}

/// `Q_kl = 2 Σ ⟨λ|∂_kρ|λ'⟩⟨λ'|∂_lρ|λ⟩ / (p_λ + p_λ')` over eigenpairs with
/// `p_λ + p_λ' > cutoff`.
pub fn qfim_mixed(rho: &DensityMatrix, drhos: &[CMatrix], cutoff: f64) -> Result<FisherMatrix> {
    check_drhos(rho, drhos)?;
    let spec = rho.spectrum();
    let v = &spec.vectors;
    let rotated: Vec<CMatrix> = drhos.iter().map(|d| v.adjoint() * d * v).collect();
    let dim = rho.dim();
    let d = drhos.len();
    let mut q = DMatrix::zeros(d, d);
    for a in 0..dim {
        for b in 0..dim {
            let s = spec.values[a] + spec.values[b];
            if s <= cutoff {
                continue;
            }
            for k in 0..d {
                for l in 0..d {
                    q[(k, l)] += 2.0 * (rotated[k][(a, b)] * rotated[l][(b, a)]).re / s;
                }
            }
        }
    }
    FisherMatrix::new(q, FisherKind::Quantum, cutoff)
}

/// Symmetric logarithmic derivative, `⟨λ|L|λ'⟩ = 2⟨λ|∂ρ|λ'⟩/(p_λ + p_λ')`
/// on pairs above the cutoff and zero elsewhere.
pub fn sld(rho: &DensityMatrix, drho: &CMatrix, cutoff: f64) -> Result<HermitianOperator> {
    check_drhos(rho, std::slice::from_ref(drho))?;
    let spec = rho.spectrum();
    let v = &spec.vectors;
    let a = v.adjoint() * drho * v;
    let l = CMatrix::from_fn(rho.dim(), rho.dim(), |r, c| {
        let s = spec.values[r] + spec.values[c];
        if s > cutoff {
            a[(r, c)] * (2.0 / s)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    HermitianOperator::new(v * l * v.adjoint())
}

/// `F_kl = Σ_x ∂_kp(x) ∂_lp(x) / max(p(x), floor)`.
pub fn cfim(probs: &[f64], dprobs: &[Vec<f64>], floor: f64) -> Result<FisherMatrix> {
    if let Some(p) = probs.iter().find(|p| **p < -1e-10) {
        return Err(Error::InvalidArgument(format!("negative probability {p}")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "probabilities sum to {total}, not 1"
        )));
    }
    for dp in dprobs {
        if dp.len() != probs.len() {
            return Err(Error::DimensionMismatch {
                expected: probs.len(),
                found: dp.len(),
            });
        }
        let s: f64 = dp.iter().sum();
        if s.abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "probability derivatives sum to {s}, not 0"
            )));
        }
    }
    let d = dprobs.len();
    let f = DMatrix::from_fn(d, d, |k, l| {
        probs
            .iter()
            .enumerate()
            .map(|(x, p)| dprobs[k][x] * dprobs[l][x] / p.max(floor))
            .sum()
    });
    FisherMatrix::new(f, FisherKind::Classical, floor)
}

/// Outcome probabilities `⟨b|ρ|b⟩` and their derivatives `⟨b|∂ρ|b⟩` for the
/// projective measurement onto the orthonormal columns of `basis`.
pub fn projective_distribution(
    rho: &DensityMatrix,
    drhos: &[CMatrix],
    basis: &CMatrix,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    check_drhos(rho, drhos)?;
    if basis.shape() != (rho.dim(), rho.dim()) {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: basis.nrows(),
        });
    }
    let diag = |m: &CMatrix| -> Vec<f64> {
        let r = basis.adjoint() * m * basis;
        (0..rho.dim()).map(|k| r[(k, k)].re).collect()
    };
    Ok((diag(rho.matrix()), drhos.iter().map(diag).collect()))
}

/// `tr[F⁻¹]/M`. Near-singular matrices are reported with the direction of
/// the smallest eigenvalue.
pub fn crb(f: &FisherMatrix, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidArgument("measurement count M must be >= 1".into()));
    }
    let d = f.d();
    if d == 0 {
        return Err(Error::InvalidArgument("empty Fisher matrix".into()));
    }
    let eig = f.entries.clone().symmetric_eigen();
    let (imin, &min) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty spectrum");
    let max = eig.eigenvalues.max();
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(condition <= tol::MAX_CONDITION) {
        let dir: DVector<f64> = eig.eigenvectors.column(imin).into_owned();
        return Err(Error::SingularFisher {
            null_direction: dir.iter().copied().collect(),
            condition,
        });
    }
    Ok(eig.eigenvalues.iter().map(|v| 1.0 / v).sum::<f64>() / m as f64)
}
