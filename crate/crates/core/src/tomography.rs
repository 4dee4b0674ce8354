//! Hamiltonian tomography from quantum quenches.
//!
//! For `H = Σ_l x_l H_l`, energy conservation gives `tr[ρ₀H] = tr[ρ(t)H]` for
//! every initial state. Stacking the differences `X_kl = tr[ρ₀⁽ᵏ⁾H_l] −
//! tr[ρ⁽ᵏ⁾H_l]` over `p` initial states yields `X x = 0`, so the couplings are
//! the null direction of `X`. The information content of the protocol is
//! scored with `F_ij = Σ_kl (1/|X_kl|) ∂_iX_kl ∂_jX_kl`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::derivatives::{finite_difference_mixed, stoc_psr_mixed, StocConfig};
use crate::error::{Error, Result};
use crate::fisher::{FisherKind, FisherMatrix};
use crate::hamiltonian::{GeneratorSpec, Model, ParamHamiltonian};
use crate::qcore::{evolve, kron, max_abs, trace_product, CMatrix, DensityMatrix, HermitianOperator, StateVector, C64};
use crate::seeds::derive_seed;
use crate::tol;

/// Default floor below which `|X_kl|` cells are left out of the CFIM.
pub const DEFAULT_X_FLOOR: f64 = 1e-10;

/// Projectors onto `|0⟩`, `(|0⟩+|1⟩)/√2` and `(|0⟩+i|1⟩)/√2`.
pub fn ising2_generators() -> Vec<HermitianOperator> {
    ["projector:1,0", "projector:1,1", "projector:1,1j"]
        .iter()
        .map(|s| {
            s.parse::<GeneratorSpec>()
                .and_then(|g| g.build(1))
                .expect("fixed generator specs are valid")
        })
        .collect()
}

/// `(1, 1, 1)/√3`.
pub fn ising2_planted() -> DVector<f64> {
    DVector::from_element(3, 1.0 / 3f64.sqrt())
}

/// Haar-random pure product state on `n_qubits`, one uniform Bloch-sphere
/// point per qubit.
pub fn haar_product_state(n_qubits: usize, rng: &mut ChaCha8Rng) -> Result<DensityMatrix> {
    if n_qubits == 0 {
        return Err(Error::ZeroQubits);
    }
    let mut m = CMatrix::identity(1, 1);
    for _ in 0..n_qubits {
        let cos_theta: f64 = 2.0 * rng.gen::<f64>() - 1.0;
        let azimuth: f64 = std::f64::consts::TAU * rng.gen::<f64>();
        let half = cos_theta.clamp(-1.0, 1.0).acos() / 2.0;
        let psi = StateVector::from_slice(&[
            C64::new(half.cos(), 0.0),
            C64::from_polar(half.sin(), azimuth),
        ])?;
        m = kron(&m, &psi.projector());
    }
    DensityMatrix::new(m)
}

/// A planted Hamiltonian with `p` (initial, evolved) state pairs.
#[derive(Clone, Debug)]
pub struct QuenchInstance {
    model: ParamHamiltonian,
    true_x: DVector<f64>,
    t: f64,
    pairs: Vec<(DensityMatrix, DensityMatrix)>,
}

impl QuenchInstance {
    /// Evolves each initial state under `H = Σ x_l H_l` for time `t`.
    pub fn new(
        generators: Vec<HermitianOperator>,
        true_x: DVector<f64>,
        t: f64,
        initial: Vec<DensityMatrix>,
    ) -> Result<Self> {
        let model = ParamHamiltonian::unnamed(generators)?;
        if true_x.len() != model.n_params() {
            return Err(Error::ParameterLength {
                expected: model.n_params(),
                found: true_x.len(),
            });
        }
        let u = model.unitary(t, true_x.as_slice())?;
        let pairs = initial
            .into_iter()
            .map(|rho0| {
                let rhot = evolve(&u, &rho0)?;
                Ok((rho0, rhot))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            model,
            true_x,
            t,
            pairs,
        })
    }

    /// `p` Haar-random product initial states; pair `k` draws from ChaCha
    /// stream `k` of `seed`.
    pub fn haar(
        generators: Vec<HermitianOperator>,
        true_x: DVector<f64>,
        t: f64,
        p: usize,
        seed: u64,
    ) -> Result<Self> {
        let n = generators
            .first()
            .map(|g| crate::qcore::qubits_for_dim(g.dim()))
            .transpose()?
            .ok_or_else(|| Error::InvalidArgument("no generators".into()))?;
        let initial = (0..p)
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k as u64);
                haar_product_state(n, &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(generators, true_x, t, initial)
    }

    /// The single-qubit three-projector instance with couplings `(1,1,1)/√3`.
    pub fn ising2(t: f64, p: usize, seed: u64) -> Result<Self> {
        Self::haar(ising2_generators(), ising2_planted(), t, p, seed)
    }

    pub fn model(&self) -> &ParamHamiltonian {
        &self.model
    }

    pub fn generators(&self) -> &[HermitianOperator] {
        self.model.generators()
    }

    pub fn true_x(&self) -> &DVector<f64> {
        &self.true_x
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn pairs(&self) -> &[(DensityMatrix, DensityMatrix)] {
        &self.pairs
    }

    pub fn p(&self) -> usize {
        self.pairs.len()
    }

    pub fn d(&self) -> usize {
        self.model.n_params()
    }
}

/// `tr[ρ₀H] − tr[ρ_t H]`.
pub fn conservation_residual(rho0: &DensityMatrix, rhot: &DensityMatrix, h: &HermitianOperator) -> Result<f64> {
    if rho0.dim() != h.dim() || rhot.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: if rho0.dim() != h.dim() { rho0.dim() } else { rhot.dim() },
        });
    }
    Ok(trace_product(rho0.matrix(), h.matrix()).re - trace_product(rhot.matrix(), h.matrix()).re)
}

/// The `p × d` matrix of expectation differences.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuenchMatrix {
    pub entries: DMatrix<f64>,
}

impl QuenchMatrix {
    pub fn p(&self) -> usize {
        self.entries.nrows()
    }

    pub fn d(&self) -> usize {
        self.entries.ncols()
    }
}

pub fn build_x(instance: &QuenchInstance) -> Result<QuenchMatrix> {
    let gens = instance.generators();
    let mut entries = DMatrix::zeros(instance.p(), gens.len());
    for (k, (rho0, rhot)) in instance.pairs().iter().enumerate() {
        for (l, h) in gens.iter().enumerate() {
            entries[(k, l)] = conservation_residual(rho0, rhot, h)?;
        }
    }
    Ok(QuenchMatrix { entries })
}

/// Null direction of `X` and its quality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingEstimate {
    /// Unit vector; the largest-magnitude entry is positive.
    pub x_hat: DVector<f64>,
    /// Smallest singular value of `X`.
    pub residual: f64,
    /// Set when the second-smallest singular value is also negligible, so
    /// the null space is at least two-dimensional.
    pub degenerate: bool,
}

/// Solves `X x = 0` for a unit `x` by singular value decomposition.
pub fn solve_couplings(x: &QuenchMatrix) -> Result<CouplingEstimate> {
    let (p, d) = (x.p(), x.d());
    if d == 0 {
        return Err(Error::InvalidArgument("quench matrix has no columns".into()));
    }
    if p + 1 < d {
        return Err(Error::InvalidArgument(format!(
            "need at least d-1 = {} equations, got {p}",
            d - 1
        )));
    }
    // zero rows leave the null space unchanged but give a full set of
    // right-singular vectors when p < d
    let mut padded = DMatrix::zeros(p.max(d), d);
    padded.view_mut((0, 0), (p, d)).copy_from(&x.entries);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|a, b| svd.singular_values[*a].total_cmp(&svd.singular_values[*b]));
    let smallest = order[0];
    let mut x_hat: DVector<f64> = v_t.row(smallest).transpose();
    x_hat /= x_hat.norm();
    let imax = x_hat.iamax();
    if x_hat[imax] < 0.0 {
        x_hat = -x_hat;
    }
    let scale = svd.singular_values.max().max(1.0);
    let degenerate = order
        .get(1)
        .is_some_and(|&i| svd.singular_values[i] <= 1e-8 * scale);
    Ok(CouplingEstimate {
        x_hat,
        residual: svd.singular_values[smallest],
        degenerate,
    })
}

/// How `∂ρ⁽ᵏ⁾/∂x_j` is obtained for the tomography CFIM.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuenchDerivative {
    /// Stochastic shift rule; pair `k`, coupling `j` uses a seed derived
    /// from the configured one.
    Stoc(StocConfig),
    Fd { eps: f64 },
}

/// `F_ij = Σ_kl (1/|X_kl|) ∂_iX_kl ∂_jX_kl` with `∂_jX_kl = −tr[∂_jρ⁽ᵏ⁾ H_l]`,
/// skipping cells with `|X_kl| ≤ floor`.
pub fn quench_cfim(instance: &QuenchInstance, method: QuenchDerivative, floor: f64) -> Result<FisherMatrix> {
    let x = build_x(instance)?;
    let d = instance.d();
    let model = instance.model();
    let phi = instance.true_x().as_slice();
    let gens = instance.generators();

    let per_pair: Vec<Result<(DMatrix<f64>, usize)>> = instance
        .pairs()
        .par_iter()
        .enumerate()
        .map(|(k, (rho0, _))| {
            let drhos = (0..d)
                .map(|j| {
                    let est = match method {
                        QuenchDerivative::Stoc(cfg) => {
                            let cfg = StocConfig {
                                seed: derive_seed(cfg.seed, &[k as u64, j as u64]),
                                t: instance.t(),
                                ..cfg
                            };
                            stoc_psr_mixed(model, rho0, j, phi, &cfg, None)?
                        }
                        QuenchDerivative::Fd { eps } => {
                            finite_difference_mixed(model, rho0, j, phi, instance.t(), eps, None)?
                        }
                    };
                    Ok(est.matrix().expect("mixed derivative is a matrix").clone())
                })
                .collect::<Result<Vec<CMatrix>>>()?;
            let mut f = DMatrix::zeros(d, d);
            let mut used = 0;
            for (l, h) in gens.iter().enumerate() {
                let xkl = x.entries[(k, l)].abs();
                if xkl <= floor {
                    continue;
                }
                used += 1;
                let g = DVector::from_iterator(d, drhos.iter().map(|dr| -trace_product(dr, h.matrix()).re));
                f += (&g * g.transpose()) / xkl;
            }
            Ok((f, used))
        })
        .collect();

    let mut total = DMatrix::zeros(d, d);
    let mut used = 0;
    for r in per_pair {
        let (f, u) = r?;
        total += f;
        used += u;
    }
    if used == 0 {
        return Err(Error::NumericalGuard(format!(
            "every |X_kl| is below the floor {floor:e}; the quench carries no information"
        )));
    }
    let tag = match method {
        QuenchDerivative::Stoc(_) => "stoc",
        QuenchDerivative::Fd { .. } => "fd",
    };
    Ok(FisherMatrix::new(total, FisherKind::Classical, floor)?
        .with_metadata("method", tag)
        .with_metadata("p", instance.p())
        .with_metadata("cells", used))
}

/// Standard-quantum-limit and Heisenberg-limit reference values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub p: usize,
    pub sql: f64,
    pub hl: f64,
}

/// `c/p` and `c/p²` curves through `(p₀, anchor)`, where `p₀` is the first
/// entry of `ps`.
pub fn scaling_curves(ps: &[usize], anchor: f64) -> Result<Vec<ScalingPoint>> {
    let &p0 = ps
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty p range".into()))?;
    if ps.contains(&0) {
        return Err(Error::InvalidArgument("p must be positive".into()));
    }
    let p0 = p0 as f64;
    Ok(ps
        .iter()
        .map(|&p| {
            let r = p0 / p as f64;
            ScalingPoint {
                p,
                sql: anchor * r,
                hl: anchor * r * r,
            }
        })
        .collect())
}

/// Largest `|Xx|` row residual of the planted couplings.
pub fn planted_residual(instance: &QuenchInstance) -> Result<f64> {
    let x = build_x(instance)?;
    Ok((&x.entries * instance.true_x()).amax())
}

/// Checks that stored evolved states match `e^{−iHt}ρ₀e^{iHt}`.
pub fn check_instance(instance: &QuenchInstance) -> Result<()> {
    let u = instance.model().unitary(instance.t(), instance.true_x().as_slice())?;
    for (rho0, rhot) in instance.pairs() {
        let r = max_abs(&(u.conjugate_matrix(rho0.matrix()) - rhot.matrix()));
        if r > tol::UNITARY {
            return Err(Error::NumericalGuard(format!("evolved state off by {r:.3e}")));
        }
    }
    Ok(())
}
