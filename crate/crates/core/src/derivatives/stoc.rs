use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::shift::{shift_gate, shift_terms};
use super::{DerivativeEstimate, DerivativeValue, Method, Sampling, StocConfig};
use crate::error::{Error, Result};
use crate::hamiltonian::Model;
use crate::noise::KrausChannel;
use crate::qcore::{CMatrix, CVector, DensityMatrix, StateVector, C64};

/// Samples per work item. Partial sums are merged in chunk order, so the
/// result does not depend on how many threads ran the chunks.
const CHUNK: usize = 64;

/// Split time of sample `n`. Each sample owns the ChaCha stream `n` of the
/// configured seed, so draws are independent of evaluation order.
pub fn sample_time(cfg: &StocConfig, n: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(n as u64);
    let u: f64 = rng.gen();
    match cfg.sampling {
        Sampling::Uniform => u * cfg.t,
        Sampling::Stratified => (n as f64 + u) * cfg.t / cfg.samples as f64,
    }
}

/// Running first and second moments of matrix-valued samples.
struct Moments {
    sum: CMatrix,
    sq_re: DMatrix<f64>,
    sq_im: DMatrix<f64>,
}

impl Moments {
    fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            sum: CMatrix::zeros(rows, cols),
            sq_re: DMatrix::zeros(rows, cols),
            sq_im: DMatrix::zeros(rows, cols),
        }
    }

    fn push(&mut self, x: &CMatrix) {
        self.sum += x;
        for (k, z) in x.iter().enumerate() {
            self.sq_re[k] += z.re * z.re;
            self.sq_im[k] += z.im * z.im;
        }
    }

    fn merge(mut self, other: Moments) -> Self {
        self.sum += other.sum;
        self.sq_re += other.sq_re;
        self.sq_im += other.sq_im;
        self
    }

    /// Mean and per-entry standard error of the mean.
    fn finish(self, n: usize) -> (CMatrix, Option<CMatrix>) {
        let nf = n as f64;
        let mean = self.sum.unscale(nf);
        if n < 2 {
            return (mean, None);
        }
        let se = CMatrix::from_fn(mean.nrows(), mean.ncols(), |r, c| {
            let m = mean[(r, c)];
            let var_re = ((self.sq_re[(r, c)] - nf * m.re * m.re) / (nf - 1.0)).max(0.0);
            let var_im = ((self.sq_im[(r, c)] - nf * m.im * m.im) / (nf - 1.0)).max(0.0);
            C64::new((var_re / nf).sqrt(), (var_im / nf).sqrt())
        });
        (mean, Some(se))
    }
}

fn monte_carlo<F>(cfg: &StocConfig, rows: usize, cols: usize, sample: F) -> Moments
where
    F: Fn(f64) -> CMatrix + Sync,
{
    let n = cfg.samples;
    let partials: Vec<Moments> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut m = Moments::zeros(rows, cols);
            for k in chunk * CHUNK..((chunk + 1) * CHUNK).min(n) {
                m.push(&sample(sample_time(cfg, k)));
            }
            m
        })
        .collect();
    partials
        .into_iter()
        .fold(Moments::zeros(rows, cols), Moments::merge)
}

/// Shifted gate pair `e^{∓itμ O}` and the coefficient of `O` in `∂_j H`.
struct GatePair {
    coeff: f64,
    plus: CMatrix,
    minus: CMatrix,
}

fn gate_pairs(model: &dyn Model, j: usize, phi: &[f64], theta: f64) -> Result<Vec<GatePair>> {
    let dh = model.deriv_generator(j, phi)?;
    Ok(shift_terms(&dh)?
        .into_iter()
        .map(|term| GatePair {
            coeff: term.coeff,
            plus: shift_gate(&term.op, theta),
            minus: shift_gate(&term.op, -theta),
        })
        .collect())
}

/// Stochastic parameter-shift estimate of `∂ρ(φ)/∂φ_j` for
/// `ρ(φ) = U(t,φ) ρ₀ U(t,φ)†`.
///
/// Each sample draws `s ∈ [0, t]` and prepares
/// `ρ± = U(t−s) e^{∓itμ ∂_jH} U(s) ρ₀ U(s)† e^{±itμ ∂_jH} U(t−s)†`;
/// the estimate is `t/(N sin 2tμ) Σ (ρ⁺ − ρ⁻)`. When `∂_jH` does not square
/// to the identity, each of its Pauli words gets its own gate pair and the
/// contributions are summed with their coefficients.
///
/// With a channel, the readout noise acts on `ρ⁺` and `ρ⁻` alike. It is
/// linear and `φ`-independent, so it is applied once to `ρ⁺ − ρ⁻`.
pub fn stoc_psr_mixed(
    model: &dyn Model,
    rho0: &DensityMatrix,
    j: usize,
    phi: &[f64],
    cfg: &StocConfig,
    channel: Option<&KrausChannel>,
) -> Result<DerivativeEstimate> {
    cfg.validate_mixed()?;
    check_dim(model, rho0.dim())?;
    let theta = cfg.theta();
    let pairs = gate_pairs(model, j, phi, theta)?;
    let spectrum = model.assemble(phi)?.spectrum();
    let t = cfg.t;
    let weight = t / (2.0 * theta).sin();
    let dim = rho0.dim();
    let rho0 = rho0.matrix();

    let channel_failed = std::sync::atomic::AtomicBool::new(false);
    let moments = monte_carlo(cfg, dim, dim, |s| {
        let us = spectrum.exp_neg_i(s);
        let ut = spectrum.exp_neg_i(t - s);
        let ut_dag = ut.adjoint();
        let sigma = &us * rho0 * us.adjoint();
        let mut diff = CMatrix::zeros(dim, dim);
        for p in &pairs {
            let rho_plus = &ut * (&p.plus * &sigma * p.plus.adjoint()) * &ut_dag;
            let rho_minus = &ut * (&p.minus * &sigma * p.minus.adjoint()) * &ut_dag;
            diff += (rho_plus - rho_minus).scale(p.coeff);
        }
        if let Some(ch) = channel {
            match ch.apply_all_matrix(&diff) {
                Ok(noisy) => diff = noisy,
                Err(_) => channel_failed.store(true, std::sync::atomic::Ordering::Relaxed),
            }
        }
        diff.scale(weight)
    });
    if channel_failed.into_inner() {
        return Err(Error::InvalidArgument("channel does not fit the register".into()));
    }
    let (mean, se) = moments.finish(cfg.samples);
    Ok(DerivativeEstimate {
        value: DerivativeValue::Matrix(mean),
        std_error: se.map(DerivativeValue::Matrix),
        method: Method::Stoc,
        samples: Some(cfg.samples),
        mu: Some(cfg.mu),
        seed: Some(cfg.seed),
    })
}

/// Raw sum `|Ψ⟩ = Σ_n Σ_w c_w (|ψ⁺_n⟩ − |ψ⁻_n⟩)` from the pure-state rule,
/// kept with the sampling settings it came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiSum {
    pub raw: CVector,
    pub t: f64,
    pub mu: f64,
    pub samples: usize,
}

impl PsiSum {
    /// `t / (2N sin tμ)`, turning the raw sum into `∂|ψ⟩` .
    pub fn prefactor(&self) -> f64 {
        self.t / (2.0 * self.samples as f64 * (self.t * self.mu).sin())
    }

    pub fn derivative(&self) -> CVector {
        self.raw.scale(self.prefactor())
    }
}

/// Pure-state stochastic parameter-shift estimate of `∂|ψ(φ)⟩/∂φ_j`.
///
/// `|ψ±⟩ = U(t−s) e^{∓itμ ∂_jH} U(s)|ψ₀⟩` and the estimate is
/// `t/(2N sin tμ) Σ (|ψ⁺⟩ − |ψ⁻⟩)`. The raw sum is returned alongside.
pub fn stoc_psr_pure(
    model: &dyn Model,
    psi0: &StateVector,
    j: usize,
    phi: &[f64],
    cfg: &StocConfig,
) -> Result<(DerivativeEstimate, PsiSum)> {
    cfg.validate_pure()?;
    check_dim(model, psi0.dim())?;
    let theta = cfg.theta();
    let pairs = gate_pairs(model, j, phi, theta)?;
    let spectrum = model.assemble(phi)?.spectrum();
    let t = cfg.t;
    let dim = psi0.dim();
    let psi0 = CMatrix::from_column_slice(dim, 1, psi0.amplitudes().as_slice());

    let moments = monte_carlo(cfg, dim, 1, |s| {
        let us = spectrum.exp_neg_i(s);
        let ut = spectrum.exp_neg_i(t - s);
        let a = &us * &psi0;
        let mut diff = CMatrix::zeros(dim, 1);
        for p in &pairs {
            diff += (&ut * (&p.plus * &a) - &ut * (&p.minus * &a)).scale(p.coeff);
        }
        diff
    });
    let raw = CVector::from_column_slice(moments.sum.as_slice());
    let psi_sum = PsiSum {
        raw,
        t,
        mu: cfg.mu,
        samples: cfg.samples,
    };
    let (_, se) = moments.finish(cfg.samples);
    // per-sample value is t/(2 sin tμ)·diff, so its standard error scales alike
    let per_sample = t / (2.0 * theta.sin());
    let se = se.map(|m| {
        DerivativeValue::Vector(CVector::from_iterator(
            dim,
            m.iter().map(|z| C64::new(z.re * per_sample.abs(), z.im * per_sample.abs())),
        ))
    });
    Ok((
        DerivativeEstimate {
            value: DerivativeValue::Vector(psi_sum.derivative()),
            std_error: se,
            method: Method::Stoc,
            samples: Some(cfg.samples),
            mu: Some(cfg.mu),
            seed: Some(cfg.seed),
        },
        psi_sum,
    ))
}

fn check_dim(model: &dyn Model, dim: usize) -> Result<()> {
    if model.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: dim,
        });
    }
    Ok(())
}
