//! Routes to the state derivative `∂ρ/∂φ_j` (or `∂|ψ⟩/∂φ_j`).
//!
//! * [`stoc_psr_mixed`] / [`stoc_psr_pure`]: the time-dependent stochastic
//!   parameter-shift rule, a Monte-Carlo integral over the split time `s`
//!   of shifted-gate circuit pairs.
//! * [`stand_psr_trotter`]: the standard parameter-shift rule applied to a
//!   Trotterised single-qubit evolution.
//! * [`finite_difference_pure`] / [`finite_difference_mixed`]: central
//!   differences of exact evolutions.
//! * [`exact_derivative_pure`] / [`exact_derivative_mixed`]: `−iU[Y_j, ρ₀]U†`
//!   with `Y_j` from quadrature.

mod fd;
mod shift;
mod stoc;
mod trotter;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{CMatrix, CVector};
use crate::tol;

pub use fd::{
    exact_derivative_mixed, exact_derivative_pure, finite_difference_mixed,
    finite_difference_pure,
};
pub use shift::{shift_commutator, shift_gate, shift_terms, ShiftTerm};
pub use stoc::{sample_time, stoc_psr_mixed, stoc_psr_pure, PsiSum};
pub use trotter::{stand_psr_trotter, trotter_unitary, DEFAULT_TROTTER_STEPS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Stoc,
    Stand,
    Fd,
    Exact,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Stoc => "stoc",
            Method::Stand => "stand",
            Method::Fd => "fd",
            Method::Exact => "exact",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "stoc" => Ok(Method::Stoc),
            "stand" => Ok(Method::Stand),
            "fd" => Ok(Method::Fd),
            "exact" => Ok(Method::Exact),
            other => Err(Error::InvalidArgument(format!("unknown method '{other}'"))),
        }
    }
}

/// How split times are drawn on `[0, t]`.
///
/// Both schemes give every sample the Monte-Carlo weight `t/N`.
/// `Stratified` draws sample `n` uniformly from the `n`-th of `N` equal
/// sub-intervals, which keeps the estimator unbiased while cutting its
/// variance for smooth integrands.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    Uniform,
    #[default]
    Stratified,
}

impl FromStr for Sampling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "uniform" => Ok(Sampling::Uniform),
            "stratified" => Ok(Sampling::Stratified),
            other => Err(Error::InvalidArgument(format!("unknown sampling scheme '{other}'"))),
        }
    }
}

/// Settings of one stochastic parameter-shift evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StocConfig {
    /// Number of split-time samples `N`.
    pub samples: usize,
    /// Parameter shift `μ` in radians; gates rotate by `tμ`.
    pub mu: f64,
    pub seed: u64,
    /// Interaction time.
    pub t: f64,
    #[serde(default)]
    pub sampling: Sampling,
}

impl StocConfig {
    pub fn new(samples: usize, mu: f64, seed: u64, t: f64) -> Self {
        Self {
            samples,
            mu,
            seed,
            t,
            sampling: Sampling::default(),
        }
    }

    pub fn with_sampling(mut self, sampling: Sampling) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Shift angle `tμ`.
    pub fn theta(&self) -> f64 {
        self.t * self.mu
    }

    fn validate_common(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::InvalidArgument("sample count N must be >= 1".into()));
        }
        if !self.t.is_finite() || !self.mu.is_finite() {
            return Err(Error::InvalidArgument("t and mu must be finite".into()));
        }
        Ok(())
    }

    /// The mixed-state rule divides by `sin(2tμ)`.
    pub fn validate_mixed(&self) -> Result<()> {
        self.validate_common()?;
        let sine = (2.0 * self.theta()).sin();
        if sine.abs() <= tol::SHIFT_POLE {
            return Err(Error::ShiftPole {
                theta: self.theta(),
                sine,
            });
        }
        Ok(())
    }

    /// The pure-state rule divides by `sin(tμ)`.
    pub fn validate_pure(&self) -> Result<()> {
        self.validate_common()?;
        let sine = self.theta().sin();
        if sine.abs() <= tol::SHIFT_POLE {
            return Err(Error::ShiftPole {
                theta: self.theta(),
                sine,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DerivativeValue {
    Matrix(CMatrix),
    Vector(CVector),
}

impl DerivativeValue {
    pub fn as_matrix(&self) -> Option<&CMatrix> {
        match self {
            DerivativeValue::Matrix(m) => Some(m),
            DerivativeValue::Vector(_) => None,
        }
    }

    pub fn as_vector(&self) -> Option<&CVector> {
        match self {
            DerivativeValue::Vector(v) => Some(v),
            DerivativeValue::Matrix(_) => None,
        }
    }

    /// Frobenius / Euclidean norm.
    pub fn norm(&self) -> f64 {
        match self {
            DerivativeValue::Matrix(m) => m.norm(),
            DerivativeValue::Vector(v) => v.norm(),
        }
    }
}

/// An estimate of `∂ρ/∂φ_j` or `∂|ψ⟩/∂φ_j` with its provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeEstimate {
    pub value: DerivativeValue,
    /// Per-entry standard error of the Monte-Carlo mean; the real and
    /// imaginary parts carry the errors of the respective components.
    pub std_error: Option<DerivativeValue>,
    pub method: Method,
    pub samples: Option<usize>,
    pub mu: Option<f64>,
    pub seed: Option<u64>,
}

impl DerivativeEstimate {
    pub(crate) fn deterministic(value: DerivativeValue, method: Method) -> Self {
        Self {
            value,
            std_error: None,
            method,
            samples: None,
            mu: None,
            seed: None,
        }
    }

    pub fn matrix(&self) -> Option<&CMatrix> {
        self.value.as_matrix()
    }

    pub fn vector(&self) -> Option<&CVector> {
        self.value.as_vector()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn config_poles() {
        assert!(StocConfig::new(10, FRAC_PI_4, 0, 1.0).validate_mixed().is_ok());
        assert!(matches!(
            StocConfig::new(10, FRAC_PI_2, 0, 1.0).validate_mixed(),
            Err(Error::ShiftPole { .. })
        ));
        // tμ = π/2 is fine for the pure rule, tμ = π is not
        assert!(StocConfig::new(10, FRAC_PI_2, 0, 1.0).validate_pure().is_ok());
        assert!(StocConfig::new(10, FRAC_PI_4, 0, 4.0).validate_pure().is_err());
        assert!(StocConfig::new(0, FRAC_PI_4, 0, 1.0).validate_pure().is_err());
    }

    #[test]
    fn method_tags_round_trip() {
        for m in [Method::Stoc, Method::Stand, Method::Fd, Method::Exact] {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("adjoint".parse::<Method>().is_err());
    }
}
