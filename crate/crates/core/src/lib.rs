//! Few-qubit simulation and estimation toolkit built around the
//! time-dependent stochastic parameter-shift rule.
//!
//! The crate covers exact evolution under generic Hamiltonians
//! `H(φ) = Σ_j φ_j H_j`, three independent routes to the state derivative
//! `∂ρ/∂φ_j` (stochastic shift rule, Trotterised standard shift rule, central
//! differences), quantum and classical Fisher information with Cramér-Rao
//! bounds, Markovian dephasing, and quench-based Hamiltonian tomography.

pub mod derivatives;
pub mod error;
pub mod experiments;
pub mod fisher;
pub mod hamiltonian;
pub mod noise;
pub mod qcore;
pub mod seeds;
pub mod tol;
pub mod tomography;

pub use error::{Error, Result};
