//! Classical simulator of the quantum random power method.
//!
//! The crate builds spin-model Hamiltonians as Pauli sums, filters them with
//! a Chebyshev polynomial, estimates matrix elements of the filtered operator
//! under exact, shot-noisy and Trotter-Fourier regimes, and runs the sparse
//! randomized power iteration whose per-step classical cost depends only on
//! the number of sampled rows and columns.

pub mod diagnostics;
pub mod engine;
pub mod error;
pub mod fejer;
pub mod filter;
pub mod harness;
pub mod model;
pub mod operator;
pub mod oracle;
pub mod rng;

pub use diagnostics::{fidelity_subspace, growing_rate, perturbation_report, weyl_audit, PerturbationReport};
pub use engine::{IterateState, RunTrace, StepSchedule};
pub use error::{Error, Result};
pub use fejer::FejerExpansion;
pub use filter::{FilterSpec, FilteredOperator};
pub use model::{exact_reference, Pauli, PauliHamiltonian, PauliString, SpectralReference};
pub use operator::{DenseHermitian, LinearOperator, StateVector};
pub use oracle::{ElementCache, ElementEstimate, ElementOracle, MatrixElements, Regime};

pub use num_complex::Complex64;
