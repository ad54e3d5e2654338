//! Exact simulation and resource accounting for |Y_k⟩ magic-state distillation.
//!
//! The crate is organized around the distillation protocol for the family of
//! states |Y_k⟩ = cos(θ_k/2)|0⟩ + sin(θ_k/2)|1⟩ with θ_k = 2π/2^k:
//!
//! - [`qsim`]: dense complex linear algebra and density-matrix simulation for
//!   up to five qubits, the magic-state basis, and the standard gate set.
//! - [`codes`]: symbolic Pauli algebra, the `[[4,2,2]]` / `[[2m+2,2m,2]]`
//!   error-detecting codes, fault propagation through the controlled-SWAP
//!   gadget, and the post-selected stochastic noise map Γ.
//! - [`noise`]: the (ε, Δ) error calculus — error amplitude vectors, their
//!   product, the W_k cascade vector, and twirling.
//! - [`distill`]: the exact distillation round, its full five-qubit oracle,
//!   and the leading-order estimators.
//! - [`schedule`]: cost recursion, distillation schedules, optimal-m
//!   selection, and rotation overhead.
//! - [`synth`]: Euler decomposition, dyadic expansion, and the adaptive
//!   sign-corrected executor for arbitrary rotations.

pub mod codes;
pub mod distill;
pub mod error;
pub mod noise;
pub mod qsim;
pub mod schedule;
pub mod synth;

pub use error::Error;
pub use noise::{ErrorVector, NoiseParams};
pub use qsim::{ComplexMatrix, DensityMatrix, MagicBasis};
pub use schedule::{CostEntry, CostTable, ScheduleConfig};

/// Convenient result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
