//! Numerics for multi-dimensional split-step quantum walks with a one-defect coin.
//!
//! The walk acts on `ℓ²(Z^d; C^{2d})` as `U = S·C`, where `S` is a per-axis
//! split-step shift parameterized by `(p_j, q_j)` with `p_j² + |q_j|² = 1`, and
//! `C(x) = 2|χ(x)⟩⟨χ(x)| − 1` is a rank-one-reflection coin equal to a fixed
//! bulk matrix everywhere except at the origin (the defect).
//!
//! The crate is organized around the discriminant reduction: the coisometry
//! `d` (with `dd* = I`) compresses `U` to the self-adjoint contraction
//! `T = dSd*` on `ℓ²(Z^d)`, whose essential spectrum is the band
//! `[a_Φ − λ(q), a_Φ + λ(q)]` and whose gap eigenvalues are the zeros of a
//! scalar function `𝔣(λ)` computable by torus quadrature. Eigenvalues of `T`
//! lift to eigenvalues `e^{±i·arccos λ}` of `U`, which is how localization is
//! certified.
//!
//! Modules:
//! - [`model`] — parameters, coin schemes, derived scalars, admissibility checks;
//! - [`lattice`] — truncated boxes and state containers;
//! - [`evolution`] — the coin, shift, coisometry, and time evolution;
//! - [`discriminant`] — `T` and `T₀` as stencils, the band, and the
//!   truncated-matrix oracle eigensolver;
//! - [`analysis`] — `φ_q`, `𝔣(λ)`, zero finding, and the existence criteria;
//! - [`spectral`] — the unit-circle mapping, truncated-`U` verification, and
//!   report assembly;
//! - [`linalg`] — the dense Hermitian eigensolver and LU kernels the oracle
//!   and verifier run on.

pub mod analysis;
pub mod discriminant;
pub mod error;
pub mod evolution;
pub mod lattice;
pub mod linalg;
pub mod model;
pub mod spectral;

pub use error::{Error, Result};

/// Complex double — the scalar type of every amplitude in the crate.
pub type C64 = num_complex::Complex64;
