//! Matrix means on the cone of symmetric positive definite matrices.
//!
//! The cone ℙ of SPD matrices carries the Thompson metric
//! `d(A, B) = ||log(A^{-1/2} B A^{-1/2})||` (spectral norm), under which it is
//! a complete metric space with geodesics given by weighted geometric means
//! `A #_t B`. This crate implements the calculus that lives on that space:
//!
//! - [`sym`], [`spd`]: dense symmetric matrix algebra, Jacobi
//!   eigendecomposition, matrix functions, Thompson distance, geodesics,
//!   logarithm/exponential maps and their Fréchet derivatives;
//! - [`measure`]: finitely supported probability measures on the cone and
//!   the exact L¹-Wasserstein distance between them;
//! - [`means`]: power means, the Karcher mean (the zero of the residual
//!   field `X ↦ Σ wᵢ log_X Aᵢ`), and the nonlinear resolvent it induces;
//! - [`flow`]: the semigroup solving `Ẋ = Σ wᵢ log_X Aᵢ` built by the
//!   exponential formula from iterated resolvents, approximating semigroups
//!   driven by a nonexpansive map, and Trotter products of two-point
//!   geodesic steps;
//! - [`lln`]: seeded sampling of SPD ensembles and law-of-large-numbers
//!   convergence experiments;
//! - [`verify`]: the contraction inequalities of the theory packaged as
//!   executable checks.
//!
//! Everything is deterministic: random draws are counter-based with explicit
//! seeds, and all iterative solvers report their final residual.

pub mod error;
pub mod flow;
pub mod io;
pub mod lln;
pub mod means;
pub mod measure;
pub mod rng;
pub mod spd;
pub mod sym;
mod transport;
pub mod verify;

pub use error::{Error, Result};
pub use means::{SolveReport, SolverConfig};
pub use measure::{Coupling, DiscreteMeasure};
pub use spd::{NormingState, SpdMatrix};
pub use sym::{EigenDecomposition, SymMatrix};
