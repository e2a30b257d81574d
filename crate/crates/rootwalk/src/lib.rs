//! Complex random walks on roots-of-unity lattices and the calculus of their
//! limit laws.
//!
//! The step distribution is uniform on α^{1/N}·{e^{2πik/N}}; the rescaled
//! walk W^n(t) = n^{-1/N} Σ_{k≤⌊nt⌋} ξ_k does not converge in law for N > 2,
//! but expectations of entire test functions do, and the limits solve the
//! N-th order heat-type equation ∂_t u = (α/N!) ∂^N u. This crate provides:
//!
//! - the walk itself with exact lattice laws at grid times ([`walk`]),
//! - power-series calculus for admissible test functions ([`series`]),
//! - exact moments, the asymptotic moment formula with its remainder bound,
//!   and characteristic functions ([`moments`]),
//! - exact/Monte-Carlo/limit-series routes to E[f(z+W^n(t))]
//!   ([`expectation`]),
//! - the generalized Itô integral and pathwise Itô formula ([`ito`]),
//! - series and probabilistic Cauchy-problem solvers with residual checks
//!   ([`pde`]),
//! - exponential functionals and the linear-potential Feynman-Kac formula
//!   ([`feynman_kac`]),
//! - exit times and stopped-expectation identities ([`stopping`]),
//! - the acceptance suite behind `rootwalk verify` ([`acceptance`]).
//!
//! Everything stochastic draws through a counter-based per-path seed
//! ([`rng`]), so results are reproducible for any worker count.

pub mod acceptance;
pub mod cnum;
pub mod error;
pub mod estimate;
pub mod expectation;
pub mod feynman_kac;
pub mod ito;
pub mod moments;
pub mod pde;
pub mod rng;
pub mod series;
pub mod stopping;
pub mod timefn;
pub mod walk;

pub use error::{Error, Result};
pub use estimate::{EstimateKind, EstimateWithError};
pub use series::{AtomicMeasure, PowerSeries, TruncationPolicy};
pub use timefn::TimeFn;
pub use walk::{LatticeDistribution, PathSample, StepValue, WalkSpec};
