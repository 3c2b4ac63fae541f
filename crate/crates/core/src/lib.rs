//! # entcost
//!
//! Finite-truncation numerics for entanglement cost of bipartite states:
//!
//! - [`spectra`]: density operators, pure bipartite states, Schmidt decomposition,
//!   partial trace, trace distance, ensembles.
//! - [`typicality`]: weakly/strongly typical sets over finite alphabets with exact
//!   type-class masses and a Monte Carlo fallback.
//! - [`entropy`]: von Neumann entropy, `h2`, `g`, the tail-sum family `chi_tilde`,
//!   and the integral representation of entropy (closed form and quadrature).
//! - [`gibbs`]: grounded diagonal Hamiltonians, Gibbs states, `F_H(E)`, the one-sided
//!   continuity bound, the series-weights construction and associated Hamiltonians.
//! - [`majorization`]: product-Kraus instruments, Schur–Horn and tail-sum operator
//!   inequalities, the majorization condition and entropy monotonicity checks.
//! - [`eof`]: entanglement of formation, exact for pure states and a convex-roof
//!   upper bound for mixed states.
//! - [`dilution`]: rate/error accounting of dilution protocols and the converse chain.
//!
//! Every object that stands in for an infinite-dimensional one carries an explicit
//! truncation (`tail_mass`, tail model or dimension) and reports its contribution.
//! All entropies are in bits; energies are in natural-log units.

#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dilution;
pub mod entropy;
pub mod eof;
pub mod error;
pub mod gibbs;
pub mod linalg;
pub mod majorization;
pub mod rng;
pub mod sampling;
pub mod spectra;
pub mod typicality;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, C64};
pub use spectra::{BipartiteState, Ensemble, Member, PureBipartite, Spectrum, Subsystem};
