//! Numerical toolkit for positive Jordan triple systems (PJTS).
//!
//! The crate builds concrete simple PJTS from structure constants and
//! evaluates the objects attached to them: Peirce decompositions, Bergman
//! operators, the canonical kernel `c(x,y) = |det C(x,y)|`, the generic
//! minimal polynomial and the fundamental kernel `k`, the Bernstein-Sato
//! operators `D_s`, `E_s`, `M_k`, convergence thresholds of the intertwining
//! integral and the pole lattices of its meromorphic continuation.
//!
//! Every model is stored in real coordinates. Complex-structure models are
//! realified and carry their complex structure `J` explicitly.

pub mod analysis;
pub mod bernstein;
pub mod error;
pub mod jets;
pub mod kernels;
pub mod minpoly;
pub mod models;
pub mod operators;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
pub use models::{Case, Element, LinOp, ModelSpec, TripleSystem};
pub use num_complex::Complex64;
pub use num_rational::Rational64;
pub use spectral::CharacteristicData;
