//! Polynomial multiple ergodic averages of Z^d actions on model systems with
//! exactly known structure: Bernoulli shifts (K-systems), fixed-point torus
//! rotations (zero entropy) and their products.
//!
//! The crate covers the weighted algebraic past of Z^d and its order
//! ([`lattice`]), integer polynomial families ([`polys`]), the model systems
//! ([`systems`]), exact conditional expectations on Bernoulli coordinates
//! ([`conditioning`]), the averaging engines ([`averaging`]) and convergence
//! diagnostics ([`diagnostics`]).

pub mod averaging;
pub mod conditioning;
pub mod diagnostics;
pub mod error;
pub mod lattice;
pub mod polys;
pub mod systems;

pub use error::{Error, Result};
