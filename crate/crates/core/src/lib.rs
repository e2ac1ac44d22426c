//! Structure analysis for finite-dimensional quantum Markov semigroups.
//!
//! Given a GKSL (Lindblad) generator this crate computes the
//! decoherence-free subalgebra `N(T)`, its decomposition into type-I
//! factor blocks, the factorized decoherence-free / decoherence-affected
//! semigroups, the full structure of invariant states, an
//! environment-induced-decoherence certificate, and the list of
//! decoherence-free subsystems and subspaces.
//!
//! Start from [`gksl::GkslGenerator`] and [`report::analyze`], or see the
//! runnable programs under `examples/`.

pub mod algebra;
pub mod cli;
pub mod decoherence;
pub mod dfspaces;
pub mod error;
pub mod gksl;
pub mod linalg;
pub mod models;
pub mod report;
pub mod states;
pub mod structure;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, Tolerances, C64};
