//! Two-qubit X-state dynamics under the anisotropic Heisenberg Hamiltonian
//! with a uniform magnetic field.
//!
//! Closed-form propagators, evolved states and fidelities are paired with
//! an independent numerical route (matrix exponential and Jacobi
//! eigensolver) so that every closed form can be checked, see [`validate`].

#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod fidelity;
pub mod linalg;
pub mod model;
pub mod sampling;
pub mod states;
pub mod validate;

pub use error::{Error, Result};
pub use linalg::ComplexMatrix4;
pub use model::CouplingParams;
pub use states::{BlochVector, XState};
