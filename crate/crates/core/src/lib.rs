//! Exact, desk-scale toolkit for permutation-symmetric quantum channels.
//!
//! The crate builds universal cloning and measure-and-prepare channels on
//! symmetric subspaces of qudits, checks the loss-plus-cloning mixture
//! decomposition of the measure-and-prepare channel, computes certified
//! diamond-norm distances with a built-in semidefinite solver, and evaluates
//! finite de Finetti and capacity bounds for symmetric broadcast channels.
//!
//! Module map:
//!
//! - [`combinat`]: exact binomials, the loss distribution `p_s`, estimation
//!   fidelities, analytic distance bounds and the supporting identities.
//! - [`symspace`]: occupation-number bases, embeddings, symmetrizers,
//!   coherent-state amplitudes and partial traces.
//! - [`channels`]: channels between symmetric subspaces as Choi matrices.
//! - [`diamond`]: trace norms, see-saw lower bounds and SDP upper bounds.
//! - [`definetti`]: de Finetti approximations for states and broadcast channels.
//! - [`capacity`]: quantum-capacity bounds for k-receiver restrictions.
//! - [`cli`]: batch front end used by the `symclone` binary.

pub mod capacity;
pub mod channels;
pub mod cli;
pub mod combinat;
pub mod definetti;
pub mod diamond;
mod error;
pub mod linalg;
pub mod symspace;

pub use error::{Error, Result};

/// Default algebraic tolerance for Hermiticity, positivity and trace checks.
pub const TAU_ALG: f64 = 1e-10;

/// Default numerical slack when comparing computed distances with bounds.
pub const TAU_NUM: f64 = 1e-6;
