//! Optimal deterministic and probabilistic measurement of optical phase.
//!
//! The canonical phase measurement projects onto the (unnormalizable,
//! non-orthogonal) phase states |θ⟩ = Σₖ e^{iθk}|k⟩. For a pure state with
//! real non-negative Fock coefficients c_n the quality of phase encoding is
//! captured by the single parameter μ = Σ c_n c_{n+1}; the phase variance is
//! V = μ⁻² − 1.
//!
//! This crate computes
//!
//! - the optimal phase-encoding state in an (N+1)-dimensional Fock space
//!   ([`optimal_state`]),
//! - the optimal Fock-diagonal probabilistic filter F = diag(f₀, f₁, …) that
//!   maximizes μ of the filtered state at a prescribed success probability
//!   ([`filter_design`]),
//! - brute-force maximizers that validate both solvers independently
//!   ([`oracle`]),
//! - a seeded Monte-Carlo simulation of the canonical measurement
//!   ([`phase_sim`]).

pub mod filter_design;
pub mod fock;
pub mod optimal_state;
pub mod oracle;
pub mod phase_sim;
pub mod polyroot;

pub use filter_design::{FilterProblem, FilterSolution};
pub use fock::{Filter, FockVector, PhaseStats};
pub use optimal_state::OptimalStateSolution;
pub use oracle::OracleResult;
pub use phase_sim::SampleBatch;
pub use polyroot::RealPolynomial;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PhaseError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("filter annihilates the state (success probability below 1e-30)")]
    DegenerateFilter,
    #[error("state has a zero coefficient at index {0} below the filter threshold")]
    UnsupportedState(usize),
    #[error("no physical filter exists for probability {prob} with threshold up to {n_max}")]
    InfeasibleProbability { prob: f64, n_max: usize },
    #[error("internal numerical failure: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, PhaseError>;
