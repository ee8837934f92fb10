//! Coagulation–fragmentation dynamics of animal group sizes.
//!
//! Discrete Model D (size classes i = 1, 2, …, merge rate 2, split rate
//! 2/(i+j+1)) and continuum Model C, the latter handled entirely in
//! Bernstein-transform space. The crate provides:
//!
//! * exact and asymptotic evaluation of the universal continuum equilibrium
//!   profile f★ and its transforms U★, B₃ ([`continuum_profile`]);
//! * the ν₀-driven recursion for Model D equilibria, the exponential cutoff
//!   λ_μ and the completely monotone rescaled sequence γ_μ ([`equilibrium_d`]);
//! * RK4 time integration of the truncated Model D system with exact
//!   lost-mass bookkeeping ([`dynamics_d`]);
//! * the implicit–explicit scheme for the Bernstein evolution equation
//!   ∂ₜU = −U² − U + 2A(U) ([`bernstein_evolution`]);
//! * the discrete-to-continuum study on a grid of width h, ghost clusters
//!   and Figure-2 data ([`disc2cont`]);
//! * a CLI front end emitting deterministic CSV/JSON ([`cli`]).

pub mod bernstein_evolution;
pub mod cli;
pub mod continuum_profile;
pub mod disc2cont;
pub mod dynamics_d;
pub mod equilibrium_d;
pub mod measures;
pub mod quad;
pub mod special;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A runtime numerical invariant failed (positivity, monotonicity, …).
    #[error("numerical invariant violated: {0}")]
    Invariant(String),
    /// Quadrature failed to reach the requested tolerance.
    #[error("quadrature did not converge: achieved {achieved:e}, requested {requested:e}")]
    QuadratureNonconvergence { achieved: f64, requested: f64 },
    /// Configuration / CLI errors.
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
