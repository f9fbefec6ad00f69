//! Pricing engine for European-style and Bermudan options based on the
//! method of lines.
//!
//! The Black-Scholes PDE is discretised in space only, on a quasi-uniform
//! grid that concentrates nodes near the origin. The resulting linear ODE
//! system `dU/dτ = ζU + F` has constant coefficients, so each time interval
//! is solved exactly through the matrix exponential; no time stepping.
//! Bermudan early exercise enters as a nodewise `max` reset between
//! intervals. Delta, Gamma, Theta, Vega, and Rho come out in closed matrix
//! form at every grid node.
//!
//! Module map:
//! - [`grid`]: the truncated quasi-uniform spatial mesh.
//! - [`discretization`]: tridiagonal operators and the boundary vector.
//! - [`linalg`]: dense matrix exponential and banded solves.
//! - [`solver`]: interval solution and the Bermudan backward recursion.
//! - [`greeks`]: sensitivities in closed matrix form.
//! - [`oracles`]: independent reference prices (closed forms, lattice).

pub mod discretization;
pub mod greeks;
pub mod grid;
pub mod linalg;
pub mod oracles;
pub mod solver;

mod book;

pub use discretization::{
    build_boundary_vector, build_system, BoundaryVector, SystemMatrices, TridiagonalMatrix,
};
pub use greeks::{greeks_surface, GreeksSurface};
pub use grid::{build_mesh, GridSpec, Mesh};
pub use linalg::DenseMatrix;
pub use solver::{
    payoff_vector, solve_bermudan, solve_interval, value_at, MarketParams, OptionSpec, Payoff,
    ValueSurface,
};

/// Errors produced by the pricing engine.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid grid specification or a point outside the truncated domain.
    #[error("grid: {0}")]
    Grid(String),
    /// Operator assembly failed (zero spacing, inconsistent dimensions).
    #[error("discretization: {0}")]
    Discretization(String),
    /// Numerical linear algebra failure.
    #[error("linalg: {0}")]
    Linalg(String),
    /// Invalid option/market specification or report time.
    #[error("solver: {0}")]
    Solver(String),
    /// Invalid input to a reference oracle.
    #[error("oracle: {0}")]
    Oracle(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
