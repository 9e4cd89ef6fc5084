//! Loewner-order constrained covariance estimation for ODE discretization error.
//!
//! Discretization errors of a numerical ODE solution are modelled block-wise
//! with Wishart-distributed scatter matrices whose covariances grow in the
//! Loewner order. The maximum-likelihood fit is solved by dual block
//! coordinate ascent ([`solver`]); [`ode`] generates the Lorenz benchmark data
//! and [`quantify`] turns estimates into confidence ellipses and coverage
//! statistics.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]

extern crate alloc;

pub mod demo;
pub mod graph;
pub mod ode;
pub mod quantify;
pub mod solver;
pub mod sym;

pub use graph::{Edge, GraphError, OrderDag};
pub use solver::{ProblemInstance, SolveError, SolveOptions, SolveReport};
pub use sym::{LinalgError, SymMatrix};
