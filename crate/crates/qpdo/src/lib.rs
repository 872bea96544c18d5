//! Spectral solvers for digital pseudo-differential equations on the lattice
//! quadrant.
//!
//! The crate provides the discrete transform pair and Sobolev norms on a
//! cyclic lattice window, the periodic quadrant projector in spatial and
//! cotangent-kernel realizations, construction and certification of elliptic
//! periodic symbols with wave factorizations, the four boundary-value solvers
//! (unique solve, general solution, Dirichlet reduction, nonlocal conditions),
//! a discrete-versus-continuous convergence harness, and a dense kernel-matrix
//! oracle used to cross-check every spectral solver.

pub mod bridge;
pub mod catalog;
pub mod diff;
pub mod error;
pub mod grid;
pub mod oracle;
pub mod projector;
pub mod quad;
pub mod solver;
pub mod sobolev;
pub mod symbol;
pub mod transform;

pub use error::{QpdoError, Result};

// Re-export the array and complex types that appear in public signatures.
pub use ndarray;
pub use num_complex;
pub use grid::{GridFunction, LatticeGrid, QuadrantConvention, SpectrumFunction};
