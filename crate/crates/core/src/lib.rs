//! Discretization maps, their tangent, higher-order and cotangent lifts, and
//! the symplectic integrators and optimal-control solvers built from them.

pub mod checks;
pub mod control;
pub mod error;
pub mod hamiltonian;
pub mod jets;
pub mod lifts;
pub mod maps;
pub mod numeric;
pub mod taylor;

pub use error::{Error, Result};
pub use numeric::{Matrix, Vector};
