//! Simulation of the quantum adiabatic algorithm for Diophantine equations on
//! truncated bosonic Fock spaces.
//!
//! Unknowns are encoded as occupation numbers. The system starts in the
//! coherent ground state of a displaced number operator and is steered
//! towards the diagonal Hamiltonian D(n)², whose ground state marks the
//! global minimum of the squared equation. A majority measurement then
//! yields a candidate, which is checked by substitution.

pub mod adiabatic;
pub mod error;
pub mod fockspace;
pub mod hamiltonian;
pub mod hubbard;
pub mod linalg;
pub mod oracle;
mod par;
pub mod polynomial;
pub mod stochastic;
pub mod verdict;

pub use error::{Error, Result};
pub use fockspace::{FockSpace, OperatorMatrix, QuantumState};
pub use hamiltonian::{ProblemInstance, Schedule, ScheduleShape, SymmetryBreak};
pub use polynomial::Polynomial;
