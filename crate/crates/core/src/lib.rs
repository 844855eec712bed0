//! Quadratic dynamical decoupling of a qubit coupled to a finite spin bath.

// Tensor contractions read more clearly with explicit indices.
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod evolution;
pub mod linalg;
pub mod magnus;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod scaling;
pub mod sequence;
pub mod symmetry;

pub use error::{Error, Result};
pub use linalg::{CMatrix, PauliAxis, C64};
pub use model::{
    build_hamiltonian, random_couplings, CouplingSet, HamiltonianParts, SymmetryClass, Topology,
};
pub use sequence::{qdd_schedule, switching_profile, PulseSchedule, SwitchingProfile};
