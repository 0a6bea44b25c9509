//! Variational ground states of 1-D quantum wells.
//!
//! A small ReLU network is used as a trial wave function. Its output on a
//! midpoint grid is projected onto the first `N` particle-in-a-box
//! eigenstates, and the Rayleigh quotient of the truncated Hamiltonian in
//! that basis is minimized by gradient descent. Two independent eigensolvers
//! supply reference energies and states.

pub mod autodiff;
pub mod cli;
pub mod basis;
pub mod config;
pub mod error;
pub mod hamiltonian;
pub mod model;
pub mod oracle;
pub mod output;
pub mod projection;
pub mod trainer;

pub use basis::{BoxSystem, SpectralBasis};
pub use error::{Error, Result};
pub use hamiltonian::HamiltonianMatrix;
pub use model::{Architecture, MlpParams};
pub use trainer::{train, TrainConfig, TrainReport};
