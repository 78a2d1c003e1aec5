//! Simulation and training of superposed parameterised quantum circuits.
//!
//! A superposed circuit runs `L = 2^m` variational branches in superposition:
//! an address register of `m` qubits indexes the branch parameter sets, each
//! branch acts on the data register, and post-selecting the data register on
//! `|0…0⟩` leaves the branch amplitudes `p_j` (or `p_j^r` with `r` replicas)
//! in the address register.
//!
//! Modules, bottom-up:
//!
//! - [`statevector`]: dense amplitudes, controlled gates, projection.
//! - [`circuit`], [`ansatz`], [`encoding`]: gate layouts and adjoint gradients.
//! - [`ffqram`]: address superposition and branch-conditioned unitaries.
//! - [`model`], [`pqc`]: the superposed model and its single-branch baseline.
//! - [`oracle`]: branch-by-branch reference used to certify [`model`].
//! - [`training`], [`datasets`], [`sampling`]: fitting, tasks, shot statistics.
//! - [`verify`]: self-check suites run by the command-line tool.

pub mod ansatz;
pub mod circuit;
pub mod datasets;
pub mod encoding;
pub mod error;
pub mod ffqram;
pub mod model;
pub mod oracle;
pub mod pqc;
pub mod sampling;
pub mod statevector;
pub mod training;
pub mod verify;

pub use error::{Result, SpqcError};
pub use model::{BranchAmplitudes, Model, SpqcModel, SpqcModelSpec};
pub use statevector::{Amplitude, StateVector};
