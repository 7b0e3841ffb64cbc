//! Zero-fidelity simulation and estimation.
//!
//! Dense density-matrix simulation of small qubit registers, process fidelity
//! and zero-fidelity estimators, Clifford randomized benchmarking and identity
//! folding with decay fitting.

pub mod channel;
pub mod circuit;
pub mod error;
pub mod fidelity;
pub mod qstate;
pub mod rbfold;
pub mod rng;

pub use channel::{Channel, TwirlReport};
pub use circuit::{Circuit, Gate, GateKind, NoiseModel, PrepError, ReadoutConfusion, ShotResult};
pub use error::{Error, Result};
pub use fidelity::{Estimation, FidelityValue, IdealReference, StateSet};
pub use qstate::{ComplexMatrix, DensityMatrix, Pauli, PauliString, VectorizedOperator, C64};
pub use rbfold::{CliffordElement, DecayFit, PointRecord, RBSequence};
