//! Quantum discord, generalized conditional entropies and one-way information
//! deficits for qudit-qubit states, with exact ground states of finite XY spin
//! chains as the application driver.
//!
//! Module map:
//!
//! - [`statekit`]: density matrices, partial traces, Bloch/correlation-tensor decomposition
//! - [`entropy`]: von Neumann, quadratic, Tsallis and Renyi entropies; concurrence
//! - [`measurement`]: projective and rank-one POVM measurements on qubit B
//! - [`discord`]: discord, minimum conditional entropies, quadratic closed form
//! - [`deficit`]: information deficits, quadratic closed form, stationarity residual
//! - [`spinchain`]: XY chain Hamiltonians, parity-resolved ground states, factorization
//! - [`sweep`]: field sweeps and analytic reference limits written as CSV/JSON

// `!(x > 0.0)` style checks are used on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod deficit;
pub mod discord;
pub mod entropy;
pub mod error;
pub mod exec;
pub mod linalg;
pub mod measurement;
pub mod sample;
pub mod search;
pub mod spinchain;
pub mod statekit;
pub mod sweep;

pub use deficit::{deficit, quadratic_deficit_closed, renyi_deficit, stationarity_residual, DeficitResult, ResidualMode};
pub use discord::{conditional_entropy_min, discord, ellipsoid, quadratic_closed_form, Method, OptimizationResult};
pub use entropy::{concurrence, entanglement_of_formation, entropy, EntropyFunctional, PairEntanglement};
pub use error::{QcorrError, Result};
pub use exec::Execution;
pub use measurement::{MeasurementDirection, QubitPovm};
pub use search::SearchConfig;
pub use statekit::{BipartiteLayout, DensityMatrix, Keep};
