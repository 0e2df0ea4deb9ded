//! Numerical toolkit for entanglement swapping over repeater chains that contain
//! one imperfect segment.
//!
//! The library covers:
//! - dense complex linear algebra for 1..4 qubit systems (`linalg`),
//! - resource-state constructors and noise channels (`states`),
//! - entanglement and teleportation-fidelity measures (`measures`),
//! - node measurements, swapping protocols, feasibility regions, and chain
//!   reductions (`protocols`),
//! - resource accounting for long chains (`resources`),
//! - closed-form robustness of the protocol under source and detector noise
//!   (`robustness`),
//! - serializable scenario descriptions shared with the CLI (`scenario`).

pub mod error;
pub mod linalg;
pub mod measures;
pub mod protocols;
pub mod resources;
pub mod robustness;
pub mod scenario;
pub mod states;

pub use error::{Error, Result};
pub use linalg::{CMat, DensityMatrix, Ket};
