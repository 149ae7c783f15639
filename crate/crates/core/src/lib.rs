//! Semiclassical Maxwell–Bloch simulation of light storage and retrieval in
//! a medium of three-level Λ atoms.

pub mod bloch;
pub mod cli_io;
pub mod diagnostics;
pub mod error;
pub mod model;
pub mod propagate;
pub mod scenarios;
pub mod soliton;
mod signal;

pub use error::{Error, Result};
pub use model::{AtomicState, FieldPair, PhysicalConfig, SimParams};
pub use propagate::{integrate, integrate_with, SimulationRecord};
pub use scenarios::{preset, PulseSpec};
pub use signal::unwrap_phase;
