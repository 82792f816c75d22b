//! Deterministic rotor-router walks on Z^d.
//!
//! The walker carries no randomness: each site holds a rotor naming one of
//! the `2d` axis directions, the walker leaves a site along its rotor, and
//! the rotor then advances to the next direction in a fixed cyclic order.
//! The crate provides the walk engine, initial rotor configurations
//! (including a toward-origin configuration on Z^d), box-exit experiments,
//! rotor-router aggregation and a command line harness.

pub mod aggregation;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod lattice;
pub mod output;
pub mod rotor;

pub use config::{ConfigRule, ExplicitTable, RuleKind};
pub use error::{Error, Result};
pub use lattice::{unit_vector, Dimension, Direction, LatticeBox, LatticePoint};
pub use rotor::{
    snapshot_digest, ExitRecord, Region, RotorField, RotorOrder, Trajectory, WalkState,
};
