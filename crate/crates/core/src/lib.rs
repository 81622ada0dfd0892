//! Qudit unitary and state designs: constructions, frame-potential and Welch
//! tests, character randomized benchmarking, and SNAP/displacement circuits.

pub mod constructions;
pub mod error;
pub mod groups;
pub mod linalg;
pub mod metrics;
pub mod quadrature;
pub mod rb;
pub mod spin;

pub use error::{DesignError, Result};
