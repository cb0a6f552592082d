//! Numerical core for a proposer-builder order-flow auction model:
//! builders' bidding game (closed-form and iterated-best-response
//! equilibrium solvers) and validators' stake-share dynamics under
//! repeated rewards with operating costs, plus an executable
//! verification harness.

pub mod equilibrium;
pub mod error;
pub mod game;
pub mod quartic;
pub mod seed;
pub mod stake;
pub mod verify;

pub use error::{Error, Result};
