//! One-shot quantum rate-distortion toolkit.
//!
//! Smooth entropic quantities, distortion observables, converse and
//! achievability bounds, the entanglement-assisted rate-distortion function,
//! exact finite-blocklength formulas for the isotropic qubit source, and a
//! Monte Carlo simulation of the teleportation-based coding protocol.

pub mod bounds;
pub mod distortion;
pub mod entropies;
pub mod error;
pub mod io;
pub mod isotropic;
pub mod linalg;
pub mod protocol;
pub mod quantum;
pub mod random;
pub mod sdp;
pub mod validation;

pub use error::{Error, Result};
