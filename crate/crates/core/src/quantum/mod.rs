//! States, channels and distance measures over labelled tensor factors.

mod channel;
mod dims;
mod metrics;
mod state;

pub use channel::QuantumChannel;
pub use dims::SystemDims;
pub use metrics::{
    fidelity, generalized_fidelity, generalized_fidelity_matrix, purified_distance,
    purified_distance_matrix, root_fidelity_matrix, trace_distance,
};
pub use state::{DensityOperator, PureState};

use crate::error::Result;

pub fn tensor(a: &DensityOperator, b: &DensityOperator) -> Result<DensityOperator> {
    a.tensor(b)
}

pub fn partial_trace(rho: &DensityOperator, keep: &[&str]) -> Result<DensityOperator> {
    rho.partial_trace(keep)
}

/// Purification with purifier label `"P"` appended after the system.
pub fn purify(rho: &DensityOperator) -> Result<PureState> {
    rho.purify("P")
}

pub fn apply_channel(n: &QuantumChannel, rho: &DensityOperator) -> Result<DensityOperator> {
    n.apply(rho)
}

pub fn extend_to_reference(n: &QuantumChannel, phi: &PureState) -> Result<DensityOperator> {
    n.extend_to_reference(phi)
}
