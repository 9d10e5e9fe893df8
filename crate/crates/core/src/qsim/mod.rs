//! Statevector simulation of a single quantum neuron.

pub mod ansatz;
pub mod density;
pub mod gradient;
pub mod noise;
pub mod state;

pub use ansatz::{ansatz_apply, block_forward, block_state, encode, entangler_range, BlockParams};
pub use density::{block_forward_density, DensityMatrix, MAX_DENSITY_QUBITS};
pub use gradient::{adjoint_from_state, block_gradient, GradientMethod, GradientResult};
pub use noise::{block_forward_noisy, sample_shots, NoiseConfig};
pub use state::{Gate, Pauli, StateVector};
