//! Angle encoding, the strongly-entangling ansatz and the noiseless block map.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::state::{mat_mul, ry_matrix, rz_matrix, Mat2, StateVector, C64};
use crate::error::{Error, Result};

/// Trainable angles of one block, laid out `[layer][wire][(omega, theta, phi)]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockParams {
    q: usize,
    k: usize,
    angles: Vec<f64>,
}

impl BlockParams {
    pub fn new(q: usize, k: usize, angles: Vec<f64>) -> Result<Self> {
        if q == 0 || k == 0 {
            return Err(Error::invalid(format!("block needs q >= 1 and K >= 1, got q={q} K={k}")));
        }
        if angles.len() != Self::len_for(q, k) {
            return Err(Error::Shape {
                what: "block angles",
                expected: Self::len_for(q, k),
                got: angles.len(),
            });
        }
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("block angles"));
        }
        Ok(BlockParams { q, k, angles })
    }

    pub fn zeros(q: usize, k: usize) -> Self {
        Self::new(q, k, vec![0.0; Self::len_for(q, k)]).expect("valid shape")
    }

    /// Angles drawn i.i.d. from U[0, 2pi).
    pub fn random<R: Rng + ?Sized>(q: usize, k: usize, rng: &mut R) -> Self {
        let angles = (0..Self::len_for(q, k)).map(|_| rng.random::<f64>() * TAU).collect();
        Self::new(q, k, angles).expect("valid shape")
    }

    pub const fn len_for(q: usize, k: usize) -> usize {
        3 * q * k
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn depth(&self) -> usize {
        self.k
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn angles_mut(&mut self) -> &mut [f64] {
        &mut self.angles
    }

    /// `(omega, theta, phi)` of wire `j` in layer `layer`.
    #[inline]
    pub fn rotation(&self, layer: usize, j: usize) -> (f64, f64, f64) {
        let i = 3 * (layer * self.q + j);
        (self.angles[i], self.angles[i + 1], self.angles[i + 2])
    }
}

/// Entangler range of 0-based layer `layer` on `q >= 2` wires.
pub fn entangler_range(layer: usize, q: usize) -> usize {
    debug_assert!(q >= 2);
    layer % (q - 1) + 1
}

/// `RZ(omega) RY(theta) RZ(phi)`.
pub fn euler_matrix(omega: f64, theta: f64, phi: f64) -> Mat2 {
    mat_mul(&rz_matrix(omega), &mat_mul(&ry_matrix(theta), &rz_matrix(phi)))
}

fn check_features(features: &[f64]) -> Result<()> {
    if features.is_empty() {
        return Err(Error::invalid("encoding needs at least one feature"));
    }
    if features.iter().any(|h| !h.is_finite()) {
        return Err(Error::NonFinite("features"));
    }
    Ok(())
}

/// Product state `RY(h_0)|0> x ... x RY(h_{q-1})|0>`.
pub fn encode(features: &[f64]) -> Result<StateVector> {
    check_features(features)?;
    let q = features.len();
    let half: Vec<(f64, f64)> = features.iter().map(|h| (h / 2.0).sin_cos()).collect();
    let amps = (0..1usize << q)
        .map(|i| {
            let mut a = 1.0;
            for (w, &(s, c)) in half.iter().enumerate() {
                a *= if i & (1 << (q - 1 - w)) != 0 { s } else { c };
            }
            C64::new(a, 0.0)
        })
        .collect();
    StateVector::from_amplitudes(q, amps)
}

/// Rotations of layer `layer` on every wire, reading `[layer][wire][3]` angles.
pub(crate) fn apply_rotations(state: &mut StateVector, angles: &[f64], layer: usize) {
    let q = state.n_qubits();
    for j in 0..q {
        let i = 3 * (layer * q + j);
        state.apply_1q(j, &euler_matrix(angles[i], angles[i + 1], angles[i + 2]));
    }
}

/// Full ansatz from a raw angle slice of length `3 * q * depth`.
pub(crate) fn evolve(state: &mut StateVector, angles: &[f64], depth: usize) {
    debug_assert_eq!(angles.len(), 3 * state.n_qubits() * depth);
    for layer in 0..depth {
        apply_rotations(state, angles, layer);
        apply_entanglers(state, layer);
    }
}

/// CNOT ring of layer `layer`; a no-op on one wire.
pub(crate) fn apply_entanglers(state: &mut StateVector, layer: usize) {
    let q = state.n_qubits();
    if q < 2 {
        return;
    }
    let r = entangler_range(layer, q);
    for j in 0..q {
        state.apply_cnot(j, (j + r) % q);
    }
}

/// Inverse of `apply_entanglers`: the same CNOTs in reverse order.
pub(crate) fn undo_entanglers(state: &mut StateVector, layer: usize) {
    let q = state.n_qubits();
    if q < 2 {
        return;
    }
    let r = entangler_range(layer, q);
    for j in (0..q).rev() {
        state.apply_cnot(j, (j + r) % q);
    }
}

pub(crate) fn check_params(state_q: usize, params: &BlockParams) -> Result<()> {
    if params.q != state_q {
        return Err(Error::Shape {
            what: "block params qubits",
            expected: state_q,
            got: params.q,
        });
    }
    Ok(())
}

pub fn ansatz_apply(state: &mut StateVector, params: &BlockParams) -> Result<()> {
    check_params(state.n_qubits(), params)?;
    evolve(state, &params.angles, params.k);
    Ok(())
}

pub(crate) fn check_n_out(n_out: usize, q: usize) -> Result<()> {
    if n_out == 0 || n_out > q {
        return Err(Error::invalid(format!("n_out must be in 1..={q}, got {n_out}")));
    }
    Ok(())
}

/// Encoded and evolved state, before readout.
pub fn block_state(features: &[f64], params: &BlockParams) -> Result<StateVector> {
    let mut state = encode(features)?;
    ansatz_apply(&mut state, params)?;
    Ok(state)
}

/// `<Z_j>` for `j < n_out` after encoding `features` and running the ansatz.
pub fn block_forward(features: &[f64], params: &BlockParams, n_out: usize) -> Result<Vec<f64>> {
    check_n_out(n_out, features.len())?;
    Ok(block_state(features, params)?.leading_z(n_out))
}
