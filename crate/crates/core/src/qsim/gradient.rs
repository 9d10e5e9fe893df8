//! Exact block gradients: adjoint differentiation and the parameter-shift rule.
//!
//! Both return `d(u . f(h))/d(theta)` and `d(u . f(h))/dh` for an upstream
//! vector `u` over the measured wires.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::ansatz::{
    block_forward, block_state, check_n_out, check_params, undo_entanglers, BlockParams,
};
use super::state::{contract_re, dagger, mat_mul, ry_matrix, rz_matrix, Mat2, StateVector, C64};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GradientMethod {
    #[default]
    Adjoint,
    ParameterShift,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradientResult {
    /// Same layout as `BlockParams::angles`.
    pub d_params: Vec<f64>,
    pub d_inputs: Vec<f64>,
}

pub fn block_gradient(
    features: &[f64],
    params: &BlockParams,
    upstream: &[f64],
    method: GradientMethod,
) -> Result<GradientResult> {
    check_n_out(upstream.len(), features.len())?;
    match method {
        GradientMethod::Adjoint => {
            let state = block_state(features, params)?;
            adjoint_from_state(features, params, upstream, state)
        }
        GradientMethod::ParameterShift => parameter_shift(features, params, upstream),
    }
}

const MINUS_HALF_I: C64 = C64::new(0.0, -0.5);

/// `(-i/2) Z A`
fn half_z_left(a: &Mat2) -> Mat2 {
    [a[0] * MINUS_HALF_I, a[1] * MINUS_HALF_I, -a[2] * MINUS_HALF_I, -a[3] * MINUS_HALF_I]
}

/// `A (-i/2) Z`
fn half_z_right(a: &Mat2) -> Mat2 {
    [a[0] * MINUS_HALF_I, -a[1] * MINUS_HALF_I, a[2] * MINUS_HALF_I, -a[3] * MINUS_HALF_I]
}

fn ry_derivative(angle: f64) -> Mat2 {
    let (s, c) = (angle / 2.0).sin_cos();
    [
        C64::new(-0.5 * s, 0.0),
        C64::new(-0.5 * c, 0.0),
        C64::new(0.5 * c, 0.0),
        C64::new(-0.5 * s, 0.0),
    ]
}

/// Adjoint sweep given the final (pre-readout) state of `features` through
/// `params`. Consumes the state as scratch.
pub fn adjoint_from_state(
    features: &[f64],
    params: &BlockParams,
    upstream: &[f64],
    psi: StateVector,
) -> Result<GradientResult> {
    let q = features.len();
    check_params(q, params)?;
    check_n_out(upstream.len(), q)?;
    if psi.n_qubits() != q {
        return Err(Error::Shape {
            what: "final state qubits",
            expected: q,
            got: psi.n_qubits(),
        });
    }
    let mut d_params = vec![0.0; params.angles().len()];
    let mut d_inputs = vec![0.0; q];
    adjoint_into(
        features,
        params.angles(),
        params.depth(),
        upstream,
        psi,
        &mut d_params,
        &mut d_inputs,
    );
    Ok(GradientResult { d_params, d_inputs })
}

/// Unchecked adjoint sweep. Accumulates into `d_params` (length
/// `3 * q * depth`) and overwrites `d_inputs` (length `q`).
pub(crate) fn adjoint_into(
    features: &[f64],
    angles: &[f64],
    depth: usize,
    upstream: &[f64],
    mut psi: StateVector,
    d_params: &mut [f64],
    d_inputs: &mut [f64],
) {
    let q = features.len();

    // lambda = O psi with O = sum_w u_w Z_w (diagonal)
    let mut lambda = psi.clone();
    {
        let masks: Vec<usize> = (0..upstream.len()).map(|w| psi.mask(w)).collect();
        for (i, a) in lambda.amplitudes_mut().iter_mut().enumerate() {
            let diag: f64 = masks
                .iter()
                .zip(upstream)
                .map(|(&m, &u)| if i & m == 0 { u } else { -u })
                .sum();
            *a *= diag;
        }
    }

    for layer in (0..depth).rev() {
        undo_entanglers(&mut psi, layer);
        undo_entanglers(&mut lambda, layer);
        for j in (0..q).rev() {
            let base = 3 * (layer * q + j);
            let (w, t, p) = (angles[base], angles[base + 1], angles[base + 2]);
            let (rzw, ryt, rzp) = (rz_matrix(w), ry_matrix(t), rz_matrix(p));
            let u = mat_mul(&rzw, &mat_mul(&ryt, &rzp));
            let u_dag = dagger(&u);
            psi.apply_1q(j, &u_dag);
            let m = StateVector::reduced_overlap(&lambda, &psi, j);
            d_params[base] += 2.0 * contract_re(&half_z_left(&u), &m);
            d_params[base + 1] +=
                2.0 * contract_re(&mat_mul(&rzw, &mat_mul(&ry_derivative(t), &rzp)), &m);
            d_params[base + 2] += 2.0 * contract_re(&half_z_right(&u), &m);
            lambda.apply_1q(j, &u_dag);
        }
    }

    for j in (0..q).rev() {
        let inv = ry_matrix(-features[j]);
        psi.apply_1q(j, &inv);
        let m = StateVector::reduced_overlap(&lambda, &psi, j);
        d_inputs[j] = 2.0 * contract_re(&ry_derivative(features[j]), &m);
        lambda.apply_1q(j, &inv);
    }
}

fn weighted(features: &[f64], params: &BlockParams, upstream: &[f64]) -> Result<f64> {
    let z = block_forward(features, params, upstream.len())?;
    Ok(z.iter().zip(upstream).map(|(a, b)| a * b).sum())
}

fn parameter_shift(
    features: &[f64],
    params: &BlockParams,
    upstream: &[f64],
) -> Result<GradientResult> {
    check_params(features.len(), params)?;
    let mut shifted = params.clone();
    let mut d_params = Vec::with_capacity(params.angles().len());
    for i in 0..params.angles().len() {
        let a = params.angles()[i];
        shifted.angles_mut()[i] = a + FRAC_PI_2;
        let plus = weighted(features, &shifted, upstream)?;
        shifted.angles_mut()[i] = a - FRAC_PI_2;
        let minus = weighted(features, &shifted, upstream)?;
        shifted.angles_mut()[i] = a;
        d_params.push(0.5 * (plus - minus));
    }
    let mut h = features.to_vec();
    let mut d_inputs = Vec::with_capacity(h.len());
    for i in 0..h.len() {
        let a = features[i];
        h[i] = a + FRAC_PI_2;
        let plus = weighted(&h, params, upstream)?;
        h[i] = a - FRAC_PI_2;
        let minus = weighted(&h, params, upstream)?;
        h[i] = a;
        d_inputs.push(0.5 * (plus - minus));
    }
    Ok(GradientResult { d_params, d_inputs })
}
