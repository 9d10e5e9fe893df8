//! Exact density-matrix evaluation of the depolarized block, for small q.

use super::ansatz::{check_n_out, check_params, encode, entangler_range, euler_matrix, BlockParams};
use super::state::{Mat2, C64};
use crate::error::{Error, Result};

pub const MAX_DENSITY_QUBITS: usize = 6;

/// Row-major `2^q x 2^q` density matrix with the statevector's wire ordering.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    n_qubits: usize,
    dim: usize,
    rho: Vec<C64>,
}

impl DensityMatrix {
    pub fn from_pure(amps: &[C64], n_qubits: usize) -> Self {
        let dim = amps.len();
        let mut rho = Vec::with_capacity(dim * dim);
        for a in amps {
            for b in amps {
                rho.push(a * b.conj());
            }
        }
        DensityMatrix { n_qubits, dim, rho }
    }

    fn mask(&self, wire: usize) -> usize {
        1 << (self.n_qubits - 1 - wire)
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.rho[i * self.dim + i].re).sum()
    }

    /// `rho -> U rho U^dagger` on one wire.
    pub fn apply_1q(&mut self, wire: usize, u: &Mat2) {
        let m = self.mask(wire);
        let d = self.dim;
        let uc = [u[0].conj(), u[1].conj(), u[2].conj(), u[3].conj()];
        for r0 in (0..d).filter(|r| r & m == 0) {
            let r1 = r0 | m;
            for c in 0..d {
                let (a0, a1) = (self.rho[r0 * d + c], self.rho[r1 * d + c]);
                self.rho[r0 * d + c] = u[0] * a0 + u[1] * a1;
                self.rho[r1 * d + c] = u[2] * a0 + u[3] * a1;
            }
        }
        for r in 0..d {
            let row = &mut self.rho[r * d..(r + 1) * d];
            for c0 in (0..d).filter(|c| c & m == 0) {
                let c1 = c0 | m;
                let (a0, a1) = (row[c0], row[c1]);
                row[c0] = uc[0] * a0 + uc[1] * a1;
                row[c1] = uc[2] * a0 + uc[3] * a1;
            }
        }
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        let (cm, tm) = (self.mask(control), self.mask(target));
        let d = self.dim;
        let perm = |i: usize| if i & cm != 0 { i ^ tm } else { i };
        let old = self.rho.clone();
        for r in 0..d {
            for c in 0..d {
                self.rho[perm(r) * d + perm(c)] = old[r * d + c];
            }
        }
    }

    /// `rho -> (1-p) rho + p Tr_w(rho) x I/2` on one wire.
    pub fn depolarize(&mut self, wire: usize, p: f64) {
        let m = self.mask(wire);
        let d = self.dim;
        for r0 in (0..d).filter(|r| r & m == 0) {
            let r1 = r0 | m;
            for c0 in (0..d).filter(|c| c & m == 0) {
                let c1 = c0 | m;
                let mixed = (self.rho[r0 * d + c0] + self.rho[r1 * d + c1]) * (0.5 * p);
                for (r, c) in [(r0, c0), (r0, c1), (r1, c0), (r1, c1)] {
                    self.rho[r * d + c] *= 1.0 - p;
                }
                self.rho[r0 * d + c0] += mixed;
                self.rho[r1 * d + c1] += mixed;
            }
        }
    }

    pub fn expectation_z(&self, wire: usize) -> f64 {
        let m = self.mask(wire);
        (0..self.dim)
            .map(|i| {
                let v = self.rho[i * self.dim + i].re;
                if i & m == 0 {
                    v
                } else {
                    -v
                }
            })
            .sum()
    }
}

/// Exact `<Z_j>`, `j < n_out`, under depolarizing rate `p` after each layer.
pub fn block_forward_density(
    features: &[f64],
    params: &BlockParams,
    n_out: usize,
    p: f64,
) -> Result<Vec<f64>> {
    let q = features.len();
    if q > MAX_DENSITY_QUBITS {
        return Err(Error::DensityTooLarge {
            q,
            max: MAX_DENSITY_QUBITS,
        });
    }
    if !(0.0..1.0).contains(&p) {
        return Err(Error::invalid(format!("depolarizing p must be in [0, 1), got {p}")));
    }
    check_params(q, params)?;
    check_n_out(n_out, q)?;
    let psi = encode(features)?;
    let mut rho = DensityMatrix::from_pure(psi.amplitudes(), q);
    for layer in 0..params.depth() {
        for j in 0..q {
            let (w, t, ph) = params.rotation(layer, j);
            rho.apply_1q(j, &euler_matrix(w, t, ph));
        }
        if q >= 2 {
            let r = entangler_range(layer, q);
            for j in 0..q {
                rho.apply_cnot(j, (j + r) % q);
            }
        }
        if p > 0.0 {
            for j in 0..q {
                rho.depolarize(j, p);
            }
        }
    }
    Ok((0..n_out).map(|w| rho.expectation_z(w)).collect())
}
