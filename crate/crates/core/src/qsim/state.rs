//! Dense statevector of a small register and the gate kernels acting on it.
//!
//! Wire 0 is the most significant bit of the amplitude index, so for a
//! 3-qubit register `|w0 w1 w2>` lives at index `4*w0 + 2*w1 + w2`.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Row-major 2x2 complex matrix `[u00, u01, u10, u11]`.
pub type Mat2 = [C64; 4];

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

pub fn ry_matrix(angle: f64) -> Mat2 {
    let (s, c) = (angle / 2.0).sin_cos();
    [C64::new(c, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0), C64::new(c, 0.0)]
}

pub fn rz_matrix(angle: f64) -> Mat2 {
    let (s, c) = (angle / 2.0).sin_cos();
    [C64::new(c, -s), ZERO, ZERO, C64::new(c, s)]
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

pub fn dagger(a: &Mat2) -> Mat2 {
    [a[0].conj(), a[2].conj(), a[1].conj(), a[3].conj()]
}

/// The Pauli operators used for noise insertion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> Mat2 {
        match self {
            Pauli::X => [ZERO, ONE, ONE, ZERO],
            Pauli::Y => [ZERO, C64::new(0.0, -1.0), C64::new(0.0, 1.0), ZERO],
            Pauli::Z => [ONE, ZERO, ZERO, -ONE],
        }
    }
}

/// Gate set of the quantum neuron.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    Ry { wire: usize, angle: f64 },
    Rz { wire: usize, angle: f64 },
    Cnot { control: usize, target: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// `|0...0>` on `n_qubits` wires.
    pub fn zero(n_qubits: usize) -> Self {
        assert!(n_qubits >= 1, "a register needs at least one qubit");
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[0] = ONE;
        StateVector { n_qubits, amps }
    }

    pub fn from_amplitudes(n_qubits: usize, amps: Vec<C64>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::invalid("a register needs at least one qubit"));
        }
        if amps.len() != 1 << n_qubits {
            return Err(Error::Shape {
                what: "amplitudes",
                expected: 1 << n_qubits,
                got: amps.len(),
            });
        }
        Ok(StateVector { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    #[inline]
    pub(crate) fn mask(&self, wire: usize) -> usize {
        1 << (self.n_qubits - 1 - wire)
    }

    fn check_wire(&self, wire: usize) -> Result<()> {
        if wire >= self.n_qubits {
            Err(Error::WireOutOfRange {
                wire,
                n_qubits: self.n_qubits,
            })
        } else {
            Ok(())
        }
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        match *gate {
            Gate::Ry { wire, angle } => {
                self.check_wire(wire)?;
                self.apply_1q(wire, &ry_matrix(angle));
            }
            Gate::Rz { wire, angle } => {
                self.check_wire(wire)?;
                self.apply_1q(wire, &rz_matrix(angle));
            }
            Gate::Cnot { control, target } => {
                self.check_wire(control)?;
                self.check_wire(target)?;
                if control == target {
                    return Err(Error::ControlIsTarget(control));
                }
                self.apply_cnot(control, target);
            }
        }
        Ok(())
    }

    /// Applies a single-qubit unitary; `wire` must be in range.
    pub(crate) fn apply_1q(&mut self, wire: usize, u: &Mat2) {
        let m = self.mask(wire);
        let len = self.amps.len();
        let mut base = 0;
        while base < len {
            for i in base..base + m {
                let a0 = self.amps[i];
                let a1 = self.amps[i + m];
                self.amps[i] = u[0] * a0 + u[1] * a1;
                self.amps[i + m] = u[2] * a0 + u[3] * a1;
            }
            base += 2 * m;
        }
    }

    pub(crate) fn apply_cnot(&mut self, control: usize, target: usize) {
        let cm = self.mask(control);
        let tm = self.mask(target);
        for i in 0..self.amps.len() {
            if i & cm != 0 && i & tm == 0 {
                self.amps.swap(i, i | tm);
            }
        }
    }

    pub(crate) fn apply_pauli(&mut self, wire: usize, pauli: Pauli) {
        self.apply_1q(wire, &pauli.matrix());
    }

    /// `<Z_wire>`; `wire` must be in range.
    pub(crate) fn expectation_z(&self, wire: usize) -> f64 {
        let m = self.mask(wire);
        self.amps
            .iter()
            .enumerate()
            .map(|(i, a)| if i & m == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum()
    }

    /// Exact Pauli-Z expectations on the listed wires, in list order.
    pub fn measure_z(&self, wires: &[usize]) -> Result<Vec<f64>> {
        for (i, &w) in wires.iter().enumerate() {
            self.check_wire(w)?;
            if wires[..i].contains(&w) {
                return Err(Error::DuplicateWire(w));
            }
        }
        Ok(wires.iter().map(|&w| self.expectation_z(w)).collect())
    }

    /// Expectations on wires `0..n_out`.
    pub(crate) fn leading_z(&self, n_out: usize) -> Vec<f64> {
        (0..n_out).map(|w| self.expectation_z(w)).collect()
    }

    /// `M_ab = sum_rest conj(bra[rest, a]) * ket[rest, b]` over the pair
    /// structure of `wire`. Contracting a gate derivative `D` against `M`
    /// gives `<bra| D_wire |ket>`.
    pub(crate) fn reduced_overlap(bra: &StateVector, ket: &StateVector, wire: usize) -> Mat2 {
        let m = ket.mask(wire);
        let len = ket.amps.len();
        let mut out = [ZERO; 4];
        let mut base = 0;
        while base < len {
            for i in base..base + m {
                let (b0, b1) = (bra.amps[i].conj(), bra.amps[i + m].conj());
                let (k0, k1) = (ket.amps[i], ket.amps[i + m]);
                out[0] += b0 * k0;
                out[1] += b0 * k1;
                out[2] += b1 * k0;
                out[3] += b1 * k1;
            }
            base += 2 * m;
        }
        out
    }
}

/// `Re sum_ab D_ab M_ab`, i.e. `Re <bra| D |ket>` for a reduced overlap `M`.
#[inline]
pub(crate) fn contract_re(d: &Mat2, m: &Mat2) -> f64 {
    (d[0] * m[0] + d[1] * m[1] + d[2] * m[2] + d[3] * m[3]).re
}
