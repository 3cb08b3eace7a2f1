//! Gate-by-gate reference simulator used only for cross-validation at small
//! sizes. It builds the phase separator from individual ZZ and Z rotations of
//! the Ising model, applies the X mixer as explicit 2x2 rotations, and builds
//! the Grover mixer from Hadamard layers around a phase on |0...0>.

use num_complex::Complex64;

use super::{Mixer, StateVector};
use crate::error::{Error, Result};
use crate::ising::IsingModel;

pub const REFERENCE_CAP: usize = 12;

type Gate = [[Complex64; 2]; 2];

#[derive(Clone, Debug)]
pub struct ReferenceCircuit {
    pub n_qubits: usize,
    pub couplings: Vec<(usize, usize, f64)>,
    pub fields: Vec<(usize, f64)>,
    pub offset: f64,
    pub mixer: Mixer,
    pub betas: Vec<f64>,
    pub gammas: Vec<f64>,
    /// Qubits prepared in |bit> instead of |+> and excluded from the mixer.
    pub pinned: Vec<(usize, bool)>,
}

impl ReferenceCircuit {
    /// Qubit j is free variable j of `model`.
    pub fn from_model(model: &IsingModel, mixer: Mixer, betas: &[f64], gammas: &[f64]) -> Self {
        let pos = |v: usize| model.free_vars().iter().position(|&f| f == v).expect("free variable");
        Self {
            n_qubits: model.n_free(),
            couplings: model.couplings().iter().map(|(&(i, j), &jij)| (pos(i), pos(j), jij)).collect(),
            fields: model.fields().iter().map(|(&i, &h)| (pos(i), h)).collect(),
            offset: model.offset(),
            mixer,
            betas: betas.to_vec(),
            gammas: gammas.to_vec(),
            pinned: Vec::new(),
        }
    }

    pub fn with_pinned(mut self, pinned: Vec<(usize, bool)>) -> Self {
        self.pinned = pinned;
        self
    }

    fn pinned_bit(&self, q: usize) -> Option<bool> {
        self.pinned.iter().find(|(p, _)| *p == q).map(|&(_, b)| b)
    }

    /// Per-qubit preparation gates: H on free qubits, X^bit on pinned ones.
    fn prep_gate(&self, q: usize) -> Gate {
        match self.pinned_bit(q) {
            None => hadamard(),
            Some(true) => pauli_x(),
            Some(false) => identity(),
        }
    }

    pub fn run(&self) -> Result<StateVector> {
        if self.n_qubits > REFERENCE_CAP {
            return Err(Error::Resource(format!("reference simulator is capped at {REFERENCE_CAP} qubits")));
        }
        let dim = 1usize << self.n_qubits;
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[0] = Complex64::new(1.0, 0.0);
        for q in 0..self.n_qubits {
            apply_1q(&mut amps, q, &self.prep_gate(q));
        }
        for (&beta, &gamma) in self.betas.iter().zip(&self.gammas) {
            // e^{-i gamma H}, H = -J s_i s_j terms, -h s_i terms, offset
            for &(i, j, jij) in &self.couplings {
                apply_zz_phase(&mut amps, i, j, -gamma * -jij);
            }
            for &(i, h) in &self.fields {
                apply_z_phase(&mut amps, i, -gamma * -h);
            }
            let global = Complex64::cis(-gamma * self.offset);
            amps.iter_mut().for_each(|a| *a *= global);

            match self.mixer {
                Mixer::X => {
                    let rx = rx(beta);
                    for q in 0..self.n_qubits {
                        if self.pinned_bit(q).is_none() {
                            apply_1q(&mut amps, q, &rx);
                        }
                    }
                }
                Mixer::Grover => {
                    // U_S [1 - (1 - e^{-i beta}) |0><0|] U_S^dagger; prep gates are self-inverse
                    for q in 0..self.n_qubits {
                        apply_1q(&mut amps, q, &self.prep_gate(q));
                    }
                    amps[0] *= Complex64::cis(-beta);
                    for q in 0..self.n_qubits {
                        apply_1q(&mut amps, q, &self.prep_gate(q));
                    }
                }
            }
        }
        StateVector::from_amplitudes(amps)
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn identity() -> Gate {
    [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]]
}

fn hadamard() -> Gate {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]]
}

fn pauli_x() -> Gate {
    [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]]
}

fn rx(beta: f64) -> Gate {
    let (co, si) = (beta.cos(), beta.sin());
    [[c(co, 0.0), c(0.0, -si)], [c(0.0, -si), c(co, 0.0)]]
}

fn apply_1q(amps: &mut [Complex64], q: usize, g: &Gate) {
    let bit = 1usize << q;
    for i in 0..amps.len() {
        if i & bit == 0 {
            let (a0, a1) = (amps[i], amps[i | bit]);
            amps[i] = g[0][0] * a0 + g[0][1] * a1;
            amps[i | bit] = g[1][0] * a0 + g[1][1] * a1;
        }
    }
}

/// exp(i theta s_i s_j) with s = 2x - 1.
fn apply_zz_phase(amps: &mut [Complex64], i: usize, j: usize, theta: f64) {
    for (x, a) in amps.iter_mut().enumerate() {
        let si = if (x >> i) & 1 == 1 { 1.0 } else { -1.0 };
        let sj = if (x >> j) & 1 == 1 { 1.0 } else { -1.0 };
        *a *= Complex64::cis(theta * si * sj);
    }
}

/// exp(i theta s_i).
fn apply_z_phase(amps: &mut [Complex64], i: usize, theta: f64) {
    for (x, a) in amps.iter_mut().enumerate() {
        let si = if (x >> i) & 1 == 1 { 1.0 } else { -1.0 };
        *a *= Complex64::cis(theta * si);
    }
}
