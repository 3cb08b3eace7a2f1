//! Dense statevector simulation of QAOA and GM-QAOA over the free qubits.
//!
//! Qubit `j` of a circuit is free variable `j` of the reduced formula, and basis
//! index `c` is the free configuration with bit `j` = qubit `j`. Pinning a
//! variable therefore removes qubit 0 and halves the register.

pub mod reference;
pub mod sampling;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::{EnergyVector, DEFAULT_QUBIT_CAP};

const PAR_THRESHOLD: usize = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mixer {
    /// Transverse-field mixer e^{-i beta sum X}.
    X,
    /// Reflection-phase mixer about the uniform initial state.
    Grover,
}

impl FromStr for Mixer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" | "qaoa" => Ok(Mixer::X),
            "grover" | "gmqaoa" | "gm-qaoa" => Ok(Mixer::Grover),
            other => Err(Error::input(format!("unknown mixer `{other}`"))),
        }
    }
}

impl fmt::Display for Mixer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mixer::X => "x",
            Mixer::Grover => "grover",
        })
    }
}

#[derive(Clone, Debug)]
pub struct QaoaCircuit {
    mixer: Mixer,
    betas: Vec<f64>,
    gammas: Vec<f64>,
    energy: Arc<EnergyVector>,
    solution_mask: Arc<[bool]>,
}

impl QaoaCircuit {
    pub fn new(
        mixer: Mixer,
        betas: Vec<f64>,
        gammas: Vec<f64>,
        energy: EnergyVector,
        solution_mask: Vec<bool>,
    ) -> Result<Self> {
        if betas.len() != gammas.len() {
            return Err(Error::input(format!(
                "{} betas but {} gammas",
                betas.len(),
                gammas.len()
            )));
        }
        if solution_mask.len() != energy.len() {
            return Err(Error::input("solution mask and energy vector differ in length"));
        }
        if energy.n_qubits() > DEFAULT_QUBIT_CAP {
            return Err(Error::Resource(format!(
                "{} qubits exceeds cap {DEFAULT_QUBIT_CAP}",
                energy.n_qubits()
            )));
        }
        Ok(Self { mixer, betas, gammas, energy: Arc::new(energy), solution_mask: solution_mask.into() })
    }

    pub fn mixer(&self) -> Mixer {
        self.mixer
    }

    pub fn depth(&self) -> usize {
        self.betas.len()
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn energy(&self) -> &EnergyVector {
        &self.energy
    }

    pub fn solution_mask(&self) -> &[bool] {
        &self.solution_mask
    }

    pub fn n_qubits(&self) -> usize {
        self.energy.n_qubits()
    }

    pub fn n_solutions(&self) -> usize {
        self.solution_mask.iter().filter(|&&s| s).count()
    }

    /// `[betas..., gammas...]`
    pub fn params(&self) -> Vec<f64> {
        self.betas.iter().chain(&self.gammas).copied().collect()
    }

    pub fn with_params(&self, params: &[f64]) -> Result<Self> {
        let p = self.depth();
        if params.len() != 2 * p {
            return Err(Error::input(format!("expected {} parameters, got {}", 2 * p, params.len())));
        }
        let mut c = self.clone();
        c.betas.copy_from_slice(&params[..p]);
        c.gammas.copy_from_slice(&params[p..]);
        Ok(c)
    }

    pub fn run(&self) -> Result<StateVector> {
        run_circuit(self)
    }

    pub fn reduce(&self, bit: bool, new_energy: EnergyVector) -> Result<Self> {
        reduce_circuit(self, bit, new_energy)
    }
}

/// Simulate the circuit from the uniform superposition over its qubits.
pub fn run_circuit(c: &QaoaCircuit) -> Result<StateVector> {
    let mut psi = StateVector::uniform(c.n_qubits());
    let mut table = Vec::with_capacity(c.energy.levels().len());
    for (&beta, &gamma) in c.betas.iter().zip(&c.gammas) {
        table.clear();
        table.extend(c.energy.levels().iter().map(|&e| Complex64::cis(-gamma * e)));
        apply_phase(&mut psi.amps, c.energy.level_of(), &table);
        match c.mixer {
            Mixer::X => apply_x_mixer(&mut psi.amps, beta),
            Mixer::Grover => apply_grover_mixer(&mut psi.amps, beta),
        }
    }
    if psi.amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
        return Err(Error::Numeric("non-finite amplitude in circuit output".into()));
    }
    Ok(psi)
}

/// Pin qubit 0 (the lowest free variable) to `bit`: the input of that qubit
/// becomes |bit> and its mixer gates are dropped, which leaves the remaining
/// qubits evolving under the pinned energy vector with the same angles.
pub fn reduce_circuit(c: &QaoaCircuit, bit: bool, new_energy: EnergyVector) -> Result<QaoaCircuit> {
    if c.n_qubits() == 0 {
        return Err(Error::input("cannot reduce a circuit with no free qubits"));
    }
    if new_energy.len() * 2 != c.energy.len() {
        return Err(Error::input(format!(
            "reduced energy vector has {} entries, expected {}",
            new_energy.len(),
            c.energy.len() / 2
        )));
    }
    let b = bit as usize;
    let mask = c.solution_mask.iter().skip(b).step_by(2).copied().collect();
    QaoaCircuit::new(c.mixer, c.betas.clone(), c.gammas.clone(), new_energy, mask)
}

fn apply_phase(amps: &mut [Complex64], level_of: &[u32], table: &[Complex64]) {
    if amps.len() >= PAR_THRESHOLD {
        amps.par_iter_mut()
            .zip(level_of.par_iter())
            .with_min_len(PAR_THRESHOLD)
            .for_each(|(a, &l)| *a *= table[l as usize]);
    } else {
        for (a, &l) in amps.iter_mut().zip(level_of) {
            *a *= table[l as usize];
        }
    }
}

fn x_rotate_block(block: &mut [Complex64], stride: usize, cos: f64, msin: Complex64) {
    let (lo, hi) = block.split_at_mut(stride);
    for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = x * cos + y * msin;
        *b = y * cos + x * msin;
    }
}

/// e^{-i beta X} on every qubit.
fn apply_x_mixer(amps: &mut [Complex64], beta: f64) {
    let n_qubits = amps.len().trailing_zeros();
    let (cos, sin) = (beta.cos(), beta.sin());
    let msin = Complex64::new(0.0, -sin);
    for q in 0..n_qubits {
        let stride = 1usize << q;
        if amps.len() >= PAR_THRESHOLD {
            amps.par_chunks_mut(2 * stride)
                .with_min_len((PAR_THRESHOLD / (2 * stride)).max(1))
                .for_each(|blk| x_rotate_block(blk, stride, cos, msin));
        } else {
            amps.chunks_mut(2 * stride)
                .for_each(|blk| x_rotate_block(blk, stride, cos, msin));
        }
    }
}

/// psi -> psi - (1 - e^{-i beta}) <psi0|psi> psi0 with psi0 uniform.
fn apply_grover_mixer(amps: &mut [Complex64], beta: f64) {
    let dim = amps.len() as f64;
    let sum: Complex64 = amps.iter().sum();
    // (1 - e^{-i beta}) * <psi0|psi> * (1/sqrt(dim)) with <psi0|psi> = sum / sqrt(dim)
    let delta = (Complex64::new(1.0, 0.0) - Complex64::cis(-beta)) * sum / dim;
    for a in amps.iter_mut() {
        *a -= delta;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn uniform(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let a = 1.0 / (dim as f64).sqrt();
        Self { amps: vec![Complex64::new(a, 0.0); dim] }
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(Error::input("amplitude count must be a power of two"));
        }
        Ok(Self { amps })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn n_qubits(&self) -> usize {
        self.amps.len().trailing_zeros() as usize
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Little-endian interleaved (re, im) f64 pairs.
    pub fn write_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut bytes = Vec::with_capacity(self.amps.len() * 16);
        for a in &self.amps {
            bytes.extend_from_slice(&a.re.to_le_bytes());
            bytes.extend_from_slice(&a.im.to_le_bytes());
        }
        fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn read_binary(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.len() % 16 != 0 {
            return Err(Error::input("amplitude dump length is not a multiple of 16 bytes"));
        }
        let amps = bytes
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                Complex64::new(re, im)
            })
            .collect();
        Self::from_amplitudes(amps)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OutputMetrics {
    /// Probability of measuring a solution.
    pub success_rate: f64,
    /// Total variation distance of the postselected distribution from uniform
    /// over the solutions; `None` when the success rate is zero.
    pub nonuniformity: Option<f64>,
    pub energy_expectation: f64,
    pub n_solutions: usize,
}

pub fn metrics(psi: &StateVector, mask: &[bool], energy: &EnergyVector) -> Result<OutputMetrics> {
    if mask.len() != psi.amps.len() || energy.len() != psi.amps.len() {
        return Err(Error::input("mask, energy and state lengths differ"));
    }
    let probs = psi.probabilities();
    let n_solutions = mask.iter().filter(|&&s| s).count();
    let success_rate: f64 = probs.iter().zip(mask).filter(|(_, &s)| s).map(|(p, _)| p).sum();
    let energy_expectation = probs.iter().zip(energy.values()).map(|(p, e)| p * e).sum();
    let nonuniformity = if success_rate > 0.0 && n_solutions > 0 {
        let u = 1.0 / n_solutions as f64;
        let tvd: f64 = probs
            .iter()
            .zip(mask)
            .filter(|(_, &s)| s)
            .map(|(p, _)| (u - p / success_rate).abs())
            .sum();
        Some(0.5 * tvd)
    } else {
        None
    };
    Ok(OutputMetrics {
        success_rate,
        nonuniformity,
        energy_expectation,
        n_solutions,
    })
}
