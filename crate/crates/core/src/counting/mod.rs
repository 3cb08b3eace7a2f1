//! Approximate counting by self-reduction with a solution sampler.
//!
//! At every step the sampler is asked for `n_s` solutions of the current
//! reduced formula, the lowest free variable is fixed to its majority value,
//! and the running estimate is divided by the majority fraction. The circuit
//! backends reuse the angles optimized on the full problem for every reduced
//! circuit.

pub mod baselines;
pub mod oracle;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formula::Formula;
use crate::ising::{build_ising, EnergyVector, DEFAULT_QUBIT_CAP};
use crate::qsim::sampling::{SampleRecord, SamplingMode, SolutionDistribution};
use crate::qsim::{metrics, Mixer, OutputMetrics, QaoaCircuit};
use crate::seed;
use crate::variational::{optimize, tqa_start, OptimizerConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// QAOA with the transverse-field mixer.
    Qaoa,
    /// Grover-mixer QAOA.
    Gmqaoa,
    /// Exact uniform sampler over the solution set (classical oracle).
    Uniform,
}

impl Backend {
    pub fn mixer(self) -> Option<Mixer> {
        match self {
            Backend::Qaoa => Some(Mixer::X),
            Backend::Gmqaoa => Some(Mixer::Grover),
            Backend::Uniform => None,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Backend::Qaoa => "qaoa",
            Backend::Gmqaoa => "gmqaoa",
            Backend::Uniform => "uniform",
        }
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qaoa" | "x" => Ok(Backend::Qaoa),
            "gmqaoa" | "gm-qaoa" | "grover" => Ok(Backend::Gmqaoa),
            "uniform" | "exact-uniform" => Ok(Backend::Uniform),
            other => Err(Error::input(format!("unknown backend `{other}`"))),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Diagonal cost the circuit is built on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyModel {
    /// Ising energy of the formula.
    #[default]
    Ising,
    /// Two-level oracle cost: 0 on solutions, 1 elsewhere.
    Oracle,
}

impl EnergyModel {
    pub fn energy_vector(self, f: &Formula, cap: usize) -> Result<EnergyVector> {
        match self {
            EnergyModel::Ising => build_ising(f).energy_vector_capped(cap),
            EnergyModel::Oracle => {
                if f.n_free() > cap {
                    return Err(Error::Resource(format!("{} qubits exceeds cap {cap}", f.n_free())));
                }
                let mask = oracle::solution_mask(f)?;
                Ok(EnergyVector::new(mask.into_iter().map(|s| if s { 0.0 } else { 1.0 }).collect()))
            }
        }
    }
}

/// Fixed circuit angles that bypass optimization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Angles {
    pub betas: Vec<f64>,
    pub gammas: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VqcountConfig {
    pub backend: Backend,
    pub energy: EnergyModel,
    pub depth: usize,
    pub n_s: usize,
    pub mode: SamplingMode,
    pub optimizer: OptimizerConfig,
    /// When set, these angles are used as-is and no optimization runs.
    pub angles: Option<Angles>,
    pub qubit_cap: usize,
}

impl Default for VqcountConfig {
    fn default() -> Self {
        Self {
            backend: Backend::Qaoa,
            energy: EnergyModel::Ising,
            depth: 3,
            n_s: 16,
            mode: SamplingMode::WithoutReplacement,
            optimizer: OptimizerConfig::default(),
            angles: None,
            qubit_cap: DEFAULT_QUBIT_CAP,
        }
    }
}

/// Per-step sample count of the form ceil(c n^2 / eps^2).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleBudget {
    pub n_s: usize,
    pub epsilon: f64,
    pub delta: f64,
}

impl SampleBudget {
    pub fn new(n_s: usize, epsilon: f64, delta: f64) -> Result<Self> {
        if n_s < 1 || !(epsilon > 0.0) || !(delta > 0.0 && delta < 1.0) {
            return Err(Error::input("sample budget needs n_s >= 1, eps > 0, delta in (0, 1)"));
        }
        Ok(Self { n_s, epsilon, delta })
    }

    pub fn jvv(n_vars: usize, epsilon: f64, delta: f64, constant: f64) -> Result<Self> {
        let raw = constant * (n_vars as f64 / epsilon).powi(2);
        // guard against 900.0000000000001 style rounding
        let n_s = (raw - 1e-9).ceil().max(1.0) as usize;
        Self::new(n_s, epsilon, delta)
    }
}

/// `(1 + eps)^-1 N <= estimate <= (1 + eps) N`
pub fn within_band(estimate: f64, exact: f64, epsilon: f64) -> bool {
    estimate >= exact / (1.0 + epsilon) && estimate <= exact * (1.0 + epsilon)
}

/// Majority value of `var` across `samples` (tie goes to 0) and its frequency.
pub fn majority_prefix(samples: &[u64], var: usize) -> Result<(bool, BigRational)> {
    if samples.is_empty() {
        return Err(Error::Stall(format!("no solutions sampled for variable {var}")));
    }
    let ones = samples.iter().filter(|&&s| (s >> var) & 1 == 1).count();
    let zeros = samples.len() - ones;
    let (bit, count) = if ones > zeros { (true, ones) } else { (false, zeros) };
    Ok((bit, BigRational::new(BigInt::from(count), BigInt::from(samples.len()))))
}

/// A sampler of solutions for the current reduced formula.
pub trait SolutionSampler {
    fn formula(&self) -> &Formula;

    /// Solutions are free-configuration indices of the current formula.
    fn sample(&self, n_s: usize, mode: SamplingMode, rng: &mut ChaCha8Rng) -> SampleRecord;

    /// Exact success rate and nonuniformity of the current generator.
    fn diagnostics(&self) -> (f64, Option<f64>);

    /// Pin the lowest free variable.
    fn fix_next(&mut self, bit: bool) -> Result<()>;
}

/// Circuit-backed sampler; reduces the circuit in place as variables are fixed.
#[derive(Clone, Debug)]
pub struct CircuitSampler {
    formula: Formula,
    circuit: QaoaCircuit,
    energy_model: EnergyModel,
    dist: SolutionDistribution,
    metrics: OutputMetrics,
}

impl CircuitSampler {
    pub fn new(formula: Formula, circuit: QaoaCircuit, energy_model: EnergyModel) -> Result<Self> {
        if circuit.n_qubits() != formula.n_free() {
            return Err(Error::input("circuit qubits do not match free variables"));
        }
        let psi = circuit.run()?;
        let metrics = metrics(&psi, circuit.solution_mask(), circuit.energy())?;
        let dist = SolutionDistribution::new(&psi, circuit.solution_mask())?;
        Ok(Self { formula, circuit, energy_model, dist, metrics })
    }

    pub fn circuit(&self) -> &QaoaCircuit {
        &self.circuit
    }

    pub fn metrics(&self) -> &OutputMetrics {
        &self.metrics
    }
}

impl SolutionSampler for CircuitSampler {
    fn formula(&self) -> &Formula {
        &self.formula
    }

    fn sample(&self, n_s: usize, mode: SamplingMode, rng: &mut ChaCha8Rng) -> SampleRecord {
        self.dist.sample_until(n_s, mode, rng)
    }

    fn diagnostics(&self) -> (f64, Option<f64>) {
        (self.metrics.success_rate, self.metrics.nonuniformity)
    }

    fn fix_next(&mut self, bit: bool) -> Result<()> {
        let formula = self.formula.fix_next(bit)?;
        let energy = self.energy_model.energy_vector(&formula, DEFAULT_QUBIT_CAP)?;
        let circuit = self.circuit.reduce(bit, energy)?;
        *self = CircuitSampler::new(formula, circuit, self.energy_model)?;
        Ok(())
    }
}

/// Exact uniform sampler over the enumerated solution set.
#[derive(Clone, Debug)]
pub struct UniformSampler {
    formula: Formula,
    configs: Vec<u64>,
    dist: SolutionDistribution,
}

impl UniformSampler {
    pub fn new(formula: Formula) -> Result<Self> {
        let configs = oracle::solution_configs(&formula)?;
        let dist = SolutionDistribution::uniform(configs.clone());
        Ok(Self { formula, configs, dist })
    }
}

impl SolutionSampler for UniformSampler {
    fn formula(&self) -> &Formula {
        &self.formula
    }

    fn sample(&self, n_s: usize, mode: SamplingMode, rng: &mut ChaCha8Rng) -> SampleRecord {
        self.dist.sample_until(n_s, mode, rng)
    }

    fn diagnostics(&self) -> (f64, Option<f64>) {
        if self.configs.is_empty() {
            (0.0, None)
        } else {
            (1.0, Some(0.0))
        }
    }

    fn fix_next(&mut self, bit: bool) -> Result<()> {
        self.formula = self.formula.fix_next(bit)?;
        let b = bit as u64;
        self.configs = self.configs.iter().filter(|&&c| c & 1 == b).map(|c| c >> 1).collect();
        self.dist = SolutionDistribution::uniform(self.configs.clone());
        Ok(())
    }
}

/// Either backend, ready to run the self-reduction (cloneable so the same
/// optimized circuit can be reused across sample budgets).
#[derive(Clone, Debug)]
pub enum PreparedSampler {
    Circuit(CircuitSampler),
    Uniform(UniformSampler),
}

impl SolutionSampler for PreparedSampler {
    fn formula(&self) -> &Formula {
        match self {
            PreparedSampler::Circuit(s) => s.formula(),
            PreparedSampler::Uniform(s) => s.formula(),
        }
    }

    fn sample(&self, n_s: usize, mode: SamplingMode, rng: &mut ChaCha8Rng) -> SampleRecord {
        match self {
            PreparedSampler::Circuit(s) => s.sample(n_s, mode, rng),
            PreparedSampler::Uniform(s) => s.sample(n_s, mode, rng),
        }
    }

    fn diagnostics(&self) -> (f64, Option<f64>) {
        match self {
            PreparedSampler::Circuit(s) => s.diagnostics(),
            PreparedSampler::Uniform(s) => s.diagnostics(),
        }
    }

    fn fix_next(&mut self, bit: bool) -> Result<()> {
        match self {
            PreparedSampler::Circuit(s) => s.fix_next(bit),
            PreparedSampler::Uniform(s) => s.fix_next(bit),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CircuitInfo {
    pub mixer: Mixer,
    pub depth: usize,
    pub betas: Vec<f64>,
    pub gammas: Vec<f64>,
    pub initial_energy: f64,
    pub optimized_energy: f64,
    pub evaluations: usize,
}

/// Build the sampler for `cfg`: Ising model, circuit, TQA start and one
/// optimization on the full problem.
pub fn prepare_sampler(f: &Formula, cfg: &VqcountConfig) -> Result<(PreparedSampler, Option<CircuitInfo>)> {
    let Some(mixer) = cfg.backend.mixer() else {
        return Ok((PreparedSampler::Uniform(UniformSampler::new(f.clone())?), None));
    };
    if f.n_free() > cfg.qubit_cap {
        return Err(Error::Resource(format!("{} qubits exceeds cap {}", f.n_free(), cfg.qubit_cap)));
    }
    let energy = cfg.energy.energy_vector(f, cfg.qubit_cap)?;
    let mask = oracle::solution_mask(f)?;
    let (betas, gammas) = match &cfg.angles {
        Some(a) => (a.betas.clone(), a.gammas.clone()),
        None => tqa_start(cfg.depth, cfg.optimizer.tqa_dt),
    };
    let circuit = QaoaCircuit::new(mixer, betas, gammas, energy, mask)?;
    let (circuit, info) = if cfg.angles.is_some() {
        let e = crate::variational::objective(&circuit)?;
        let info = CircuitInfo {
            mixer,
            depth: circuit.depth(),
            betas: circuit.betas().to_vec(),
            gammas: circuit.gammas().to_vec(),
            initial_energy: e,
            optimized_energy: e,
            evaluations: 1,
        };
        (circuit, info)
    } else {
        let out = optimize(&circuit, &cfg.optimizer)?;
        let info = CircuitInfo {
            mixer,
            depth: out.circuit.depth(),
            betas: out.circuit.betas().to_vec(),
            gammas: out.circuit.gammas().to_vec(),
            initial_energy: out.initial_energy,
            optimized_energy: out.energy,
            evaluations: out.evaluations,
        };
        (out.circuit, info)
    };
    Ok((PreparedSampler::Circuit(CircuitSampler::new(f.clone(), circuit, cfg.energy)?), Some(info)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// The first step found no solution at all; the estimate is 0.
    Unsat,
    /// A later step ended with an empty sample set.
    Failed,
}

#[derive(Clone, Debug, Serialize)]
pub struct StepRecord {
    pub var: usize,
    pub bit: Option<bool>,
    /// Majority fraction as `count/size`.
    pub p_tilde: Option<String>,
    pub raw_shots: u64,
    pub postselected: u64,
    pub set_size: usize,
    pub distinct: usize,
    pub success_rate: f64,
    pub nonuniformity: Option<f64>,
    pub stalled: bool,
    pub exhausted: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CountEstimate {
    pub n_vars: usize,
    pub status: RunStatus,
    pub estimate: f64,
    /// Exact rational value of the product of inverse majority fractions.
    #[serde(serialize_with = "ser_ratio")]
    pub estimate_exact: BigRational,
    pub per_step: Vec<StepRecord>,
    pub total_raw_shots: u64,
    pub total_postselected: u64,
    /// Size of the union of distinct solutions used over all steps.
    pub total_distinct_used: usize,
    pub circuit: Option<CircuitInfo>,
}

fn ser_ratio<S: serde::Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
}

impl CountEstimate {
    pub fn max_nonuniformity(&self) -> Option<f64> {
        self.per_step.iter().filter_map(|s| s.nonuniformity).reduce(f64::max)
    }

    pub fn min_success_rate(&self) -> Option<f64> {
        self.per_step.iter().map(|s| s.success_rate).reduce(f64::min)
    }
}

/// Run the self-reduction with an already prepared sampler.
pub fn run_self_reduction<S: SolutionSampler>(
    mut sampler: S,
    n_s: usize,
    mode: SamplingMode,
    rng: &mut ChaCha8Rng,
) -> Result<CountEstimate> {
    if n_s < 1 {
        return Err(Error::input("n_s must be at least 1"));
    }
    let n_vars = sampler.formula().n_vars();
    let start = sampler.formula().n_pinned();
    let mut estimate = BigRational::one();
    let mut per_step = Vec::with_capacity(n_vars - start);
    let mut used: HashSet<u64> = HashSet::new();
    let mut status = RunStatus::Completed;

    for var in start..n_vars {
        let (success_rate, nonuniformity) = sampler.diagnostics();
        let rec = sampler.sample(n_s, mode, rng);
        let f = sampler.formula();
        let full: Vec<u64> = rec.solutions.iter().map(|&c| f.full_mask(c)).collect();
        let distinct: HashSet<u64> = full.iter().copied().collect();
        used.extend(&distinct);
        let mut step = StepRecord {
            var,
            bit: None,
            p_tilde: None,
            raw_shots: rec.raw_shots,
            postselected: rec.postselected,
            set_size: full.len(),
            distinct: distinct.len(),
            success_rate,
            nonuniformity,
            stalled: rec.stalled,
            exhausted: rec.exhausted,
        };
        if full.is_empty() {
            status = if var == start { RunStatus::Unsat } else { RunStatus::Failed };
            per_step.push(step);
            break;
        }
        let (bit, p) = majority_prefix(&full, var)?;
        step.bit = Some(bit);
        step.p_tilde = Some(format!("{}/{}", p.numer(), p.denom()));
        estimate /= p;
        per_step.push(step);
        if var + 1 < n_vars {
            sampler.fix_next(bit)?;
        }
    }

    if status != RunStatus::Completed {
        estimate = BigRational::zero();
    }
    Ok(CountEstimate {
        n_vars,
        status,
        estimate: estimate.to_f64().unwrap_or(f64::NAN),
        estimate_exact: estimate,
        total_raw_shots: per_step.iter().map(|s| s.raw_shots).sum(),
        total_postselected: per_step.iter().map(|s| s.postselected).sum(),
        total_distinct_used: used.len(),
        per_step,
        circuit: None,
    })
}

/// Full pipeline: prepare (and optimize) the sampler once, then self-reduce.
pub fn vqcount(f: &Formula, cfg: &VqcountConfig, seed_value: u64) -> Result<CountEstimate> {
    let (sampler, info) = prepare_sampler(f, cfg)?;
    let mut rng = seed::rng(seed::derive(seed_value, &[seed::SHOTS, cfg.n_s as u64]));
    let mut est = run_self_reduction(sampler, cfg.n_s, cfg.mode, &mut rng)?;
    est.circuit = info;
    Ok(est)
}
