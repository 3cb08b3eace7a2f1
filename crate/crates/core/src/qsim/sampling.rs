//! Measurement sampling from a statevector.
//!
//! Postselected sampling draws the gap to the next solution from a geometric
//! distribution with the exact success rate and then a solution from the
//! conditional distribution, which has the same law as measuring shot by shot
//! and discarding non-solutions.

use std::collections::HashSet;

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use super::StateVector;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// Keep collecting until `n_s` distinct solutions; repeats are discarded.
    WithoutReplacement,
    /// Keep the first `n_s` postselected solutions, repeats included.
    WithReplacement,
}

/// Consecutive raw shots without progress before sampling gives up.
pub fn stall_cutoff(n_s: usize, success_rate: f64) -> u64 {
    (50.0 * n_s as f64 / success_rate.max(1e-6)).ceil() as u64
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SampleRecord {
    /// Measurements performed, including rejected non-solutions.
    pub raw_shots: u64,
    /// Postselected solutions (free-configuration indices) in draw order. In
    /// without-replacement mode each entry is distinct.
    pub solutions: Vec<u64>,
    /// Postselected measurements including discarded repeats.
    pub postselected: u64,
    pub stalled: bool,
    /// Every solution of the subproblem was collected before reaching `n_s`.
    pub exhausted: bool,
}

/// Postselected sampler for one statevector and solution mask.
#[derive(Clone, Debug)]
pub struct SolutionDistribution {
    success_rate: f64,
    configs: Vec<u64>,
    cumulative: Vec<f64>,
}

impl SolutionDistribution {
    pub fn new(psi: &StateVector, mask: &[bool]) -> Result<Self> {
        if mask.len() != psi.amplitudes().len() {
            return Err(Error::input("mask length differs from state dimension"));
        }
        let mut configs = Vec::new();
        let mut cumulative = Vec::new();
        let mut acc = 0.0;
        for (c, (a, &s)) in psi.amplitudes().iter().zip(mask).enumerate() {
            if s {
                acc += a.norm_sqr();
                configs.push(c as u64);
                cumulative.push(acc);
            }
        }
        Ok(Self { success_rate: acc.min(1.0), configs, cumulative })
    }

    /// Exact uniform distribution over the given configurations, success rate 1.
    pub fn uniform(configs: Vec<u64>) -> Self {
        let cumulative = (1..=configs.len()).map(|i| i as f64).collect();
        let success_rate = if configs.is_empty() { 0.0 } else { 1.0 };
        Self { success_rate, configs, cumulative }
    }

    pub fn success_rate(&self) -> f64 {
        self.success_rate
    }

    pub fn n_solutions(&self) -> usize {
        self.configs.len()
    }

    fn draw_solution<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let total = *self.cumulative.last().expect("nonempty support");
        let u = rng.random::<f64>() * total;
        let idx = self.cumulative.partition_point(|&c| c <= u).min(self.configs.len() - 1);
        self.configs[idx]
    }

    fn shots_to_next<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<u64> {
        if self.success_rate <= 0.0 || self.configs.is_empty() {
            return None;
        }
        if self.success_rate >= 1.0 {
            return Some(1);
        }
        let geo = Geometric::new(self.success_rate).expect("probability in (0, 1)");
        Some(geo.sample(rng).saturating_add(1))
    }

    /// Collect `n_s` solutions under `mode`, stopping early on stall or when
    /// every solution has been seen (without replacement only).
    pub fn sample_until<R: Rng + ?Sized>(&self, n_s: usize, mode: SamplingMode, rng: &mut R) -> SampleRecord {
        let mut rec = SampleRecord::default();
        let cutoff = stall_cutoff(n_s, self.success_rate);
        let mut seen: HashSet<u64> = HashSet::new();
        let mut since_progress: u64 = 0;
        while rec.solutions.len() < n_s {
            if mode == SamplingMode::WithoutReplacement && seen.len() == self.configs.len() && !seen.is_empty() {
                rec.exhausted = true;
                break;
            }
            let gap = match self.shots_to_next(rng) {
                Some(g) if since_progress.saturating_add(g) <= cutoff => g,
                _ => {
                    rec.raw_shots += cutoff - since_progress;
                    rec.stalled = true;
                    break;
                }
            };
            rec.raw_shots += gap;
            rec.postselected += 1;
            let x = self.draw_solution(rng);
            let progress = match mode {
                SamplingMode::WithReplacement => {
                    rec.solutions.push(x);
                    true
                }
                SamplingMode::WithoutReplacement => {
                    if seen.insert(x) {
                        rec.solutions.push(x);
                        true
                    } else {
                        false
                    }
                }
            };
            since_progress = if progress { 0 } else { since_progress + gap };
        }
        rec
    }
}

/// Plain computational-basis measurement of every outcome.
pub fn sample_shots<R: Rng + ?Sized>(psi: &StateVector, shots: usize, rng: &mut R) -> Vec<u64> {
    let mut cumulative = Vec::with_capacity(psi.amplitudes().len());
    let mut acc = 0.0;
    for a in psi.amplitudes() {
        acc += a.norm_sqr();
        cumulative.push(acc);
    }
    let last = cumulative.len() - 1;
    (0..shots)
        .map(|_| {
            let u = rng.random::<f64>() * acc;
            cumulative.partition_point(|&c| c <= u).min(last) as u64
        })
        .collect()
}
