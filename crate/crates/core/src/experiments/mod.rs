//! Measurement procedures: minimum sample search, sampling efficiency,
//! parameter sweeps and scaling fits.

pub mod fit;
pub mod stats;
pub mod sweep;

use serde::{Deserialize, Serialize};

use crate::counting::{run_self_reduction, within_band, CountEstimate, PreparedSampler, RunStatus};
use crate::error::{Error, Result};
use crate::qsim::sampling::SamplingMode;
use crate::seed;

pub use fit::{fit_scaling, FitModel, FitResult};
pub use stats::{aggregate, Aggregate};
pub use sweep::{sweep, SweepOptions, SweepOutput, SweepSpec};

#[derive(Clone, Debug, Serialize)]
pub struct Attempt {
    pub n_s: usize,
    pub status: RunStatus,
    pub estimate: f64,
    pub in_band: bool,
    pub raw_shots: u64,
    pub postselected: u64,
    pub distinct_used: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinSamplesStatus {
    /// Some budget landed in the band.
    Found,
    /// The schedule passed N (or `max_n_s`); the reported run uses the last budget.
    Censored,
    /// A run ended with an empty sample set.
    Failed,
}

#[derive(Clone, Debug, Serialize)]
pub struct MinSamples {
    pub status: MinSamplesStatus,
    /// Budget of the reported run.
    pub n_s: usize,
    pub raw_shots: u64,
    pub postselected: u64,
    pub distinct_used: usize,
    pub estimate: f64,
    pub attempts: Vec<Attempt>,
    /// The reported run, with per-step diagnostics.
    pub run: CountEstimate,
}

/// Run the self-reduction with n_s = 1, 2, 4, ... on clones of `sampler` and
/// stop at the first estimate in the band around `exact`. Once n_s reaches
/// `exact` every step collects its whole solution set (without replacement),
/// so that budget is the last one tried.
pub fn min_samples(
    sampler: &PreparedSampler,
    exact: u64,
    epsilon: f64,
    mode: SamplingMode,
    max_n_s: usize,
    seed_value: u64,
) -> Result<MinSamples> {
    if exact == 0 {
        return Err(Error::input("min_samples needs a satisfiable formula"));
    }
    if !(epsilon > 0.0) || max_n_s < 1 {
        return Err(Error::input("min_samples needs eps > 0 and max_n_s >= 1"));
    }
    let mut attempts = Vec::new();
    let mut n_s = 1usize;
    loop {
        let mut rng = seed::rng(seed::derive(seed_value, &[seed::SHOTS, n_s as u64]));
        let run = run_self_reduction(sampler.clone(), n_s, mode, &mut rng)?;
        let in_band = run.status == RunStatus::Completed && within_band(run.estimate, exact as f64, epsilon);
        attempts.push(Attempt {
            n_s,
            status: run.status,
            estimate: run.estimate,
            in_band,
            raw_shots: run.total_raw_shots,
            postselected: run.total_postselected,
            distinct_used: run.total_distinct_used,
        });
        let last = n_s as u64 >= exact || n_s >= max_n_s;
        let status = if in_band {
            Some(MinSamplesStatus::Found)
        } else if run.status != RunStatus::Completed {
            Some(MinSamplesStatus::Failed)
        } else if last {
            Some(MinSamplesStatus::Censored)
        } else {
            None
        };
        if let Some(status) = status {
            return Ok(MinSamples {
                status,
                n_s,
                raw_shots: run.total_raw_shots,
                postselected: run.total_postselected,
                distinct_used: run.total_distinct_used,
                estimate: run.estimate,
                attempts,
                run,
            });
        }
        n_s = (n_s * 2).min(max_n_s).min(exact.try_into().unwrap_or(usize::MAX)).max(n_s + 1);
    }
}

/// N over the number of distinct solutions the run used.
pub fn sampling_efficiency(run: &CountEstimate, exact: u64) -> Option<f64> {
    (run.total_distinct_used > 0).then(|| exact as f64 / run.total_distinct_used as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::{prepare_sampler, Backend, VqcountConfig};
    use crate::formula::{Formula, Semantics};

    fn uniform_sampler(f: &Formula) -> PreparedSampler {
        let cfg = VqcountConfig { backend: Backend::Uniform, ..Default::default() };
        prepare_sampler(f, &cfg).unwrap().0
    }

    #[test]
    fn three_solutions_land_in_band() {
        let f = Formula::new(3, vec![[0, 1, 2]], Semantics::ExactlyOne).unwrap();
        let out = min_samples(&uniform_sampler(&f), 3, 1.0 / 3.0, SamplingMode::WithoutReplacement, 1 << 10, 2).unwrap();
        assert_eq!(out.status, MinSamplesStatus::Found);
        assert!(out.estimate >= 2.25 && out.estimate <= 4.0);
        assert!(out.n_s <= 3);
    }

    #[test]
    fn schedule_strictly_increases() {
        let f = Formula::new(9, vec![[0, 1, 2], [3, 4, 5], [6, 7, 8], [0, 3, 6]], Semantics::Nae).unwrap();
        let exact = crate::counting::oracle::exact_count(&f).unwrap();
        let out = min_samples(&uniform_sampler(&f), exact, 0.01, SamplingMode::WithoutReplacement, 1 << 12, 5).unwrap();
        assert!(out.attempts.windows(2).all(|w| w[1].n_s > w[0].n_s));
        assert_eq!(out.attempts[0].n_s, 1);
    }

    #[test]
    fn efficiency_definition() {
        let f = Formula::new(3, vec![[0, 1, 2]], Semantics::Nae).unwrap();
        let out = min_samples(&uniform_sampler(&f), 6, 1e-9, SamplingMode::WithoutReplacement, 64, 1).unwrap();
        // n_s = N forces exhaustive sets: estimate is exact
        assert_eq!(out.estimate, 6.0);
        let eff = sampling_efficiency(&out.run, 6).unwrap();
        assert_eq!(eff, 6.0 / out.run.total_distinct_used as f64);
        assert!(eff >= 1.0);
    }
}
