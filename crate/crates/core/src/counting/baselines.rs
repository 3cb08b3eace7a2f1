//! Classical rejection-sampling baseline and closed-form sample-cost curves.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::within_band;
use crate::error::{Error, Result};
use crate::formula::Formula;
use crate::seed;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RejectionOutcome {
    /// Draws in the first budget whose estimate landed in the band, or the
    /// last budget tried when censored.
    pub draws: u64,
    pub hits: u64,
    pub estimate: f64,
    /// No budget up to `max_draws` landed in the band.
    pub censored: bool,
    /// Budgets tried, in order.
    pub budgets: Vec<u64>,
}

/// Estimate the count as 2^k * hits / draws from uniform draws over the free
/// variables, with budgets 1, 2, 4, ... (fresh draws per budget) until the
/// estimate lies in the multiplicative band around `exact`.
pub fn rejection_baseline(
    f: &Formula,
    exact: u64,
    max_draws: u64,
    epsilon: f64,
    seed_value: u64,
) -> Result<RejectionOutcome> {
    if !(epsilon > 0.0) {
        return Err(Error::input("epsilon must be positive"));
    }
    let k = f.n_free();
    if k > 63 {
        return Err(Error::Resource("rejection sampling over more than 63 free variables".into()));
    }
    let space = (1u64 << k) as f64;
    let prefix = f.prefix_mask();
    let shift = f.n_pinned();
    let free_mask = if k == 0 { 0 } else { u64::MAX >> (64 - k) };
    let mut out = RejectionOutcome { draws: 0, hits: 0, estimate: 0.0, censored: true, budgets: Vec::new() };
    let mut budget = 1u64;
    while budget <= max_draws {
        let mut rng = seed::rng(seed::derive(seed_value, &[seed::SHOTS, budget]));
        let hits = (0..budget)
            .filter(|_| f.clauses_satisfied(prefix | ((rng.random::<u64>() & free_mask) << shift)))
            .count() as u64;
        let estimate = space * hits as f64 / budget as f64;
        out.budgets.push(budget);
        out.draws = budget;
        out.hits = hits;
        out.estimate = estimate;
        if within_band(estimate, exact as f64, epsilon) {
            out.censored = false;
            return Ok(out);
        }
        budget = match budget.checked_mul(2) {
            Some(b) => b,
            None => break,
        };
    }
    Ok(out)
}

/// Leading constants of the sample-cost formulas (unit by default; the
/// formulas are asymptotic and carry no calibrated constants).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineConstants {
    pub bhmt: f64,
    pub prior_vqa: f64,
    pub vqcount: f64,
}

impl Default for BaselineConstants {
    fn default() -> Self {
        Self { bhmt: 1.0, prior_vqa: 1.0, vqcount: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AnalyticBaselines {
    /// c sqrt(2^n / N)
    pub bhmt: f64,
    /// c sqrt(N log(1/delta)) / (r eps)
    pub prior_vqa: f64,
    /// c n^2 log(1/delta) / (r eps^2)
    pub vqcount_bound: f64,
}

pub fn analytic_baselines(
    n: usize,
    n_solutions: f64,
    success_rate: f64,
    epsilon: f64,
    delta: f64,
    constants: &BaselineConstants,
) -> Result<AnalyticBaselines> {
    if n == 0 || !(n_solutions > 0.0) || !(success_rate > 0.0) || !(epsilon > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::input("analytic baselines need positive n, N, r, eps and delta in (0, 1)"));
    }
    let log_inv_delta = (1.0 / delta).ln();
    let space = 2f64.powi(n as i32);
    Ok(AnalyticBaselines {
        bhmt: constants.bhmt * (space / n_solutions).sqrt(),
        prior_vqa: constants.prior_vqa * (n_solutions * log_inv_delta).sqrt() / (success_rate * epsilon),
        vqcount_bound: constants.vqcount * (n as f64).powi(2) * log_inv_delta / (success_rate * epsilon * epsilon),
    })
}
