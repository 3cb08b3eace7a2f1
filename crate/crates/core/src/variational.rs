//! Parameter initialization and local minimization of the energy expectation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qsim::QaoaCircuit;
use crate::seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    /// Maximum objective evaluations (n_o).
    pub max_evals: usize,
    /// Annealing time step of the TQA ramp.
    pub tqa_dt: f64,
    /// Simplex stops when the spread of objective values drops below this.
    pub tolerance: f64,
    /// Edge length of the initial simplex.
    pub initial_step: f64,
    /// Run a finite-difference gradient pass after the simplex phase.
    pub refine: bool,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_evals: 500,
            tqa_dt: 0.75,
            tolerance: 1e-6,
            initial_step: 0.1,
            refine: true,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_evals < 1 {
            return Err(Error::Config("max_evals must be at least 1".into()));
        }
        if !(self.tqa_dt > 0.0) {
            return Err(Error::Config("tqa_dt must be positive".into()));
        }
        if !(self.tolerance >= 0.0) || !(self.initial_step > 0.0) {
            return Err(Error::Config("tolerance must be >= 0 and initial_step > 0".into()));
        }
        Ok(())
    }
}

/// Linear annealing ramp sampled at layer midpoints t_l = (l - 1/2) / p:
/// gamma_l = t_l dt, beta_l = (1 - t_l) dt.
pub fn tqa_init(p: usize, dt: f64) -> (Vec<f64>, Vec<f64>) {
    (1..=p)
        .map(|l| {
            let t = (l as f64 - 0.5) / p as f64;
            ((1.0 - t) * dt, t * dt)
        })
        .unzip()
}

/// Circuit starting angles. Both mixers are generated by operators (sum X and
/// |s><s|) whose top eigenstate is the initial state, so the ramp that ends in
/// low energy runs with negated betas.
pub fn tqa_start(p: usize, dt: f64) -> (Vec<f64>, Vec<f64>) {
    let (betas, gammas) = tqa_init(p, dt);
    (betas.into_iter().map(|b| -b).collect(), gammas)
}

/// Energy expectation of the circuit output.
pub fn objective(c: &QaoaCircuit) -> Result<f64> {
    let psi = c.run()?;
    let e: f64 = psi
        .amplitudes()
        .iter()
        .zip(c.energy().values())
        .map(|(a, e)| a.norm_sqr() * e)
        .sum();
    if !e.is_finite() {
        return Err(Error::Numeric("non-finite energy expectation".into()));
    }
    Ok(e)
}

#[derive(Clone, Debug)]
pub struct OptimizeOutcome {
    pub circuit: QaoaCircuit,
    pub initial_energy: f64,
    pub energy: f64,
    pub evaluations: usize,
    /// Best objective seen after each evaluation.
    pub history: Vec<f64>,
}

struct Budget<'a> {
    base: &'a QaoaCircuit,
    max: usize,
    history: Vec<f64>,
    best: (f64, Vec<f64>),
}

impl Budget<'_> {
    fn remaining(&self) -> usize {
        self.max - self.history.len()
    }

    fn eval(&mut self, x: &[f64]) -> Result<Option<f64>> {
        if self.remaining() == 0 {
            return Ok(None);
        }
        let f = objective(&self.base.with_params(x)?)?;
        if f < self.best.0 {
            self.best = (f, x.to_vec());
        }
        self.history.push(self.best.0);
        Ok(Some(f))
    }
}

/// Minimize the energy expectation starting from the circuit's parameters.
/// The circuit's angles are used as the starting point; the returned circuit
/// carries the best parameters seen.
pub fn optimize(c: &QaoaCircuit, cfg: &OptimizerConfig) -> Result<OptimizeOutcome> {
    cfg.validate()?;
    let x0 = c.params();
    let f0 = objective(c)?;
    let mut budget = Budget {
        base: c,
        max: cfg.max_evals,
        history: vec![f0],
        best: (f0, x0.clone()),
    };
    if !x0.is_empty() {
        nelder_mead(&mut budget, &x0, f0, cfg)?;
        if cfg.refine {
            gradient_refine(&mut budget, cfg)?;
        }
    }
    let (energy, params) = budget.best.clone();
    Ok(OptimizeOutcome {
        circuit: c.with_params(&params)?,
        initial_energy: f0,
        energy,
        evaluations: budget.history.len(),
        history: budget.history,
    })
}

fn nelder_mead(b: &mut Budget<'_>, x0: &[f64], f0: f64, cfg: &OptimizerConfig) -> Result<()> {
    const REFLECT: f64 = 1.0;
    const EXPAND: f64 = 2.0;
    const CONTRACT: f64 = 0.5;
    const SHRINK: f64 = 0.5;

    let dim = x0.len();
    let mut rng = seed::rng(cfg.seed);
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0.to_vec(), f0)];
    for i in 0..dim {
        let mut x = x0.to_vec();
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        x[i] += sign * cfg.initial_step;
        match b.eval(&x)? {
            Some(f) => simplex.push((x, f)),
            None => return Ok(()),
        }
    }

    let combine = |a: &[f64], bv: &[f64], t: f64| -> Vec<f64> {
        a.iter().zip(bv).map(|(x, y)| x + t * (y - x)).collect()
    };

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (f_best, f_worst) = (simplex[0].1, simplex[dim].1);
        if (f_worst - f_best).abs() <= cfg.tolerance {
            return Ok(());
        }
        let mut centroid = vec![0.0; dim];
        for (x, _) in &simplex[..dim] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / dim as f64;
            }
        }
        let worst = simplex[dim].0.clone();
        let xr = combine(&centroid, &worst, -REFLECT);
        let Some(fr) = b.eval(&xr)? else { return Ok(()) };

        if fr < f_best {
            let xe = combine(&centroid, &xr, EXPAND);
            let Some(fe) = b.eval(&xe)? else {
                simplex[dim] = (xr, fr);
                return Ok(());
            };
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
        } else {
            let (xc, outside) = if fr < f_worst {
                (combine(&centroid, &xr, CONTRACT), true)
            } else {
                (combine(&centroid, &worst, CONTRACT), false)
            };
            let Some(fc) = b.eval(&xc)? else { return Ok(()) };
            let accept = if outside { fc <= fr } else { fc < f_worst };
            if accept {
                simplex[dim] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let x = combine(&best, &vertex.0, SHRINK);
                    let Some(f) = b.eval(&x)? else { return Ok(()) };
                    *vertex = (x, f);
                }
            }
        }
    }
}

fn gradient_refine(b: &mut Budget<'_>, cfg: &OptimizerConfig) -> Result<()> {
    const H: f64 = 1e-5;
    let dim = b.best.1.len();
    while b.remaining() > 2 * dim {
        let (f, x) = b.best.clone();
        let mut grad = vec![0.0; dim];
        for i in 0..dim {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += H;
            xm[i] -= H;
            let (Some(fp), Some(fm)) = (b.eval(&xp)?, b.eval(&xm)?) else { return Ok(()) };
            grad[i] = (fp - fm) / (2.0 * H);
        }
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm < cfg.tolerance.max(1e-10) {
            return Ok(());
        }
        let mut step = cfg.initial_step / norm;
        let mut improved = false;
        for _ in 0..20 {
            let xn: Vec<f64> = x.iter().zip(&grad).map(|(xi, g)| xi - step * g).collect();
            let Some(fnew) = b.eval(&xn)? else { return Ok(()) };
            if fnew < f - cfg.tolerance * 1e-3 {
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            return Ok(());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::EnergyVector;
    use crate::qsim::Mixer;

    #[test]
    fn tqa_single_layer() {
        let (b, g) = tqa_init(1, 0.75);
        assert_eq!(b, vec![0.375]);
        assert_eq!(g, vec![0.375]);
    }

    #[test]
    fn tqa_ramps_are_monotone() {
        let (b, g) = tqa_init(2, 0.75);
        assert!(b[0] > b[1]);
        assert!(g[0] < g[1]);
        let (b, g) = tqa_init(3, 0.0);
        assert!(b.iter().chain(&g).all(|&v| v == 0.0));
    }

    #[test]
    fn start_lowers_energy_on_toy() {
        // ground state |0> of diag(0, 2): the negated ramp beats the uniform value 1
        let c = toy();
        let e = objective(&c).unwrap();
        let (b, g) = tqa_init(1, 0.75);
        let up = objective(&c.with_params(&[b, g].concat()).unwrap()).unwrap();
        assert!(e < 1.0 && up > 1.0, "start {e}, positive ramp {up}");
    }

    fn toy() -> QaoaCircuit {
        let (b, g) = tqa_start(1, 0.75);
        QaoaCircuit::new(Mixer::X, b, g, EnergyVector::new(vec![0.0, 2.0]), vec![true, false]).unwrap()
    }

    #[test]
    fn single_evaluation_returns_initial() {
        let c = toy();
        let cfg = OptimizerConfig { max_evals: 1, ..Default::default() };
        let out = optimize(&c, &cfg).unwrap();
        assert_eq!(out.circuit.params(), c.params());
        assert_eq!(out.evaluations, 1);
    }

    #[test]
    fn best_seen_is_monotone_and_budgeted() {
        let cfg = OptimizerConfig { max_evals: 60, ..Default::default() };
        let out = optimize(&toy(), &cfg).unwrap();
        assert!(out.evaluations <= 60);
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
        assert!(out.energy <= out.initial_energy);
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = OptimizerConfig { max_evals: 80, seed: 5, ..Default::default() };
        let a = optimize(&toy(), &cfg).unwrap();
        let b = optimize(&toy(), &cfg).unwrap();
        assert_eq!(a.circuit.params(), b.circuit.params());
        assert_eq!(a.history, b.history);
    }

    #[test]
    fn matches_grid_scan_on_toy() {
        // grid-scan oracle over one period of (beta, gamma)
        let base = toy();
        let n = 100;
        let mut grid_min = f64::INFINITY;
        for i in 0..n {
            for j in 0..n {
                let beta = std::f64::consts::PI * i as f64 / n as f64;
                let gamma = std::f64::consts::PI * j as f64 / n as f64;
                let e = objective(&base.with_params(&[beta, gamma]).unwrap()).unwrap();
                grid_min = grid_min.min(e);
            }
        }
        let out = optimize(&base, &OptimizerConfig::default()).unwrap();
        assert!(out.energy <= grid_min + 1e-3, "optimizer {} vs grid {}", out.energy, grid_min);
    }
}
