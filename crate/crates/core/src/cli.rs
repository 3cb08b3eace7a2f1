//! Command-line front end: `gen`, `count`, `sweep`, `fit`.
//!
//! Exit codes: 0 success, 2 usage, 3 input/parse/config, 4 resource cap,
//! 5 stalled or failed run.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::counting::oracle::{exact_count, COUNT_CAP, ENUMERATE_CAP};
use crate::counting::{vqcount, within_band, Backend, EnergyModel, RunStatus, VqcountConfig};
use crate::error::{Error, Result};
use crate::experiments::fit::{fit_scaling, FitModel};
use crate::experiments::sweep::{instance_hash, sweep, SweepOptions, SweepSpec};
use crate::formula::Formula;
use crate::instances::{Alpha, EnsembleSpec, Problem};
use crate::qsim::sampling::SamplingMode;
use crate::seed;
use crate::variational::OptimizerConfig;

#[derive(Debug, Parser)]
#[command(name = "vqcount", version, about = "Approximate model counting with simulated variational circuits")]
pub struct Cli {
    /// Emit machine-readable JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    WithoutReplacement,
    WithReplacement,
}

impl From<ModeArg> for SamplingMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::WithoutReplacement => SamplingMode::WithoutReplacement,
            ModeArg::WithReplacement => SamplingMode::WithReplacement,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EnergyArg {
    Ising,
    Oracle,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate random instances in the text instance format.
    Gen {
        /// nae3sat or one3sat.
        #[arg(long)]
        problem: Problem,
        /// Clause density as a fraction, e.g. 1, 2 or 2/3 (defaults: 1 for
        /// nae3sat, 2/3 for one3sat).
        #[arg(long)]
        alpha: Option<Alpha>,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Also report the exact solution count of each instance.
        #[arg(long)]
        with_count: bool,
    },
    /// Estimate (or exactly count) the solutions of an instance file.
    Count {
        instance: PathBuf,
        /// Exhaustive count instead of the sampling estimate.
        #[arg(long)]
        exact: bool,
        #[arg(long, default_value = "qaoa")]
        backend: Backend,
        /// Circuit depth.
        #[arg(long, default_value_t = 3)]
        p: usize,
        /// Distinct samples per self-reduction step.
        #[arg(long, default_value_t = 16)]
        ns: usize,
        /// Band half-width used to report whether the estimate is within
        /// (1+eps)^-1 N ..= (1+eps) N of the exact count.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "without-replacement")]
        mode: ModeArg,
        /// Optimizer evaluation budget.
        #[arg(long, default_value_t = 500)]
        n_o: usize,
        #[arg(long, value_enum, default_value = "ising")]
        energy: EnergyArg,
    },
    /// Run a sweep described by a TOML config.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Reuse finished rows from the checkpoint in the output directory.
        #[arg(long)]
        resume: bool,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Fit a scaling model to points read from a CSV file.
    Fit {
        #[arg(long)]
        input: PathBuf,
        /// exponential, power or inverse_epsilon.
        #[arg(long, default_value = "exponential")]
        model: FitModel,
        #[arg(long, default_value = "x")]
        x: String,
        #[arg(long, default_value = "y")]
        y: String,
        /// Keep only rows where COLUMN=VALUE (repeatable).
        #[arg(long = "where", value_name = "COLUMN=VALUE")]
        filters: Vec<String>,
        /// Use only the points with the largest x.
        #[arg(long)]
        tail: Option<usize>,
    },
}

/// Runs the parsed command; the return value is the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn emit(out: &mut dyn Write, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Numeric(e.to_string()))?;
    writeln!(out, "{text}").map_err(|e| Error::io("<stdout>", e))
}

fn line(out: &mut dyn Write, text: &str) -> Result<()> {
    writeln!(out, "{text}").map_err(|e| Error::io("<stdout>", e))
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Gen { problem, alpha, n, count, seed, out: dir, with_count } => {
            cmd_gen(problem, alpha, n, count, seed, &dir, with_count, cli.json, out)
        }
        Command::Count { instance, exact, backend, p, ns, eps, seed, mode, n_o, energy } => {
            let f = Formula::read_instance(&instance)?;
            if exact {
                return cmd_count_exact(&f, &instance, out);
            }
            let cfg = VqcountConfig {
                backend,
                energy: match energy {
                    EnergyArg::Ising => EnergyModel::Ising,
                    EnergyArg::Oracle => EnergyModel::Oracle,
                },
                depth: p,
                n_s: ns,
                mode: mode.into(),
                optimizer: OptimizerConfig { max_evals: n_o, ..Default::default() },
                ..Default::default()
            };
            cmd_count(&f, &instance, &cfg, eps, seed, out)
        }
        Command::Sweep { config, out: dir, resume, jobs } => {
            let spec = SweepSpec::load(&config)?;
            let res = sweep(&spec, &dir, &SweepOptions { jobs, resume })?;
            let failed = res.rows.iter().filter(|d| d.row.status == crate::experiments::MinSamplesStatus::Failed).count();
            let meta = json!({
                "out": dir,
                "rows": res.rows.len(),
                "resumed_rows": res.resumed_rows,
                "failed_rows": failed,
                "instances": res.instances.len(),
                "unsat_skipped": res.unsat_skipped,
            });
            if cli.json {
                emit(out, &meta)?;
            } else {
                line(out, &format!("{} rows ({} resumed, {} failed) written to {}", res.rows.len(), res.resumed_rows, failed, dir.display()))?;
            }
            Ok(0)
        }
        Command::Fit { input, model, x, y, filters, tail } => {
            let pts = read_points(&input, &x, &y, &filters)?;
            let r = fit_scaling(&pts, model, tail)?;
            if cli.json {
                emit(out, &r)?;
            } else {
                line(out, &format!("{} parameter {} prefactor {} points {} residual {}", r.model, r.parameter, r.prefactor, r.points_used, r.residual))?;
            }
            Ok(0)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_gen(
    problem: Problem,
    alpha: Option<Alpha>,
    n: usize,
    count: usize,
    seed_value: u64,
    dir: &Path,
    with_count: bool,
    json_out: bool,
    out: &mut dyn Write,
) -> Result<i32> {
    let alpha = alpha.unwrap_or(match problem {
        Problem::Nae3sat => Alpha::ONE,
        Problem::OneIn3sat => Alpha::TWO_THIRDS,
    });
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut records = Vec::new();
    for i in 0..count {
        let spec = EnsembleSpec {
            problem,
            n_vars: n,
            alpha,
            seed: seed::derive(seed_value, &[seed::INSTANCE, n as u64, i as u64]),
        };
        let f = spec.generate().map_err(|e| match e {
            Error::Input(m) => Error::Usage(m),
            other => other,
        })?;
        let path = dir.join(format!("{}_n{}_a{}_s{}_{:03}.vqc", problem.tag(), n, alpha.to_string().replace('/', "-"), seed_value, i));
        f.write_instance(&path)?;
        let n_solutions = if with_count && n <= COUNT_CAP { Some(exact_count(&f)?) } else { None };
        records.push(json!({
            "path": path,
            "instance_hash": instance_hash(&f),
            "n_vars": f.n_vars(),
            "n_clauses": f.n_clauses(),
            "n_solutions": n_solutions,
        }));
        if !json_out {
            match n_solutions {
                Some(c) => line(out, &format!("{} {c}", path.display()))?,
                None => line(out, &path.display().to_string())?,
            }
        }
    }
    if json_out {
        emit(out, &records)?;
    }
    Ok(0)
}

fn cmd_count_exact(f: &Formula, path: &Path, out: &mut dyn Write) -> Result<i32> {
    let n = exact_count(f)?;
    emit(
        out,
        &json!({
            "instance": path,
            "instance_hash": instance_hash(f),
            "n_vars": f.n_vars(),
            "n_clauses": f.n_clauses(),
            "semantics": f.semantics(),
            "n_solutions": n,
        }),
    )?;
    Ok(0)
}

fn cmd_count(f: &Formula, path: &Path, cfg: &VqcountConfig, eps: Option<f64>, seed_value: u64, out: &mut dyn Write) -> Result<i32> {
    let est = vqcount(f, cfg, seed_value)?;
    let exact = if f.n_free() <= ENUMERATE_CAP { Some(exact_count(f)?) } else { None };
    let band = match (eps, exact) {
        (Some(e), Some(n)) if n > 0 => Some(within_band(est.estimate, n as f64, e)),
        _ => None,
    };
    emit(
        out,
        &json!({
            "instance": path,
            "instance_hash": instance_hash(f),
            "seed": seed_value,
            "config": cfg,
            "epsilon": eps,
            "exact_count": exact,
            "within_band": band,
            "result": est,
        }),
    )?;
    Ok(match est.status {
        RunStatus::Completed => 0,
        RunStatus::Unsat | RunStatus::Failed => Error::Stall(String::new()).exit_code(),
    })
}

fn read_points(path: &Path, x: &str, y: &str, filters: &[String]) -> Result<Vec<(f64, f64)>> {
    let mut conds = Vec::new();
    for f in filters {
        let (k, v) = f.split_once('=').ok_or_else(|| Error::Usage(format!("filter `{f}` is not COLUMN=VALUE")))?;
        conds.push((k.to_string(), v.to_string()));
    }
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    let mut pts = Vec::new();
    for (i, rec) in rdr.deserialize::<BTreeMap<String, String>>().enumerate() {
        let rec = rec.map_err(|e| Error::Parse { line: i + 2, msg: e.to_string() })?;
        if conds.iter().any(|(k, v)| rec.get(k) != Some(v)) {
            continue;
        }
        let get = |col: &str| -> Result<f64> {
            let raw = rec.get(col).ok_or_else(|| Error::input(format!("column `{col}` not found")))?;
            raw.parse().map_err(|_| Error::Parse { line: i + 2, msg: format!("`{raw}` in column `{col}` is not a number") })
        };
        pts.push((get(x)?, get(y)?));
    }
    Ok(pts)
}
