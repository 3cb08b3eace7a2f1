//! Seeded parameter sweeps with CSV/JSON output and resumable checkpoints.
//!
//! Output files in the target directory:
//! - `rows.jsonl`: one finished row per line, appended as rows complete;
//!   `--resume` reuses every line whose row hash is still part of the grid.
//! - `runs.csv`: one row per (instance, mixer, depth, epsilon, seed), in grid order.
//! - `summary.csv`: long-format aggregates per (n, mixer, depth, epsilon, metric).
//! - `results.json`: spec, instances, rows with per-step traces, summary, fits.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::fit::{fit_scaling, FitModel, FitResult};
use super::stats::aggregate;
use super::{min_samples, sampling_efficiency, Attempt, MinSamplesStatus};
use crate::counting::baselines::rejection_baseline;
use crate::counting::oracle::{exact_count, ENUMERATE_CAP};
use crate::counting::{prepare_sampler, Backend, EnergyModel, VqcountConfig};
use crate::error::{Error, Result};
use crate::formula::Formula;
use crate::instances::{Alpha, EnsembleSpec, Problem};
use crate::ising::DEFAULT_QUBIT_CAP;
use crate::qsim::sampling::SamplingMode;
use crate::seed;
use crate::variational::OptimizerConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Satisfiable instances are drawn from at most this many candidates per
/// requested instance.
const CANDIDATES_PER_INSTANCE: usize = 50;

fn default_version() -> u32 {
    SCHEMA_VERSION
}
fn default_mode() -> SamplingMode {
    SamplingMode::WithoutReplacement
}
fn default_max_n_s() -> usize {
    1 << 14
}
fn default_rejection_max_draws() -> u64 {
    1 << 32
}
fn default_fit_tail() -> usize {
    5
}
fn default_qubit_cap() -> usize {
    DEFAULT_QUBIT_CAP
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "default_version")]
    pub version: u32,
    pub problem: Problem,
    pub alpha: Alpha,
    pub sizes: Vec<usize>,
    pub depths: Vec<usize>,
    pub epsilons: Vec<f64>,
    pub mixers: Vec<Backend>,
    pub instances_per_size: usize,
    /// Root of the instance streams.
    pub instance_seed: u64,
    /// One row per run seed for every grid cell.
    pub seeds: Vec<u64>,
    #[serde(default = "default_mode")]
    pub mode: SamplingMode,
    #[serde(default = "default_max_n_s")]
    pub max_n_s: usize,
    #[serde(default)]
    pub energy: EnergyModel,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    /// Also run the rejection-sampling baseline for every row.
    #[serde(default)]
    pub rejection_baseline: bool,
    #[serde(default = "default_rejection_max_draws")]
    pub rejection_max_draws: u64,
    /// Number of largest sizes used by the scaling fits.
    #[serde(default = "default_fit_tail")]
    pub fit_tail: usize,
    #[serde(default = "default_qubit_cap")]
    pub qubit_cap: usize,
}

impl SweepSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: SweepSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.version != SCHEMA_VERSION {
            return bad(&format!("unsupported version {}, expected {SCHEMA_VERSION}", self.version));
        }
        if self.sizes.is_empty() || self.depths.is_empty() || self.epsilons.is_empty() || self.mixers.is_empty() || self.seeds.is_empty() {
            return bad("sizes, depths, epsilons, mixers and seeds must be nonempty");
        }
        if self.instances_per_size == 0 {
            return bad("instances_per_size must be positive");
        }
        if let Some(n) = self.sizes.iter().find(|&&n| n > self.qubit_cap || n > ENUMERATE_CAP) {
            return bad(&format!("size {n} exceeds the simulator or enumeration cap"));
        }
        if self.depths.contains(&0) {
            return bad("depths must be at least 1");
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0)) {
            return bad("epsilons must be positive");
        }
        if self.max_n_s == 0 || self.fit_tail == 0 {
            return bad("max_n_s and fit_tail must be positive");
        }
        self.optimizer.validate()
    }

    /// Effective per-row configuration; its hash identifies the row's settings.
    fn row_config(&self, mixer: Backend, depth: usize, epsilon: f64) -> serde_json::Value {
        serde_json::json!({
            "version": self.version,
            "problem": self.problem,
            "alpha": self.alpha,
            "mixer": mixer,
            "depth": depth,
            "epsilon": epsilon,
            "mode": self.mode,
            "max_n_s": self.max_n_s,
            "energy": self.energy,
            "optimizer": self.optimizer,
            "rejection_baseline": self.rejection_baseline,
            "rejection_max_draws": self.rejection_max_draws,
            "qubit_cap": self.qubit_cap,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub n: usize,
    pub m: usize,
    pub index: usize,
    /// Candidate index in the instance stream (unsatisfiable candidates are skipped).
    pub candidate: usize,
    pub hash: String,
    pub n_solutions: u64,
    #[serde(skip)]
    formula: Option<Formula>,
}

/// Flat CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub row_hash: String,
    pub instance_hash: String,
    pub config_hash: String,
    pub seed: u64,
    pub problem: Problem,
    pub alpha: Alpha,
    pub n: usize,
    pub m: usize,
    pub instance_index: usize,
    pub n_solutions: u64,
    pub mixer: Backend,
    pub depth: usize,
    pub epsilon: f64,
    pub status: MinSamplesStatus,
    pub n_s: usize,
    pub estimate: f64,
    pub accuracy: f64,
    pub raw_shots: u64,
    pub postselected: u64,
    pub distinct_used: usize,
    pub sampling_efficiency: Option<f64>,
    pub max_nonuniformity: Option<f64>,
    pub min_success_rate: Option<f64>,
    pub root_success_rate: Option<f64>,
    pub initial_energy: Option<f64>,
    pub optimized_energy: Option<f64>,
    pub evaluations: Option<usize>,
    pub rejection_draws: Option<u64>,
    pub rejection_censored: Option<bool>,
}

/// Row plus per-step and per-attempt traces for the JSON output.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RowDetail {
    pub row: RunRow,
    pub step_success_rate: Vec<f64>,
    pub step_nonuniformity: Vec<Option<f64>>,
    pub attempts: Vec<AttemptRecord>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub n_s: usize,
    pub estimate: f64,
    pub in_band: bool,
    pub raw_shots: u64,
    pub postselected: u64,
    pub distinct_used: usize,
}

impl From<&Attempt> for AttemptRecord {
    fn from(a: &Attempt) -> Self {
        Self {
            n_s: a.n_s,
            estimate: a.estimate,
            in_band: a.in_band,
            raw_shots: a.raw_shots,
            postselected: a.postselected,
            distinct_used: a.distinct_used,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SummaryRow {
    pub n: usize,
    pub mixer: Backend,
    pub depth: usize,
    pub epsilon: f64,
    pub metric: &'static str,
    pub count: usize,
    pub excluded: usize,
    pub mean: f64,
    pub median: f64,
    pub sem: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FitRow {
    pub mixer: Backend,
    pub depth: usize,
    pub epsilon: f64,
    pub metric: &'static str,
    pub fit: Option<FitResult>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default)]
pub struct SweepOptions {
    /// Worker threads; `None` uses all cores.
    pub jobs: Option<usize>,
    pub resume: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepOutput {
    pub schema_version: u32,
    pub spec: SweepSpec,
    pub instances: Vec<InstanceRecord>,
    /// Unsatisfiable candidates skipped per size.
    pub unsat_skipped: BTreeMap<usize, usize>,
    pub rows: Vec<RowDetail>,
    pub summary: Vec<SummaryRow>,
    pub fits: Vec<FitRow>,
    /// Rows taken from the checkpoint instead of recomputed.
    pub resumed_rows: usize,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn short_hash(bytes: &[u8]) -> String {
    sha256_hex(bytes)[..16].to_string()
}

pub fn instance_hash(f: &Formula) -> String {
    short_hash(f.to_text().as_bytes())
}

/// Satisfiable instances for every size, in (size, index) order.
pub fn build_instances(spec: &SweepSpec) -> Result<(Vec<InstanceRecord>, BTreeMap<usize, usize>)> {
    let mut out = Vec::new();
    let mut skipped = BTreeMap::new();
    for &n in &spec.sizes {
        let mut found = 0;
        let mut candidate = 0;
        let mut unsat = 0;
        while found < spec.instances_per_size {
            if candidate >= spec.instances_per_size * CANDIDATES_PER_INSTANCE {
                return Err(Error::Generation(format!(
                    "only {found} satisfiable instances at n = {n} after {candidate} candidates"
                )));
            }
            let es = EnsembleSpec {
                problem: spec.problem,
                n_vars: n,
                alpha: spec.alpha,
                seed: seed::derive(spec.instance_seed, &[seed::INSTANCE, n as u64, candidate as u64]),
            };
            let f = es.generate()?;
            let count = exact_count(&f)?;
            if count == 0 {
                unsat += 1;
            } else {
                out.push(InstanceRecord {
                    n,
                    m: f.n_clauses(),
                    index: found,
                    candidate,
                    hash: instance_hash(&f),
                    n_solutions: count,
                    formula: Some(f),
                });
                found += 1;
            }
            candidate += 1;
        }
        skipped.insert(n, unsat);
    }
    Ok((out, skipped))
}

fn mixer_id(b: Backend) -> u64 {
    match b {
        Backend::Qaoa => 1,
        Backend::Gmqaoa => 2,
        Backend::Uniform => 3,
    }
}

struct Checkpoint {
    file: Mutex<File>,
}

impl Checkpoint {
    fn append(&self, d: &RowDetail) -> Result<()> {
        let line = serde_json::to_string(d).map_err(|e| Error::Numeric(e.to_string()))?;
        let mut f = self.file.lock().expect("checkpoint lock");
        writeln!(f, "{line}").and_then(|_| f.flush()).map_err(|e| Error::io("rows.jsonl", e))
    }
}

fn read_checkpoint(path: &Path) -> Result<HashMap<String, RowDetail>> {
    let mut map = HashMap::new();
    if !path.exists() {
        return Ok(map);
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        // a torn final line from an interrupted write is ignored
        if let Ok(d) = serde_json::from_str::<RowDetail>(&line) {
            map.insert(d.row.row_hash.clone(), d);
        }
    }
    Ok(map)
}

fn run_instance(
    spec: &SweepSpec,
    inst: &InstanceRecord,
    done: &HashMap<String, RowDetail>,
    checkpoint: &Checkpoint,
) -> Result<Vec<RowDetail>> {
    let f = inst.formula.as_ref().expect("generated formula");
    let mut rows = Vec::new();
    let mut rejection_cache: HashMap<(u64, u64), (u64, bool)> = HashMap::new();
    for &mixer in &spec.mixers {
        for &depth in &spec.depths {
            let mut prepared = None;
            for &epsilon in &spec.epsilons {
                let config = spec.row_config(mixer, depth, epsilon);
                let config_hash = short_hash(config.to_string().as_bytes());
                for &run_seed in &spec.seeds {
                    let row_hash = short_hash(format!("{}|{config_hash}|{run_seed}", inst.hash).as_bytes());
                    if let Some(d) = done.get(&row_hash) {
                        rows.push(d.clone());
                        continue;
                    }
                    if prepared.is_none() {
                        let cfg = VqcountConfig {
                            backend: mixer,
                            energy: spec.energy,
                            depth,
                            mode: spec.mode,
                            optimizer: OptimizerConfig {
                                seed: seed::derive(spec.optimizer.seed, &[seed::RUN, inst.n as u64, inst.index as u64]),
                                ..spec.optimizer.clone()
                            },
                            qubit_cap: spec.qubit_cap,
                            ..Default::default()
                        };
                        prepared = Some(prepare_sampler(f, &cfg)?);
                    }
                    let (sampler, info) = prepared.as_ref().expect("prepared sampler");
                    let cell = [seed::RUN, inst.n as u64, inst.index as u64, mixer_id(mixer), depth as u64, epsilon.to_bits()];
                    let ms = min_samples(sampler, inst.n_solutions, epsilon, spec.mode, spec.max_n_s, seed::derive(run_seed, &cell))?;
                    let rejection = if spec.rejection_baseline {
                        let key = (epsilon.to_bits(), run_seed);
                        let r = match rejection_cache.get(&key) {
                            Some(&r) => r,
                            None => {
                                let s = seed::derive(run_seed, &[seed::SHOTS, inst.n as u64, inst.index as u64, epsilon.to_bits()]);
                                let out = rejection_baseline(f, inst.n_solutions, spec.rejection_max_draws, epsilon, s)?;
                                rejection_cache.insert(key, (out.draws, out.censored));
                                (out.draws, out.censored)
                            }
                        };
                        Some(r)
                    } else {
                        None
                    };
                    let run = &ms.run;
                    let row = RunRow {
                        row_hash,
                        instance_hash: inst.hash.clone(),
                        config_hash: config_hash.clone(),
                        seed: run_seed,
                        problem: spec.problem,
                        alpha: spec.alpha,
                        n: inst.n,
                        m: inst.m,
                        instance_index: inst.index,
                        n_solutions: inst.n_solutions,
                        mixer,
                        depth,
                        epsilon,
                        status: ms.status,
                        n_s: ms.n_s,
                        estimate: ms.estimate,
                        accuracy: ms.estimate / inst.n_solutions as f64,
                        raw_shots: ms.raw_shots,
                        postselected: ms.postselected,
                        distinct_used: ms.distinct_used,
                        sampling_efficiency: sampling_efficiency(run, inst.n_solutions),
                        max_nonuniformity: run.max_nonuniformity(),
                        min_success_rate: run.min_success_rate(),
                        root_success_rate: run.per_step.first().map(|s| s.success_rate),
                        initial_energy: info.as_ref().map(|i| i.initial_energy),
                        optimized_energy: info.as_ref().map(|i| i.optimized_energy),
                        evaluations: info.as_ref().map(|i| i.evaluations),
                        rejection_draws: rejection.map(|r| r.0),
                        rejection_censored: rejection.map(|r| r.1),
                    };
                    let detail = RowDetail {
                        row,
                        step_success_rate: run.per_step.iter().map(|s| s.success_rate).collect(),
                        step_nonuniformity: run.per_step.iter().map(|s| s.nonuniformity).collect(),
                        attempts: ms.attempts.iter().map(AttemptRecord::from).collect(),
                    };
                    checkpoint.append(&detail)?;
                    rows.push(detail);
                }
            }
        }
    }
    Ok(rows)
}

type MetricFn = fn(&RunRow) -> Option<f64>;

/// Shot and accuracy metrics use only rows that landed in the band;
/// circuit diagnostics use every row that has them.
const METRICS: [(&str, MetricFn); 9] = [
    ("raw_shots", |r| found(r).then_some(r.raw_shots as f64)),
    ("postselected", |r| found(r).then_some(r.postselected as f64)),
    ("distinct_used", |r| found(r).then_some(r.distinct_used as f64)),
    ("accuracy", |r| found(r).then_some(r.accuracy)),
    ("sampling_efficiency", |r| if found(r) { r.sampling_efficiency } else { None }),
    ("max_nonuniformity", |r| r.max_nonuniformity),
    ("min_success_rate", |r| r.min_success_rate),
    ("root_success_rate", |r| r.root_success_rate),
    ("rejection_draws", |r| match (r.rejection_draws, r.rejection_censored) {
        (Some(d), Some(false)) => Some(d as f64),
        _ => None,
    }),
];

fn found(r: &RunRow) -> bool {
    r.status == MinSamplesStatus::Found
}

type CellKey = (Backend, usize, u64);

pub fn summarize(rows: &[RunRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(usize, u64, usize, u64), Vec<&RunRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.n, mixer_id(r.mixer), r.depth, r.epsilon.to_bits())).or_default().push(r);
    }
    let mut out = Vec::new();
    for rs in groups.values() {
        let first = rs[0];
        for (metric, get) in METRICS {
            let values: Vec<Option<f64>> = rs.iter().map(|r| get(r)).collect();
            let agg = aggregate(&values);
            if values.iter().all(Option::is_none) && (metric == "rejection_draws" || metric.contains("uniformity")) {
                continue;
            }
            out.push(SummaryRow {
                n: first.n,
                mixer: first.mixer,
                depth: first.depth,
                epsilon: first.epsilon,
                metric,
                count: agg.count,
                excluded: agg.excluded,
                mean: agg.mean,
                median: agg.median,
                sem: agg.sem,
            });
        }
    }
    out
}

/// Exponential fits of the median shot counts against n for every cell.
pub fn fit_summary(summary: &[SummaryRow], tail: usize) -> Vec<FitRow> {
    let mut cells: BTreeMap<(u64, usize, u64), (CellKey, BTreeMap<&'static str, Vec<(f64, f64)>>)> = BTreeMap::new();
    for s in summary {
        if !matches!(s.metric, "raw_shots" | "postselected" | "rejection_draws") {
            continue;
        }
        let key = (mixer_id(s.mixer), s.depth, s.epsilon.to_bits());
        let entry = cells.entry(key).or_insert(((s.mixer, s.depth, s.epsilon.to_bits()), BTreeMap::new()));
        if s.count > 0 {
            entry.1.entry(s.metric).or_default().push((s.n as f64, s.median));
        }
    }
    let mut out = Vec::new();
    for ((mixer, depth, eps_bits), metrics) in cells.into_values() {
        for (metric, pts) in metrics {
            let (fit, error) = match fit_scaling(&pts, FitModel::Exponential, Some(tail)) {
                Ok(f) => (Some(f), None),
                Err(e) => (None, Some(e.to_string())),
            };
            out.push(FitRow { mixer, depth, epsilon: f64::from_bits(eps_bits), metric, fit, error });
        }
    }
    out
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_runs_csv(path: impl AsRef<Path>) -> Result<Vec<RunRow>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    r.deserialize()
        .map(|row| row.map_err(|e| Error::Parse { line: e.position().map_or(0, |p| p.line() as usize), msg: e.to_string() }))
        .collect()
}

pub fn checkpoint_path(out_dir: &Path) -> PathBuf {
    out_dir.join("rows.jsonl")
}

/// Run the grid and write all output files into `out_dir`.
pub fn sweep(spec: &SweepSpec, out_dir: impl AsRef<Path>, opts: &SweepOptions) -> Result<SweepOutput> {
    spec.validate()?;
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let ckpt_path = checkpoint_path(out_dir);
    let done = if opts.resume { read_checkpoint(&ckpt_path)? } else { HashMap::new() };
    let file = if opts.resume {
        OpenOptions::new().create(true).append(true).open(&ckpt_path)
    } else {
        File::create(&ckpt_path)
    }
    .map_err(|e| Error::io(&ckpt_path, e))?;
    let checkpoint = Checkpoint { file: Mutex::new(file) };

    let (instances, unsat_skipped) = build_instances(spec)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let per_instance: Vec<Vec<RowDetail>> = pool.install(|| {
        instances
            .par_iter()
            .map(|inst| run_instance(spec, inst, &done, &checkpoint))
            .collect::<Result<_>>()
    })?;
    let rows: Vec<RowDetail> = per_instance.into_iter().flatten().collect();
    let resumed_rows = rows.iter().filter(|d| done.contains_key(&d.row.row_hash)).count();

    let flat: Vec<RunRow> = rows.iter().map(|d| d.row.clone()).collect();
    let summary = summarize(&flat);
    let fits = fit_summary(&summary, spec.fit_tail);
    write_csv(&out_dir.join("runs.csv"), &flat)?;
    write_csv(&out_dir.join("summary.csv"), &summary)?;
    let output = SweepOutput {
        schema_version: SCHEMA_VERSION,
        spec: spec.clone(),
        instances,
        unsat_skipped,
        rows,
        summary,
        fits,
        resumed_rows,
    };
    let json_path = out_dir.join("results.json");
    let text = serde_json::to_string_pretty(&output).map_err(|e| Error::Numeric(e.to_string()))?;
    fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))?;
    Ok(output)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: &str = r#"
problem = "nae3sat"
alpha = "1"
sizes = [6]
depths = [1]
epsilons = [0.5]
mixers = ["uniform"]
instances_per_size = 2
instance_seed = 3
seeds = [1]
"#;

    #[test]
    fn parses_minimal_spec() {
        let s = SweepSpec::from_toml(TINY).unwrap();
        assert_eq!(s.version, SCHEMA_VERSION);
        assert_eq!(s.mode, SamplingMode::WithoutReplacement);
        assert_eq!(s.optimizer, OptimizerConfig::default());
    }

    #[test]
    fn unknown_field_is_named() {
        let err = SweepSpec::from_toml(&format!("{TINY}\nbogus_knob = 1\n")).unwrap_err();
        assert!(matches!(&err, Error::Config(m) if m.contains("bogus_knob")), "{err}");
    }

    #[test]
    fn empty_lists_rejected() {
        let text = TINY.replace("sizes = [6]", "sizes = []");
        assert!(matches!(SweepSpec::from_toml(&text), Err(Error::Config(_))));
    }

    #[test]
    fn instances_are_satisfiable_and_stable() {
        let s = SweepSpec::from_toml(TINY).unwrap();
        let (a, _) = build_instances(&s).unwrap();
        let (b, _) = build_instances(&s).unwrap();
        assert_eq!(a.len(), 2);
        assert!(a.iter().all(|i| i.n_solutions > 0));
        assert_eq!(a.iter().map(|i| &i.hash).collect::<Vec<_>>(), b.iter().map(|i| &i.hash).collect::<Vec<_>>());
    }
}
