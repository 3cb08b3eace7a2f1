//! Python bindings: formulas, generation, exact counting, circuit simulation,
//! the counting pipeline and scaling fits. Structured results cross the
//! boundary as JSON and come out as plain dicts.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyModule;

use vqcount::counting::oracle::{exact_count as exact, solution_mask};
use vqcount::counting::{Backend, EnergyModel, VqcountConfig};
use vqcount::experiments::fit::{fit_scaling as fit, FitModel};
use vqcount::formula::{Assignment, Formula as CoreFormula, Semantics};
use vqcount::instances::{Alpha, EnsembleSpec, Problem};
use vqcount::ising::DEFAULT_QUBIT_CAP;
use vqcount::qsim::sampling::SamplingMode;
use vqcount::qsim::{metrics, Mixer, QaoaCircuit};
use vqcount::variational::OptimizerConfig;

create_exception!(pyvqcount, VqcountError, PyValueError);

fn err(e: vqcount::Error) -> PyErr {
    VqcountError::new_err(e.to_string())
}

fn parse<T: std::str::FromStr>(what: &str, s: &str) -> PyResult<T> {
    s.parse().map_err(|_| PyValueError::new_err(format!("unknown {what} `{s}`")))
}

fn to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    PyModule::import(py, "json")?.call_method1("loads", (text,))
}

#[pyclass(frozen, module = "pyvqcount")]
struct Formula {
    inner: CoreFormula,
}

#[pymethods]
impl Formula {
    #[new]
    #[pyo3(signature = (n_vars, clauses, semantics = "nae"))]
    fn new(n_vars: usize, clauses: Vec<[usize; 3]>, semantics: &str) -> PyResult<Self> {
        let sem: Semantics = parse("semantics", semantics)?;
        Ok(Self { inner: CoreFormula::new(n_vars, clauses, sem).map_err(err)? })
    }

    /// Parse the text instance format.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Self { inner: text.parse().map_err(err)? })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn n_vars(&self) -> usize {
        self.inner.n_vars()
    }

    #[getter]
    fn n_clauses(&self) -> usize {
        self.inner.n_clauses()
    }

    #[getter]
    fn n_free(&self) -> usize {
        self.inner.n_free()
    }

    #[getter]
    fn semantics(&self) -> &'static str {
        self.inner.semantics().tag()
    }

    #[getter]
    fn clauses(&self) -> Vec<[usize; 3]> {
        self.inner.clauses().to_vec()
    }

    #[getter]
    fn pinned(&self) -> Vec<bool> {
        self.inner.pinned().to_vec()
    }

    /// New formula with the next free variable fixed to `bit`.
    fn fix_next(&self, bit: bool) -> PyResult<Self> {
        Ok(Self { inner: self.inner.fix_next(bit).map_err(err)? })
    }

    fn evaluate(&self, bits: Vec<bool>) -> PyResult<bool> {
        self.inner.evaluate(&Assignment::new(bits)).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Formula(n_vars={}, n_clauses={}, semantics='{}', pinned={})",
            self.inner.n_vars(),
            self.inner.n_clauses(),
            self.inner.semantics().tag(),
            self.inner.n_pinned()
        )
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }
}

/// Draw one instance from the ensemble; `alpha` is a fraction such as "2/3".
#[pyfunction]
#[pyo3(signature = (problem, n, alpha = None, seed = 0))]
fn generate(problem: &str, n: usize, alpha: Option<&str>, seed: u64) -> PyResult<Formula> {
    let problem: Problem = parse("problem", problem)?;
    let alpha = match alpha {
        Some(a) => parse::<Alpha>("alpha", a)?,
        None if problem == Problem::Nae3sat => Alpha::ONE,
        None => Alpha::TWO_THIRDS,
    };
    let spec = EnsembleSpec { problem, n_vars: n, alpha, seed };
    Ok(Formula { inner: spec.generate().map_err(err)? })
}

#[pyfunction]
fn exact_count(formula: &Formula) -> PyResult<u64> {
    exact(&formula.inner).map_err(err)
}

/// Run a circuit with fixed angles; returns probabilities and output metrics.
#[pyfunction]
#[pyo3(signature = (formula, mixer, betas, gammas, energy = "ising"))]
fn simulate<'py>(
    py: Python<'py>,
    formula: &Formula,
    mixer: &str,
    betas: Vec<f64>,
    gammas: Vec<f64>,
    energy: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let mixer: Mixer = parse("mixer", mixer)?;
    let model = parse_energy(energy)?;
    let f = &formula.inner;
    let e = model.energy_vector(f, DEFAULT_QUBIT_CAP).map_err(err)?;
    let mask = solution_mask(f).map_err(err)?;
    let c = QaoaCircuit::new(mixer, betas, gammas, e, mask).map_err(err)?;
    let psi = py.detach(|| c.run()).map_err(err)?;
    let m = metrics(&psi, c.solution_mask(), c.energy()).map_err(err)?;
    to_py(
        py,
        &serde_json::json!({
            "probabilities": psi.probabilities(),
            "success_rate": m.success_rate,
            "nonuniformity": m.nonuniformity,
            "energy_expectation": m.energy_expectation,
            "n_solutions": m.n_solutions,
        }),
    )
}

fn parse_energy(s: &str) -> PyResult<EnergyModel> {
    match s {
        "ising" => Ok(EnergyModel::Ising),
        "oracle" => Ok(EnergyModel::Oracle),
        other => Err(PyValueError::new_err(format!("unknown energy model `{other}`"))),
    }
}

/// Linear annealing ramp used as the initial point (betas, gammas).
#[pyfunction]
#[pyo3(signature = (p, dt = 0.75))]
fn tqa_init(p: usize, dt: f64) -> (Vec<f64>, Vec<f64>) {
    vqcount::variational::tqa_init(p, dt)
}

/// Full counting pipeline; returns the estimate record as a dict.
#[pyfunction]
#[pyo3(signature = (formula, backend = "qaoa", depth = 3, n_s = 16, seed = 0, mode = "without_replacement", energy = "ising", max_evals = 500))]
#[pyo3(name = "vqcount")]
#[allow(clippy::too_many_arguments)]
fn count<'py>(
    py: Python<'py>,
    formula: &Formula,
    backend: &str,
    depth: usize,
    n_s: usize,
    seed: u64,
    mode: &str,
    energy: &str,
    max_evals: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let mode = match mode {
        "without_replacement" => SamplingMode::WithoutReplacement,
        "with_replacement" => SamplingMode::WithReplacement,
        other => return Err(PyValueError::new_err(format!("unknown sampling mode `{other}`"))),
    };
    let cfg = VqcountConfig {
        backend: parse::<Backend>("backend", backend)?,
        energy: parse_energy(energy)?,
        depth,
        n_s,
        mode,
        optimizer: OptimizerConfig { max_evals, ..Default::default() },
        ..Default::default()
    };
    let f = formula.inner.clone();
    let est = py.detach(move || vqcount::counting::vqcount(&f, &cfg, seed)).map_err(err)?;
    to_py(py, &est)
}

/// Log-linear fit of y against x: model is exponential, power or inverse_epsilon.
#[pyfunction]
#[pyo3(signature = (xs, ys, model = "exponential", tail = None))]
fn fit_scaling<'py>(py: Python<'py>, xs: Vec<f64>, ys: Vec<f64>, model: &str, tail: Option<usize>) -> PyResult<Bound<'py, PyAny>> {
    if xs.len() != ys.len() {
        return Err(PyValueError::new_err("xs and ys differ in length"));
    }
    let model: FitModel = parse("fit model", model)?;
    let pts: Vec<(f64, f64)> = xs.into_iter().zip(ys).collect();
    to_py(py, &fit(&pts, model, tail).map_err(err)?)
}

#[pymodule]
fn pyvqcount(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Formula>()?;
    m.add("VqcountError", m.py().get_type::<VqcountError>())?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(exact_count, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(tqa_init, m)?)?;
    m.add_function(wrap_pyfunction!(count, m)?)?;
    m.add_function(wrap_pyfunction!(fit_scaling, m)?)?;
    Ok(())
}
