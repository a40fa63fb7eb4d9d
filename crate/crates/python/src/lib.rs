//! Python bindings for the Bach interpreter, search and the built-in
//! Needham-Schroeder model.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bach_core::explorer::Explorer;
use bach_core::interpreter::{execute, StepLabel};
use bach_core::logic::{derive as derive_formula, BslFormula};
use bach_core::ns_model::{self, AttackSummary};
use bach_core::parser::{parse_formula, parse_program, parse_term};

create_exception!(
    bach,
    BachError,
    PyException,
    "Invalid term, model or formula."
);

fn err(e: bach_core::Error) -> PyErr {
    BachError::new_err(e.to_string())
}

/// A si-term: a token, a compound `f(t1,...,tn)` or a binder variable.
#[pyclass(frozen, eq, hash, skip_from_py_object, module = "bach")]
#[derive(Clone, PartialEq, Eq, Hash)]
struct Term(bach_core::SiTerm);

#[pymethods]
impl Term {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        parse_term(text).map(Term).map_err(err)
    }

    fn is_ground(&self) -> bool {
        self.0.is_ground()
    }

    fn __str__(&self) -> String {
        self.0.render()
    }

    fn __repr__(&self) -> String {
        format!("Term('{}')", self.0.render())
    }
}

/// Accepts a `Term` or its text.
fn term_arg(obj: &Bound<'_, PyAny>) -> PyResult<bach_core::SiTerm> {
    if let Ok(t) = obj.cast::<Term>() {
        return Ok(t.get().0.clone());
    }
    let text: String = obj.extract()?;
    parse_term(&text).map_err(err)
}

/// A multiset of ground terms.
#[pyclass(skip_from_py_object, module = "bach")]
#[derive(Clone, Default)]
struct Store(bach_core::Store);

#[pymethods]
impl Store {
    #[new]
    #[pyo3(signature = (terms = Vec::new()))]
    fn new(terms: Vec<Bound<'_, PyAny>>) -> PyResult<Self> {
        let mut store = bach_core::Store::new();
        for t in &terms {
            store.tell(&term_arg(t)?).map_err(err)?;
        }
        Ok(Store(store))
    }

    fn tell(&mut self, term: &Bound<'_, PyAny>) -> PyResult<()> {
        self.0.tell(&term_arg(term)?).map_err(err)
    }

    fn ask(&self, term: &Bound<'_, PyAny>) -> PyResult<bool> {
        self.0.ask(&term_arg(term)?).map_err(err)
    }

    fn get(&mut self, term: &Bound<'_, PyAny>) -> PyResult<bool> {
        self.0.get(&term_arg(term)?).map_err(err)
    }

    fn nask(&self, term: &Bound<'_, PyAny>) -> PyResult<bool> {
        self.0.nask(&term_arg(term)?).map_err(err)
    }

    fn count(&self, term: &Bound<'_, PyAny>) -> PyResult<usize> {
        Ok(self.0.count(&term_arg(term)?))
    }

    /// `term : count` lines sorted by term text.
    fn dump(&self) -> Vec<String> {
        self.0.dump_lines()
    }

    fn __len__(&self) -> usize {
        self.0.iter().map(|(_, n)| n).sum()
    }

    fn __eq__(&self, other: &Store) -> bool {
        self.0 == other.0
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Store('{}')", self.0)
    }
}

/// A validated program of procedures, formulae and an optional run directive.
#[pyclass(frozen, module = "bach")]
struct Model(bach_core::Model);

#[pymethods]
impl Model {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        parse_program(text).map(Model).map_err(err)
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        let text = std::fs::read_to_string(&path)?;
        Self::parse(&text)
    }

    /// Alice, Bob and Mallory constrained by `F`.
    #[staticmethod]
    fn needham_schroeder() -> Self {
        Model(ns_model::build_ns_model())
    }

    /// Alice and Bob without an intruder, with goal `Done`.
    #[staticmethod]
    fn honest() -> Self {
        Model(ns_model::build_honest_model())
    }

    #[getter]
    fn procedures(&self) -> Vec<String> {
        self.0.procs().iter().map(|(n, _)| n.to_string()).collect()
    }

    #[getter]
    fn formulas(&self) -> Vec<String> {
        self.0
            .formulas()
            .iter()
            .map(|(n, _)| n.to_string())
            .collect()
    }

    #[getter]
    fn entry(&self) -> Option<String> {
        self.0.entry().map(str::to_string)
    }

    #[getter]
    fn goal(&self) -> Option<String> {
        self.0.goal().map(str::to_string)
    }

    fn pretty(&self) -> String {
        self.0.pretty()
    }

    fn __eq__(&self, other: &Model) -> bool {
        self.0 == other.0
    }
}

impl Model {
    fn formula(&self, name: Option<&str>) -> PyResult<BslFormula> {
        self.0
            .goal_formula(name)
            .map_err(err)?
            .ok_or_else(|| BachError::new_err("no formula given and the model has no goal"))
    }
}

fn exchanges(summary: &AttackSummary) -> Vec<(String, String, String)> {
    summary
        .exchanges
        .iter()
        .map(|e| (e.sender.render(), e.receiver.render(), e.message.render()))
        .collect()
}

fn labels(trace: &[StepLabel]) -> Vec<String> {
    trace.iter().map(ToString::to_string).collect()
}

/// Outcome of a randomized run.
#[pyclass(frozen, get_all, module = "bach")]
struct RunResult {
    /// One of `formula satisfied`, `agent terminated`, `stuck`, `step limit`.
    status: String,
    trace: Vec<String>,
    store: Vec<String>,
    residual: String,
    exchanges: Vec<(String, String, String)>,
}

/// One execution that satisfies the formula.
#[pyclass(frozen, get_all, module = "bach")]
struct Witness {
    trace: Vec<String>,
    store: Vec<String>,
    exchanges: Vec<(String, String, String)>,
}

#[pyclass(frozen, get_all, module = "bach")]
struct SearchResult {
    /// One of `witness`, `exhausted`, `depth limit`.
    status: String,
    witnesses: Vec<Py<Witness>>,
    states_explored: usize,
    max_depth_reached: usize,
}

/// Runs the model's entry agent once under `formula` (default: the model's goal).
#[pyfunction]
#[pyo3(signature = (model, formula = None, seed = 0, max_steps = 10_000))]
fn run(model: &Model, formula: Option<&str>, seed: u64, max_steps: usize) -> PyResult<RunResult> {
    let agent = model.0.entry_agent().map_err(err)?;
    let f = model.formula(formula)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = execute(
        &agent,
        &f,
        model.0.procs(),
        model.0.formulas(),
        &mut rng,
        max_steps,
    )
    .map_err(err)?;
    Ok(RunResult {
        status: out.status.to_string(),
        trace: labels(&out.config.trace),
        store: out.config.store.dump_lines(),
        residual: out.config.formula.to_string(),
        exchanges: exchanges(&ns_model::exchange_projection(&out.config.trace)),
    })
}

/// Depth-first search for executions satisfying `formula`.
#[pyfunction]
#[pyo3(signature = (model, formula = None, max_depth = 64, all = false))]
fn search(
    py: Python<'_>,
    model: &Model,
    formula: Option<&str>,
    max_depth: usize,
    all: bool,
) -> PyResult<SearchResult> {
    let agent = model.0.entry_agent().map_err(err)?;
    let f = model.formula(formula)?;
    let r = Explorer::new(model.0.procs(), model.0.formulas(), max_depth)
        .all_witnesses(all)
        .search(&agent, &f)
        .map_err(err)?;
    let witnesses = r
        .witnesses
        .iter()
        .map(|w| {
            Py::new(
                py,
                Witness {
                    trace: labels(w.trace()),
                    store: w.last.store.dump_lines(),
                    exchanges: exchanges(&ns_model::exchange_projection(w.trace())),
                },
            )
        })
        .collect::<PyResult<_>>()?;
    Ok(SearchResult {
        status: r.status.to_string(),
        witnesses,
        states_explored: r.stats.states_explored,
        max_depth_reached: r.stats.max_depth_reached,
    })
}

/// Residuals of `formula` on `store`, using the model's named formulae.
#[pyfunction]
fn derive(model: &Model, store: &Store, formula: &str) -> PyResult<Vec<String>> {
    let f = parse_formula(formula).map_err(err)?;
    model.0.formulas().check_resolved([&f]).map_err(err)?;
    let out = derive_formula(&store.0, &f, model.0.formulas()).map_err(err)?;
    Ok(out.iter().map(ToString::to_string).collect())
}

/// The exchanges of Lowe's attack as `(sender, receiver, message)` rows.
#[pyfunction]
fn expected_attack_summary() -> Vec<(String, String, String)> {
    exchanges(&ns_model::expected_attack_summary())
}

#[pyfunction]
fn public_key(principal: &Bound<'_, PyAny>) -> PyResult<Term> {
    ns_model::public_key(&term_arg(principal)?)
        .map(Term)
        .map_err(err)
}

#[pymodule]
mod bach {
    #[pymodule_export]
    use super::{
        derive, expected_attack_summary, public_key, run, search, BachError, Model, RunResult,
        SearchResult, Store, Term, Witness,
    };
}
