//! Python bindings: policy evaluation, analysis reports and the program
//! engine, over the same text formats the CLI reads.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use xacml_analyzer::analyzer::{
    check_completeness, check_conflicts, check_reachability, lp_evaluate, Engine,
};
use xacml_analyzer::emit::{emit_analysis, transform_store, AnalysisTask};
use xacml_analyzer::engine::{enumerate_models, ground, solve_unique};
use xacml_analyzer::lp::{parse_program, serialize_program};
use xacml_analyzer::model::{build_store, AttributeDomains, PolicyStore};
use xacml_analyzer::parser::{parse_domains, parse_policy_file, parse_request, serialize_store};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn task_from_name(name: &str) -> PyResult<AnalysisTask> {
    match name {
        "gap" => Ok(AnalysisTask::Gap),
        "conflict" => Ok(AnalysisTask::Conflict),
        "reachability" => Ok(AnalysisTask::Reachability),
        other => Err(err(format!("unknown analysis task: {other}"))),
    }
}

fn engine_from_name(name: &str) -> PyResult<Engine> {
    match name {
        "native" => Ok(Engine::Native),
        "lp" => Ok(Engine::Lp),
        other => Err(err(format!("unknown engine: {other}"))),
    }
}

/// A parsed policy store together with its attribute domains.
#[pyclass]
struct PolicyEngine {
    store: PolicyStore,
    dom: AttributeDomains,
}

#[pymethods]
impl PolicyEngine {
    #[new]
    fn new(policies: &str, domains: &str) -> PyResult<Self> {
        let dom = parse_domains(domains, "<domains>").map_err(err)?;
        let parsed = parse_policy_file(policies, "<policies>").map_err(err)?;
        let store = build_store(parsed.into_iter().map(|p| p.component).collect(), &dom)
            .map_err(err)?;
        Ok(PolicyEngine { store, dom })
    }

    /// Decision for one request: "permit", "deny" or "not_applicable".
    #[pyo3(signature = (request, engine = "native"))]
    fn evaluate(&self, request: &str, engine: &str) -> PyResult<String> {
        let q = parse_request(request, "<request>", &self.dom).map_err(err)?;
        let decision = match engine_from_name(engine)? {
            Engine::Native => xacml_analyzer::eval::evaluate(&self.store, &q, &self.dom),
            Engine::Lp => lp_evaluate(&self.store, &self.dom, &q).map_err(err)?,
        };
        Ok(decision.long_name().to_string())
    }

    /// JSON report of one analysis run.
    #[pyo3(signature = (task, engine = "lp", max_witnesses = 100, budget = 1_000_000))]
    fn analyze(
        &self,
        task: &str,
        engine: &str,
        max_witnesses: usize,
        budget: usize,
    ) -> PyResult<String> {
        let engine = engine_from_name(engine)?;
        let report = match task_from_name(task)? {
            AnalysisTask::Gap => {
                check_completeness(&self.store, &self.dom, engine, max_witnesses, budget)
            }
            AnalysisTask::Conflict => {
                check_conflicts(&self.store, &self.dom, engine, max_witnesses, budget)
            }
            AnalysisTask::Reachability => {
                check_reachability(&self.store, &self.dom, engine, budget)
            }
        }
        .map_err(err)?;
        serde_json_string(&report)
    }

    /// Text of the logic program for evaluation or one of the analyses.
    #[pyo3(signature = (task = None))]
    fn emit_lp(&self, task: Option<&str>) -> PyResult<String> {
        let program = match task {
            None | Some("eval") => transform_store(&self.store, &self.dom),
            Some(name) => {
                emit_analysis(task_from_name(name)?, &self.store, &self.dom).map_err(err)?
            }
        };
        Ok(serialize_program(&program))
    }

    /// Canonical text form of the store.
    fn canonical(&self) -> String {
        serialize_store(&self.store)
    }

    fn rule_ids(&self) -> Vec<String> {
        self.store.rule_ids()
    }
}

fn serde_json_string<T: serde::Serialize>(value: &T) -> PyResult<String> {
    serde_json::to_string_pretty(value).map_err(err)
}

/// Answer sets of a program text, each as a sorted list of atom strings.
#[pyfunction]
#[pyo3(signature = (program, max_models = 64))]
fn solve(program: &str, max_models: usize) -> PyResult<Vec<Vec<String>>> {
    let mut p = parse_program(program).map_err(err)?;
    p.close_universe();
    let g = ground(&p).map_err(err)?;
    let models = if g.choices.is_empty() && !g.rules.iter().any(|r| r.head.is_none()) {
        vec![solve_unique(&g).map_err(err)?]
    } else {
        enumerate_models(&g, max_models).map_err(err)?
    };
    Ok(models
        .into_iter()
        .map(|m| m.atoms.iter().map(|a| a.to_string()).collect())
        .collect())
}

#[pymodule]
fn xacml_analyzer_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PolicyEngine>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    Ok(())
}
