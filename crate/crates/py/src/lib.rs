//! Python bindings: sequences, scenarios, planning, validation and the
//! state-change probe.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use cookplan_core::converter;
use cookplan_core::fixtures::all_recipes;
use cookplan_core::funcseq::{self, KnownObjects};
use cookplan_core::goals::{compile_sequence, plan_recipe, CompiledGoals};
use cookplan_core::kitchen::{build_domain_with, build_problem_with_states, ScenarioConfig};
use cookplan_core::pddl::print_domain;
use cookplan_core::sim::{plan_labels, Validator};
use cookplan_core::staterec;

create_exception!(cookplan, CookplanError, PyException);

fn err(e: impl std::fmt::Display) -> PyErr {
    CookplanError::new_err(e.to_string())
}

#[pyclass(name = "Scenario", from_py_object)]
#[derive(Clone)]
struct PyScenario(ScenarioConfig);

#[pymethods]
impl PyScenario {
    /// Parse a scenario file's TOML text.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        ScenarioConfig::parse(text).map(Self).map_err(err)
    }

    /// A bundled scenario: `variant` is "curated" or "kitchen".
    #[staticmethod]
    fn fixture(recipe: &str, variant: &str) -> PyResult<Self> {
        let r = all_recipes()
            .find(|r| r.name == recipe)
            .ok_or_else(|| err(format!("no recipe fixture `{recipe}`")))?;
        match variant {
            "curated" => Ok(Self(r.curated())),
            "kitchen" => Ok(Self(r.all_in_kitchen())),
            v => Err(err(format!("unknown variant `{v}`"))),
        }
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name.clone()
    }
}

#[pyclass(name = "Sequence", from_py_object)]
#[derive(Clone)]
struct PySequence(funcseq::FunctionSequence);

#[pymethods]
impl PySequence {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        funcseq::parse_sequence(text).map(Self).map_err(err)
    }

    /// Pull a sequence out of free-form model output.
    #[staticmethod]
    fn extract(text: &str) -> PyResult<Self> {
        converter::extract_sequence(text).map(Self).map_err(err)
    }

    /// Calls per step, as printed.
    #[getter]
    fn steps(&self) -> Vec<Vec<String>> {
        self.0
            .steps
            .iter()
            .map(|s| s.iter().map(|c| c.to_string()).collect())
            .collect()
    }

    fn diagnostics(&self, scenario: &PyScenario) -> Vec<String> {
        funcseq::validate_sequence(&self.0, &KnownObjects::from_scenario(&scenario.0))
            .iter()
            .map(|d| d.to_string())
            .collect()
    }

    /// Goal text, one block per step.
    fn compile(&self, scenario: &PyScenario) -> PyResult<String> {
        compile_sequence(&self.0, &KnownObjects::from_scenario(&scenario.0))
            .map(|g| g.to_string())
            .map_err(err)
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __len__(&self) -> usize {
        self.0.steps.len()
    }
}

/// Plan every step of `goals`; returns the plan text.
#[pyfunction]
#[pyo3(signature = (goals, scenario, sequence=None))]
fn plan(goals: &str, scenario: &PyScenario, sequence: Option<&PySequence>) -> PyResult<String> {
    let goals = CompiledGoals::parse(goals).map_err(err)?;
    let domain = build_domain_with(&scenario.0.ignition_level);
    let planned = plan_recipe(&domain, &scenario.0, &goals).map_err(err)?;
    Ok(planned.plan.to_text(&planned.task, sequence.map(|s| &s.0)))
}

/// Replay plan text against the goals. Returns `(valid, report)`.
#[pyfunction]
fn validate(plan: &str, goals: &str, scenario: &PyScenario) -> PyResult<(bool, String)> {
    let goals = CompiledGoals::parse(goals).map_err(err)?;
    let domain = build_domain_with(&scenario.0.ignition_level);
    let problem = build_problem_with_states(&scenario.0, &goals.state_names()).map_err(err)?;
    let mut steps: Vec<Vec<String>> = Vec::new();
    for raw in plan.lines() {
        let line = raw.split(';').next().unwrap_or("").trim();
        if line.starts_with("step ") {
            steps.push(Vec::new());
        } else if !line.is_empty() {
            steps
                .last_mut()
                .ok_or_else(|| err("action before the first step"))?
                .push(line.to_string());
        }
    }
    let report = Validator::new(&domain, &problem).validate(&problem.init, &steps, &goals);
    Ok((report.is_valid(), report.to_text()))
}

/// Plan labels per step for a sequence in a scenario, without text round trips.
#[pyfunction]
fn plan_sequence(sequence: &PySequence, scenario: &PyScenario) -> PyResult<Vec<Vec<String>>> {
    let goals = compile_sequence(&sequence.0, &KnownObjects::from_scenario(&scenario.0)).map_err(err)?;
    let domain = build_domain_with(&scenario.0.ignition_level);
    let planned = plan_recipe(&domain, &scenario.0, &goals).map_err(err)?;
    Ok(plan_labels(&planned.task, &planned.plan))
}

#[pyfunction]
#[pyo3(signature = (ignition_level="medium"))]
fn domain_pddl(ignition_level: &str) -> String {
    print_domain(&build_domain_with(ignition_level))
}

#[pyclass(name = "LinearProbe", from_py_object)]
#[derive(Clone)]
struct PyProbe(staterec::LinearProbe);

fn series(timestamps: Vec<f64>, features: Vec<Vec<f64>>) -> PyResult<staterec::FeatureSeries> {
    staterec::FeatureSeries::new(timestamps, features).map_err(err)
}

#[pymethods]
impl PyProbe {
    /// Train on annotated series: a list of `(timestamps, features, annotation)`.
    #[staticmethod]
    fn train(data: Vec<(Vec<f64>, Vec<Vec<f64>>, f64)>) -> PyResult<Self> {
        let annotated = data
            .into_iter()
            .map(|(t, f, a)| staterec::AnnotatedSeries::new(series(t, f)?, a).map_err(err))
            .collect::<PyResult<Vec<_>>>()?;
        staterec::train_probe(&annotated, &staterec::TrainConfig::default())
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        staterec::LinearProbe::parse(text).map(Self).map_err(err)
    }

    fn to_text(&self) -> String {
        self.0.to_text()
    }

    fn score(&self, frame: Vec<f64>) -> PyResult<f64> {
        if frame.len() != self.0.dim() {
            return Err(err(format!("frame has {} features, probe expects {}", frame.len(), self.0.dim())));
        }
        Ok(self.0.score(&frame))
    }

    /// Time of the first frame scored as changed, or None.
    fn detect(&self, timestamps: Vec<f64>, features: Vec<Vec<f64>>) -> PyResult<Option<f64>> {
        let s = series(timestamps, features)?;
        Ok(staterec::detect_change(&self.0, &s).map_err(err)?.detected_time)
    }
}

/// Seeded step-change series: `(timestamps, features, annotation)`.
#[pyfunction]
#[pyo3(signature = (seed, dim=8, n_frames=600, change_frame=300, separation=4.0))]
fn synthesize(
    seed: u64,
    dim: usize,
    n_frames: usize,
    change_frame: usize,
    separation: f64,
) -> PyResult<(Vec<f64>, Vec<Vec<f64>>, f64)> {
    let a = staterec::synthesize_series(dim, n_frames, change_frame, separation, seed).map_err(err)?;
    Ok((
        a.series.timestamps().to_vec(),
        a.series.features().to_vec(),
        a.annotation,
    ))
}

#[pymodule]
fn cookplan(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("CookplanError", m.py().get_type::<CookplanError>())?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PySequence>()?;
    m.add_class::<PyProbe>()?;
    m.add_function(wrap_pyfunction!(plan, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(plan_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(domain_pddl, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    Ok(())
}
