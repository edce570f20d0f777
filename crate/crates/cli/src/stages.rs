//! Pipeline stages over in-memory text. The subcommands and `pipeline` both
//! go through these, so a pipeline run equals running the stages by hand.

use std::fmt::Write as _;
use std::path::Path;

use cookplan_core::converter::{convert, BackendConfig, ConvertError, Conversion, Exemplar};
use cookplan_core::funcseq::{parse_sequence, validate_sequence, KnownObjects, Severity};
use cookplan_core::goals::{compile_sequence, plan_steps, recipe_task, CompiledGoals, FullPlan, RecipePlanError};
use cookplan_core::kitchen::{build_domain_with, build_problem_with_states, ScenarioConfig};
use cookplan_core::planner::Planner;
use cookplan_core::sim::{execute, DetectorFeed, OraclePolicy, StateChangeOracle, Validator};
use cookplan_core::staterec::{read_features, LinearProbe};

/// Exit codes per failure class.
pub mod exit {
    pub const IO: u8 = 1;
    pub const PARSE: u8 = 2;
    pub const UNSOLVABLE: u8 = 3;
    pub const BACKEND: u8 = 4;
    pub const VALIDATION: u8 = 5;
    pub const DETECTION_MISS: u8 = 6;
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub msg: String,
}

impl CliError {
    pub fn new(code: u8, msg: impl Into<String>) -> Self {
        Self {
            code,
            msg: msg.into(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.msg)
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn read_input(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::new(exit::PARSE, format!("cannot read {}: {e}", path.display())))
}

pub fn write_artifact(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::new(exit::IO, format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::new(exit::IO, format!("{}: {e}", path.display())))
}

pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    ScenarioConfig::parse(text).map_err(|e| CliError::new(exit::PARSE, format!("scenario: {e}")))
}

pub fn run_convert(recipe: &str, backend: &BackendConfig) -> Result<Conversion> {
    convert(recipe, &Exemplar::known(), backend).map_err(|e| {
        let code = match e {
            ConvertError::EmptyRecipe | ConvertError::Extraction(_) => exit::PARSE,
            _ => exit::BACKEND,
        };
        CliError::new(code, format!("convert: {e}"))
    })
}

pub struct Compiled {
    pub diagnostics: String,
    pub goals: Result<String>,
}

/// Diagnostics are always produced; goals only when no diagnostic is an
/// error and the goals compile.
pub fn run_compile(sequence: &str, scenario: &ScenarioConfig) -> Result<Compiled> {
    let fs = parse_sequence(sequence).map_err(|e| CliError::new(exit::PARSE, format!("sequence: {e}")))?;
    let known = KnownObjects::from_scenario(scenario);
    let diags = validate_sequence(&fs, &known);
    let mut diagnostics = String::new();
    for d in &diags {
        let _ = writeln!(diagnostics, "{d}");
    }
    let errors = diags.iter().filter(|d| d.severity == Severity::Error).count();
    let goals = if errors > 0 {
        Err(CliError::new(
            exit::VALIDATION,
            format!("compile: {errors} error diagnostic(s)\n{diagnostics}"),
        ))
    } else {
        compile_sequence(&fs, &known)
            .map(|g| g.to_string())
            .map_err(|e| CliError::new(exit::VALIDATION, format!("compile: {e}")))
    };
    Ok(Compiled { diagnostics, goals })
}

fn parse_goals(text: &str) -> Result<CompiledGoals> {
    CompiledGoals::parse(text).map_err(|e| CliError::new(exit::PARSE, format!("goals: {e}")))
}

pub fn run_plan(goals: &str, scenario: &ScenarioConfig, sequence: Option<&str>) -> Result<String> {
    let goals = parse_goals(goals)?;
    let fs = sequence
        .map(parse_sequence)
        .transpose()
        .map_err(|e| CliError::new(exit::PARSE, format!("sequence: {e}")))?;
    let domain = build_domain_with(&scenario.ignition_level);
    let task = recipe_task(&domain, scenario, &goals).map_err(|e| CliError::new(exit::PARSE, e.to_string()))?;
    let plan = plan_steps(&Planner::new(&task), &goals).map_err(|e| match e {
        RecipePlanError::Step { .. } => CliError::new(exit::UNSOLVABLE, format!("plan: {e}")),
        e => CliError::new(exit::PARSE, e.to_string()),
    })?;
    Ok(plan.to_text(&task, fs.as_ref()))
}

/// Action labels per step, straight from plan text.
fn plan_labels(plan: &str) -> Result<Vec<Vec<String>>> {
    let mut steps: Vec<Vec<String>> = Vec::new();
    for (i, raw) in plan.lines().enumerate() {
        let line = raw.split(';').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with("step ") {
            steps.push(Vec::new());
        } else {
            steps
                .last_mut()
                .ok_or_else(|| CliError::new(exit::PARSE, format!("plan line {}: action before first step", i + 1)))?
                .push(line.to_string());
        }
    }
    Ok(steps)
}

pub struct Validated {
    pub report: String,
    pub valid: bool,
}

pub fn run_validate(plan: &str, goals: &str, scenario: &ScenarioConfig) -> Result<Validated> {
    let goals = parse_goals(goals)?;
    let domain = build_domain_with(&scenario.ignition_level);
    let problem = build_problem_with_states(scenario, &goals.state_names())
        .map_err(|e| CliError::new(exit::PARSE, format!("scenario: {e}")))?;
    let report = Validator::new(&domain, &problem).validate(&problem.init, &plan_labels(plan)?, &goals);
    Ok(Validated {
        report: report.to_text(),
        valid: report.is_valid(),
    })
}

#[derive(Debug, Clone, Default)]
pub struct OracleSpec {
    pub delays: Vec<(String, usize)>,
    /// action, probe file, feature CSV
    pub detectors: Vec<(String, String, String)>,
    pub timeout: Option<f64>,
}

impl OracleSpec {
    pub fn build(&self) -> Result<StateChangeOracle> {
        let mut oracle = StateChangeOracle::immediate();
        if let Some(t) = self.timeout {
            oracle.timeout = t;
        }
        let unknown = |a: &str| CliError::new(exit::PARSE, format!("`{a}` is not a waiting cooking action"));
        for (action, frames) in &self.delays {
            if !oracle.set(action, OraclePolicy::FixedDelay(*frames)) {
                return Err(unknown(action));
            }
        }
        for (action, probe, features) in &self.detectors {
            let probe = LinearProbe::parse(&read_input(Path::new(probe))?)
                .map_err(|e| CliError::new(exit::PARSE, format!("{probe}: {e}")))?;
            let file = std::fs::File::open(features)
                .map_err(|e| CliError::new(exit::PARSE, format!("cannot read {features}: {e}")))?;
            let series = read_features(file).map_err(|e| CliError::new(exit::PARSE, format!("{features}: {e}")))?;
            if !oracle.set(action, OraclePolicy::Detector(Box::new(DetectorFeed { probe, series }))) {
                return Err(unknown(action));
            }
        }
        Ok(oracle)
    }
}

pub struct Simulated {
    pub trace: String,
    pub timed_out: bool,
}

pub fn run_simulate(plan: &str, goals: &str, scenario: &ScenarioConfig, oracle: &StateChangeOracle) -> Result<Simulated> {
    let goals = parse_goals(goals)?;
    let domain = build_domain_with(&scenario.ignition_level);
    let task = recipe_task(&domain, scenario, &goals).map_err(|e| CliError::new(exit::PARSE, e.to_string()))?;
    let full = FullPlan::parse(plan, &task, &task.init).map_err(|e| match e {
        cookplan_core::goals::PlanTextError::Inapplicable { .. } => {
            CliError::new(exit::VALIDATION, format!("plan: {e}"))
        }
        e => CliError::new(exit::PARSE, format!("plan: {e}")),
    })?;
    let mut flags: Vec<Vec<bool>> = Vec::new();
    for raw in plan.lines() {
        let line = raw.trim();
        if line.starts_with("step ") {
            flags.push(Vec::new());
        } else if !line.is_empty() {
            if let Some(f) = flags.last_mut() {
                f.push(line.contains("; complemented"));
            }
        }
    }
    let trace = execute(&task, &full, &flags, oracle).map_err(|e| CliError::new(exit::VALIDATION, e.to_string()))?;
    Ok(Simulated {
        trace: trace.to_text(),
        timed_out: trace.timed_out,
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}

/// `stage<TAB>path<TAB>sha256` lines; paths relative to the run directory.
#[derive(Debug, Default)]
pub struct Manifest {
    entries: Vec<(String, String, String)>,
}

impl Manifest {
    pub fn record(&mut self, stage: &str, path: &str, content: &[u8]) {
        self.entries
            .push((stage.to_string(), path.to_string(), sha256_hex(content)));
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (stage, path, hash) in &self.entries {
            let _ = writeln!(out, "{stage}\t{path}\t{hash}");
        }
        out
    }
}
