//! Plan replay: an independent validator working from the action schemas,
//! and an executor that waits on state-change oracles.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write};

use sha2::{Digest, Sha256};

use crate::goals::{default_condition, end_condition, CompiledGoals, FullPlan};
use crate::pddl::{Atom, Condition, DomainModel, Effect, GoalLiterals, GroundedTask, ProblemModel, Term, WorldState};
use crate::planner::{apply, PreconditionViolated};
use crate::staterec::{detect_change, FeatureSeries, LinearProbe, FRAME_RATE_HZ};

/// Order-independent digest of a set of ground literals: the wrapping sum
/// of the leading 8 bytes of each literal's SHA-256.
pub fn digest<'a>(atoms: impl IntoIterator<Item = &'a Atom>) -> u64 {
    atoms.into_iter().fold(0u64, |acc, a| {
        let h = Sha256::digest(a.to_string().as_bytes());
        let mut b = [0u8; 8];
        b.copy_from_slice(&h[..8]);
        acc.wrapping_add(u64::from_be_bytes(b))
    })
}

pub fn state_digest(task: &GroundedTask, s: &WorldState) -> u64 {
    digest(s.ones().map(|f| &task.facts[f]))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    StepCount { plan: usize, goals: usize },
    UnknownAction { step: usize, index: usize, label: String },
    BadArguments { step: usize, index: usize, label: String, reason: String },
    Precondition { step: usize, index: usize, label: String, literal: String },
    /// Applicable but leaves the state unchanged.
    NoEffect { step: usize, index: usize, label: String },
    StepGoal { step: usize, literal: String },
    DefaultCondition { step: usize, literal: String },
    EndCondition { literal: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::StepCount { plan, goals } => {
                write!(f, "plan has {plan} steps but there are {goals} step goals")
            }
            Violation::UnknownAction { step, index, label } => {
                write!(f, "step {step} action {index}: unknown action {label}")
            }
            Violation::BadArguments { step, index, label, reason } => {
                write!(f, "step {step} action {index}: {label}: {reason}")
            }
            Violation::Precondition { step, index, label, literal } => {
                write!(f, "step {step} action {index}: {label} needs {literal}")
            }
            Violation::NoEffect { step, index, label } => {
                write!(f, "step {step} action {index}: {label} changes nothing")
            }
            Violation::StepGoal { step, literal } => {
                write!(f, "step {step}: goal literal {literal} does not hold")
            }
            Violation::DefaultCondition { step, literal } => {
                write!(f, "step {step}: default condition {literal} does not hold")
            }
            Violation::EndCondition { literal } => {
                write!(f, "end: end condition {literal} does not hold")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Replayed state at the start and after every step.
    pub boundaries: Vec<BTreeSet<Atom>>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if self.is_valid() {
            out.push_str("valid\n");
        }
        for v in &self.violations {
            let _ = writeln!(out, "violation: {v}");
        }
        out
    }
}

/// Replays plans against the schemas of a domain. Shares no code with the
/// grounder or planner: states are plain atom sets and every action label is
/// instantiated on the fly.
pub struct Validator<'d> {
    domain: &'d DomainModel,
    /// object name -> declared type
    objects: BTreeMap<String, String>,
}

type AtomSet = BTreeSet<Atom>;

impl<'d> Validator<'d> {
    pub fn new(domain: &'d DomainModel, problem: &ProblemModel) -> Self {
        let objects = domain
            .constants
            .iter()
            .chain(&problem.objects)
            .map(|o| (o.name.clone(), o.ty.clone()))
            .collect();
        Self { domain, objects }
    }

    fn objects_of(&self, ty: &str) -> Vec<&str> {
        self.objects
            .iter()
            .filter(|(_, t)| self.domain.is_subtype(t, ty))
            .map(|(n, _)| n.as_str())
            .collect()
    }

    /// Successor of `state` under the action named by `label`, or the reason
    /// it cannot be applied. Effects are applied even when a precondition
    /// fails, so the caller can keep replaying.
    pub fn step(&self, state: &AtomSet, label: &str) -> (AtomSet, Result<(), StepFailure>) {
        let Some(call) = Atom::parse(label) else {
            return (state.clone(), Err(StepFailure::Unknown));
        };
        let Some(schema) = self.domain.action(&call.predicate) else {
            return (state.clone(), Err(StepFailure::Unknown));
        };
        if schema.params.len() != call.args.len() {
            return (
                state.clone(),
                Err(StepFailure::Arguments(format!(
                    "expected {} arguments, got {}",
                    schema.params.len(),
                    call.args.len()
                ))),
            );
        }
        let mut binding: BTreeMap<&str, &str> = BTreeMap::new();
        for (p, a) in schema.params.iter().zip(&call.args) {
            match self.objects.get(a) {
                Some(t) if self.domain.is_subtype(t, &p.ty) => {}
                Some(t) => {
                    return (
                        state.clone(),
                        Err(StepFailure::Arguments(format!("`{a}` is a {t}, not a {}", p.ty))),
                    )
                }
                None => {
                    return (
                        state.clone(),
                        Err(StepFailure::Arguments(format!("unknown object `{a}`"))),
                    )
                }
            }
            binding.insert(p.name.as_str(), a.as_str());
        }
        let value = |t: &Term, b: &BTreeMap<&str, &str>| -> String {
            match t {
                Term::Var(v) => b[v.as_str()].to_string(),
                Term::Const(c) => c.clone(),
            }
        };
        let inst = |a: &crate::pddl::AtomSchema, b: &BTreeMap<&str, &str>| Atom {
            predicate: a.predicate.clone(),
            args: a.args.iter().map(|t| value(t, b)).collect(),
        };

        let mut failure: Option<String> = None;
        for c in &schema.precondition {
            let broken = match c {
                Condition::Pos(a) => {
                    let g = inst(a, &binding);
                    (!state.contains(&g)).then(|| g.to_string())
                }
                Condition::Neg(a) => {
                    let g = inst(a, &binding);
                    state.contains(&g).then(|| format!("(not {g})"))
                }
                Condition::Eq(x, y) => {
                    (value(x, &binding) != value(y, &binding)).then(|| format!("(= {x} {y})"))
                }
                Condition::Neq(x, y) => (value(x, &binding) == value(y, &binding))
                    .then(|| format!("(not (= {x} {y}))")),
                Condition::ForallNot { vars, atom } => {
                    let mut hit = None;
                    let mut stack: Vec<BTreeMap<&str, &str>> = vec![binding.clone()];
                    for v in vars {
                        let objs = self.objects_of(&v.ty);
                        stack = stack
                            .into_iter()
                            .flat_map(|b| {
                                objs.iter().map(move |o| {
                                    let mut b = b.clone();
                                    b.insert(v.name.as_str(), o);
                                    b
                                })
                            })
                            .collect();
                    }
                    for b in &stack {
                        let g = inst(atom, b);
                        if state.contains(&g) {
                            hit = Some(format!("(not {g})"));
                            break;
                        }
                    }
                    hit
                }
            };
            if broken.is_some() && failure.is_none() {
                failure = broken;
            }
        }

        let mut next = state.clone();
        let adds: Vec<Atom> = schema
            .effect
            .iter()
            .filter_map(|e| match e {
                Effect::Add(a) => Some(inst(a, &binding)),
                Effect::Del(_) => None,
            })
            .collect();
        for e in &schema.effect {
            if let Effect::Del(a) = e {
                next.remove(&inst(a, &binding));
            }
        }
        next.extend(adds);
        (next, failure.map_or(Ok(()), |l| Err(StepFailure::Precondition(l))))
    }

    /// Replay `steps` (action labels per recipe step) from `init`, checking
    /// every precondition, each step goal at its boundary, the default
    /// condition at every boundary and the end condition at the end.
    pub fn validate(&self, init: &AtomSet, steps: &[Vec<String>], goals: &CompiledGoals) -> ValidationReport {
        let mut violations = Vec::new();
        if steps.len() != goals.steps.len() {
            violations.push(Violation::StepCount {
                plan: steps.len(),
                goals: goals.steps.len(),
            });
        }
        let mut state = init.clone();
        let mut boundaries = vec![state.clone()];
        for (k, actions) in steps.iter().enumerate() {
            let step = k + 1;
            for (j, label) in actions.iter().enumerate() {
                let (next, result) = self.step(&state, label);
                let index = j + 1;
                let label = label.clone();
                match result {
                    Ok(()) if next == state => {
                        violations.push(Violation::NoEffect { step, index, label })
                    }
                    Ok(()) => {}
                    Err(StepFailure::Unknown) => {
                        violations.push(Violation::UnknownAction { step, index, label })
                    }
                    Err(StepFailure::Arguments(reason)) => violations.push(Violation::BadArguments {
                        step,
                        index,
                        label,
                        reason,
                    }),
                    Err(StepFailure::Precondition(literal)) => {
                        violations.push(Violation::Precondition {
                            step,
                            index,
                            label,
                            literal,
                        })
                    }
                }
                state = next;
            }
            if let Some(g) = goals.steps.get(k) {
                for literal in unmet(g, &state) {
                    violations.push(Violation::StepGoal { step, literal });
                }
            }
            for literal in unmet(&default_condition(), &state) {
                violations.push(Violation::DefaultCondition { step, literal });
            }
            boundaries.push(state.clone());
        }
        for literal in unmet(&end_condition(), &state) {
            violations.push(Violation::EndCondition { literal });
        }
        ValidationReport {
            violations,
            boundaries,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepFailure {
    Unknown,
    Arguments(String),
    Precondition(String),
}

fn unmet(g: &GoalLiterals, s: &AtomSet) -> Vec<String> {
    let mut out: Vec<String> = g
        .positive
        .iter()
        .filter(|a| !s.contains(a))
        .map(Atom::to_string)
        .collect();
    out.extend(
        g.negative
            .iter()
            .filter(|a| s.contains(a))
            .map(|a| format!("(not {a})")),
    );
    out
}

/// Action labels of a plan, grouped per step.
pub fn plan_labels(task: &GroundedTask, plan: &FullPlan) -> Vec<Vec<String>> {
    plan.steps.iter().map(|p| p.labels(task)).collect()
}

/// Actions that may block until the food reaches its target state.
pub const WAITING_ACTIONS: [&str; 7] = ["stir", "heat", "cook", "boil", "stir-fry", "mix", "set-stove"];

#[derive(Debug, Clone, PartialEq)]
pub enum OraclePolicy {
    Immediate,
    /// Fires after this many frames at the nominal frame rate.
    FixedDelay(usize),
    /// Fires at the probe's first post-change frame on the series.
    Detector(Box<DetectorFeed>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorFeed {
    pub probe: LinearProbe,
    pub series: FeatureSeries,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateChangeOracle {
    policies: BTreeMap<&'static str, OraclePolicy>,
    /// Longest wait before the execution gives up, seconds.
    pub timeout: f64,
}

impl StateChangeOracle {
    pub fn immediate() -> Self {
        Self {
            policies: WAITING_ACTIONS
                .iter()
                .map(|&a| (a, OraclePolicy::Immediate))
                .collect(),
            timeout: 600.0,
        }
    }

    /// Returns false when `action` is not one of [`WAITING_ACTIONS`].
    pub fn set(&mut self, action: &str, policy: OraclePolicy) -> bool {
        match WAITING_ACTIONS.iter().find(|&&a| a == action) {
            Some(&a) => {
                self.policies.insert(a, policy);
                true
            }
            None => false,
        }
    }

    pub fn policy(&self, action: &str) -> Option<&OraclePolicy> {
        self.policies.get(action)
    }

    /// Seconds until the oracle fires for `action`; `None` if it never does.
    fn wait(&self, action: &str) -> Option<f64> {
        match self.policies.get(action) {
            None | Some(OraclePolicy::Immediate) => Some(0.0),
            Some(OraclePolicy::FixedDelay(frames)) => Some(*frames as f64 / FRAME_RATE_HZ),
            Some(OraclePolicy::Detector(feed)) => detect_change(&feed.probe, &feed.series)
                .ok()?
                .detected_time
                .map(|t| t - feed.series.first_time()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub step: usize,
    pub action: String,
    pub pre: u64,
    /// `None` on the entry that timed out.
    pub post: Option<u64>,
    pub complemented: bool,
    pub wait: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionTrace {
    pub entries: Vec<TraceEntry>,
    pub timed_out: bool,
}

impl ExecutionTrace {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let _ = write!(out, "step={} pre={:016x} ", e.step, e.pre);
            match e.post {
                Some(p) => {
                    let _ = write!(out, "post={p:016x} ");
                }
                None => out.push_str("timeout "),
            }
            let _ = writeln!(
                out,
                "complemented={} wait={:.1} action={}",
                e.complemented, e.wait, e.action
            );
        }
        out
    }

    /// Every entry's post digest is the next entry's pre digest.
    pub fn chained(&self) -> bool {
        self.entries
            .windows(2)
            .all(|w| w[0].post == Some(w[1].pre))
    }
}

/// Run `plan` from its start state, blocking on the oracle for the waiting
/// actions. A wait beyond the oracle timeout ends the trace early.
pub fn execute(
    task: &GroundedTask,
    plan: &FullPlan,
    complemented: &[Vec<bool>],
    oracle: &StateChangeOracle,
) -> Result<ExecutionTrace, PreconditionViolated> {
    let mut entries = Vec::new();
    let mut state = plan.start.clone();
    for (k, p) in plan.steps.iter().enumerate() {
        for (j, &a) in p.actions.iter().enumerate() {
            let action = &task.actions[a];
            let pre = state_digest(task, &state);
            let flag = complemented
                .get(k)
                .and_then(|f| f.get(j))
                .copied()
                .unwrap_or(true);
            let wait = oracle.wait(&action.schema);
            match wait {
                Some(w) if w <= oracle.timeout => {
                    state = apply(task, &state, action)?;
                    entries.push(TraceEntry {
                        step: k + 1,
                        action: action.label(),
                        pre,
                        post: Some(state_digest(task, &state)),
                        complemented: flag,
                        wait: w,
                    });
                }
                _ => {
                    entries.push(TraceEntry {
                        step: k + 1,
                        action: action.label(),
                        pre,
                        post: None,
                        complemented: flag,
                        wait: oracle.timeout,
                    });
                    return Ok(ExecutionTrace {
                        entries,
                        timed_out: true,
                    });
                }
            }
        }
    }
    Ok(ExecutionTrace {
        entries,
        timed_out: false,
    })
}
