//! Turning a function sequence into per-step goals, and planning the steps
//! one after another.

use std::collections::BTreeSet;
use std::fmt::{self, Write};

use crate::funcseq::{CookingFunction, FunctionSequence, FunctionCall, KnownObjects, Slot};
use crate::kitchen::{build_problem_with_states, ScenarioConfig, ScenarioError, ARMS, STOVE_VESSELS};
use crate::pddl::{ground, Atom, DomainModel, GoalLiterals, GroundAction, GroundedTask, PddlError, WorldState};
use crate::planner::{apply, Plan, PlanError, Planner, PreconditionViolated};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum GoalError {
    #[error("step {step} call {call}: `{object}` is not an object of the scenario")]
    UnknownObject {
        step: usize,
        call: usize,
        object: String,
    },
    #[error("step {step}: goal requires both {atom} and its negation")]
    Conflict { step: usize, atom: Atom },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// The default condition: the robot has nothing in its hands.
pub fn default_condition() -> GoalLiterals {
    GoalLiterals {
        positive: ARMS.iter().map(|a| Atom::new("hand-free", &[a])).collect(),
        negative: BTreeSet::new(),
    }
}

/// Added to the last step: tap closed and every stove off.
pub fn end_condition() -> GoalLiterals {
    let mut negative = BTreeSet::from([Atom::new("tap-open", &[])]);
    negative.extend(STOVE_VESSELS.iter().map(|v| Atom::new("stove-on", &[v])));
    GoalLiterals {
        positive: BTreeSet::new(),
        negative,
    }
}

fn merge(into: &mut GoalLiterals, from: GoalLiterals) {
    into.positive.extend(from.positive);
    into.negative.extend(from.negative);
}

fn call_literals(call: &FunctionCall) -> GoalLiterals {
    let a: Vec<&str> = call.args.iter().map(String::as_str).collect();
    let mut g = GoalLiterals::default();
    match call.function {
        CookingFunction::Pour => {
            g.positive.insert(Atom::new("in", &[a[0], a[1]]));
        }
        CookingFunction::Mix => {
            g.positive.insert(Atom::new("mixture-made", &[a[2]]));
            g.positive.insert(Atom::new("in", &[a[2], a[3]]));
        }
        CookingFunction::TurnOnStove => {
            g.positive.insert(Atom::new("stove-on", &[a[0]]));
        }
        CookingFunction::SetStove => {
            g.positive.insert(Atom::new("stove-level", &[a[1], a[0]]));
        }
        CookingFunction::TurnOffStove => {
            g.negative.insert(Atom::new("stove-on", &[a[0]]));
        }
        CookingFunction::Stir
        | CookingFunction::Heat
        | CookingFunction::Cook
        | CookingFunction::Boil
        | CookingFunction::StirFry => {
            g.positive.insert(Atom::new("ingredient-state", &[a[0], a[1]]));
        }
    }
    g
}

fn check(step_no: usize, g: &GoalLiterals) -> Result<(), GoalError> {
    match g.positive.intersection(&g.negative).next() {
        Some(atom) => Err(GoalError::Conflict {
            step: step_no,
            atom: atom.clone(),
        }),
        None => Ok(()),
    }
}

/// Goal of one step: the union of its calls' effects plus the default
/// condition. `step_no` is only used in error messages.
pub fn compile_step(
    step_no: usize,
    step: &[FunctionCall],
    known: &KnownObjects,
) -> Result<GoalLiterals, GoalError> {
    let builtin = KnownObjects::builtin();
    let mut g = default_condition();
    for (ci, call) in step.iter().enumerate() {
        for (arg, slot) in call.args.iter().zip(call.function.slots()) {
            if *slot == Slot::State {
                continue;
            }
            if !known.kinds.contains_key(arg) && !builtin.kinds.contains_key(arg) {
                return Err(GoalError::UnknownObject {
                    step: step_no,
                    call: ci + 1,
                    object: arg.clone(),
                });
            }
        }
        merge(&mut g, call_literals(call));
    }
    check(step_no, &g)?;
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledGoals {
    pub steps: Vec<GoalLiterals>,
}

pub fn compile_sequence(
    fs: &FunctionSequence,
    known: &KnownObjects,
) -> Result<CompiledGoals, GoalError> {
    let mut steps = fs
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| compile_step(i + 1, s, known))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(last) = steps.last_mut() {
        merge(last, end_condition());
        check(fs.steps.len(), last)?;
    }
    Ok(CompiledGoals { steps })
}

impl CompiledGoals {
    /// Names used as states (ingredient targets and stove levels).
    pub fn state_names(&self) -> BTreeSet<String> {
        self.steps
            .iter()
            .flat_map(|g| g.positive.iter().chain(&g.negative))
            .filter(|a| a.predicate == "ingredient-state" || a.predicate == "stove-level")
            .map(|a| a.args[1].clone())
            .collect()
    }

    pub fn parse(text: &str) -> Result<Self, GoalError> {
        let mut steps: Vec<GoalLiterals> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |msg: &str| GoalError::Parse {
                line: i + 1,
                msg: msg.to_string(),
            };
            if line.is_empty() || line.starts_with(';') {
                continue;
            }
            if let Some(n) = line.strip_prefix("step ") {
                if n.trim().parse::<usize>().ok() != Some(steps.len() + 1) {
                    return Err(err("steps must be numbered 1, 2, ..."));
                }
                steps.push(GoalLiterals::default());
                continue;
            }
            let current = steps.last_mut().ok_or_else(|| err("literal before first step"))?;
            let (sign, rest) = line.split_at(1);
            let atom = Atom::parse(rest.trim()).ok_or_else(|| err("malformed atom"))?;
            match sign {
                "+" => current.positive.insert(atom),
                "-" => current.negative.insert(atom),
                _ => return Err(err("literal must start with + or -")),
            };
        }
        for (i, g) in steps.iter().enumerate() {
            check(i + 1, g)?;
        }
        Ok(Self { steps })
    }
}

impl fmt::Display for CompiledGoals {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, g) in self.steps.iter().enumerate() {
            writeln!(f, "step {}", i + 1)?;
            for a in &g.positive {
                writeln!(f, "+ {a}")?;
            }
            for a in &g.negative {
                writeln!(f, "- {a}")?;
            }
        }
        Ok(())
    }
}

pub fn render_goal(g: &GoalLiterals) -> String {
    let mut parts: Vec<String> = g.positive.iter().map(Atom::to_string).collect();
    parts.extend(g.negative.iter().map(|a| format!("(not {a})")));
    format!("(and {})", parts.join(" "))
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum RecipePlanError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Pddl(#[from] PddlError),
    #[error("step {step}: {source}; goal {goal}")]
    Step {
        step: usize,
        goal: String,
        source: PlanError,
    },
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum PlanTextError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Inapplicable {
        line: usize,
        source: PreconditionViolated,
    },
}

/// Per-step plans chained through their boundary states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FullPlan {
    pub start: WorldState,
    pub steps: Vec<Plan>,
}

impl FullPlan {
    pub fn actions(&self) -> Vec<usize> {
        self.steps.iter().flat_map(|p| p.actions.iter().copied()).collect()
    }

    pub fn len(&self) -> usize {
        self.steps.iter().map(Plan::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Start state followed by each step's final state.
    pub fn boundaries(&self) -> Vec<&WorldState> {
        std::iter::once(&self.start)
            .chain(self.steps.iter().map(|p| &p.final_state))
            .collect()
    }

    pub fn final_state(&self) -> &WorldState {
        self.steps.last().map_or(&self.start, |p| &p.final_state)
    }

    /// For every action of every step, whether the planner inserted it on
    /// its own rather than it realising one of the step's calls.
    pub fn complemented(&self, task: &GroundedTask, fs: Option<&FunctionSequence>) -> Vec<Vec<bool>> {
        self.steps
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let mut flags = vec![true; p.actions.len()];
                let calls = fs.and_then(|fs| fs.steps.get(k)).map_or(&[][..], Vec::as_slice);
                for call in calls {
                    let hit = p
                        .actions
                        .iter()
                        .enumerate()
                        .position(|(j, &a)| flags[j] && realises(task, &task.actions[a], call));
                    if let Some(j) = hit {
                        flags[j] = false;
                    }
                }
                flags
            })
            .collect()
    }

    /// `step N` headers followed by one action per line; actions the recipe
    /// does not mention carry a `; complemented` comment.
    pub fn to_text(&self, task: &GroundedTask, fs: Option<&FunctionSequence>) -> String {
        let flags = self.complemented(task, fs);
        let mut out = String::new();
        for (k, p) in self.steps.iter().enumerate() {
            let _ = writeln!(out, "step {}", k + 1);
            for (j, &a) in p.actions.iter().enumerate() {
                out.push_str(&task.actions[a].label());
                if flags[k][j] {
                    out.push_str(" ; complemented");
                }
                out.push('\n');
            }
        }
        out
    }

    /// Read a plan written by [`FullPlan::to_text`], replaying it from
    /// `start` to recover the boundary states.
    pub fn parse(text: &str, task: &GroundedTask, start: &WorldState) -> Result<Self, PlanTextError> {
        let mut steps: Vec<Plan> = Vec::new();
        let mut state = start.clone();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split(';').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| PlanTextError::Parse { line: i + 1, msg };
            if let Some(n) = line.strip_prefix("step ") {
                if n.trim().parse::<usize>().ok() != Some(steps.len() + 1) {
                    return Err(err("steps must be numbered 1, 2, ...".into()));
                }
                steps.push(Plan {
                    actions: Vec::new(),
                    final_state: state.clone(),
                });
                continue;
            }
            let idx = task
                .action_by_label(line)
                .ok_or_else(|| err(format!("unknown action {line}")))?;
            let current = steps
                .last_mut()
                .ok_or_else(|| err("action before first step".into()))?;
            state = apply(task, &state, &task.actions[idx]).map_err(|source| {
                PlanTextError::Inapplicable {
                    line: i + 1,
                    source,
                }
            })?;
            current.actions.push(idx);
            current.final_state = state.clone();
        }
        Ok(Self {
            start: start.clone(),
            steps,
        })
    }
}

/// Same name as the call with every call argument among the action's, or
/// an action of another name that brings about one of the call's literals
/// (e.g. `boil` reaching the state a `heat` call asks for).
fn realises(task: &GroundedTask, action: &GroundAction, call: &FunctionCall) -> bool {
    if action.schema == call.function.name() {
        return call.args.iter().all(|c| action.args.contains(c));
    }
    let target = call_literals(call);
    action.add.iter().any(|&f| target.positive.contains(&task.facts[f]))
        || action.del.iter().any(|&f| target.negative.contains(&task.facts[f]))
}

/// The grounded task every stage of one recipe shares.
pub fn recipe_task(
    domain: &DomainModel,
    scenario: &ScenarioConfig,
    goals: &CompiledGoals,
) -> Result<GroundedTask, RecipePlanError> {
    let problem = build_problem_with_states(scenario, &goals.state_names())?;
    Ok(ground(domain, &problem)?)
}

#[derive(Debug, Clone)]
pub struct PlannedRecipe {
    pub task: GroundedTask,
    pub plan: FullPlan,
}

/// Plan each step from the previous step's final state. Stops at the first
/// step that cannot be solved.
pub fn plan_recipe(
    domain: &DomainModel,
    scenario: &ScenarioConfig,
    goals: &CompiledGoals,
) -> Result<PlannedRecipe, RecipePlanError> {
    let task = recipe_task(domain, scenario, goals)?;
    let plan = plan_steps(&Planner::new(&task), goals)?;
    Ok(PlannedRecipe { task, plan })
}

pub fn plan_steps(planner: &Planner<'_>, goals: &CompiledGoals) -> Result<FullPlan, RecipePlanError> {
    let start = planner.task().init.clone();
    let mut state = start.clone();
    let mut steps = Vec::new();
    for (k, g) in goals.steps.iter().enumerate() {
        let p = planner.plan(&state, g).map_err(|source| RecipePlanError::Step {
            step: k + 1,
            goal: render_goal(g),
            source,
        })?;
        state = p.final_state.clone();
        steps.push(p);
    }
    Ok(FullPlan { start, steps })
}
