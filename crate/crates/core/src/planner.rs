//! Breadth-first forward search over a [`GroundedTask`].
//!
//! Successors are generated in action-label order and the goal is tested when
//! a state is first generated, so the returned plan is the shortest one and,
//! among the shortest, the lexicographically smallest sequence of labels.

use std::collections::{HashSet, VecDeque};
use std::fmt::Write;

use crate::pddl::{Atom, GoalLiterals, GroundAction, GroundedTask, WorldState};

pub const DEFAULT_NODE_BUDGET: usize = 5_000_000;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
#[error("precondition {} of {action} does not hold", render(literal, *negated))]
pub struct PreconditionViolated {
    pub action: String,
    pub literal: Atom,
    /// True when the literal must be false but is true.
    pub negated: bool,
}

fn render(a: &Atom, negated: bool) -> String {
    if negated {
        format!("(not {a})")
    } else {
        a.to_string()
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("goal unreachable ({expanded} states expanded)")]
    Unsolvable { expanded: usize },
    #[error("node budget of {budget} expansions exhausted")]
    BudgetExceeded { budget: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    /// Indices into `GroundedTask::actions`.
    pub actions: Vec<usize>,
    pub final_state: WorldState,
}

impl Plan {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn labels(&self, task: &GroundedTask) -> Vec<String> {
        self.actions.iter().map(|&a| task.actions[a].label()).collect()
    }

    /// One `(action arg ...)` line per action.
    pub fn to_text(&self, task: &GroundedTask) -> String {
        let mut out = String::new();
        for l in self.labels(task) {
            out.push_str(&l);
            out.push('\n');
        }
        out
    }
}

/// Apply `a` to `s` under STRIPS semantics.
pub fn apply(
    task: &GroundedTask,
    s: &WorldState,
    a: &GroundAction,
) -> Result<WorldState, PreconditionViolated> {
    if let Some(&f) = a.pre_pos.iter().find(|&&f| !s.contains(f)) {
        return Err(PreconditionViolated {
            action: a.label(),
            literal: task.facts[f].clone(),
            negated: false,
        });
    }
    if let Some(&f) = a.pre_neg.iter().find(|&&f| s.contains(f)) {
        return Err(PreconditionViolated {
            action: a.label(),
            literal: task.facts[f].clone(),
            negated: true,
        });
    }
    Ok(apply_unchecked(s, a))
}

fn apply_unchecked(s: &WorldState, a: &GroundAction) -> WorldState {
    let mut next = s.clone();
    for &d in &a.del {
        next.remove(d);
    }
    for &f in &a.add {
        next.insert(f);
    }
    next
}

fn applicable(s: &WorldState, a: &GroundAction) -> bool {
    a.pre_pos.iter().all(|&f| s.contains(f)) && !a.pre_neg.iter().any(|&f| s.contains(f))
}

/// Goal literals translated to fact ids.
#[derive(Debug, Clone)]
struct FactGoal {
    pos: Vec<usize>,
    neg: Vec<usize>,
}

impl FactGoal {
    /// `None` when a positive literal lies outside the universe, i.e. can
    /// never become true.
    fn new(task: &GroundedTask, goal: &GoalLiterals) -> Option<Self> {
        let pos = goal
            .positive
            .iter()
            .map(|a| task.fact_id(a))
            .collect::<Option<Vec<_>>>()?;
        let neg = goal.negative.iter().filter_map(|a| task.fact_id(a)).collect();
        Some(Self { pos, neg })
    }

    fn holds(&self, s: &WorldState) -> bool {
        self.pos.iter().all(|&f| s.contains(f)) && !self.neg.iter().any(|&f| s.contains(f))
    }
}

/// Search engine for one task. Immutable after construction, so one planner
/// can serve concurrent queries.
#[derive(Debug)]
pub struct Planner<'t> {
    task: &'t GroundedTask,
    /// fact id -> actions whose rarest positive precondition is that fact
    anchored: Vec<Vec<usize>>,
    /// actions without positive preconditions
    unanchored: Vec<usize>,
    pub budget: usize,
}

impl<'t> Planner<'t> {
    pub fn new(task: &'t GroundedTask) -> Self {
        let mut frequency = vec![0usize; task.facts.len()];
        for a in &task.actions {
            for &f in &a.pre_pos {
                frequency[f] += 1;
            }
        }
        let mut anchored = vec![Vec::new(); task.facts.len()];
        let mut unanchored = Vec::new();
        for (i, a) in task.actions.iter().enumerate() {
            match a.pre_pos.iter().min_by_key(|&&f| (frequency[f], f)) {
                Some(&f) => anchored[f].push(i),
                None => unanchored.push(i),
            }
        }
        Self {
            task,
            anchored,
            unanchored,
            budget: DEFAULT_NODE_BUDGET,
        }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn task(&self) -> &'t GroundedTask {
        self.task
    }

    /// Indices of the actions applicable in `s`, ascending.
    pub fn successors(&self, s: &WorldState) -> Vec<usize> {
        self.successors_among(s, None)
    }

    fn successors_among(&self, s: &WorldState, allowed: Option<&[bool]>) -> Vec<usize> {
        let mut out: Vec<usize> = s
            .ones()
            .flat_map(|f| self.anchored[f].iter().copied())
            .chain(self.unanchored.iter().copied())
            .filter(|&i| allowed.is_none_or(|m| m[i]) && applicable(s, &self.task.actions[i]))
            .collect();
        out.sort_unstable();
        out
    }

    /// Backward relevance: an action matters if it adds a fact that must
    /// become true, or deletes one that must become false, for the goal or
    /// for another action that matters. Dropping every other action from a
    /// plan leaves a valid plan that is no longer, so optimal plans only
    /// ever use relevant actions.
    fn relevant(&self, goal: &FactGoal) -> Vec<bool> {
        let n = self.task.facts.len();
        let mut need_true = vec![false; n];
        let mut need_false = vec![false; n];
        for &f in &goal.pos {
            need_true[f] = true;
        }
        for &f in &goal.neg {
            need_false[f] = true;
        }
        let actions = &self.task.actions;
        let mut relevant = vec![false; actions.len()];
        loop {
            let mut changed = false;
            for (i, a) in actions.iter().enumerate() {
                if relevant[i] {
                    continue;
                }
                if a.add.iter().any(|&f| need_true[f]) || a.del.iter().any(|&f| need_false[f]) {
                    relevant[i] = true;
                    changed = true;
                    for &f in &a.pre_pos {
                        need_true[f] = true;
                    }
                    for &f in &a.pre_neg {
                        need_false[f] = true;
                    }
                }
            }
            if !changed {
                return relevant;
            }
        }
    }

    pub fn plan(&self, start: &WorldState, goal: &GoalLiterals) -> Result<Plan, PlanError> {
        let Some(goal) = FactGoal::new(self.task, goal) else {
            return Err(PlanError::Unsolvable { expanded: 0 });
        };
        if goal.holds(start) {
            return Ok(Plan {
                actions: Vec::new(),
                final_state: start.clone(),
            });
        }
        // node = (parent node, action); node 0 is the start
        let mut nodes: Vec<(u32, u32)> = vec![(u32::MAX, u32::MAX)];
        let mut seen: HashSet<WorldState> = HashSet::new();
        seen.insert(start.clone());
        let mut queue: VecDeque<(WorldState, u32)> = VecDeque::new();
        queue.push_back((start.clone(), 0));
        let relevant = self.relevant(&goal);
        let mut expanded = 0usize;
        while let Some((s, node)) = queue.pop_front() {
            if expanded >= self.budget {
                return Err(PlanError::BudgetExceeded {
                    budget: self.budget,
                });
            }
            expanded += 1;
            for a in self.successors_among(&s, Some(&relevant)) {
                let next = apply_unchecked(&s, &self.task.actions[a]);
                if seen.contains(&next) {
                    continue;
                }
                nodes.push((node, a as u32));
                let id = (nodes.len() - 1) as u32;
                if goal.holds(&next) {
                    return Ok(Plan {
                        actions: unwind(&nodes, id),
                        final_state: next,
                    });
                }
                seen.insert(next.clone());
                queue.push_back((next, id));
            }
        }
        Err(PlanError::Unsolvable { expanded })
    }
}

fn unwind(nodes: &[(u32, u32)], mut id: u32) -> Vec<usize> {
    let mut actions = Vec::new();
    while id != 0 {
        let (parent, action) = nodes[id as usize];
        actions.push(action as usize);
        id = parent;
    }
    actions.reverse();
    actions
}

/// Plan with the default node budget.
pub fn plan(
    task: &GroundedTask,
    start: &WorldState,
    goal: &GoalLiterals,
) -> Result<Plan, PlanError> {
    Planner::new(task).plan(start, goal)
}

/// Per-action state deltas of `actions` replayed from `start`:
/// `(label)\t+(added) -(deleted)` with only facts that actually changed.
pub fn trace(
    task: &GroundedTask,
    start: &WorldState,
    actions: &[usize],
) -> Result<String, PreconditionViolated> {
    let mut out = String::new();
    let mut s = start.clone();
    for &i in actions {
        let a = &task.actions[i];
        let next = apply(task, &s, a)?;
        let _ = write!(out, "{}\t", a.label());
        let mut parts = Vec::new();
        for f in next.ones().filter(|&f| !s.contains(f)) {
            parts.push(format!("+{}", task.facts[f]));
        }
        for f in s.ones().filter(|&f| !next.contains(f)) {
            parts.push(format!("-{}", task.facts[f]));
        }
        out.push_str(&parts.join(" "));
        out.push('\n');
        s = next;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kitchen::{build_domain, build_problem, ObjectKind, Placement, ScenarioConfig, Spot};
    use crate::pddl::ground;

    fn task_with(setup: impl FnOnce(&mut ScenarioConfig)) -> GroundedTask {
        let mut sc = ScenarioConfig::empty("t", Spot::Kitchen);
        setup(&mut sc);
        ground(&build_domain(), &build_problem(&sc).unwrap()).unwrap()
    }

    fn goal(pos: &[Atom], neg: &[Atom]) -> GoalLiterals {
        GoalLiterals {
            positive: pos.iter().cloned().collect(),
            negative: neg.iter().cloned().collect(),
        }
    }

    #[test]
    fn hold_applies_its_effects() {
        let task = task_with(|s| {
            s.add_object("egg", ObjectKind::Ingredient, Some(Placement::At(Spot::Kitchen)))
        });
        let a = &task.actions[task.action_by_label("(hold egg arm1 kitchen)").unwrap()];
        let next = apply(&task, &task.init, a).unwrap();
        let atoms = task.atoms_of(&next);
        assert!(atoms.contains(&Atom::new("holding", &["arm1", "egg"])));
        assert!(!atoms.contains(&Atom::new("hand-free", &["arm1"])));
        assert!(!atoms.contains(&Atom::new("object-at", &["egg", "kitchen"])));
    }

    #[test]
    fn move_blocked_by_lit_stove() {
        let task = task_with(|s| {
            s.add_object("pot", ObjectKind::Vessel, Some(Placement::At(Spot::Stove)));
            s.stove_on.push("pot".into());
        });
        let a = &task.actions[task.action_by_label("(move-to kitchen stove)").unwrap()];
        let err = apply(&task, &task.init, a).unwrap_err();
        assert_eq!(err.literal, Atom::new("stove-on", &["pot"]));
        assert!(err.negated);
    }

    #[test]
    fn satisfied_goal_gives_empty_plan() {
        let task = task_with(|_| {});
        let p = plan(&task, &task.init, &goal(&[Atom::new("hand-free", &["arm1"])], &[])).unwrap();
        assert!(p.is_empty());
        assert_eq!(p.final_state, task.init);
    }

    #[test]
    fn single_hold_plan() {
        let task = task_with(|s| {
            s.add_object("egg", ObjectKind::Ingredient, Some(Placement::At(Spot::Kitchen)))
        });
        let g = goal(
            &[
                Atom::new("holding", &["arm1", "egg"]),
                Atom::new("hand-free", &["arm2"]),
            ],
            &[],
        );
        let p = plan(&task, &task.init, &g).unwrap();
        assert_eq!(p.labels(&task), vec!["(hold egg arm1 kitchen)"]);
    }

    #[test]
    fn unreachable_and_budget_are_distinct() {
        let task = task_with(|s| {
            s.add_object("egg", ObjectKind::Ingredient, Some(Placement::At(Spot::Kitchen)))
        });
        let never = goal(&[Atom::new("in", &["egg", "egg"])], &[]);
        assert!(matches!(
            plan(&task, &task.init, &never),
            Err(PlanError::Unsolvable { .. })
        ));
        let far = goal(&[Atom::new("in", &["egg", "pot"])], &[]);
        let tight = Planner::new(&task).with_budget(1);
        assert_eq!(
            tight.plan(&task.init, &far),
            Err(PlanError::BudgetExceeded { budget: 1 })
        );
    }

    #[test]
    fn trace_lists_deltas() {
        let task = task_with(|s| {
            s.add_object("egg", ObjectKind::Ingredient, Some(Placement::At(Spot::Kitchen)))
        });
        let i = task.action_by_label("(hold egg arm1 kitchen)").unwrap();
        let t = trace(&task, &task.init, &[i]).unwrap();
        assert_eq!(
            t,
            "(hold egg arm1 kitchen)\t+(holding arm1 egg) -(hand-free arm1) -(object-at egg kitchen)\n"
        );
    }
}
