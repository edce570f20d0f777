//! Brute-force oracles shared by the integration tests. Nothing here calls
//! the grounder or the planner.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use cookplan_core::kitchen::{build_problem_with_states, ObjectKind, Placement, ScenarioConfig, Spot};
use cookplan_core::pddl::{Atom, AtomSchema, Condition, DomainModel, Effect, GoalLiterals, ProblemModel, Term};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NaiveAction {
    pub label: String,
    pub pre_pos: BTreeSet<Atom>,
    pub pre_neg: BTreeSet<Atom>,
    pub add: BTreeSet<Atom>,
    pub del: BTreeSet<Atom>,
}

fn subtype(domain: &DomainModel, ty: &str, ancestor: &str) -> bool {
    let mut cur = ty.to_string();
    loop {
        if cur == ancestor {
            return true;
        }
        match domain.types.iter().find(|t| t.name == cur).and_then(|t| t.parent.clone()) {
            Some(p) => cur = p,
            None => return false,
        }
    }
}

fn objects_of<'a>(domain: &DomainModel, objects: &'a [(String, String)], ty: &str) -> Vec<&'a str> {
    objects
        .iter()
        .filter(|(_, t)| subtype(domain, t, ty))
        .map(|(n, _)| n.as_str())
        .collect()
}

fn inst(a: &AtomSchema, b: &HashMap<String, String>) -> Atom {
    Atom {
        predicate: a.predicate.clone(),
        args: a
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => b[v].clone(),
                Term::Const(c) => c.clone(),
            })
            .collect(),
    }
}

fn term(t: &Term, b: &HashMap<String, String>) -> String {
    match t {
        Term::Var(v) => b[v].clone(),
        Term::Const(c) => c.clone(),
    }
}

/// Every binding in the full cross product of parameter domains, filtered
/// by the (in)equality constraints afterwards.
pub fn naive_ground(domain: &DomainModel, problem: &ProblemModel) -> Vec<NaiveAction> {
    let objects: Vec<(String, String)> = domain
        .constants
        .iter()
        .chain(&problem.objects)
        .map(|o| (o.name.clone(), o.ty.clone()))
        .collect();
    let mut out = Vec::new();
    for schema in &domain.actions {
        let mut bindings: Vec<Vec<&str>> = vec![vec![]];
        for p in &schema.params {
            let objs = objects_of(domain, &objects, &p.ty);
            bindings = bindings
                .into_iter()
                .flat_map(|b| {
                    objs.iter().map(move |o| {
                        let mut b = b.clone();
                        b.push(*o);
                        b
                    })
                })
                .collect();
        }
        'binding: for args in bindings {
            let b: HashMap<String, String> = schema
                .params
                .iter()
                .zip(&args)
                .map(|(p, a)| (p.name.clone(), a.to_string()))
                .collect();
            let mut act = NaiveAction {
                label: format!("({} {})", schema.name, args.join(" ")).replace(" )", ")"),
                pre_pos: BTreeSet::new(),
                pre_neg: BTreeSet::new(),
                add: BTreeSet::new(),
                del: BTreeSet::new(),
            };
            for c in &schema.precondition {
                match c {
                    Condition::Pos(a) => {
                        act.pre_pos.insert(inst(a, &b));
                    }
                    Condition::Neg(a) => {
                        act.pre_neg.insert(inst(a, &b));
                    }
                    Condition::Eq(x, y) => {
                        if term(x, &b) != term(y, &b) {
                            continue 'binding;
                        }
                    }
                    Condition::Neq(x, y) => {
                        if term(x, &b) == term(y, &b) {
                            continue 'binding;
                        }
                    }
                    Condition::ForallNot { vars, atom } => {
                        assert_eq!(vars.len(), 1, "oracle handles one quantified variable");
                        for o in objects_of(domain, &objects, &vars[0].ty) {
                            let mut b2 = b.clone();
                            b2.insert(vars[0].name.clone(), o.to_string());
                            act.pre_neg.insert(inst(atom, &b2));
                        }
                    }
                }
            }
            for e in &schema.effect {
                match e {
                    Effect::Add(a) => {
                        act.add.insert(inst(a, &b));
                    }
                    Effect::Del(a) => {
                        act.del.insert(inst(a, &b));
                    }
                }
            }
            let add = act.add.clone();
            act.del.retain(|d| !add.contains(d));
            out.push(act);
        }
    }
    out.sort_by(|a, b| a.label.cmp(&b.label));
    out
}

pub type Set = BTreeSet<Atom>;

pub fn applicable(a: &NaiveAction, s: &Set) -> bool {
    a.pre_pos.iter().all(|f| s.contains(f)) && a.pre_neg.iter().all(|f| !s.contains(f))
}

pub fn successor(a: &NaiveAction, s: &Set) -> Set {
    let mut n: Set = s.difference(&a.del).cloned().collect();
    n.extend(a.add.iter().cloned());
    n
}

pub fn satisfies(g: &GoalLiterals, s: &Set) -> bool {
    g.positive.iter().all(|f| s.contains(f)) && g.negative.iter().all(|f| !s.contains(f))
}

pub enum OracleResult {
    Found(usize),
    Exhausted,
    TooBig,
}

/// Plain breadth-first search over atom sets; `cap` bounds visited states.
pub fn oracle_bfs(actions: &[NaiveAction], init: &Set, goal: &GoalLiterals, cap: usize) -> OracleResult {
    if satisfies(goal, init) {
        return OracleResult::Found(0);
    }
    let mut seen: HashSet<Set> = HashSet::new();
    seen.insert(init.clone());
    let mut queue = VecDeque::from([(init.clone(), 0usize)]);
    while let Some((s, d)) = queue.pop_front() {
        for a in actions.iter().filter(|a| applicable(a, &s)) {
            let n = successor(a, &s);
            if seen.contains(&n) {
                continue;
            }
            if satisfies(goal, &n) {
                return OracleResult::Found(d + 1);
            }
            if seen.len() >= cap {
                return OracleResult::TooBig;
            }
            seen.insert(n.clone());
            queue.push_back((n, d + 1));
        }
    }
    OracleResult::Exhausted
}

pub struct RandomCase {
    pub scenario: ScenarioConfig,
    pub problem: ProblemModel,
    pub actions: Vec<NaiveAction>,
    pub goal: GoalLiterals,
}

const STATE_NAMES: [&str; 2] = ["hot", "done"];

/// A small random kitchen and a goal sampled from the end of a random walk.
pub fn random_case(domain: &DomainModel, seed: u64) -> RandomCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spot = |rng: &mut ChaCha8Rng| *Spot::ALL.choose(rng).unwrap();
    let mut sc = ScenarioConfig::empty(&format!("random-{seed}"), spot(&mut rng));
    let mut free_arms = vec!["arm1".to_string(), "arm2".to_string()];
    for v in ["pot", "frying-pan", "measuring-cup"] {
        let p = if rng.random_bool(0.15) && !free_arms.is_empty() {
            Placement::Held(free_arms.remove(0))
        } else {
            Placement::At(spot(&mut rng))
        };
        sc.placements.insert(v.to_string(), p);
    }
    let n_ing = rng.random_range(1..=2);
    for k in 0..n_ing {
        let name = ["egg", "oil"][k];
        if rng.random_bool(0.3) {
            sc.add_object(name, ObjectKind::Ingredient, None);
            let v = *["pot", "frying-pan"].choose(&mut rng).unwrap();
            sc.containment.insert(name.to_string(), v.to_string());
        } else {
            sc.add_object(name, ObjectKind::Ingredient, Some(Placement::At(spot(&mut rng))));
        }
    }
    if rng.random_bool(0.5) {
        sc.add_object("spatula", ObjectKind::Tool, Some(Placement::At(spot(&mut rng))));
    }
    if rng.random_bool(0.2) {
        sc.stove_on.push("pot".to_string());
    }
    sc.tap_open = rng.random_bool(0.15);
    sc.check().expect("random scenario is consistent");

    let states: BTreeSet<String> = STATE_NAMES.iter().map(|s| s.to_string()).collect();
    let problem = build_problem_with_states(&sc, &states).unwrap();
    let actions = naive_ground(domain, &problem);

    let mut s = problem.init.clone();
    let walk = rng.random_range(1..=6);
    for _ in 0..walk {
        let options: Vec<&NaiveAction> = actions.iter().filter(|a| applicable(a, &s)).collect();
        if let Some(a) = options.choose(&mut rng) {
            s = successor(a, &s);
        }
    }
    let mut goal = GoalLiterals::default();
    let fresh: Vec<&Atom> = s.difference(&problem.init).collect();
    let gone: Vec<&Atom> = problem.init.difference(&s).collect();
    let kept: Vec<&Atom> = s.iter().collect();
    for _ in 0..rng.random_range(1..=3) {
        match rng.random_range(0..3) {
            0 if !fresh.is_empty() => {
                goal.positive.insert((*fresh.choose(&mut rng).unwrap()).clone());
            }
            1 if !gone.is_empty() => {
                goal.negative.insert((*gone.choose(&mut rng).unwrap()).clone());
            }
            _ => {
                goal.positive.insert((*kept.choose(&mut rng).unwrap()).clone());
            }
        }
    }
    RandomCase {
        scenario: sc,
        problem,
        actions,
        goal,
    }
}

/// Structural invariants every reachable kitchen state keeps.
pub fn kitchen_invariants(s: &Set) -> Result<(), String> {
    let robot = s.iter().filter(|a| a.predicate == "robot-at").count();
    if robot != 1 {
        return Err(format!("{robot} robot-at literals"));
    }
    for arm in ["arm1", "arm2"] {
        let free = s.contains(&Atom::new("hand-free", &[arm])) as usize;
        let held = s
            .iter()
            .filter(|a| a.predicate == "holding" && a.args[0] == arm)
            .count();
        if free + held != 1 {
            return Err(format!("{arm}: hand-free {free}, holding {held}"));
        }
    }
    let mut located: BTreeMap<&str, usize> = BTreeMap::new();
    for a in s {
        match a.predicate.as_str() {
            "object-at" => *located.entry(&a.args[0]).or_default() += 1,
            "holding" => *located.entry(&a.args[1]).or_default() += 1,
            _ => {}
        }
    }
    if let Some((o, n)) = located.iter().find(|(_, n)| **n > 1) {
        return Err(format!("{o} has {n} locations"));
    }
    Ok(())
}
