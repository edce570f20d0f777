mod common;

use common::{kitchen_invariants, oracle_bfs, random_case, OracleResult};
use cookplan_core::kitchen::{build_domain, build_problem, ObjectKind, Placement, ScenarioConfig, Spot};
use cookplan_core::pddl::{ground, Atom, GoalLiterals};
use cookplan_core::planner::{apply, PlanError, Planner};
use cookplan_core::sim::Validator;
use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STATE_CAP: usize = 100_000;

#[test]
fn plan_length_matches_breadth_first_oracle() {
    let d = build_domain();
    let mut checked = 0;
    let mut seed = 0;
    while checked < 60 {
        let case = random_case(&d, 1000 + seed);
        seed += 1;
        let expected = match oracle_bfs(&case.actions, &case.problem.init, &case.goal, STATE_CAP) {
            OracleResult::Found(n) => n,
            OracleResult::TooBig => continue,
            OracleResult::Exhausted => panic!("walk goals are reachable"),
        };
        let task = ground(&d, &case.problem).unwrap();
        let plan = Planner::new(&task).plan(&task.init, &case.goal).unwrap();
        assert_eq!(plan.len(), expected, "{}", case.scenario.name);

        let v = Validator::new(&d, &case.problem);
        let mut s = case.problem.init.clone();
        for label in plan.labels(&task) {
            let (next, ok) = v.step(&s, &label);
            assert_eq!(ok, Ok(()), "{label}");
            s = next;
        }
        assert!(case.goal.satisfied_by(&s));
        checked += 1;
    }
    assert!(seed < 120, "too many oversized cases: {seed}");
}

#[test]
fn adding_a_goal_literal_never_shortens_the_plan() {
    let d = build_domain();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for seed in 0..30 {
        let case = random_case(&d, 5000 + seed);
        let task = ground(&d, &case.problem).unwrap();
        let planner = Planner::new(&task);
        let base = planner.plan(&task.init, &case.goal).unwrap().len();
        for _ in 0..3 {
            let mut g = case.goal.clone();
            let f = task.facts.choose(&mut rng).unwrap().clone();
            if rng.random_bool(0.5) {
                g.positive.insert(f);
            } else {
                g.negative.insert(f);
            }
            if !g.conflicts().is_empty() {
                continue;
            }
            match planner.plan(&task.init, &g) {
                Ok(p) => assert!(p.len() >= base),
                Err(PlanError::Unsolvable { .. }) => {}
                Err(e) => panic!("{e}"),
            }
        }
    }
}

#[test]
fn cook_needs_the_frying_pan_and_boil_the_pot() {
    let d = build_domain();
    let mut sc = ScenarioConfig::empty("egg-in-pot", Spot::Stove);
    for v in ["pot", "frying-pan", "measuring-cup"] {
        sc.placements.insert(v.into(), Placement::At(Spot::Stove));
    }
    sc.add_object("egg", ObjectKind::Ingredient, None);
    sc.containment.insert("egg".into(), "pot".into());
    sc.stove_on = vec!["pot".into(), "frying-pan".into()];
    sc.levels = vec!["done".into()];
    let p = build_problem(&sc).unwrap();
    let task = ground(&d, &p).unwrap();
    let labels: Vec<String> = Planner::new(&task)
        .successors(&task.init)
        .into_iter()
        .map(|a| task.actions[a].label())
        .collect();
    assert!(labels.contains(&"(boil egg done)".to_string()));
    assert!(!labels.iter().any(|l| l.starts_with("(cook egg")));

    sc.containment.insert("egg".into(), "frying-pan".into());
    let p = build_problem(&sc).unwrap();
    let task = ground(&d, &p).unwrap();
    let labels: Vec<String> = Planner::new(&task)
        .successors(&task.init)
        .into_iter()
        .map(|a| task.actions[a].label())
        .collect();
    assert!(labels.contains(&"(cook egg done)".to_string()));
    assert!(!labels.iter().any(|l| l.starts_with("(boil egg")));
}

#[test]
fn planning_is_deterministic() {
    let d = build_domain();
    let case = random_case(&d, 77);
    let t1 = ground(&d, &case.problem).unwrap();
    let t2 = ground(&d, &case.problem).unwrap();
    let p1 = Planner::new(&t1).plan(&t1.init, &case.goal).unwrap();
    let p2 = Planner::new(&t2).plan(&t2.init, &case.goal).unwrap();
    assert_eq!(p1.to_text(&t1), p2.to_text(&t2));
}

#[test]
fn unknown_positive_goal_atom_is_unsolvable() {
    let d = build_domain();
    let task = ground(&d, &build_problem(&ScenarioConfig::empty("bare", Spot::Sink)).unwrap()).unwrap();
    let mut g = GoalLiterals::default();
    g.positive.insert(Atom::new("in", &["ghost", "pot"]));
    assert!(matches!(
        Planner::new(&task).plan(&task.init, &g),
        Err(PlanError::Unsolvable { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// About 10^4 applications in total across the cases.
    #[test]
    fn random_walks_keep_kitchen_invariants(seed in 0u64..10_000, len in 50usize..250) {
        let d = build_domain();
        let case = random_case(&d, seed);
        let task = ground(&d, &case.problem).unwrap();
        let planner = Planner::new(&task);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut s = task.init.clone();
        prop_assert_eq!(kitchen_invariants(&task.atoms_of(&s)), Ok(()));
        for _ in 0..len {
            let succ = planner.successors(&s);
            let Some(&a) = succ.choose(&mut rng) else { break };
            s = apply(&task, &s, &task.actions[a]).unwrap();
            let atoms = task.atoms_of(&s);
            prop_assert_eq!(kitchen_invariants(&atoms), Ok(()), "after {}", task.actions[a].label());
        }
    }
}
