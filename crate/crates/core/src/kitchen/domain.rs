use crate::pddl::{
    ActionSchema, AtomSchema, Condition, DomainModel, Effect, PredicateSchema, Term, TypeDecl,
    Typed, ROOT_TYPE,
};

pub const DOMAIN_NAME: &str = "kitchen";

pub const SPOTS: [&str; 3] = ["stove", "kitchen", "sink"];
pub const ARMS: [&str; 2] = ["arm1", "arm2"];
/// Vessels with a burner of their own.
pub const STOVE_VESSELS: [&str; 2] = ["pot", "frying-pan"];
/// Type of the vessels in [`STOVE_VESSELS`]; only these can be ignited.
pub const STOVE_VESSEL_TYPE: &str = "stove-vessel";
pub const MEASURING_CUP: &str = "measuring-cup";
pub const WATER: &str = "water";
/// Level a burner starts at when ignited, unless the scenario overrides it.
pub const DEFAULT_IGNITION_LEVEL: &str = "medium";

/// Schemas that correspond one-to-one to cooking functions.
pub const COOKING_ACTIONS: [&str; 10] = [
    "pour",
    "mix",
    "turn-on-stove",
    "set-stove",
    "turn-off-stove",
    "stir",
    "heat",
    "cook",
    "boil",
    "stir-fry",
];

/// Robot-level actions that no recipe mentions directly.
pub const BASIC_ACTIONS: [&str; 7] = [
    "hold",
    "place",
    "move-to",
    "open-tap",
    "close-tap",
    "fetch-water",
    "transfer",
];

fn v(name: &str) -> Term {
    Term::Var(name.to_string())
}

fn c(name: &str) -> Term {
    Term::Const(name.to_string())
}

fn atom(predicate: &str, args: &[Term]) -> AtomSchema {
    AtomSchema {
        predicate: predicate.to_string(),
        args: args.to_vec(),
    }
}

fn pos(predicate: &str, args: &[Term]) -> Condition {
    Condition::Pos(atom(predicate, args))
}

fn neg(predicate: &str, args: &[Term]) -> Condition {
    Condition::Neg(atom(predicate, args))
}

fn neq(a: &str, b: &str) -> Condition {
    Condition::Neq(v(a), v(b))
}

fn add(predicate: &str, args: &[Term]) -> Effect {
    Effect::Add(atom(predicate, args))
}

fn del(predicate: &str, args: &[Term]) -> Effect {
    Effect::Del(atom(predicate, args))
}

fn params(list: &[(&str, &str)]) -> Vec<Typed> {
    list.iter().map(|(n, t)| Typed::new(n, t)).collect()
}

fn action(
    name: &str,
    p: &[(&str, &str)],
    precondition: Vec<Condition>,
    effect: Vec<Effect>,
) -> ActionSchema {
    ActionSchema {
        name: name.to_string(),
        params: params(p),
        precondition,
        effect,
    }
}

/// The kitchen domain with burners igniting at `medium`.
pub fn build_domain() -> DomainModel {
    build_domain_with(DEFAULT_IGNITION_LEVEL)
}

/// The kitchen domain with a custom ignition level constant.
pub fn build_domain_with(ignition_level: &str) -> DomainModel {
    let types = vec![
        TypeDecl::new("object", ROOT_TYPE),
        TypeDecl::new("state", ROOT_TYPE),
        TypeDecl::new("spot", ROOT_TYPE),
        TypeDecl::new("arm", ROOT_TYPE),
        TypeDecl::new("ingredient", "object"),
        TypeDecl::new("vessel", "object"),
        TypeDecl::new(STOVE_VESSEL_TYPE, "vessel"),
        TypeDecl::new("tool", "object"),
        TypeDecl::new("mixture", "ingredient"),
    ];

    let mut constants: Vec<Typed> = SPOTS.iter().map(|s| Typed::new(s, "spot")).collect();
    constants.extend(ARMS.iter().map(|a| Typed::new(a, "arm")));
    constants.extend(STOVE_VESSELS.iter().map(|s| Typed::new(s, STOVE_VESSEL_TYPE)));
    constants.push(Typed::new(MEASURING_CUP, "vessel"));
    constants.push(Typed::new(WATER, "ingredient"));
    constants.push(Typed::new(ignition_level, "state"));

    let pred = |name: &str, p: &[(&str, &str)]| PredicateSchema {
        name: name.to_string(),
        params: params(p),
    };
    let predicates = vec![
        pred("robot-at", &[("s", "spot")]),
        pred("object-at", &[("o", "object"), ("s", "spot")]),
        pred("holding", &[("a", "arm"), ("o", "object")]),
        pred("hand-free", &[("a", "arm")]),
        pred("in", &[("i", "ingredient"), ("v", "vessel")]),
        pred("stove-on", &[("v", "vessel")]),
        pred("stove-level", &[("v", "vessel"), ("l", "state")]),
        pred("tap-open", &[]),
        pred("ingredient-state", &[("i", "ingredient"), ("st", "state")]),
        pred("mixture-made", &[("m", "mixture")]),
    ];

    let stove = c("stove");
    let sink = c("sink");
    let actions = vec![
        action(
            "pour",
            &[("i", "ingredient"), ("v", "vessel"), ("a", "arm"), ("s", "spot")],
            vec![
                pos("holding", &[v("a"), v("i")]),
                pos("robot-at", &[v("s")]),
                pos("object-at", &[v("v"), v("s")]),
            ],
            vec![
                add("in", &[v("i"), v("v")]),
                del("holding", &[v("a"), v("i")]),
                add("hand-free", &[v("a")]),
            ],
        ),
        action(
            "mix",
            &[
                ("m", "mixture"),
                ("i1", "ingredient"),
                ("i2", "ingredient"),
                ("v", "vessel"),
                ("t", "tool"),
                ("s", "spot"),
                ("a1", "arm"),
                ("a2", "arm"),
            ],
            vec![
                neq("i1", "i2"),
                neq("m", "i1"),
                neq("m", "i2"),
                neq("a1", "a2"),
                pos("in", &[v("i1"), v("v")]),
                pos("in", &[v("i2"), v("v")]),
                pos("object-at", &[v("v"), v("s")]),
                pos("robot-at", &[v("s")]),
                pos("holding", &[v("a1"), v("t")]),
                pos("hand-free", &[v("a2")]),
                neg("mixture-made", &[v("m")]),
            ],
            vec![
                add("mixture-made", &[v("m")]),
                add("in", &[v("m"), v("v")]),
                del("in", &[v("i1"), v("v")]),
                del("in", &[v("i2"), v("v")]),
            ],
        ),
        action(
            "turn-on-stove",
            &[("v", STOVE_VESSEL_TYPE), ("a", "arm")],
            vec![
                pos("robot-at", std::slice::from_ref(&stove)),
                pos("object-at", &[v("v"), stove.clone()]),
                pos("hand-free", &[v("a")]),
                neg("stove-on", &[v("v")]),
            ],
            vec![
                add("stove-on", &[v("v")]),
                add("stove-level", &[v("v"), c(ignition_level)]),
            ],
        ),
        action(
            "set-stove",
            &[("from", "state"), ("to", "state"), ("v", STOVE_VESSEL_TYPE), ("a", "arm")],
            vec![
                neq("from", "to"),
                pos("robot-at", std::slice::from_ref(&stove)),
                pos("hand-free", &[v("a")]),
                pos("stove-on", &[v("v")]),
                pos("stove-level", &[v("v"), v("from")]),
            ],
            vec![
                del("stove-level", &[v("v"), v("from")]),
                add("stove-level", &[v("v"), v("to")]),
            ],
        ),
        action(
            "turn-off-stove",
            &[("l", "state"), ("v", STOVE_VESSEL_TYPE), ("a", "arm")],
            vec![
                pos("robot-at", std::slice::from_ref(&stove)),
                pos("hand-free", &[v("a")]),
                pos("stove-on", &[v("v")]),
                pos("stove-level", &[v("v"), v("l")]),
            ],
            vec![
                del("stove-on", &[v("v")]),
                del("stove-level", &[v("v"), v("l")]),
            ],
        ),
        action(
            "stir",
            &[
                ("i", "ingredient"),
                ("t", "tool"),
                ("v", "vessel"),
                ("st", "state"),
                ("s", "spot"),
                ("a", "arm"),
            ],
            vec![
                pos("in", &[v("i"), v("v")]),
                pos("object-at", &[v("v"), v("s")]),
                pos("robot-at", &[v("s")]),
                pos("holding", &[v("a"), v("t")]),
            ],
            vec![add("ingredient-state", &[v("i"), v("st")])],
        ),
        action(
            "heat",
            &[("i", "ingredient"), ("v", STOVE_VESSEL_TYPE), ("st", "state")],
            vec![
                pos("in", &[v("i"), v("v")]),
                pos("object-at", &[v("v"), stove.clone()]),
                pos("robot-at", std::slice::from_ref(&stove)),
                pos("stove-on", &[v("v")]),
            ],
            vec![add("ingredient-state", &[v("i"), v("st")])],
        ),
        fixed_vessel_action("cook", "frying-pan"),
        fixed_vessel_action("boil", "pot"),
        action(
            "stir-fry",
            &[
                ("i", "ingredient"),
                ("v", STOVE_VESSEL_TYPE),
                ("t", "tool"),
                ("st", "state"),
                ("a1", "arm"),
                ("a2", "arm"),
            ],
            vec![
                neq("a1", "a2"),
                pos("in", &[v("i"), v("v")]),
                pos("object-at", &[v("v"), stove.clone()]),
                pos("robot-at", std::slice::from_ref(&stove)),
                pos("holding", &[v("a1"), v("t")]),
                pos("hand-free", &[v("a2")]),
                pos("stove-on", &[v("v")]),
            ],
            vec![add("ingredient-state", &[v("i"), v("st")])],
        ),
        action(
            "hold",
            &[("o", "object"), ("a", "arm"), ("s", "spot")],
            vec![
                pos("object-at", &[v("o"), v("s")]),
                pos("robot-at", &[v("s")]),
                pos("hand-free", &[v("a")]),
            ],
            vec![
                add("holding", &[v("a"), v("o")]),
                del("hand-free", &[v("a")]),
                del("object-at", &[v("o"), v("s")]),
            ],
        ),
        action(
            "place",
            &[("o", "object"), ("a", "arm"), ("s", "spot")],
            vec![
                pos("holding", &[v("a"), v("o")]),
                pos("robot-at", &[v("s")]),
            ],
            vec![
                add("object-at", &[v("o"), v("s")]),
                add("hand-free", &[v("a")]),
                del("holding", &[v("a"), v("o")]),
            ],
        ),
        action(
            "move-to",
            &[("from", "spot"), ("to", "spot")],
            vec![
                neq("from", "to"),
                pos("robot-at", &[v("from")]),
                neg("tap-open", &[]),
                neg("stove-on", &[c(STOVE_VESSELS[0])]),
                neg("stove-on", &[c(STOVE_VESSELS[1])]),
            ],
            vec![add("robot-at", &[v("to")]), del("robot-at", &[v("from")])],
        ),
        action(
            "open-tap",
            &[("a", "arm")],
            vec![
                pos("robot-at", std::slice::from_ref(&sink)),
                pos("hand-free", &[v("a")]),
                neg("tap-open", &[]),
            ],
            vec![add("tap-open", &[])],
        ),
        action(
            "close-tap",
            &[("a", "arm")],
            vec![
                pos("robot-at", std::slice::from_ref(&sink)),
                pos("hand-free", &[v("a")]),
                pos("tap-open", &[]),
            ],
            vec![del("tap-open", &[])],
        ),
        action(
            "fetch-water",
            &[("a", "arm")],
            vec![
                pos("robot-at", std::slice::from_ref(&sink)),
                pos("holding", &[v("a"), c(MEASURING_CUP)]),
                pos("tap-open", &[]),
            ],
            vec![add("in", &[c(WATER), c(MEASURING_CUP)])],
        ),
        action(
            "transfer",
            &[
                ("i", "ingredient"),
                ("from", "vessel"),
                ("to", "vessel"),
                ("a", "arm"),
                ("s", "spot"),
            ],
            vec![
                neq("from", "to"),
                pos("holding", &[v("a"), v("from")]),
                pos("in", &[v("i"), v("from")]),
                pos("robot-at", &[v("s")]),
                pos("object-at", &[v("to"), v("s")]),
            ],
            vec![del("in", &[v("i"), v("from")]), add("in", &[v("i"), v("to")])],
        ),
    ];

    DomainModel {
        name: DOMAIN_NAME.to_string(),
        requirements: [
            ":strips",
            ":typing",
            ":negative-preconditions",
            ":universal-preconditions",
            ":equality",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect(),
        types,
        constants,
        predicates,
        actions,
    }
}

/// `cook` and `boil` only work in one particular vessel sitting on the stove.
fn fixed_vessel_action(name: &str, vessel: &str) -> ActionSchema {
    let stove = c("stove");
    action(
        name,
        &[("i", "ingredient"), ("st", "state")],
        vec![
            pos("in", &[v("i"), c(vessel)]),
            pos("object-at", &[c(vessel), stove.clone()]),
            pos("robot-at", &[stove]),
            pos("stove-on", &[c(vessel)]),
        ],
        vec![add("ingredient-state", &[v("i"), v("st")])],
    )
}
