//! Kitchen scenarios: which objects exist, where they start, and how the
//! robot and appliances are set up.
//!
//! Scenario files are TOML:
//!
//! ```toml
//! name = "poached-egg-curated"
//! robot = "stove"
//! levels = ["low", "medium", "high"]
//!
//! [objects]
//! pot = { kind = "vessel", at = "stove" }
//! measuring-cup = { kind = "vessel", at = "sink" }
//! egg = { kind = "ingredient", at = "stove" }
//! whisk = { kind = "tool", held = "arm1" }
//! milk = { kind = "ingredient", in = "bowl" }
//! egg-mixture = { kind = "mixture", of = ["egg", "milk"] }
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Deserialize;

use super::domain::{
    ARMS, DEFAULT_IGNITION_LEVEL, DOMAIN_NAME, MEASURING_CUP, STOVE_VESSELS, WATER,
};
use crate::pddl::{Atom, GoalLiterals, ProblemModel, Typed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spot {
    Stove,
    Kitchen,
    Sink,
}

impl Spot {
    pub const ALL: [Spot; 3] = [Spot::Stove, Spot::Kitchen, Spot::Sink];

    pub fn name(self) -> &'static str {
        match self {
            Spot::Stove => "stove",
            Spot::Kitchen => "kitchen",
            Spot::Sink => "sink",
        }
    }
}

impl fmt::Display for Spot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Spot {
    type Err = ScenarioError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Spot::ALL
            .into_iter()
            .find(|spot| spot.name() == s)
            .ok_or_else(|| ScenarioError::UnknownSpot(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectKind {
    Ingredient,
    Vessel,
    Tool,
    Mixture,
}

impl ObjectKind {
    pub fn type_name(self) -> &'static str {
        match self {
            ObjectKind::Ingredient => "ingredient",
            ObjectKind::Vessel => "vessel",
            ObjectKind::Tool => "tool",
            ObjectKind::Mixture => "mixture",
        }
    }

    /// Mixtures count as ingredients wherever an ingredient is expected.
    pub fn is_ingredient(self) -> bool {
        matches!(self, ObjectKind::Ingredient | ObjectKind::Mixture)
    }
}

impl fmt::Display for ObjectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.type_name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KitchenObject {
    pub name: String,
    pub kind: ObjectKind,
    pub stove_equipped: bool,
}

impl KitchenObject {
    pub fn new(name: &str, kind: ObjectKind) -> Self {
        Self {
            name: name.to_string(),
            kind,
            stove_equipped: kind == ObjectKind::Vessel && STOVE_VESSELS.contains(&name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Placement {
    At(Spot),
    Held(String),
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum ScenarioError {
    #[error("invalid scenario file: {0}")]
    Format(String),
    #[error("unknown spot `{0}`")]
    UnknownSpot(String),
    #[error("unknown arm `{0}`")]
    UnknownArm(String),
    #[error("object `{0}` has more than one starting location")]
    MultipleLocations(String),
    #[error("arm `{arm}` holds both `{first}` and `{second}`")]
    ArmHoldsTwo {
        arm: String,
        first: String,
        second: String,
    },
    #[error("`{object}` is a {got}, expected {expected}")]
    WrongKind {
        object: String,
        expected: String,
        got: ObjectKind,
    },
    #[error("`{0}` is not declared in the scenario")]
    UnknownObject(String),
    #[error("mixture `{mixture}` lists constituent `{constituent}` which is not an ingredient object")]
    BadConstituent {
        mixture: String,
        constituent: String,
    },
    #[error("water is obtained with fetch-water and cannot start placed or contained")]
    WaterPlaced,
    #[error("mixture `{0}` is made during cooking and cannot start placed or contained")]
    MixturePlaced(String),
    #[error("`{0}` has no burner")]
    NotStoveEquipped(String),
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default)]
    name: Option<String>,
    robot: String,
    #[serde(default)]
    levels: Vec<String>,
    #[serde(default)]
    ignition_level: Option<String>,
    #[serde(default)]
    stove_on: Vec<String>,
    #[serde(default)]
    tap_open: bool,
    #[serde(default)]
    objects: BTreeMap<String, ObjectEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectEntry {
    kind: ObjectKind,
    at: Option<String>,
    held: Option<String>,
    #[serde(rename = "in")]
    inside: Option<String>,
    of: Option<Vec<String>>,
}

/// Starting configuration of the kitchen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioConfig {
    pub name: String,
    pub robot: Spot,
    /// Declared objects plus the domain's constant vessels and water, by name.
    pub objects: BTreeMap<String, KitchenObject>,
    pub placements: BTreeMap<String, Placement>,
    /// ingredient -> vessel
    pub containment: BTreeMap<String, String>,
    /// mixture -> constituent ingredients
    pub mixtures: BTreeMap<String, Vec<String>>,
    pub levels: Vec<String>,
    pub ignition_level: String,
    pub stove_on: Vec<String>,
    pub tap_open: bool,
}

impl ScenarioConfig {
    /// An empty kitchen: only the built-in vessels and water, robot at `robot`.
    pub fn empty(name: &str, robot: Spot) -> Self {
        let mut s = Self {
            name: name.to_string(),
            robot,
            objects: BTreeMap::new(),
            placements: BTreeMap::new(),
            containment: BTreeMap::new(),
            mixtures: BTreeMap::new(),
            levels: Vec::new(),
            ignition_level: DEFAULT_IGNITION_LEVEL.to_string(),
            stove_on: Vec::new(),
            tap_open: false,
        };
        s.add_builtins();
        s
    }

    fn add_builtins(&mut self) {
        for v in STOVE_VESSELS.iter().chain([&MEASURING_CUP]) {
            self.objects
                .entry(v.to_string())
                .or_insert_with(|| KitchenObject::new(v, ObjectKind::Vessel));
        }
        self.objects
            .entry(WATER.to_string())
            .or_insert_with(|| KitchenObject::new(WATER, ObjectKind::Ingredient));
    }

    pub fn add_object(&mut self, name: &str, kind: ObjectKind, at: Option<Placement>) {
        self.objects
            .insert(name.to_string(), KitchenObject::new(name, kind));
        if let Some(p) = at {
            self.placements.insert(name.to_string(), p);
        }
    }

    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile =
            toml::from_str(text).map_err(|e| ScenarioError::Format(e.to_string()))?;
        let mut s = Self::empty(
            file.name.as_deref().unwrap_or("scenario"),
            file.robot.parse()?,
        );
        s.levels = file.levels;
        if let Some(l) = file.ignition_level {
            s.ignition_level = l;
        }
        s.stove_on = file.stove_on;
        s.tap_open = file.tap_open;
        for (name, e) in &file.objects {
            if let Some(existing) = s.objects.get(name) {
                if existing.kind != e.kind {
                    return Err(ScenarioError::WrongKind {
                        object: name.clone(),
                        expected: existing.kind.to_string(),
                        got: e.kind,
                    });
                }
            }
            s.objects
                .insert(name.clone(), KitchenObject::new(name, e.kind));
            let locations = [e.at.is_some(), e.held.is_some(), e.inside.is_some()]
                .iter()
                .filter(|b| **b)
                .count();
            if locations > 1 {
                return Err(ScenarioError::MultipleLocations(name.clone()));
            }
            if let Some(spot) = &e.at {
                s.placements
                    .insert(name.clone(), Placement::At(spot.parse()?));
            }
            if let Some(arm) = &e.held {
                s.placements.insert(name.clone(), Placement::Held(arm.clone()));
            }
            if let Some(vessel) = &e.inside {
                s.containment.insert(name.clone(), vessel.clone());
            }
            if let Some(of) = &e.of {
                s.mixtures.insert(name.clone(), of.clone());
            }
        }
        s.check()?;
        Ok(s)
    }

    pub fn kind_of(&self, name: &str) -> Option<ObjectKind> {
        self.objects.get(name).map(|o| o.kind)
    }

    /// Enforce the structural invariants of a starting configuration.
    pub fn check(&self) -> Result<(), ScenarioError> {
        let mut held_by: BTreeMap<&str, &str> = BTreeMap::new();
        for (obj, p) in &self.placements {
            if !self.objects.contains_key(obj) {
                return Err(ScenarioError::UnknownObject(obj.clone()));
            }
            if obj == WATER {
                return Err(ScenarioError::WaterPlaced);
            }
            if self.kind_of(obj) == Some(ObjectKind::Mixture) {
                return Err(ScenarioError::MixturePlaced(obj.clone()));
            }
            if self.containment.contains_key(obj) {
                return Err(ScenarioError::MultipleLocations(obj.clone()));
            }
            if let Placement::Held(arm) = p {
                if !ARMS.contains(&arm.as_str()) {
                    return Err(ScenarioError::UnknownArm(arm.clone()));
                }
                if let Some(first) = held_by.insert(arm, obj) {
                    return Err(ScenarioError::ArmHoldsTwo {
                        arm: arm.clone(),
                        first: first.to_string(),
                        second: obj.clone(),
                    });
                }
            }
        }
        for (ing, vessel) in &self.containment {
            if ing == WATER {
                return Err(ScenarioError::WaterPlaced);
            }
            match self.kind_of(ing) {
                Some(ObjectKind::Ingredient) => {}
                Some(ObjectKind::Mixture) => return Err(ScenarioError::MixturePlaced(ing.clone())),
                Some(k) => {
                    return Err(ScenarioError::WrongKind {
                        object: ing.clone(),
                        expected: "ingredient".into(),
                        got: k,
                    })
                }
                None => return Err(ScenarioError::UnknownObject(ing.clone())),
            }
            self.expect_kind(vessel, ObjectKind::Vessel)?;
        }
        for (mixture, parts) in &self.mixtures {
            self.expect_kind(mixture, ObjectKind::Mixture)?;
            for p in parts {
                if !self.kind_of(p).is_some_and(ObjectKind::is_ingredient) {
                    return Err(ScenarioError::BadConstituent {
                        mixture: mixture.clone(),
                        constituent: p.clone(),
                    });
                }
            }
        }
        for v in &self.stove_on {
            self.expect_kind(v, ObjectKind::Vessel)?;
            if !self.objects[v].stove_equipped {
                return Err(ScenarioError::NotStoveEquipped(v.clone()));
            }
        }
        Ok(())
    }

    fn expect_kind(&self, name: &str, kind: ObjectKind) -> Result<(), ScenarioError> {
        match self.kind_of(name) {
            Some(k) if k == kind => Ok(()),
            Some(k) => Err(ScenarioError::WrongKind {
                object: name.to_string(),
                expected: kind.to_string(),
                got: k,
            }),
            None => Err(ScenarioError::UnknownObject(name.to_string())),
        }
    }
}

/// Problem for `scenario` with no goal. Stoves are off and the tap closed
/// unless the scenario says otherwise; mixtures exist but are not made yet.
pub fn build_problem(scenario: &ScenarioConfig) -> Result<ProblemModel, ScenarioError> {
    build_problem_with_states(scenario, &BTreeSet::new())
}

/// Like [`build_problem`], adding extra `state` objects (e.g. the target
/// states a recipe mentions).
pub fn build_problem_with_states(
    scenario: &ScenarioConfig,
    extra_states: &BTreeSet<String>,
) -> Result<ProblemModel, ScenarioError> {
    scenario.check()?;
    let constants: BTreeSet<&str> = STOVE_VESSELS
        .iter()
        .chain([&MEASURING_CUP, &WATER])
        .copied()
        .collect();
    let mut objects: Vec<Typed> = scenario
        .objects
        .values()
        .filter(|o| !constants.contains(o.name.as_str()))
        .map(|o| Typed::new(&o.name, o.kind.type_name()))
        .collect();
    let mut states: BTreeSet<&str> = scenario.levels.iter().map(String::as_str).collect();
    states.extend(extra_states.iter().map(String::as_str));
    states.remove(scenario.ignition_level.as_str());
    for s in states {
        if scenario.objects.contains_key(s) {
            return Err(ScenarioError::WrongKind {
                object: s.to_string(),
                expected: "state".into(),
                got: scenario.objects[s].kind,
            });
        }
        objects.push(Typed::new(s, "state"));
    }

    let mut init = BTreeSet::new();
    init.insert(Atom::new("robot-at", &[scenario.robot.name()]));
    let mut busy = BTreeSet::new();
    for (obj, p) in &scenario.placements {
        match p {
            Placement::At(spot) => {
                init.insert(Atom::new("object-at", &[obj, spot.name()]));
            }
            Placement::Held(arm) => {
                busy.insert(arm.as_str());
                init.insert(Atom::new("holding", &[arm, obj]));
            }
        }
    }
    for arm in ARMS {
        if !busy.contains(arm) {
            init.insert(Atom::new("hand-free", &[arm]));
        }
    }
    for (ing, vessel) in &scenario.containment {
        init.insert(Atom::new("in", &[ing, vessel]));
    }
    for v in &scenario.stove_on {
        init.insert(Atom::new("stove-on", &[v]));
        init.insert(Atom::new("stove-level", &[v, &scenario.ignition_level]));
    }
    if scenario.tap_open {
        init.insert(Atom::new("tap-open", &[]));
    }
    Ok(ProblemModel {
        name: scenario.name.clone(),
        domain: DOMAIN_NAME.to_string(),
        objects,
        init,
        goal: GoalLiterals::default(),
    })
}
