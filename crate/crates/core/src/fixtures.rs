//! Recipes, sequences and scenarios shipped with the crate.
//!
//! The sequences are hand reconstructions checked against the function
//! signatures; they are not transcriptions of any published figure.

use std::path::PathBuf;

use crate::funcseq::{parse_sequence, FunctionSequence};
use crate::kitchen::ScenarioConfig;

#[derive(Debug, Clone, Copy)]
pub struct RecipeFixture {
    pub name: &'static str,
    pub text: &'static str,
    pub sequence: &'static str,
    pub curated: &'static str,
    pub all_in_kitchen: &'static str,
}

impl RecipeFixture {
    pub fn sequence(&self) -> FunctionSequence {
        parse_sequence(self.sequence).expect("fixture sequence parses")
    }

    pub fn curated(&self) -> ScenarioConfig {
        ScenarioConfig::parse(self.curated).expect("fixture scenario parses")
    }

    pub fn all_in_kitchen(&self) -> ScenarioConfig {
        ScenarioConfig::parse(self.all_in_kitchen).expect("fixture scenario parses")
    }
}

macro_rules! recipe {
    ($name:literal) => {
        RecipeFixture {
            name: $name,
            text: include_str!(concat!("../fixtures/recipes/", $name, ".txt")),
            sequence: include_str!(concat!("../fixtures/sequences/", $name, ".seq")),
            curated: include_str!(concat!("../fixtures/scenarios/", $name, "-curated.scn")),
            all_in_kitchen: include_str!(concat!("../fixtures/scenarios/", $name, "-kitchen.scn")),
        }
    };
}

pub const SUNNY_SIDE_UP: RecipeFixture = recipe!("sunny-side-up");
pub const POACHED_EGG: RecipeFixture = recipe!("poached-egg");
pub const SCRAMBLED_EGG: RecipeFixture = recipe!("scrambled-egg");
pub const BUTTER_SUNNY_SIDE_UP: RecipeFixture = recipe!("butter-sunny-side-up");
pub const BROCCOLI: RecipeFixture = recipe!("broccoli");

/// Recipes used as prompt exemplars.
pub const KNOWN_RECIPES: [RecipeFixture; 3] = [SUNNY_SIDE_UP, POACHED_EGG, SCRAMBLED_EGG];
/// Recipes the converter has not seen.
pub const UNKNOWN_RECIPES: [RecipeFixture; 2] = [BUTTER_SUNNY_SIDE_UP, BROCCOLI];

pub fn all_recipes() -> impl Iterator<Item = RecipeFixture> {
    KNOWN_RECIPES.into_iter().chain(UNKNOWN_RECIPES)
}

/// The on-disk fixture tree (recipes, scenarios, backend responses).
pub fn fixture_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures"))
}
