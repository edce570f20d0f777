pub mod converter;
pub mod fixtures;
pub mod funcseq;
pub mod goals;
pub mod kitchen;
pub mod pddl;
pub mod planner;
pub mod sim;
pub mod staterec;
