//! The kitchen domain and its scenarios.

mod domain;
mod scenario;

pub use domain::*;
pub use scenario::*;
