//! Shared fixtures for the criterion benches.

use interlock_core::{seed_profile, ProblemParams, Profile};

pub fn default_params() -> ProblemParams {
    ProblemParams::new(1.0, 0.1, 0.5).expect("valid parameters")
}

pub fn seed(n_elements: usize) -> Profile {
    seed_profile(&default_params(), n_elements).expect("seed profile")
}
