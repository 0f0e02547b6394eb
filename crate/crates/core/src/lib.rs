//! Curvature-penalized interface profiles.
//!
//! A profile `y = f(x)` on `[-a, a]`, clamped flat at both ends and enclosing a
//! prescribed area, is scored by
//!
//! ```text
//! J[f] = ∫ (1 + γ κ²) sqrt(1 + f'²) dx,     κ = f'' / (1 + f'²)^{3/2}.
//! ```
//!
//! The crate discretizes profiles with cubic Hermite elements ([`geometry`]),
//! evaluates `J`, the area constraint and their exact gradients ([`energy`]),
//! minimizes `J` by projected descent and recovers the multiplier
//! ([`optimizer`]), checks the fourth-order Euler–Lagrange equation and the
//! natural boundary condition a posteriori ([`euler_lagrange`]), and scores
//! circular caps and mollified polygons against the minimizer ([`baselines`]).
//! [`io`] holds the CSV and JSON file formats.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod energy;
pub mod error;
pub mod euler_lagrange;
pub mod geometry;
pub mod io;
pub mod optimizer;
pub mod quadrature;

mod linalg;

pub use baselines::{
    circle_cap_profile, mollified_polygon_profile, nonoptimality_report, CircleCap,
    MollifiedPolygon, NonoptimalityReport,
};
pub use energy::{
    constraint_gradient, constraint_value, energy_gradient, stress_density, total_energy,
    DofGradient, EnergyBreakdown,
};
pub use error::{Error, Result};
pub use euler_lagrange::{
    arclength_el_residual, graph_el_residual, natural_bc_check, ELResidualReport,
};
pub use geometry::{PointValues, ProblemParams, Profile};
pub use optimizer::{
    minimize, minimize_multistart, project_to_constraint, recover_lambda, seed_coefficient,
    seed_profile, LagrangeEstimate, OptimizationConfig, OptimizationResult, Termination,
};
