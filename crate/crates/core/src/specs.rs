//! Named potentials used by the examples, configs and acceptance tests.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::polytope::Polytope;
use crate::potential::PotentialSpec;
use crate::scalar::Real;

/// Built-in potentials:
/// * `round_interval`: interval, `beta = 1/2` (round `S^2`, `lambda_1 = 2`);
/// * `guillemin_interval`: interval, `beta = 1` (`lambda_1 = 1`);
/// * `product_square`: `(-1, 1)^2`, `beta = 1/2` (round `S^2 x S^2`, `lambda_1 = 2`, double);
/// * `simplex_guillemin`: standard simplex, `beta = 1/2` (Fubini-Study on `CP^2`, `lambda_1 = 6`);
/// * `unit_square`: `(0, 1)^2`, `beta = 1/2` (`lambda_1 = 4`, double).
pub const BUILTIN_SPECS: [&str; 5] = [
    "round_interval",
    "guillemin_interval",
    "product_square",
    "simplex_guillemin",
    "unit_square",
];

pub fn builtin<T: Real>(name: &str) -> Result<PotentialSpec<T>> {
    let (polytope, beta) = match name {
        "round_interval" => ("interval", 0.5),
        "guillemin_interval" => ("interval", 1.0),
        "product_square" => ("product_square", 0.5),
        "simplex_guillemin" => ("simplex", 0.5),
        "unit_square" => ("square", 0.5),
        other => return Err(Error::InvalidInput(format!("unknown built-in potential `{other}`"))),
    };
    PotentialSpec::guillemin(Arc::new(Polytope::named(polytope)?), T::lit(beta))
}
