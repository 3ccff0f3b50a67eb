//! Numerical laboratory for the first torus-invariant and torus-equivariant
//! Laplace eigenvalue of toric Kähler metrics.
//!
//! A metric is described by a symplectic potential on a Delzant polytope
//! ([`potential::PotentialSpec`]). The reduced Laplacian for a torus weight
//! `k` is discretized by a Rayleigh-Ritz method ([`reduced`]); its first
//! eigenvalue, the first variation in a potential direction, criticality
//! tests and a handful of structural identities are provided on top.
//!
//! Everything is generic over the scalar type ([`scalar::Real`], `f32` or
//! `f64`); the aliases at the crate root fix `f64`.

pub mod checks;
pub mod cli;
pub mod error;
pub mod hull;
pub mod jet;
pub mod poly;
pub mod polytope;
pub mod potential;
pub mod quadrature;
pub mod reduced;
pub mod scalar;
pub mod specs;
pub mod variation;

pub use error::{Error, Result};
pub use reduced::WeightVector;
pub use scalar::Real;

pub type Facet = polytope::Facet<f64>;
pub type Polytope = polytope::Polytope<f64>;
pub type UnimodularMap = polytope::UnimodularMap<f64>;
pub type Polynomial = poly::Polynomial<f64>;
pub type PotentialSpec = potential::PotentialSpec<f64>;
pub type Direction = potential::Direction<f64>;
pub type Basis = reduced::basis::Basis<f64>;
pub type DiscreteOperatorPair = reduced::assemble::DiscreteOperatorPair<f64>;
pub type EigenspaceBasis = reduced::eigen::EigenspaceBasis<f64>;
pub type DerivQuadForm = variation::DerivQuadForm<f64>;
pub type CriticalityReport = variation::CriticalityReport;
pub type FlowTrace = variation::FlowTrace;
pub type HullReport = hull::HullReport;
