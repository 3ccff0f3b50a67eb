use thiserror::Error;

/// Errors raised by the geometry, solver and variation routines.
///
/// Points are reported as `f64` regardless of the scalar type used.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("facet {index} has a non-primitive normal {normal:?}")]
    NonPrimitiveNormal { index: usize, normal: Vec<i64> },

    #[error("polytope is unbounded")]
    Unbounded,

    #[error("vertex {vertex:?} is not Delzant: {reason}")]
    NonDelzantVertex { vertex: Vec<f64>, reason: String },

    #[error("polytope has empty interior")]
    EmptyInterior,

    #[error("invalid vertex index {index} (polytope has {count} vertices)")]
    InvalidVertex { index: usize, count: usize },

    #[error("matrix is not unimodular (determinant {det})")]
    NotUnimodular { det: i64 },

    #[error("potential is defined on a different polytope")]
    DomainMismatch,

    #[error("point {point:?} is on or outside the boundary (min facet value {min_facet_value:e})")]
    BoundaryPoint { point: Vec<f64>, min_facet_value: f64 },

    #[error("Hess s is not positive definite at {point:?}")]
    NotPositiveDefinite { point: Vec<f64> },

    #[error("potential is not a symplectic potential: {0}")]
    SpotViolation(String),

    #[error("unsupported polytope: {0}")]
    UnsupportedPolytope(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite quadrature integrand at {point:?}")]
    QuadratureBreakdown { point: Vec<f64> },

    #[error("mass matrix is not positive definite")]
    NotPositiveDefiniteMass,

    #[error("basis is numerically dependent (reciprocal condition {rcond:e})")]
    IllConditionedBasis { rcond: f64 },

    #[error("eigensolver failure: {0}")]
    SolverFailure(String),

    #[error("no positive eigenvalue in the discrete spectrum")]
    NoPositiveEigenvalue,

    #[error("zero vector")]
    ZeroVector,

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("grid point {point:?} is not interior")]
    GridOutsideInterior { point: Vec<f64> },

    #[error("direction `{0}` is not boundary flat")]
    DirectionNotBoundaryFlat(String),

    #[error("perturbed potential s {sign} t*ds is not a symplectic potential: {reason}")]
    PerturbedSpecInvalid { sign: char, reason: String },

    #[error("direction dictionary is empty")]
    EmptyDictionary,

    #[error("flow stalled at step {step}: {reason}")]
    Stalled { step: usize, reason: String },

    #[error("index {index} is below max(|k|, 1) for weight {k}")]
    IndexBelowWeight { k: i64, index: i64 },

    #[error("polytope is not standard at vertex {vertex:?}")]
    VertexNotStandard { vertex: Vec<f64> },

    #[error("covector is zero")]
    ZeroCovector,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
