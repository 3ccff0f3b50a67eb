//! Rayleigh-Ritz discretization of the reduced Laplacian
//! `-d_i(G^{ij} d_j f) + (k^T Hess s k) f` on the polytope, `G = (Hess s)^{-1}`.

pub mod assemble;
pub mod basis;
pub mod domain;
pub mod eigen;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use assemble::{assemble_forms, DiscreteOperatorPair};
pub use basis::{build_basis, Basis, BasisKind};
pub use domain::{Domain, DomainKind};
pub use eigen::{rayleigh_quotient, solve_first_eigen, EigenspaceBasis};

/// Torus weight `k`; `k = 0` is the invariant case.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(pub Vec<i64>);

impl WeightVector {
    pub fn new(k: Vec<i64>) -> Self {
        WeightVector(k)
    }

    pub fn zero(n: usize) -> Self {
        WeightVector(vec![0; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0)
    }

    pub fn dot(&self, nu: &[i64]) -> i64 {
        self.0.iter().zip(nu).map(|(a, b)| a * b).sum()
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.0
    }
}

/// Discretization parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    pub degree: usize,
    /// Gauss nodes per axis; `None` means `2 * degree + 16`.
    pub quadrature_nodes: Option<usize>,
    /// Relative tolerance for collecting eigenvalues into the first cluster.
    pub cluster_tol: f64,
}

impl SolverOptions {
    pub fn new(degree: usize) -> Self {
        SolverOptions {
            degree,
            quadrature_nodes: None,
            cluster_tol: 1e-6,
        }
    }

    pub fn min_nodes(degree: usize) -> usize {
        2 * degree + 16
    }

    pub fn nodes(&self) -> usize {
        self.quadrature_nodes
            .unwrap_or_else(|| Self::min_nodes(self.degree))
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree == 0 {
            return Err(Error::InvalidInput("solver degree must be at least 1".into()));
        }
        if self.nodes() < Self::min_nodes(self.degree) {
            return Err(Error::InvalidInput(format!(
                "quadrature_nodes = {} is below 2*degree + 16 = {}",
                self.nodes(),
                Self::min_nodes(self.degree)
            )));
        }
        if !(self.cluster_tol > 0.0 && self.cluster_tol < 1.0) {
            return Err(Error::InvalidInput(format!(
                "cluster_tol must lie in (0, 1), got {}",
                self.cluster_tol
            )));
        }
        Ok(())
    }
}
