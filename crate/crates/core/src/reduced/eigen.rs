//! Dense generalized symmetric eigensolver and first-cluster extraction.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::potential::PotentialSpec;
use crate::scalar::Real;

use super::assemble::{assemble_forms, DiscreteOperatorPair};
use super::basis::{build_basis, Basis};
use super::{SolverOptions, WeightVector};

/// Smallest reciprocal condition number accepted for the scaled mass matrix.
pub const MIN_RCOND: f64 = 1e-10;

/// All eigenpairs of `A u = lambda M u`, ascending, `M`-orthonormal.
#[derive(Clone, Debug)]
pub struct Spectrum<T: Real> {
    pub eigenvalues: Vec<T>,
    /// Eigenvectors as columns.
    pub vectors: DMatrix<T>,
    /// `||A u - lambda M u|| / ||M u||` per eigenpair.
    pub residuals: Vec<T>,
}

impl<T: Real> DiscreteOperatorPair<T> {
    /// Reduces to a standard problem by Cholesky factorization of the
    /// diagonally scaled mass matrix.
    pub fn solve(&self) -> Result<Spectrum<T>> {
        let m = self.mass.nrows();
        let scale = DVector::from_fn(m, |i, _| T::one() / self.mass[(i, i)].sqrt());
        let scaled = |a: &DMatrix<T>| DMatrix::from_fn(m, m, |i, j| a[(i, j)] * scale[i] * scale[j]);
        let ms = scaled(&self.mass);
        let as_ = scaled(&self.stiffness);

        let me = SymmetricEigen::new(ms.clone()).eigenvalues;
        let (lo, hi) = me.iter().fold((me[0], me[0]), |(lo, hi), &v| {
            (if v < lo { v } else { lo }, if v > hi { v } else { hi })
        });
        if !lo.is_finite() || lo <= T::zero() {
            return Err(Error::NotPositiveDefiniteMass);
        }
        let rcond = lo / hi;
        if rcond < T::lit(MIN_RCOND) {
            return Err(Error::IllConditionedBasis { rcond: rcond.as_f64() });
        }
        let chol = ms.cholesky().ok_or(Error::NotPositiveDefiniteMass)?;
        let l = chol.l();
        let linv = l
            .clone()
            .solve_lower_triangular(&DMatrix::identity(m, m))
            .ok_or_else(|| Error::SolverFailure("singular Cholesky factor".into()))?;
        let c = &linv * as_ * linv.transpose();
        let c = (&c + c.transpose()) * T::lit(0.5);
        let eig = SymmetricEigen::try_new(c, T::eps(), 10_000)
            .ok_or_else(|| Error::SolverFailure("symmetric eigensolver did not converge".into()))?;

        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[a]
                .partial_cmp(&eig.eigenvalues[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let back = linv.transpose();
        let mut vectors = DMatrix::zeros(m, m);
        let mut eigenvalues = Vec::with_capacity(m);
        let mut residuals = Vec::with_capacity(m);
        for (col, &idx) in order.iter().enumerate() {
            let y = eig.eigenvectors.column(idx);
            let u = DVector::from_fn(m, |i, _| scale[i]) .component_mul(&(&back * y));
            let lambda = eig.eigenvalues[idx];
            let mu = &self.mass * &u;
            let r = &self.stiffness * &u - &mu * lambda;
            residuals.push(r.norm() / mu.norm());
            eigenvalues.push(lambda);
            vectors.set_column(col, &u);
        }
        Ok(Spectrum {
            eigenvalues,
            vectors,
            residuals,
        })
    }

    pub fn rayleigh_quotient(&self, f: &DVector<T>) -> Result<T> {
        let den = f.dot(&(&self.mass * f));
        if !den.is_finite() || den <= T::zero() {
            return Err(Error::ZeroVector);
        }
        Ok(f.dot(&(&self.stiffness * f)) / den)
    }
}

/// The numerically clustered first eigenspace.
#[derive(Clone, Debug)]
pub struct EigenspaceBasis<T: Real> {
    pub basis: Arc<Basis<T>>,
    pub weight: WeightVector,
    pub lambda1: T,
    /// `M`-orthonormal coefficient vectors spanning the cluster.
    pub vectors: Vec<DVector<T>>,
    pub residuals: Vec<T>,
    pub cluster_tolerance: T,
    /// Eigenvalues above the zero-mode threshold, ascending.
    pub spectrum: Vec<T>,
    /// Residuals matching `spectrum`.
    pub spectrum_residuals: Vec<T>,
    /// Eigenvalues removed as zero modes (constants when `k = 0`).
    pub zero_modes: Vec<T>,
    /// Coefficient vectors of the zero modes.
    pub zero_vectors: Vec<DVector<T>>,
    pub quadrature_nodes: usize,
}

impl<T: Real> EigenspaceBasis<T> {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    /// Eigenfunction `a` evaluated at `x`.
    pub fn eval(&self, a: usize, x: &[T]) -> T {
        self.basis.reconstruct(&self.vectors[a], x)
    }
}

fn zero_threshold<T: Real>(eigenvalues: &[T]) -> T {
    let top = eigenvalues
        .iter()
        .fold(T::one(), |m, v| if v.abs() > m { v.abs() } else { m });
    let floor = T::lit(1e-9).max(T::lit(1000.0) * T::eps());
    floor * top
}

/// Solves for the first eigenvalue of the reduced operator and its eigenspace.
pub fn solve_first_eigen<T: Real>(
    spec: &PotentialSpec<T>,
    k: &WeightVector,
    opts: &SolverOptions,
) -> Result<EigenspaceBasis<T>> {
    opts.validate()?;
    let basis = Arc::new(build_basis(spec.polytope(), k, opts.degree)?);
    let nodes = opts.nodes();
    let pair = assemble_forms(spec, &basis, k, nodes)?;
    let spectrum = pair.solve()?;
    extract_cluster(basis, k, &spectrum, T::lit(opts.cluster_tol), nodes)
}

pub(crate) fn extract_cluster<T: Real>(
    basis: Arc<Basis<T>>,
    k: &WeightVector,
    spectrum: &Spectrum<T>,
    cluster_tol: T,
    nodes: usize,
) -> Result<EigenspaceBasis<T>> {
    let zero = zero_threshold(&spectrum.eigenvalues);
    let mut zero_modes = Vec::new();
    let mut zero_vectors = Vec::new();
    let mut positive = Vec::new();
    for (i, &lambda) in spectrum.eigenvalues.iter().enumerate() {
        if lambda > zero {
            positive.push(i);
        } else {
            zero_modes.push(lambda);
            zero_vectors.push(spectrum.vectors.column(i).into_owned());
        }
    }
    let first = *positive.first().ok_or(Error::NoPositiveEigenvalue)?;
    // a tolerance below working precision would split true multiplets
    let cluster_tol = cluster_tol.max(T::lit(1000.0) * T::eps());
    let lambda1 = spectrum.eigenvalues[first];
    let cluster: Vec<usize> = positive
        .iter()
        .copied()
        .filter(|&i| (spectrum.eigenvalues[i] - lambda1).abs() <= cluster_tol * lambda1.abs())
        .collect();
    Ok(EigenspaceBasis {
        basis,
        weight: k.clone(),
        lambda1,
        vectors: cluster
            .iter()
            .map(|&i| spectrum.vectors.column(i).into_owned())
            .collect(),
        residuals: cluster.iter().map(|&i| spectrum.residuals[i]).collect(),
        cluster_tolerance: cluster_tol,
        spectrum: positive.iter().map(|&i| spectrum.eigenvalues[i]).collect(),
        spectrum_residuals: positive.iter().map(|&i| spectrum.residuals[i]).collect(),
        zero_modes,
        zero_vectors,
        quadrature_nodes: nodes,
    })
}

/// `f^T A f / f^T M f` for `f` given by basis coefficients. For `k = 0` the
/// constant component is projected out first, so the value bounds `lambda_1`
/// from above.
pub fn rayleigh_quotient<T: Real>(
    spec: &PotentialSpec<T>,
    f: &DVector<T>,
    basis: &Basis<T>,
    k: &WeightVector,
    nodes: usize,
) -> Result<T> {
    if f.len() != basis.len() {
        return Err(Error::BasisMismatch(format!(
            "coefficient vector of length {} for a basis of size {}",
            f.len(),
            basis.len()
        )));
    }
    let pair = assemble_forms(spec, basis, k, nodes)?;
    let mut g = f.clone();
    if k.is_zero() {
        let c = basis.constant_coefficients(T::one());
        let mc = &pair.mass * &c;
        let proj = g.dot(&mc) / c.dot(&mc);
        g -= c * proj;
    }
    if g.iter().all(|v| *v == T::zero()) {
        return Err(Error::ZeroVector);
    }
    pair.rayleigh_quotient(&g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::Polytope;

    fn round() -> PotentialSpec<f64> {
        PotentialSpec::guillemin(Arc::new(Polytope::named("interval").unwrap()), 0.5).unwrap()
    }

    #[test]
    fn round_sphere_first_eigenvalue() {
        let e = solve_first_eigen(&round(), &WeightVector::zero(1), &SolverOptions::new(12)).unwrap();
        assert!((e.lambda1 - 2.0).abs() < 1e-9);
        assert_eq!(e.dim(), 1);
        // eigenfunction proportional to x
        let r = e.eval(0, &[0.5]) / e.eval(0, &[0.25]);
        assert!((r - 2.0).abs() < 1e-9);
        assert_eq!(e.zero_modes.len(), 1);
        assert!(e.zero_modes[0].abs() < 1e-12);
    }

    #[test]
    fn round_sphere_weight_two() {
        let e = solve_first_eigen(&round(), &WeightVector::new(vec![2]), &SolverOptions::new(12)).unwrap();
        assert!((e.lambda1 - 6.0).abs() < 1e-9);
        let r = e.eval(0, &[0.5]) / e.eval(0, &[0.0]);
        assert!((r - 0.75).abs() < 1e-9);
        assert!(e.zero_modes.is_empty());
    }

    #[test]
    fn eigenvectors_are_mass_orthonormal() {
        let p = Arc::new(Polytope::named("square").unwrap());
        let spec = PotentialSpec::guillemin(p.clone(), 0.5).unwrap();
        let k = WeightVector::zero(2);
        let b = build_basis(&p, &k, 5).unwrap();
        let pair = assemble_forms(&spec, &b, &k, 26).unwrap();
        let s = pair.solve().unwrap();
        let g = s.vectors.transpose() * &pair.mass * &s.vectors;
        assert!((g - DMatrix::identity(b.len(), b.len())).amax() < 1e-10);
    }

    #[test]
    fn rayleigh_quotient_examples() {
        let spec = round();
        let k = WeightVector::zero(1);
        let b = build_basis(spec.polytope(), &k, 4).unwrap();
        let mut f = DVector::zeros(b.len());
        f[1] = 1.0;
        assert!((rayleigh_quotient(&spec, &f, &b, &k, 24).unwrap() - 2.0).abs() < 1e-12);
        f[1] = 0.0;
        f[2] = 1.0;
        assert!((rayleigh_quotient(&spec, &f, &b, &k, 24).unwrap() - 6.0).abs() < 1e-12);
        f[0] = 3.0;
        assert!((rayleigh_quotient(&spec, &f, &b, &k, 24).unwrap() - 6.0).abs() < 1e-12);
        let z = DVector::zeros(b.len());
        assert_eq!(rayleigh_quotient(&spec, &z, &b, &k, 24), Err(Error::ZeroVector));
    }

    #[test]
    fn low_node_count_rejected() {
        let mut opts = SolverOptions::new(8);
        opts.quadrature_nodes = Some(10);
        assert!(matches!(
            solve_first_eigen(&round(), &WeightVector::zero(1), &opts),
            Err(Error::InvalidInput(_))
        ));
    }
}
