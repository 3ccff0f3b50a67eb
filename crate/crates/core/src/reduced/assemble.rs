//! Quadrature assembly of the stiffness and mass forms.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::potential::PotentialSpec;
use crate::scalar::{to_f64_vec, Real};

use super::basis::Basis;
use super::WeightVector;

/// `A_ij = int grad phi_i^T G grad phi_j + phi_i phi_j k^T Hess s k`,
/// `M_ij = int phi_i phi_j`.
#[derive(Clone, Debug)]
pub struct DiscreteOperatorPair<T: Real> {
    pub stiffness: DMatrix<T>,
    pub mass: DMatrix<T>,
}

/// Basis values and gradients plus metric data at one quadrature point.
pub(crate) struct PointData<T> {
    pub values: Vec<T>,
    /// `gradients[c][i] = d_c phi_i`.
    pub gradients: Vec<Vec<T>>,
    pub g: DMatrix<T>,
    pub potential: T,
}

pub(crate) fn point_data<T: Real>(
    spec: &PotentialSpec<T>,
    basis: &Basis<T>,
    k: &WeightVector,
    x: &[T],
) -> Result<PointData<T>> {
    let n = spec.dim();
    let (h, g) = spec.hessian_and_inverse(x)?;
    let kv: Vec<T> = k.as_slice().iter().map(|&v| T::from_int(v)).collect();
    let mut potential = T::zero();
    for i in 0..n {
        for j in 0..n {
            potential += kv[i] * h[(i, j)] * kv[j];
        }
    }
    let jets = basis.eval_jets(x, 1);
    let values = jets.iter().map(|j| j.value()).collect();
    let gradients = (0..n).map(|c| jets.iter().map(|j| j.d1(c)).collect()).collect();
    Ok(PointData {
        values,
        gradients,
        g,
        potential,
    })
}

pub(crate) fn check_compatible<T: Real>(spec: &PotentialSpec<T>, basis: &Basis<T>, k: &WeightVector) -> Result<()> {
    if basis.polytope().as_ref() != spec.polytope().as_ref() {
        return Err(Error::BasisMismatch(
            "basis and potential live on different polytopes".into(),
        ));
    }
    if basis.weight() != k {
        return Err(Error::BasisMismatch(format!(
            "basis built for weight {:?}, requested {:?}",
            basis.weight().as_slice(),
            k.as_slice()
        )));
    }
    Ok(())
}

pub fn assemble_forms<T: Real>(
    spec: &PotentialSpec<T>,
    basis: &Basis<T>,
    k: &WeightVector,
    nodes: usize,
) -> Result<DiscreteOperatorPair<T>> {
    check_compatible(spec, basis, k)?;
    let rule = basis.domain().quadrature(nodes);
    let data: Vec<PointData<T>> = rule
        .points
        .par_iter()
        .map(|x| {
            let d = point_data(spec, basis, k, x)?;
            let finite = d.potential.is_finite()
                && d.g.iter().all(|v| v.is_finite())
                && d.values.iter().all(|v| v.is_finite())
                && d.gradients.iter().flatten().all(|v| v.is_finite());
            if finite {
                Ok(d)
            } else {
                Err(Error::QuadratureBreakdown {
                    point: to_f64_vec(x),
                })
            }
        })
        .collect::<Result<_>>()?;

    let n = spec.dim();
    let q = rule.len();
    let m = basis.len();
    let phi = DMatrix::from_fn(q, m, |p, i| data[p].values[i]);
    let grads: Vec<DMatrix<T>> = (0..n)
        .map(|c| DMatrix::from_fn(q, m, |p, i| data[p].gradients[c][i]))
        .collect();

    let weighted = |scale: &dyn Fn(usize) -> T, b: &DMatrix<T>| {
        let mut out = b.clone();
        for (p, mut row) in out.row_iter_mut().enumerate() {
            row *= scale(p);
        }
        out
    };
    let w = &rule.weights;
    let mass = phi.transpose() * weighted(&|p| w[p], &phi);
    let mut stiffness = phi.transpose() * weighted(&|p| w[p] * data[p].potential, &phi);
    for c in 0..n {
        for d in 0..n {
            let scaled = weighted(&|p| w[p] * data[p].g[(c, d)], &grads[d]);
            stiffness += grads[c].transpose() * scaled;
        }
    }
    let stiffness = (&stiffness + stiffness.transpose()) * T::lit(0.5);
    let mass = (&mass + mass.transpose()) * T::lit(0.5);
    if mass.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefiniteMass);
    }
    Ok(DiscreteOperatorPair { stiffness, mass })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::polytope::Polytope;
    use crate::reduced::build_basis;

    fn interval_spec(beta: f64) -> PotentialSpec<f64> {
        PotentialSpec::guillemin(Arc::new(Polytope::named("interval").unwrap()), beta).unwrap()
    }

    #[test]
    fn round_interval_forms_are_diagonal() {
        let spec = interval_spec(0.5);
        let k = WeightVector::zero(1);
        let b = build_basis(spec.polytope(), &k, 6).unwrap();
        let pair = assemble_forms(&spec, &b, &k, 28).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                let jf = j as f64;
                let (ea, em) = if i == j {
                    (jf * (jf + 1.0) * 2.0 / (2.0 * jf + 1.0), 2.0 / (2.0 * jf + 1.0))
                } else {
                    (0.0, 0.0)
                };
                assert!((pair.stiffness[(i, j)] - ea).abs() < 1e-12, "A[{i},{j}]");
                assert!((pair.mass[(i, j)] - em).abs() < 1e-12, "M[{i},{j}]");
            }
        }
    }

    #[test]
    fn doubling_beta_halves_stiffness() {
        let k = WeightVector::zero(1);
        let round = interval_spec(0.5);
        let doubled = interval_spec(1.0);
        let b = build_basis(round.polytope(), &k, 5).unwrap();
        let a = assemble_forms(&round, &b, &k, 26).unwrap().stiffness;
        let c = assemble_forms(&doubled, &b, &k, 26).unwrap().stiffness;
        assert!((a * 0.5 - c).amax() < 1e-12);
    }

    #[test]
    fn constants_span_the_kernel() {
        use crate::poly::Polynomial;
        let p = Arc::new(Polytope::named("simplex").unwrap());
        let v = Polynomial::from_terms(2, [(vec![2, 2], 0.3), (vec![4, 0], 1.0)]);
        let spec = PotentialSpec::new(p.clone(), 0.5, v).unwrap();
        let k = WeightVector::zero(2);
        let b = build_basis(&p, &k, 4).unwrap();
        let pair = assemble_forms(&spec, &b, &k, 24).unwrap();
        let c = b.constant_coefficients(1.0);
        assert!((&pair.stiffness * c).amax() < 1e-12);
    }

    #[test]
    fn mismatched_basis_rejected() {
        let spec = interval_spec(0.5);
        let b = build_basis(spec.polytope(), &WeightVector::new(vec![1]), 3).unwrap();
        assert!(matches!(
            assemble_forms(&spec, &b, &WeightVector::zero(1), 22),
            Err(Error::BasisMismatch(_))
        ));
    }
}
