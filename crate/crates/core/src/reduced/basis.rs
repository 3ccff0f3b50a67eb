//! Trial spaces `{w * p}` with `p` a polynomial of bounded degree and
//! `w = prod_l l_l^{|k . nu_l| / 2}`.
//!
//! `p` runs over Legendre polynomials on the interval, tensor Legendre
//! polynomials on parallelograms and Dubiner's orthogonal polynomials on
//! triangles, all in reference coordinates. The constant is always the first
//! element; in the invariant case it spans the kernel of the stiffness form
//! and is removed at solve time.

use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::polytope::Polytope;
use crate::scalar::Real;

use super::domain::{Domain, DomainKind};
use super::WeightVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisKind {
    Legendre,
    TensorLegendre,
    Dubiner,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Basis<T> {
    polytope: Arc<Polytope<T>>,
    domain: Domain<T>,
    kind: BasisKind,
    degree: usize,
    weight: WeightVector,
    /// Boundary exponent `|k . nu_l| / 2` for every facet.
    exponents: Vec<T>,
    /// Reference-coordinate degrees `(i, j)` of each element.
    indices: Vec<(usize, usize)>,
}

pub fn build_basis<T: Real>(
    polytope: &Arc<Polytope<T>>,
    k: &WeightVector,
    degree: usize,
) -> Result<Basis<T>> {
    if k.dim() != polytope.dim() {
        return Err(Error::DimensionMismatch {
            expected: polytope.dim(),
            found: k.dim(),
        });
    }
    if degree == 0 {
        return Err(Error::InvalidInput("basis degree must be at least 1".into()));
    }
    let domain = Domain::recognize(polytope)?;
    let (kind, indices) = match domain.kind {
        DomainKind::Interval => (BasisKind::Legendre, (0..=degree).map(|i| (i, 0)).collect()),
        DomainKind::Parallelogram => {
            let mut idx = Vec::with_capacity((degree + 1) * (degree + 1));
            for i in 0..=degree {
                for j in 0..=degree {
                    idx.push((i, j));
                }
            }
            idx.sort_by_key(|&(i, j)| (i.max(j), i, j));
            (BasisKind::TensorLegendre, idx)
        }
        DomainKind::Triangle => {
            let mut idx = Vec::new();
            for t in 0..=degree {
                for q in 0..=t {
                    idx.push((t - q, q));
                }
            }
            (BasisKind::Dubiner, idx)
        }
    };
    let exponents = polytope
        .facets()
        .iter()
        .map(|f| T::from_int(k.dot(&f.normal).abs()) * T::lit(0.5))
        .collect();
    Ok(Basis {
        polytope: polytope.clone(),
        domain,
        kind,
        degree,
        weight: k.clone(),
        exponents,
        indices,
    })
}

/// `P_0..=P_n` of a jet argument by the three-term recurrence.
fn legendre_jets<T: Real>(y: Jet<T>, n: usize) -> Vec<Jet<T>> {
    let one = Jet::constant(y.dim(), y.order(), T::one());
    let mut out = vec![one];
    if n >= 1 {
        out.push(y);
    }
    for m in 1..n {
        let mf = T::from_int(m as i64);
        let next = (y * out[m]).scale(T::from_int(2 * m as i64 + 1)) - out[m - 1].scale(mf);
        out.push(next.scale(T::one() / (mf + T::one())));
    }
    out
}

/// Scaled Legendre polynomials `s^p P_p(a / s)`, `p = 0..=n`.
fn scaled_legendre_jets<T: Real>(a: Jet<T>, s: Jet<T>, n: usize) -> Vec<Jet<T>> {
    let one = Jet::constant(a.dim(), a.order(), T::one());
    let mut out = vec![one];
    if n >= 1 {
        out.push(a);
    }
    let s2 = s * s;
    for m in 1..n {
        let mf = T::from_int(m as i64);
        let next = (a * out[m]).scale(T::from_int(2 * m as i64 + 1)) - (s2 * out[m - 1]).scale(mf);
        out.push(next.scale(T::one() / (mf + T::one())));
    }
    out
}

/// Jacobi polynomials `P_q^{(alpha, 0)}(y)`, `q = 0..=n`.
fn jacobi_jets<T: Real>(y: Jet<T>, alpha: T, n: usize) -> Vec<Jet<T>> {
    let one = Jet::constant(y.dim(), y.order(), T::one());
    let mut out = vec![one];
    let two = T::lit(2.0);
    if n >= 1 {
        out.push((y.scale(alpha + two) + alpha).scale(T::lit(0.5)));
    }
    for m in 2..=n {
        let mf = T::from_int(m as i64);
        let c = two * mf + alpha;
        let a1 = two * mf * (mf + alpha) * (c - two);
        let a2 = (c - T::one()) * alpha * alpha;
        let a3 = (c - T::one()) * c * (c - two);
        let a4 = two * (mf + alpha - T::one()) * (mf - T::one()) * c;
        let next = (out[m - 1] * (y.scale(a3) + a2)) - out[m - 2].scale(a4);
        out.push(next.scale(T::one() / a1));
    }
    out
}

impl<T: Real> Basis<T> {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn weight(&self) -> &WeightVector {
        &self.weight
    }

    pub fn exponents(&self) -> &[T] {
        &self.exponents
    }

    pub fn domain(&self) -> &Domain<T> {
        &self.domain
    }

    pub fn polytope(&self) -> &Arc<Polytope<T>> {
        &self.polytope
    }

    pub fn indices(&self) -> &[(usize, usize)] {
        &self.indices
    }

    /// Index of the constant element.
    pub fn constant_index(&self) -> usize {
        0
    }

    /// Boundary weight `w` as a jet about `x`.
    pub fn weight_jet(&self, x: &[T], order: usize) -> Jet<T> {
        let n = self.polytope.dim();
        let mut w = Jet::constant(n, order, T::one());
        for (f, &g) in self.polytope.facets().iter().zip(&self.exponents) {
            if g == T::zero() {
                continue;
            }
            let l = Jet::affine(order, f.value(x), &f.normal_real());
            w = w * if g == T::one() { l } else { l.powf(g) };
        }
        w
    }

    /// Jets of every basis element about the physical point `x`.
    pub fn eval_jets(&self, x: &[T], order: usize) -> Vec<Jet<T>> {
        let n = self.polytope.dim();
        let xi = self.domain.to_reference(x);
        let xi_jets: Vec<Jet<T>> = (0..n)
            .map(|i| {
                let grad: Vec<T> = (0..n).map(|j| self.domain.inverse[(i, j)]).collect();
                Jet::affine(order, xi[i], &grad)
            })
            .collect();
        let w = self.weight_jet(x, order);
        let d = self.degree;
        match self.kind {
            BasisKind::Legendre => legendre_jets(xi_jets[0], d).into_iter().map(|p| w * p).collect(),
            BasisKind::TensorLegendre => {
                let p1 = legendre_jets(xi_jets[0], d);
                let p2 = legendre_jets(xi_jets[1], d);
                self.indices.iter().map(|&(i, j)| w * p1[i] * p2[j]).collect()
            }
            BasisKind::Dubiner => {
                let one = Jet::constant(n, order, T::one());
                let (u, v) = (xi_jets[0], xi_jets[1]);
                let a = u.scale(T::lit(2.0)) + v - one;
                let s = one - v;
                let q = scaled_legendre_jets(a, s, d);
                let y = v.scale(T::lit(2.0)) - one;
                let jac: Vec<Vec<Jet<T>>> = (0..=d)
                    .map(|p| jacobi_jets(y, T::from_int(2 * p as i64 + 1), d - p))
                    .collect();
                self.indices
                    .iter()
                    .map(|&(p, r)| w * q[p] * jac[p][r])
                    .collect()
            }
        }
    }

    /// Values of every basis element at `x`.
    pub fn eval(&self, x: &[T]) -> Vec<T> {
        self.eval_jets(x, 0).iter().map(|j| j.value()).collect()
    }

    /// `sum_i coeffs_i phi_i` as a jet about `x`.
    pub fn combine_jet(&self, coeffs: &DVector<T>, x: &[T], order: usize) -> Jet<T> {
        let n = self.polytope.dim();
        self.eval_jets(x, order)
            .into_iter()
            .zip(coeffs.iter())
            .fold(Jet::constant(n, order, T::zero()), |acc, (phi, &c)| acc + phi.scale(c))
    }

    pub fn reconstruct(&self, coeffs: &DVector<T>, x: &[T]) -> T {
        self.eval(x)
            .iter()
            .zip(coeffs.iter())
            .fold(T::zero(), |acc, (p, c)| acc + *p * *c)
    }

    /// Coefficients of the constant function `c` (requires `k = 0`).
    pub fn constant_coefficients(&self, c: T) -> DVector<T> {
        let mut v = DVector::zeros(self.len());
        v[self.constant_index()] = c;
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre;

    fn named(name: &str) -> Arc<Polytope<f64>> {
        Arc::new(Polytope::named(name).unwrap())
    }

    #[test]
    fn interval_legendre() {
        let b = build_basis(&named("interval"), &WeightVector::zero(1), 3).unwrap();
        assert_eq!(b.len(), 4);
        let v = b.eval(&[0.5]);
        let expect = [1.0, 0.5, -0.125, -0.4375];
        for (a, e) in v.iter().zip(expect) {
            assert!((a - e).abs() < 1e-15);
        }
    }

    #[test]
    fn interval_weight_two() {
        let b = build_basis(&named("interval"), &WeightVector::new(vec![2]), 2).unwrap();
        assert_eq!(b.exponents(), &[1.0, 1.0]);
        let x = 0.3;
        let v = b.eval(&[x]);
        let w = 1.0 - x * x;
        assert!((v[0] - w).abs() < 1e-15);
        assert!((v[1] - w * x).abs() < 1e-15);
        assert!((v[2] - w * 0.5 * (3.0 * x * x - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn square_weight_half_on_active_facets_only() {
        let b = build_basis(&named("square"), &WeightVector::new(vec![1, 0]), 2).unwrap();
        assert_eq!(b.len(), 9);
        assert_eq!(b.exponents(), &[0.5, 0.0, 0.5, 0.0]);
        let x = [0.2, 0.7];
        let w = (0.2f64 * 0.8).sqrt();
        assert!((b.eval(&x)[0] - w).abs() < 1e-15);
    }

    #[test]
    fn dubiner_is_orthogonal() {
        let p = named("simplex");
        let b = build_basis(&p, &WeightVector::zero(2), 4).unwrap();
        assert_eq!(b.len(), 15);
        let rule = b.domain().quadrature(12);
        let vals: Vec<Vec<f64>> = rule.points.iter().map(|x| b.eval(x)).collect();
        for i in 0..b.len() {
            for j in 0..b.len() {
                let g: f64 = vals.iter().zip(&rule.weights).map(|(v, w)| w * v[i] * v[j]).sum();
                if i == j {
                    assert!(g > 1e-3);
                } else {
                    assert!(g.abs() < 1e-13, "({i}, {j}) -> {g}");
                }
            }
        }
    }

    #[test]
    fn jacobi_matches_orthogonality() {
        // P_q^{(3, 0)} orthogonal under (1 - y)^3 on [-1, 1]
        let (x, w) = gauss_legendre::<f64>(20);
        let vals: Vec<Vec<f64>> = x
            .iter()
            .map(|&y| jacobi_jets(Jet::constant(1, 0, y), 3.0, 4).iter().map(|j| j.value()).collect())
            .collect();
        for a in 0..5 {
            for b in 0..a {
                let g: f64 = vals
                    .iter()
                    .zip(&x)
                    .zip(&w)
                    .map(|((v, y), w)| w * (1.0 - y).powi(3) * v[a] * v[b])
                    .sum();
                assert!(g.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn derivatives_agree_with_finite_differences() {
        let b = build_basis(&named("simplex"), &WeightVector::new(vec![1, 2]), 3).unwrap();
        let x = [0.21, 0.33];
        let h = 1e-6;
        let jets = b.eval_jets(&x, 1);
        let plus = b.eval(&[x[0], x[1] + h]);
        let minus = b.eval(&[x[0], x[1] - h]);
        for (i, j) in jets.iter().enumerate() {
            let fd = (plus[i] - minus[i]) / (2.0 * h);
            assert!((j.d1(1) - fd).abs() < 1e-6 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn rejects_three_dimensional_input() {
        use crate::polytope::{build_polytope, Facet};
        let cube = build_polytope(vec![
            Facet::new(vec![1, 0, 0], 0.0),
            Facet::new(vec![0, 1, 0], 0.0),
            Facet::new(vec![0, 0, 1], 0.0),
            Facet::new(vec![-1, -1, -1], -1.0),
        ])
        .unwrap();
        let err = build_basis(&Arc::new(cube), &WeightVector::zero(3), 2).unwrap_err();
        assert!(matches!(err, Error::UnsupportedPolytope(_)));
    }
}
