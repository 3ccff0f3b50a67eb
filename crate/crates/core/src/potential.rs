//! Symplectic potentials `s = beta * sum(l_k log l_k - l_k) + v` with a
//! polynomial correction `v`, and polynomial perturbation directions.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::jet::{invert_spd, Jet};
use crate::poly::Polynomial;
use crate::polytope::Polytope;
use crate::scalar::{to_f64_vec, Real};

/// Points with `min l_k` below this are treated as boundary points.
pub const INTERIOR_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct PotentialSpec<T> {
    polytope: Arc<Polytope<T>>,
    beta: T,
    correction: Polynomial<T>,
    hess_v: Vec<Vec<Polynomial<T>>>,
}

/// A polynomial perturbation `ds` of the potential.
#[derive(Clone, Debug, PartialEq)]
pub struct Direction<T> {
    pub id: String,
    pub poly: Polynomial<T>,
    /// Set when `poly` already carries the factor `(prod l_k)^2`.
    pub boundary_flat: bool,
}

impl<T: Real> Direction<T> {
    pub fn new(id: impl Into<String>, poly: Polynomial<T>, boundary_flat: bool) -> Self {
        Direction {
            id: id.into(),
            poly,
            boundary_flat,
        }
    }

    pub fn zero(nvars: usize) -> Self {
        Direction::new("0", Polynomial::zero(nvars), true)
    }

    /// `a * self + b * other`; flat only if both are.
    pub fn combine(&self, a: T, other: &Self, b: T) -> Self {
        Direction {
            id: format!("{}*({}) + {}*({})", a.as_f64(), self.id, b.as_f64(), other.id),
            poly: self.poly.scale(a).add(&other.poly.scale(b)),
            boundary_flat: self.boundary_flat && other.boundary_flat,
        }
    }
}

/// `ds = (prod_k l_k)^2 * poly`, which vanishes to second order on every facet.
pub fn boundary_flat_direction<T: Real>(p: &Polytope<T>, poly: &Polynomial<T>, id: &str) -> Direction<T> {
    let f = p.facet_product();
    Direction::new(id, f.mul(&f).mul(poly), true)
}

/// `beta * sum_l nu_l nu_l^T / l_l(x)`.
pub fn guillemin_hessian<T: Real>(p: &Polytope<T>, beta: T, x: &[T]) -> Result<DMatrix<T>> {
    let values = p.facet_values(x)?;
    let min = values
        .iter()
        .fold(T::max_value().unwrap(), |m, &v| if v < m { v } else { m });
    if min < T::lit(INTERIOR_TOL) {
        return Err(Error::BoundaryPoint {
            point: to_f64_vec(x),
            min_facet_value: min.as_f64(),
        });
    }
    let n = p.dim();
    let mut h = DMatrix::zeros(n, n);
    for (f, &l) in p.facets().iter().zip(&values) {
        let nu = f.normal_real();
        let w = beta / l;
        for i in 0..n {
            for j in 0..n {
                h[(i, j)] += w * nu[i] * nu[j];
            }
        }
    }
    Ok(h)
}

fn min_max_eigen<T: Real>(m: DMatrix<T>) -> (T, T) {
    let e = SymmetricEigen::new(m).eigenvalues;
    let mut lo = e[0];
    let mut hi = e[0];
    for &v in e.iter() {
        if v < lo {
            lo = v;
        }
        if v > hi {
            hi = v;
        }
    }
    (lo, hi)
}

fn is_pd<T: Real>(lo: T, hi: T) -> bool {
    let scale = if hi > T::one() { hi } else { T::one() };
    lo > T::lit(1e-12) * scale
}

impl<T: Real> PotentialSpec<T> {
    pub fn new(polytope: Arc<Polytope<T>>, beta: T, correction: Polynomial<T>) -> Result<Self> {
        if !beta.is_finite() || beta <= T::zero() {
            return Err(Error::InvalidInput(format!(
                "boundary coefficient must be positive, got {}",
                beta.as_f64()
            )));
        }
        if correction.nvars() != polytope.dim() {
            return Err(Error::DimensionMismatch {
                expected: polytope.dim(),
                found: correction.nvars(),
            });
        }
        let hess_v = correction.hessian_polys();
        Ok(PotentialSpec {
            polytope,
            beta,
            correction,
            hess_v,
        })
    }

    /// The Guillemin potential (`v = 0`).
    pub fn guillemin(polytope: Arc<Polytope<T>>, beta: T) -> Result<Self> {
        let n = polytope.dim();
        Self::new(polytope, beta, Polynomial::zero(n))
    }

    pub fn polytope(&self) -> &Arc<Polytope<T>> {
        &self.polytope
    }

    pub fn dim(&self) -> usize {
        self.polytope.dim()
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn correction(&self) -> &Polynomial<T> {
        &self.correction
    }

    /// The spec with `v` replaced by `v + t * ds`.
    pub fn perturbed(&self, ds: &Direction<T>, t: T) -> Result<Self> {
        Self::new(
            self.polytope.clone(),
            self.beta,
            self.correction.add(&ds.poly.scale(t)),
        )
    }

    /// `s(x)`.
    pub fn value(&self, x: &[T]) -> Result<T> {
        let values = self.polytope.facet_values(x)?;
        let mut s = self.correction.eval(x);
        for l in values {
            if l < T::lit(INTERIOR_TOL) {
                return Err(Error::BoundaryPoint {
                    point: to_f64_vec(x),
                    min_facet_value: l.as_f64(),
                });
            }
            s += self.beta * (l * l.ln() - l);
        }
        Ok(s)
    }

    pub fn hessian(&self, x: &[T]) -> Result<DMatrix<T>> {
        let mut h = guillemin_hessian(&self.polytope, self.beta, x)?;
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                h[(i, j)] += self.hess_v[i][j].eval(x);
            }
        }
        Ok(h)
    }

    /// `(Hess s, (Hess s)^{-1})` by Cholesky factorization.
    pub fn hessian_and_inverse(&self, x: &[T]) -> Result<(DMatrix<T>, DMatrix<T>)> {
        let h = self.hessian(x)?;
        let chol = h.clone().cholesky().ok_or_else(|| Error::NotPositiveDefinite {
            point: to_f64_vec(x),
        })?;
        Ok((h, chol.inverse()))
    }

    /// Taylor jets of the entries of `Hess s` about `x`.
    pub fn hessian_jets(&self, x: &[T], order: usize) -> Result<Vec<Vec<Jet<T>>>> {
        let n = self.dim();
        let values = self.polytope.facet_values(x)?;
        let min = values
            .iter()
            .fold(T::max_value().unwrap(), |m, &v| if v < m { v } else { m });
        if min < T::lit(INTERIOR_TOL) {
            return Err(Error::BoundaryPoint {
                point: to_f64_vec(x),
                min_facet_value: min.as_f64(),
            });
        }
        let mut h: Vec<Vec<Jet<T>>> = (0..n)
            .map(|i| (0..n).map(|j| self.hess_v[i][j].eval_jet(x, order)).collect())
            .collect();
        for (f, &l) in self.polytope.facets().iter().zip(&values) {
            let nu = f.normal_real();
            let inv = Jet::affine(order, l, &nu).recip().scale(self.beta);
            for i in 0..n {
                for j in 0..n {
                    if nu[i] != T::zero() && nu[j] != T::zero() {
                        h[i][j] = h[i][j] + inv.scale(nu[i] * nu[j]);
                    }
                }
            }
        }
        Ok(h)
    }

    /// Taylor jets of the entries of `(Hess s)^{-1}` about `x`.
    pub fn inverse_hessian_jets(&self, x: &[T], order: usize) -> Result<Vec<Vec<Jet<T>>>> {
        let h = self.hessian_jets(x, order)?;
        let g = invert_spd(&h);
        if g.iter().flatten().any(|j| !j.is_finite()) {
            return Err(Error::NotPositiveDefinite {
                point: to_f64_vec(x),
            });
        }
        Ok(g)
    }

    /// Checks membership in Spot(P) on the given samples.
    pub fn validate_spot(&self, grid: &SpotGrid<T>) -> SpotReport {
        let mut report = SpotReport {
            pass: true,
            interior_points: grid.interior.len(),
            facet_points: grid.facets.len(),
            min_interior_eigenvalue: f64::INFINITY,
            first_failure: None,
        };
        for x in &grid.interior {
            let (lo, hi) = match self.hessian(x) {
                Ok(h) => min_max_eigen(h),
                Err(_) => (T::zero(), T::zero()),
            };
            report.min_interior_eigenvalue = report.min_interior_eigenvalue.min(lo.as_f64());
            if !is_pd(lo, hi) && report.first_failure.is_none() {
                report.pass = false;
                report.first_failure = Some(SpotFailure {
                    facet: None,
                    point: to_f64_vec(x),
                    min_eigenvalue: lo.as_f64(),
                });
            }
        }
        for (l, x) in &grid.facets {
            let q = self.tangential_hessian(*l, x);
            let (lo, hi) = match q {
                Some(q) => min_max_eigen(q),
                None => (T::zero(), T::zero()),
            };
            if !is_pd(lo, hi) && report.first_failure.is_none() {
                report.pass = false;
                report.first_failure = Some(SpotFailure {
                    facet: Some(*l),
                    point: to_f64_vec(x),
                    min_eigenvalue: lo.as_f64(),
                });
            }
        }
        report
    }

    /// Validates on the default grid and turns a failure into an error.
    pub fn ensure_spot(&self) -> Result<()> {
        let report = self.validate_spot(&SpotGrid::standard(&self.polytope, 33, 65));
        match report.first_failure {
            None => Ok(()),
            Some(f) => Err(Error::SpotViolation(f.describe())),
        }
    }

    /// Hessian of `s - beta * l_l log l_l` restricted to facet `l` at `x`,
    /// expressed in an integral basis of the facet's tangent space.
    fn tangential_hessian(&self, l: usize, x: &[T]) -> Option<DMatrix<T>> {
        let n = self.dim();
        let facets = self.polytope.facets();
        let mut h = DMatrix::zeros(n, n);
        for (k, f) in facets.iter().enumerate() {
            if k == l {
                continue;
            }
            let v = f.value(x);
            if v < T::lit(INTERIOR_TOL) {
                return None;
            }
            let nu = f.normal_real();
            for i in 0..n {
                for j in 0..n {
                    h[(i, j)] += self.beta * nu[i] * nu[j] / v;
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                h[(i, j)] += self.hess_v[i][j].eval(x);
            }
        }
        let t = tangent_basis(&facets[l].normal);
        let tm = DMatrix::from_fn(n, t.len(), |i, j| T::from_int(t[j][i]));
        Some(tm.transpose() * h * tm)
    }
}

/// Integer basis of the hyperplane `nu^perp` (only `n <= 2` is needed).
fn tangent_basis(nu: &[i64]) -> Vec<Vec<i64>> {
    match nu.len() {
        1 => Vec::new(),
        2 => vec![vec![-nu[1], nu[0]]],
        n => {
            // Orthogonal complement via pairs (e_i nu_j - e_j nu_i); spans nu^perp.
            let p = nu.iter().position(|&v| v != 0).unwrap_or(0);
            (0..n)
                .filter(|&i| i != p)
                .map(|i| {
                    let mut t = vec![0; n];
                    t[i] = nu[p];
                    t[p] = -nu[i];
                    t
                })
                .collect()
        }
    }
}

/// Sample points for [`PotentialSpec::validate_spot`].
#[derive(Clone, Debug)]
pub struct SpotGrid<T> {
    pub interior: Vec<Vec<T>>,
    /// `(facet index, point on that facet)`.
    pub facets: Vec<(usize, Vec<T>)>,
}

impl<T: Real> SpotGrid<T> {
    /// Cell-centred `per_axis^n` grid over the bounding box, restricted to
    /// the interior, plus `per_facet` points strictly inside each edge when
    /// `n = 2`. In dimension one the facets are points and carry no condition.
    pub fn standard(p: &Polytope<T>, per_axis: usize, per_facet: usize) -> Self {
        let (lo, hi) = p.bounding_box();
        let n = p.dim();
        let mut interior = Vec::new();
        let total = per_axis.pow(n as u32);
        for idx in 0..total {
            let mut r = idx;
            let mut x = Vec::with_capacity(n);
            for d in 0..n {
                let i = r % per_axis;
                r /= per_axis;
                let t = (T::from_int(i as i64) + T::lit(0.5)) / T::from_int(per_axis as i64);
                x.push(lo[d] + (hi[d] - lo[d]) * t);
            }
            if p.min_facet_value(&x) >= T::lit(INTERIOR_TOL) {
                interior.push(x);
            }
        }
        let mut facets = Vec::new();
        if n == 2 {
            for l in 0..p.facets().len() {
                let ends = p.facet_vertices(l);
                if ends.len() != 2 {
                    continue;
                }
                let (a, b) = (&ends[0].point, &ends[1].point);
                for i in 0..per_facet {
                    let t = T::from_int(i as i64 + 1) / T::from_int(per_facet as i64 + 1);
                    let x = vec![a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t];
                    facets.push((l, x));
                }
            }
        }
        SpotGrid { interior, facets }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpotFailure {
    /// `None` for an interior point, otherwise the facet index.
    pub facet: Option<usize>,
    pub point: Vec<f64>,
    pub min_eigenvalue: f64,
}

impl SpotFailure {
    pub fn describe(&self) -> String {
        match self.facet {
            None => format!(
                "Hess s not positive definite at interior point {:?} (min eigenvalue {:e})",
                self.point, self.min_eigenvalue
            ),
            Some(l) => format!(
                "tangential Hessian on facet {l} not positive definite at {:?} (min eigenvalue {:e})",
                self.point, self.min_eigenvalue
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpotReport {
    pub pass: bool,
    pub interior_points: usize,
    pub facet_points: usize,
    pub min_interior_eigenvalue: f64,
    pub first_failure: Option<SpotFailure>,
}
