//! Delzant polytopes given by facet data `{x : x . nu_k - c_k > 0}`.
//!
//! Vertices are enumerated by intersecting every `n`-subset of facets, which is
//! plenty for the handful of facets the solvers deal with. Boundedness is
//! decided by searching for a recession ray on every `(n-1)`-subset.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::potential::PotentialSpec;
use crate::scalar::{to_f64_vec, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct Facet<T> {
    /// Primitive inward lattice normal `nu_k`.
    pub normal: Vec<i64>,
    /// Offset `c_k`; the facet is `x . nu_k = c_k`.
    pub offset: T,
}

impl<T: Real> Facet<T> {
    pub fn new(normal: Vec<i64>, offset: T) -> Self {
        Facet { normal, offset }
    }

    /// `l_k(x) = x . nu_k - c_k`.
    pub fn value(&self, x: &[T]) -> T {
        self.normal
            .iter()
            .zip(x)
            .fold(-self.offset, |acc, (&n, &xi)| acc + T::from_int(n) * xi)
    }

    pub fn normal_real(&self) -> Vec<T> {
        self.normal.iter().map(|&n| T::from_int(n)).collect()
    }

    /// `l_k` as an affine polynomial.
    pub fn polynomial(&self) -> Polynomial<T> {
        Polynomial::affine(&self.normal_real(), -self.offset)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Vertex<T> {
    pub point: Vec<T>,
    /// Indices of the facets through this vertex, ascending.
    pub facets: Vec<usize>,
}

/// A validated Delzant polytope.
#[derive(Clone, Debug, PartialEq)]
pub struct Polytope<T> {
    dim: usize,
    facets: Vec<Facet<T>>,
    vertices: Vec<Vertex<T>>,
}

/// Affine map `x -> A x + b` with `A` integral and `det A = +-1`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnimodularMap<T> {
    pub matrix: Vec<Vec<i64>>,
    pub translation: Vec<T>,
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Exact integer determinant (Bareiss elimination).
pub fn int_det(m: &[Vec<i64>]) -> i64 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut a: Vec<Vec<i128>> = m
        .iter()
        .map(|r| r.iter().map(|&v| v as i128).collect())
        .collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            let Some(p) = (k + 1..n).find(|&i| a[i][k] != 0) else {
                return 0;
            };
            a.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    (sign * a[n - 1][n - 1]) as i64
}

fn minor(m: &[Vec<i64>], row: usize, col: usize) -> Vec<Vec<i64>> {
    m.iter()
        .enumerate()
        .filter(|(i, _)| *i != row)
        .map(|(_, r)| {
            r.iter()
                .enumerate()
                .filter(|(j, _)| *j != col)
                .map(|(_, &v)| v)
                .collect()
        })
        .collect()
}

/// Inverse of a unimodular integer matrix via the adjugate.
pub fn int_inverse(m: &[Vec<i64>]) -> Result<Vec<Vec<i64>>> {
    let n = m.len();
    let det = int_det(m);
    if det.abs() != 1 {
        return Err(Error::NotUnimodular { det });
    }
    let mut inv = vec![vec![0i64; n]; n];
    for (i, row) in inv.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let c = int_det(&minor(m, j, i));
            let s = if (i + j) % 2 == 0 { 1 } else { -1 };
            *v = s * c * det;
        }
    }
    Ok(inv)
}

/// Integer vector spanning the kernel of `n-1` independent rows in `Z^n`
/// (generalized cross product); zero when the rows are dependent.
fn kernel_vector(rows: &[Vec<i64>], n: usize) -> Vec<i64> {
    if n == 1 {
        return vec![1];
    }
    (0..n)
        .map(|j| {
            let m: Vec<Vec<i64>> = rows
                .iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|(c, _)| *c != j)
                        .map(|(_, &v)| v)
                        .collect()
                })
                .collect();
            let s = if j % 2 == 0 { 1 } else { -1 };
            s * int_det(&m)
        })
        .collect()
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Builds and validates a Delzant polytope from its facets.
pub fn build_polytope<T: Real>(facets: Vec<Facet<T>>) -> Result<Polytope<T>> {
    let Some(first) = facets.first() else {
        return Err(Error::Unbounded);
    };
    let n = first.normal.len();
    if n == 0 {
        return Err(Error::InvalidInput("polytope dimension must be positive".into()));
    }
    for (index, f) in facets.iter().enumerate() {
        if f.normal.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: f.normal.len(),
            });
        }
        let g = f.normal.iter().fold(0, |g, &v| gcd(g, v));
        if g != 1 {
            return Err(Error::NonPrimitiveNormal {
                index,
                normal: f.normal.clone(),
            });
        }
    }
    if facets.len() < n + 1 {
        return Err(Error::Unbounded);
    }

    // A nonzero recession direction of {N y >= 0} either spans a line (normals
    // do not span R^n) or is an extreme ray lying on n-1 independent facets.
    let spans = combinations(facets.len(), n)
        .iter()
        .any(|s| int_det(&s.iter().map(|&i| facets[i].normal.clone()).collect::<Vec<_>>()) != 0);
    if !spans {
        return Err(Error::Unbounded);
    }
    for subset in combinations(facets.len(), n - 1) {
        let rows: Vec<Vec<i64>> = subset.iter().map(|&i| facets[i].normal.clone()).collect();
        let y = kernel_vector(&rows, n);
        if y.iter().all(|&v| v == 0) {
            continue;
        }
        for sign in [1i64, -1] {
            let ok = facets.iter().all(|f| {
                f.normal
                    .iter()
                    .zip(&y)
                    .map(|(a, b)| a * b * sign)
                    .sum::<i64>()
                    >= 0
            });
            if ok {
                return Err(Error::Unbounded);
            }
        }
    }

    let scale = facets
        .iter()
        .fold(T::one(), |m, f| if f.offset.abs() > m { f.offset.abs() } else { m });
    let tol = T::lit(1e-9) * (T::one() + scale);

    let mut vertices: Vec<Vertex<T>> = Vec::new();
    for subset in combinations(facets.len(), n) {
        let rows: Vec<Vec<i64>> = subset.iter().map(|&i| facets[i].normal.clone()).collect();
        if int_det(&rows) == 0 {
            continue;
        }
        let a = DMatrix::from_fn(n, n, |i, j| T::from_int(rows[i][j]));
        let b = DVector::from_fn(n, |i, _| facets[subset[i]].offset);
        let Some(x) = a.lu().solve(&b) else {
            continue;
        };
        let x: Vec<T> = x.iter().copied().collect();
        let values: Vec<T> = facets.iter().map(|f| f.value(&x)).collect();
        if values.iter().any(|&v| v < -tol) {
            continue;
        }
        let incident: Vec<usize> = values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() <= tol)
            .map(|(i, _)| i)
            .collect();
        if vertices.iter().any(|v| v.facets == incident) {
            continue;
        }
        vertices.push(Vertex {
            point: x,
            facets: incident,
        });
    }
    if vertices.is_empty() {
        return Err(Error::EmptyInterior);
    }

    let mut centroid = vec![T::zero(); n];
    for v in &vertices {
        for (c, x) in centroid.iter_mut().zip(&v.point) {
            *c += *x;
        }
    }
    let count = T::from_int(vertices.len() as i64);
    centroid.iter_mut().for_each(|c| *c /= count);
    if facets.iter().any(|f| f.value(&centroid) <= tol) {
        return Err(Error::EmptyInterior);
    }

    for v in &vertices {
        if v.facets.len() != n {
            return Err(Error::NonDelzantVertex {
                vertex: to_f64_vec(&v.point),
                reason: format!("{} incident facets in dimension {n}", v.facets.len()),
            });
        }
        let rows: Vec<Vec<i64>> = v.facets.iter().map(|&i| facets[i].normal.clone()).collect();
        let det = int_det(&rows);
        if det.abs() != 1 {
            return Err(Error::NonDelzantVertex {
                vertex: to_f64_vec(&v.point),
                reason: format!("incident normals have determinant {det}"),
            });
        }
    }

    Ok(Polytope {
        dim: n,
        facets,
        vertices,
    })
}

impl<T: Real> Polytope<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn facets(&self) -> &[Facet<T>] {
        &self.facets
    }

    pub fn vertices(&self) -> &[Vertex<T>] {
        &self.vertices
    }

    /// `(l_1(x), ..., l_d(x))`; `x` is interior iff every entry is positive.
    pub fn facet_values(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(self.facets.iter().map(|f| f.value(x)).collect())
    }

    pub fn min_facet_value(&self, x: &[T]) -> T {
        self.facets
            .iter()
            .map(|f| f.value(x))
            .fold(T::max_value().unwrap(), |m, v| if v < m { v } else { m })
    }

    pub fn is_interior(&self, x: &[T], tol: T) -> bool {
        x.len() == self.dim && self.min_facet_value(x) >= tol
    }

    /// Product of all facet functions as a polynomial.
    pub fn facet_product(&self) -> Polynomial<T> {
        self.facets
            .iter()
            .fold(Polynomial::constant(self.dim, T::one()), |acc, f| acc.mul(&f.polynomial()))
    }

    pub fn centroid(&self) -> Vec<T> {
        let mut c = vec![T::zero(); self.dim];
        for v in &self.vertices {
            for (ci, x) in c.iter_mut().zip(&v.point) {
                *ci += *x;
            }
        }
        let k = T::from_int(self.vertices.len() as i64);
        c.iter_mut().for_each(|ci| *ci /= k);
        c
    }

    /// Axis-aligned bounding box `(lo, hi)` of the vertex set.
    pub fn bounding_box(&self) -> (Vec<T>, Vec<T>) {
        let mut lo = self.vertices[0].point.clone();
        let mut hi = lo.clone();
        for v in &self.vertices {
            for i in 0..self.dim {
                if v.point[i] < lo[i] {
                    lo[i] = v.point[i];
                }
                if v.point[i] > hi[i] {
                    hi[i] = v.point[i];
                }
            }
        }
        (lo, hi)
    }

    /// Vertices lying on facet `k`.
    pub fn facet_vertices(&self, k: usize) -> Vec<&Vertex<T>> {
        self.vertices.iter().filter(|v| v.facets.contains(&k)).collect()
    }

    /// True when some vertex sits at the origin with the canonical basis as
    /// its incident normals.
    pub fn is_standard_at_origin(&self) -> bool {
        let tol = T::lit(1e-12);
        self.vertices.iter().any(|v| {
            v.point.iter().all(|x| x.abs() <= tol) && {
                let mut seen = vec![false; self.dim];
                v.facets.iter().all(|&k| {
                    let nu = &self.facets[k].normal;
                    match nu.iter().position(|&c| c == 1) {
                        Some(i) if nu.iter().filter(|&&c| c != 0).count() == 1 && !seen[i] => {
                            seen[i] = true;
                            true
                        }
                        _ => false,
                    }
                })
            }
        })
    }

    /// The vertex at the origin, if any.
    pub fn origin_vertex(&self) -> Option<usize> {
        let tol = T::lit(1e-12);
        self.vertices
            .iter()
            .position(|v| v.point.iter().all(|x| x.abs() <= tol))
    }

    /// Built-in polytopes:
    /// * `interval`: `(-1, 1)`, facets `x + 1 > 0`, `-x + 1 > 0`;
    /// * `square`: `(0, 1)^2`, facets `x1 > 0`, `x2 > 0`, `1 - x1 > 0`, `1 - x2 > 0`;
    /// * `simplex`: `x1 > 0`, `x2 > 0`, `1 - x1 - x2 > 0`;
    /// * `product_square`: `(-1, 1)^2`, the moment polytope of `S^2 x S^2`.
    pub fn named(name: &str) -> Result<Self> {
        let f = |n: &[i64], c: f64| Facet::new(n.to_vec(), T::lit(c));
        let facets = match name {
            "interval" => vec![f(&[1], -1.0), f(&[-1], -1.0)],
            "square" => vec![
                f(&[1, 0], 0.0),
                f(&[0, 1], 0.0),
                f(&[-1, 0], -1.0),
                f(&[0, -1], -1.0),
            ],
            "simplex" => vec![f(&[1, 0], 0.0), f(&[0, 1], 0.0), f(&[-1, -1], -1.0)],
            "product_square" => vec![
                f(&[1, 0], -1.0),
                f(&[0, 1], -1.0),
                f(&[-1, 0], -1.0),
                f(&[0, -1], -1.0),
            ],
            other => {
                return Err(Error::InvalidInput(format!("unknown built-in polytope `{other}`")))
            }
        };
        build_polytope(facets)
    }

    pub const NAMED: [&'static str; 4] = ["interval", "square", "simplex", "product_square"];
}

impl<T: Real> UnimodularMap<T> {
    pub fn new(matrix: Vec<Vec<i64>>, translation: Vec<T>) -> Result<Self> {
        let n = matrix.len();
        if matrix.iter().any(|r| r.len() != n) || translation.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: translation.len(),
            });
        }
        let det = int_det(&matrix);
        if det.abs() != 1 {
            return Err(Error::NotUnimodular { det });
        }
        Ok(UnimodularMap {
            matrix,
            translation,
        })
    }

    pub fn identity(n: usize) -> Self {
        let matrix = (0..n)
            .map(|i| (0..n).map(|j| i64::from(i == j)).collect())
            .collect();
        UnimodularMap {
            matrix,
            translation: vec![T::zero(); n],
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn det(&self) -> i64 {
        int_det(&self.matrix)
    }

    pub fn matrix_real(&self) -> DMatrix<T> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| T::from_int(self.matrix[i][j]))
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        self.matrix
            .iter()
            .zip(&self.translation)
            .map(|(row, &b)| {
                row.iter()
                    .zip(x)
                    .fold(b, |acc, (&a, &xi)| acc + T::from_int(a) * xi)
            })
            .collect()
    }

    pub fn inverse(&self) -> Self {
        let inv = int_inverse(&self.matrix).expect("unimodular by construction");
        let n = self.dim();
        let translation = (0..n)
            .map(|i| {
                -(0..n).fold(T::zero(), |acc, j| {
                    acc + T::from_int(inv[i][j]) * self.translation[j]
                })
            })
            .collect();
        UnimodularMap {
            matrix: inv,
            translation,
        }
    }

    /// Image polytope, facets kept in source order: `nu' = A^{-T} nu`,
    /// `c' = c + nu . A^{-1} b`.
    pub fn image_polytope(&self, p: &Polytope<T>) -> Result<Polytope<T>> {
        if p.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: p.dim(),
                found: self.dim(),
            });
        }
        let inv = self.inverse();
        let n = self.dim();
        let facets = p
            .facets()
            .iter()
            .map(|f| {
                let normal: Vec<i64> = (0..n)
                    .map(|j| (0..n).map(|i| inv.matrix[i][j] * f.normal[i]).sum())
                    .collect();
                // A^{-1} b = -(inverse translation)
                let shift = f
                    .normal
                    .iter()
                    .zip(&inv.translation)
                    .fold(T::zero(), |acc, (&nu, &t)| acc - T::from_int(nu) * t);
                Facet::new(normal, f.offset + shift)
            })
            .collect();
        build_polytope(facets)
    }
}

/// Moves vertex `index` to the origin with its incident normals sent to the
/// canonical basis. The image lists the incident facets first.
pub fn standardize_at_vertex<T: Real>(
    p: &Polytope<T>,
    index: usize,
) -> Result<(Polytope<T>, UnimodularMap<T>)> {
    let v = p.vertices().get(index).ok_or(Error::InvalidVertex {
        index,
        count: p.vertices().len(),
    })?;
    let rows: Vec<Vec<i64>> = v.facets.iter().map(|&k| p.facets()[k].normal.clone()).collect();
    let n = p.dim();
    let translation: Vec<T> = (0..n)
        .map(|i| {
            -rows[i]
                .iter()
                .zip(&v.point)
                .fold(T::zero(), |acc, (&a, &x)| acc + T::from_int(a) * x)
        })
        .collect();
    let map = UnimodularMap::new(rows, translation)?;
    let image = map.image_polytope(p)?;
    let mut order: Vec<usize> = v.facets.clone();
    order.extend((0..p.facets().len()).filter(|k| !v.facets.contains(k)));
    let facets = order.iter().map(|&k| image.facets()[k].clone()).collect();
    Ok((build_polytope(facets)?, map))
}

/// Transports a potential along `map`: the image potential is `s o map^{-1}`
/// on `map(P)`, so `Hess s'(map x) = A^{-T} Hess s(x) A^{-1}`.
pub fn unimodular_pushforward<T: Real>(
    p: &Polytope<T>,
    spec: &PotentialSpec<T>,
    map: &UnimodularMap<T>,
) -> Result<PotentialSpec<T>> {
    if spec.polytope().as_ref() != p {
        return Err(Error::DomainMismatch);
    }
    let image = map.image_polytope(p)?;
    let inv = map.inverse();
    let correction = spec
        .correction()
        .compose_affine(&inv.matrix_real(), &inv.translation);
    PotentialSpec::new(Arc::new(image), spec.beta(), correction)
}
