//! Affine parametrization of the supported polytope shapes by a reference
//! cell: `[-1, 1]`, `[-1, 1]^2` or the triangle `{xi >= 0, xi1 + xi2 <= 1}`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::polytope::Polytope;
use crate::quadrature::QuadratureRule;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainKind {
    Interval,
    Parallelogram,
    Triangle,
}

/// `x = origin + jacobian * xi` for `xi` in the reference cell of `kind`.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain<T> {
    pub kind: DomainKind,
    pub origin: Vec<T>,
    pub jacobian: DMatrix<T>,
    pub inverse: DMatrix<T>,
    /// `|det jacobian|`.
    pub volume_factor: T,
}

fn sub<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(x, y)| *x - *y).collect()
}

impl<T: Real> Domain<T> {
    /// Recognizes an interval, a parallelogram or a triangle.
    pub fn recognize(p: &Polytope<T>) -> Result<Self> {
        let verts = p.vertices();
        let n = p.dim();
        match (n, verts.len()) {
            (1, 2) => {
                let (a, b) = (verts[0].point[0], verts[1].point[0]);
                let (a, b) = if a < b { (a, b) } else { (b, a) };
                let half = T::lit(0.5);
                Self::from_jacobian(
                    DomainKind::Interval,
                    vec![(a + b) * half],
                    DMatrix::from_element(1, 1, (b - a) * half),
                )
            }
            (2, 3) => {
                let v0 = &verts[0].point;
                let e1 = sub(&verts[1].point, v0);
                let e2 = sub(&verts[2].point, v0);
                let j = DMatrix::from_row_slice(2, 2, &[e1[0], e2[0], e1[1], e2[1]]);
                Self::from_jacobian(DomainKind::Triangle, v0.clone(), j)
            }
            (2, 4) => {
                let v0 = &verts[0];
                let neighbours: Vec<usize> = (1..4)
                    .filter(|&i| verts[i].facets.iter().any(|f| v0.facets.contains(f)))
                    .collect();
                let opposite = (1..4).find(|i| !neighbours.contains(i));
                let (Some(opposite), 2) = (opposite, neighbours.len()) else {
                    return Err(Error::UnsupportedPolytope(
                        "quadrilateral without the vertex structure of a parallelogram".into(),
                    ));
                };
                let v1 = &verts[neighbours[0]].point;
                let v3 = &verts[neighbours[1]].point;
                let v2 = &verts[opposite].point;
                let tol = T::lit(1e-9);
                let scale = v0
                    .point
                    .iter()
                    .chain(v2)
                    .fold(T::one(), |m, x| if x.abs() > m { x.abs() } else { m });
                for d in 0..2 {
                    if (v1[d] + v3[d] - v0.point[d] - v2[d]).abs() > tol * scale {
                        return Err(Error::UnsupportedPolytope(
                            "quadrilateral is not a parallelogram".into(),
                        ));
                    }
                }
                let half = T::lit(0.5);
                let origin: Vec<T> = (0..2).map(|d| (v0.point[d] + v2[d]) * half).collect();
                let e1 = sub(v1, &v0.point);
                let e3 = sub(v3, &v0.point);
                let j = DMatrix::from_row_slice(
                    2,
                    2,
                    &[e1[0] * half, e3[0] * half, e1[1] * half, e3[1] * half],
                );
                Self::from_jacobian(DomainKind::Parallelogram, origin, j)
            }
            (n, m) if n > 2 => Err(Error::UnsupportedPolytope(format!(
                "solvers support dimension 1 and 2, got dimension {n} with {m} vertices"
            ))),
            (_, m) => Err(Error::UnsupportedPolytope(format!(
                "polygon with {m} vertices is neither a triangle nor a parallelogram"
            ))),
        }
    }

    fn from_jacobian(kind: DomainKind, origin: Vec<T>, jacobian: DMatrix<T>) -> Result<Self> {
        let det = jacobian.determinant();
        let inverse = jacobian
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::UnsupportedPolytope("degenerate reference map".into()))?;
        Ok(Domain {
            kind,
            origin,
            jacobian,
            inverse,
            volume_factor: det.abs(),
        })
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    pub fn to_physical(&self, xi: &[T]) -> Vec<T> {
        (0..self.dim())
            .map(|i| {
                (0..self.dim()).fold(self.origin[i], |acc, j| acc + self.jacobian[(i, j)] * xi[j])
            })
            .collect()
    }

    pub fn to_reference(&self, x: &[T]) -> Vec<T> {
        let d: Vec<T> = x.iter().zip(&self.origin).map(|(a, b)| *a - *b).collect();
        (0..self.dim())
            .map(|i| (0..self.dim()).fold(T::zero(), |acc, j| acc + self.inverse[(i, j)] * d[j]))
            .collect()
    }

    /// Gauss rule with `nodes` points per reference axis, mapped to the polytope.
    pub fn quadrature(&self, nodes: usize) -> QuadratureRule<T> {
        let reference = match self.kind {
            DomainKind::Interval => QuadratureRule::interval(nodes),
            DomainKind::Parallelogram => QuadratureRule::square(nodes),
            DomainKind::Triangle => QuadratureRule::triangle(nodes),
        };
        QuadratureRule {
            dim: reference.dim,
            points: reference.points.iter().map(|xi| self.to_physical(xi)).collect(),
            weights: reference
                .weights
                .iter()
                .map(|w| *w * self.volume_factor)
                .collect(),
        }
    }

    /// Cell-centred uniform samples of the reference cell with `per_axis`
    /// points per axis, mapped to the polytope; all points are interior.
    pub fn uniform_points(&self, per_axis: usize) -> Vec<Vec<T>> {
        let m = T::from_int(per_axis as i64);
        let c = |i: usize| (T::from_int(i as i64) + T::lit(0.5)) / m;
        let mut out = Vec::new();
        match self.kind {
            DomainKind::Interval => {
                for i in 0..per_axis {
                    out.push(self.to_physical(&[T::lit(2.0) * c(i) - T::one()]));
                }
            }
            DomainKind::Parallelogram => {
                for i in 0..per_axis {
                    for j in 0..per_axis {
                        let xi = [T::lit(2.0) * c(i) - T::one(), T::lit(2.0) * c(j) - T::one()];
                        out.push(self.to_physical(&xi));
                    }
                }
            }
            DomainKind::Triangle => {
                for i in 0..per_axis {
                    for j in 0..per_axis {
                        let (a, b) = (c(i), c(j));
                        if a + b < T::one() {
                            out.push(self.to_physical(&[a, b]));
                        }
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recognizes_built_in_shapes() {
        let d = Domain::recognize(&Polytope::<f64>::named("interval").unwrap()).unwrap();
        assert_eq!(d.kind, DomainKind::Interval);
        assert_eq!(d.volume_factor, 1.0);
        let d = Domain::recognize(&Polytope::<f64>::named("square").unwrap()).unwrap();
        assert_eq!(d.kind, DomainKind::Parallelogram);
        assert!((d.volume_factor - 0.25).abs() < 1e-15);
        let d = Domain::recognize(&Polytope::<f64>::named("simplex").unwrap()).unwrap();
        assert_eq!(d.kind, DomainKind::Triangle);
        assert!((d.quadrature(8).integrate(|_| 1.0) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn parallelogram_round_trip() {
        use crate::polytope::{build_polytope, Facet};
        // image of the unit square under (x, y) -> (x + y, y)
        let p = build_polytope(vec![
            Facet::new(vec![1, -1], 0.0f64),
            Facet::new(vec![0, 1], 0.0),
            Facet::new(vec![-1, 1], -1.0),
            Facet::new(vec![0, -1], -1.0),
        ])
        .unwrap();
        let d = Domain::recognize(&p).unwrap();
        assert_eq!(d.kind, DomainKind::Parallelogram);
        let x = [1.2f64, 0.5];
        let back = d.to_physical(&d.to_reference(&x));
        assert!((back[0] - x[0]).abs() < 1e-14 && (back[1] - x[1]).abs() < 1e-14);
        let area = d.quadrature(4).integrate(|_| 1.0);
        assert!((area - 1.0).abs() < 1e-14);
        assert!(d.uniform_points(7).iter().all(|x| p.min_facet_value(x) > 0.0));
    }
}
