//! Structural identities satisfied by eigenfunctions of the reduced operator,
//! the vertex asymptotics of `(Hess s)^{-1}`, the degenerate principal symbol
//! of the criticality system and the associated Legendre oracle.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::polytope::{standardize_at_vertex, unimodular_pushforward};
use crate::potential::{PotentialSpec, INTERIOR_TOL};
use crate::reduced::basis::Basis;
use crate::reduced::{EigenspaceBasis, WeightVector};
use crate::scalar::{to_f64_vec, Real};

/// `l (l + 1)`: eigenvalue of `-((1 - x^2) f')' + k^2 f / (1 - x^2)` with
/// index `l >= max(|k|, 1)`.
pub fn legendre_oracle(k: i64, index: i64) -> Result<f64> {
    if index < k.abs().max(1) {
        return Err(Error::IndexBelowWeight { k, index });
    }
    Ok((index * (index + 1)) as f64)
}

fn ensure_interior<T: Real>(spec: &PotentialSpec<T>, points: &[Vec<T>]) -> Result<()> {
    for x in points {
        if !spec.polytope().is_interior(x, T::lit(INTERIOR_TOL)) {
            return Err(Error::GridOutsideInterior {
                point: to_f64_vec(x),
            });
        }
    }
    Ok(())
}

fn relative_gap(lhs: &[f64], rhs: &[f64]) -> f64 {
    let diff = lhs.iter().zip(rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let scale = lhs.iter().chain(rhs).map(|v| v.abs()).fold(0.0, f64::max);
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

fn field_jet<T: Real>(basis: &Basis<T>, f: &DVector<T>, x: &[T], order: usize) -> Jet<T> {
    basis.combine_jet(f, x, order)
}

/// Both sides of `d/dx[(f'/s'')^2 - k^2 f^2] = -2 lambda f f' / s''` on the
/// interval, sampled on `points`.
pub fn sphere_flux_sides<T: Real>(
    spec: &PotentialSpec<T>,
    basis: &Basis<T>,
    f: &DVector<T>,
    lambda: T,
    k: i64,
    points: &[Vec<T>],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if spec.dim() != 1 {
        return Err(Error::UnsupportedPolytope(
            "the flux identity is one-dimensional".into(),
        ));
    }
    ensure_interior(spec, points)?;
    let k2 = T::from_int(k * k);
    let mut lhs = Vec::with_capacity(points.len());
    let mut rhs = Vec::with_capacity(points.len());
    for x in points {
        let fj = field_jet(basis, f, x, 2);
        let s2 = spec.hessian_jets(x, 1)?[0][0];
        let df = fj.derivative(0);
        let u = df * s2.recip();
        let f0 = fj.truncate(1);
        let g = u * u - (f0 * f0).scale(k2);
        lhs.push(g.d1(0).as_f64());
        rhs.push((-(lambda + lambda) * fj.value() * df.value() / s2.value()).as_f64());
    }
    Ok((lhs, rhs))
}

/// Maximal deviation in the one-dimensional flux identity, relative to the
/// largest sampled side.
pub fn sphere_flux_identity_residual<T: Real>(
    spec: &PotentialSpec<T>,
    basis: &Basis<T>,
    f: &DVector<T>,
    lambda: T,
    k: i64,
    points: &[Vec<T>],
) -> Result<f64> {
    let (l, r) = sphere_flux_sides(spec, basis, f, lambda, k, points)?;
    Ok(relative_gap(&l, &r))
}

/// Both sides of `d_ij(V_i V_j) = lambda^2 f^2 - 2 lambda grad f^T G grad f
/// + tr((DV)^2)`, `V = G grad f`, for an invariant eigenfunction.
pub fn expansion_sides<T: Real>(
    spec: &PotentialSpec<T>,
    basis: &Basis<T>,
    f: &DVector<T>,
    lambda: T,
    points: &[Vec<T>],
) -> Result<(Vec<f64>, Vec<f64>)> {
    ensure_interior(spec, points)?;
    let n = spec.dim();
    let mut lhs = Vec::with_capacity(points.len());
    let mut rhs = Vec::with_capacity(points.len());
    for x in points {
        let g = spec.inverse_hessian_jets(x, 2)?;
        let fj = field_jet(basis, f, x, 3);
        let grad: Vec<Jet<T>> = (0..n).map(|i| fj.derivative(i)).collect();
        let v: Vec<Jet<T>> = (0..n)
            .map(|i| (0..n).fold(Jet::constant(n, 2, T::zero()), |a, j| a + g[i][j] * grad[j]))
            .collect();
        let mut left = T::zero();
        let mut trace = T::zero();
        let mut energy = T::zero();
        for i in 0..n {
            energy += grad[i].value() * v[i].value();
            for j in 0..n {
                left += (v[i] * v[j]).d2(i, j);
                trace += v[i].d1(j) * v[j].d1(i);
            }
        }
        let fv = fj.value();
        lhs.push(left.as_f64());
        rhs.push((lambda * lambda * fv * fv - T::lit(2.0) * lambda * energy + trace).as_f64());
    }
    Ok((lhs, rhs))
}

pub fn expansion_identity_residual<T: Real>(
    spec: &PotentialSpec<T>,
    basis: &Basis<T>,
    f: &DVector<T>,
    lambda: T,
    points: &[Vec<T>],
) -> Result<f64> {
    let (l, r) = expansion_sides(spec, basis, f, lambda, points)?;
    Ok(relative_gap(&l, &r))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VertexExpansion {
    pub vertex: Vec<f64>,
    pub radii: Vec<f64>,
    pub deviations: Vec<f64>,
    /// Least-squares slope of `log deviation` against `log t`.
    pub exponent: f64,
    pub max_deviation: f64,
}

/// `count` log-spaced radii from `lo` to `hi`.
pub fn log_radii(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count.max(2) - 1) as f64).exp())
        .collect()
}

/// Fits the decay of `max_ij |beta G(t u) - diag(t u)|` for a polytope that
/// is standard at the origin.
pub fn vertex_expansion_check<T: Real>(spec: &PotentialSpec<T>, radii: &[T], u: &[T]) -> Result<VertexExpansion> {
    let p = spec.polytope();
    if !p.is_standard_at_origin() {
        let vertex = p.vertices().first().map(|v| to_f64_vec(&v.point)).unwrap_or_default();
        return Err(Error::VertexNotStandard { vertex });
    }
    let n = spec.dim();
    if u.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: u.len(),
        });
    }
    let mut deviations = Vec::with_capacity(radii.len());
    for &t in radii {
        let x: Vec<T> = u.iter().map(|&ui| ui * t).collect();
        let (_, g) = spec.hessian_and_inverse(&x)?;
        let mut dev = T::zero();
        for i in 0..n {
            for j in 0..n {
                let d = if i == j { x[i] } else { T::zero() };
                let e = (spec.beta() * g[(i, j)] - d).abs();
                if e > dev {
                    dev = e;
                }
            }
        }
        deviations.push(dev.as_f64());
    }
    let radii: Vec<f64> = radii.iter().map(|r| r.as_f64()).collect();
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = deviations.iter().map(|d| d.max(f64::MIN_POSITIVE).ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(VertexExpansion {
        vertex: vec![0.0; n],
        exponent: sxy / sxx,
        max_deviation: deviations.iter().copied().fold(0.0, f64::max),
        radii,
        deviations,
    })
}

/// Runs [`vertex_expansion_check`] at every vertex after moving it to
/// standard position; the reported vertex is in source coordinates.
pub fn vertex_expansion_all<T: Real>(spec: &PotentialSpec<T>, radii: &[T]) -> Result<Vec<VertexExpansion>> {
    let p = spec.polytope();
    let n = p.dim();
    // generic positive ray direction
    let u: Vec<T> = (0..n).map(|i| T::lit(1.0 / (1.0 + 0.618 * i as f64))).collect();
    (0..p.vertices().len())
        .map(|i| {
            let (_, map) = standardize_at_vertex(p, i)?;
            let image = unimodular_pushforward(p, spec, &map)?;
            let mut r = vertex_expansion_check(&image, radii, &u)?;
            r.vertex = to_f64_vec(&p.vertices()[i].point);
            Ok(r)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymbolMatrix {
    pub matrix: DMatrix<f64>,
    pub determinant: f64,
    /// Product of the Euclidean row norms.
    pub row_norm_product: f64,
    /// `|det| / row_norm_product`, zero when the matrix has a zero row.
    pub relative_determinant: f64,
    /// `max |L_{N+1,b} - sum_a 2 p_a L_{a,b}|` relative to the last row.
    pub combination_residual: f64,
}

/// Principal symbol of the linearized criticality system at `(x, xi)` for
/// eigenfields `f_0..f_N` with `q = xi^T G xi`, `p_a = xi^T G grad f_a`:
/// `L_aa = q`, `L_{a,N+1} = -q p_a`, `L_{N+1,a} = 2 q p_a`,
/// `L_{N+1,N+1} = -2 q sum p_a^2`.
pub fn ellipticity_symbol<T: Real>(
    spec: &PotentialSpec<T>,
    basis: &Basis<T>,
    fields: &[DVector<T>],
    x: &[T],
    xi: &[T],
) -> Result<SymbolMatrix> {
    if xi.iter().all(|v| *v == T::zero()) {
        return Err(Error::ZeroCovector);
    }
    if xi.len() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: xi.len(),
        });
    }
    let (_, g) = spec.hessian_and_inverse(x)?;
    let n = spec.dim();
    let xv = DVector::from_column_slice(xi);
    let gx = &g * &xv;
    let q = xv.dot(&gx).as_f64();
    let jets = basis.eval_jets(x, 1);
    let p: Vec<f64> = fields
        .iter()
        .map(|u| {
            let f = jets
                .iter()
                .zip(u.iter())
                .fold(Jet::constant(n, 1, T::zero()), |a, (phi, &c)| a + phi.scale(c));
            let grad = DVector::from_vec(f.gradient());
            gx.dot(&grad).as_f64()
        })
        .collect();
    let m = fields.len();
    let mut l = DMatrix::zeros(m + 1, m + 1);
    for a in 0..m {
        l[(a, a)] = q;
        l[(a, m)] = -q * p[a];
        l[(m, a)] = 2.0 * q * p[a];
    }
    l[(m, m)] = -2.0 * q * p.iter().map(|v| v * v).sum::<f64>();

    let determinant = l.clone().lu().determinant();
    let row_norm_product: f64 = l.row_iter().map(|r| r.norm()).product();
    let relative_determinant = if row_norm_product > 0.0 {
        determinant.abs() / row_norm_product
    } else {
        determinant.abs()
    };
    let last = l.row(m);
    let mut combo = DVector::<f64>::zeros(m + 1);
    for (a, pa) in p.iter().enumerate() {
        combo += l.row(a).transpose() * (2.0 * pa);
    }
    let diff = (last.transpose() - &combo).amax();
    let scale = last.amax().max(combo.amax());
    let combination_residual = if scale > 0.0 { diff / scale } else { diff };
    Ok(SymbolMatrix {
        matrix: l,
        determinant,
        row_norm_product,
        relative_determinant,
        combination_residual,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymbolScan {
    pub draws: usize,
    pub seed: u64,
    pub max_relative_determinant: f64,
    pub max_combination_residual: f64,
}

/// Draws `draws` random `(case, x, xi)` triples; case `i` pairs a potential
/// with its first eigenspace. Draw `d` uses seed `root + d`.
pub fn symbol_scan<T: Real>(
    cases: &[(PotentialSpec<T>, EigenspaceBasis<T>)],
    draws: usize,
    seed: u64,
) -> Result<SymbolScan> {
    if cases.is_empty() {
        return Err(Error::InvalidInput("symbol scan needs at least one case".into()));
    }
    let results: Vec<SymbolMatrix> = (0..draws)
        .into_par_iter()
        .map(|d| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(d as u64));
            let (spec, e) = &cases[rng.random_range(0..cases.len())];
            let pts = e.basis.domain().uniform_points(64);
            let x = &pts[rng.random_range(0..pts.len())];
            let xi: Vec<T> = (0..spec.dim())
                .map(|_| T::lit(rng.random::<f64>() * 2.0 - 1.0))
                .collect();
            // random orthonormal recombination of the eigenspace
            let m = e.dim();
            let a = DMatrix::from_fn(m, m, |_, _| rng.random::<f64>() - 0.5);
            let qr = a.qr().q();
            let fields: Vec<DVector<T>> = (0..m)
                .map(|i| {
                    (0..m).fold(DVector::zeros(e.basis.len()), |acc, j| {
                        acc + &e.vectors[j] * T::lit(qr[(j, i)])
                    })
                })
                .collect();
            ellipticity_symbol(spec, &e.basis, &fields, x, &xi)
        })
        .collect::<Result<_>>()?;
    Ok(SymbolScan {
        draws,
        seed,
        max_relative_determinant: results.iter().map(|r| r.relative_determinant).fold(0.0, f64::max),
        max_combination_residual: results.iter().map(|r| r.combination_residual).fold(0.0, f64::max),
    })
}

/// Records the weight used by a check for reporting.
pub fn weight_label(k: &WeightVector) -> String {
    format!("{:?}", k.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduced::{solve_first_eigen, SolverOptions};
    use crate::specs::builtin;

    fn interior_points(n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|i| vec![-0.95 + 1.9 * i as f64 / (n - 1) as f64]).collect()
    }

    #[test]
    fn oracle_values() {
        assert_eq!(legendre_oracle(0, 1).unwrap(), 2.0);
        assert_eq!(legendre_oracle(2, 2).unwrap(), 6.0);
        assert_eq!(legendre_oracle(-3, 3).unwrap(), 12.0);
        assert_eq!(legendre_oracle(2, 1), Err(Error::IndexBelowWeight { k: 2, index: 1 }));
        assert!(legendre_oracle(0, 0).is_err());
    }

    #[test]
    fn flux_identity_round_sphere() {
        let spec: PotentialSpec<f64> = builtin("round_interval").unwrap();
        for k in 0..=2i64 {
            let w = WeightVector::new(vec![k]);
            let e = solve_first_eigen(&spec, &w, &SolverOptions::new(16)).unwrap();
            let r = sphere_flux_identity_residual(&spec, &e.basis, &e.vectors[0], e.lambda1, k, &interior_points(41))
                .unwrap();
            assert!(r < 1e-8, "k={k}: {r}");
        }
    }

    #[test]
    fn flux_identity_constant_is_trivial() {
        let spec: PotentialSpec<f64> = builtin("round_interval").unwrap();
        let e = solve_first_eigen(&spec, &WeightVector::zero(1), &SolverOptions::new(4)).unwrap();
        let c = e.basis.constant_coefficients(1.0);
        let r = sphere_flux_identity_residual(&spec, &e.basis, &c, 0.0, 0, &interior_points(11)).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn expansion_identity_closed_form() {
        let spec: PotentialSpec<f64> = builtin("round_interval").unwrap();
        let e = solve_first_eigen(&spec, &WeightVector::zero(1), &SolverOptions::new(12)).unwrap();
        let pts = interior_points(21);
        let (l, r) = expansion_sides(&spec, &e.basis, &e.vectors[0], e.lambda1, &pts).unwrap();
        for ((x, a), b) in pts.iter().zip(&l).zip(&r) {
            let exact = 18.0 * x[0] * x[0] - 6.0;
            assert!((a - exact).abs() < 1e-8 && (b - exact).abs() < 1e-8);
        }
    }

    #[test]
    fn vertex_expansion_square_closed_form() {
        let spec: PotentialSpec<f64> = PotentialSpec::guillemin(
            std::sync::Arc::new(crate::polytope::Polytope::named("square").unwrap()),
            1.0,
        )
        .unwrap();
        let radii = log_radii(1e-3, 1e-1, 9);
        let r = vertex_expansion_check(&spec, &radii, &[1.0, 1.0]).unwrap();
        for (t, d) in radii.iter().zip(&r.deviations) {
            assert!((d - t * t).abs() < 1e-12);
        }
        assert!(r.exponent > 1.9);
    }

    #[test]
    fn vertex_expansion_requires_standard_vertex() {
        let spec: PotentialSpec<f64> = builtin("round_interval").unwrap();
        assert!(matches!(
            vertex_expansion_check(&spec, &[0.01], &[1.0]),
            Err(Error::VertexNotStandard { .. })
        ));
        let all = vertex_expansion_all(&spec, &log_radii(1e-3, 1e-1, 9)).unwrap();
        assert_eq!(all.len(), 2);
        assert!(all.iter().all(|r| r.exponent > 1.9));
    }

    #[test]
    fn symbol_one_dimensional_example() {
        let spec: PotentialSpec<f64> = builtin("round_interval").unwrap();
        let e = solve_first_eigen(&spec, &WeightVector::zero(1), &SolverOptions::new(8)).unwrap();
        let mut f = DVector::zeros(e.basis.len());
        f[1] = 1.0;
        let s = ellipticity_symbol(&spec, &e.basis, &[f.clone()], &[0.3], &[1.0]).unwrap();
        let g = 1.0 - 0.09;
        assert!((s.matrix[(0, 0)] - g).abs() < 1e-14);
        assert!((s.matrix[(0, 1)] + g * g).abs() < 1e-14);
        assert!((s.matrix[(1, 0)] - 2.0 * g * g).abs() < 1e-14);
        assert!(s.determinant.abs() < 1e-15);
        assert!(s.combination_residual < 1e-15);
        assert_eq!(
            ellipticity_symbol(&spec, &e.basis, &[f], &[0.3], &[0.0]).unwrap_err(),
            Error::ZeroCovector
        );
    }

    #[test]
    fn symbol_with_critical_point_has_zero_row() {
        let spec: PotentialSpec<f64> = builtin("round_interval").unwrap();
        let e = solve_first_eigen(&spec, &WeightVector::zero(1), &SolverOptions::new(8)).unwrap();
        let mut f = DVector::zeros(e.basis.len());
        f[2] = 1.0; // P_2 has a critical point at 0
        let s = ellipticity_symbol(&spec, &e.basis, &[f], &[0.0], &[1.0]).unwrap();
        assert_eq!(s.determinant, 0.0);
        assert_eq!(s.relative_determinant, 0.0);
    }
}
