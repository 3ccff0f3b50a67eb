//! First variation of the first eigenvalue under `s -> s + t ds`.
//!
//! For an `L^2`-normalized eigenfunction `f` the derivative is
//! `-int grad f^T G Hess(ds) G grad f + int f^2 k^T Hess(ds) k` with
//! `G = (Hess s)^{-1}`. When `ds` and its gradient vanish on the boundary,
//! two integrations by parts turn this into `int Q(f) ds` with
//! `Q(f) = -d_ij(V_i V_j) + k^T Hess(f^2) k`, `V = G grad f`.
//!
//! On a multiple eigenvalue the derivative becomes the quadratic form
//! `f -> d lambda(f, ds)` on the eigenspace; its extreme eigenvalues are the
//! one-sided derivatives of `lambda_1` along `ds`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::poly::{monomial_name, Polynomial};
use crate::polytope::Polytope;
use crate::potential::{boundary_flat_direction, Direction, PotentialSpec, SpotGrid};
use crate::reduced::assemble::check_compatible;
use crate::reduced::basis::Basis;
use crate::reduced::domain::Domain;
use crate::reduced::{solve_first_eigen, EigenspaceBasis, SolverOptions, WeightVector};
use crate::scalar::{to_f64_vec, Real};

/// Sample points with integration weights.
#[derive(Clone, Debug)]
pub struct Grid<T> {
    pub points: Vec<Vec<T>>,
    pub weights: Vec<T>,
}

impl<T: Real> Grid<T> {
    /// Gauss rule of the polytope's reference cell with `n` nodes per axis.
    pub fn gauss(domain: &Domain<T>, n: usize) -> Self {
        let rule = domain.quadrature(n);
        Grid {
            points: rule.points,
            weights: rule.weights,
        }
    }

    /// Cell-centred uniform points with equal weights summing to the volume.
    pub fn uniform(domain: &Domain<T>, n: usize) -> Self {
        let points = domain.uniform_points(n);
        let volume = domain.quadrature(2).weights.iter().fold(T::zero(), |a, w| a + *w);
        let w = volume / T::from_int(points.len() as i64);
        Grid {
            weights: vec![w; points.len()],
            points,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn check_interior(&self, p: &Polytope<T>) -> Result<()> {
        for x in &self.points {
            if !p.is_interior(x, T::lit(crate::potential::INTERIOR_TOL)) {
                return Err(Error::GridOutsideInterior {
                    point: to_f64_vec(x),
                });
            }
        }
        Ok(())
    }
}

/// The variation quadratic form over an orthonormal eigenspace basis.
#[derive(Clone, Debug)]
pub struct DerivQuadForm<T: Real> {
    pub direction: String,
    pub matrix: DMatrix<T>,
}

impl<T: Real> DerivQuadForm<T> {
    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<T> {
        let mut e: Vec<T> = SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        e
    }

    /// `(d_minus, d_plus)`: largest and smallest eigenvalue.
    pub fn one_sided(&self) -> (T, T) {
        let e = self.eigenvalues();
        (e[e.len() - 1], e[0])
    }
}

/// Eigenfunction values and `V_a = G grad f_a` at quadrature points.
struct EigenSamples<T> {
    weights: Vec<T>,
    points: Vec<Vec<T>>,
    values: Vec<Vec<T>>,
    fluxes: Vec<Vec<Vec<T>>>,
}

fn samples<T: Real>(spec: &PotentialSpec<T>, e: &EigenspaceBasis<T>, k: &WeightVector) -> Result<EigenSamples<T>> {
    check_compatible(spec, &e.basis, k)?;
    let n = spec.dim();
    let rule = e.basis.domain().quadrature(e.quadrature_nodes);
    let per_point: Vec<(Vec<T>, Vec<Vec<T>>)> = rule
        .points
        .par_iter()
        .map(|x| {
            let (_, g) = spec.hessian_and_inverse(x)?;
            let jets = e.basis.eval_jets(x, 1);
            let mut vals = Vec::with_capacity(e.dim());
            let mut flux = Vec::with_capacity(e.dim());
            for u in &e.vectors {
                let f = jets
                    .iter()
                    .zip(u.iter())
                    .fold(Jet::constant(n, 1, T::zero()), |acc, (p, &c)| acc + p.scale(c));
                vals.push(f.value());
                let grad = f.gradient();
                flux.push((0..n).map(|i| (0..n).fold(T::zero(), |a, j| a + g[(i, j)] * grad[j])).collect());
            }
            Ok((vals, flux))
        })
        .collect::<Result<_>>()?;
    let (values, fluxes) = per_point.into_iter().unzip();
    Ok(EigenSamples {
        weights: rule.weights,
        points: rule.points,
        values,
        fluxes,
    })
}

fn quadform_from_samples<T: Real>(s: &EigenSamples<T>, k: &WeightVector, ds: &Direction<T>) -> DerivQuadForm<T> {
    let m = s.values.first().map_or(0, |v| v.len());
    let n = k.dim();
    let kv: Vec<T> = k.as_slice().iter().map(|&v| T::from_int(v)).collect();
    let hp = ds.poly.hessian_polys();
    let mut g = DMatrix::zeros(m, m);
    for (q, x) in s.points.iter().enumerate() {
        let h = DMatrix::from_fn(n, n, |i, j| hp[i][j].eval(x));
        let mut khk = T::zero();
        for i in 0..n {
            for j in 0..n {
                khk += kv[i] * h[(i, j)] * kv[j];
            }
        }
        let w = s.weights[q];
        let hv: Vec<DVector<T>> = s.fluxes[q]
            .iter()
            .map(|v| &h * DVector::from_column_slice(v))
            .collect();
        for a in 0..m {
            for b in a..m {
                let va = DVector::from_column_slice(&s.fluxes[q][a]);
                let term = -va.dot(&hv[b]) + s.values[q][a] * s.values[q][b] * khk;
                g[(a, b)] += w * term;
            }
        }
    }
    for a in 0..m {
        for b in 0..a {
            g[(a, b)] = g[(b, a)];
        }
    }
    DerivQuadForm {
        direction: ds.id.clone(),
        matrix: g,
    }
}

/// Variation form before integration by parts; any polynomial `ds` works.
pub fn derivative_quadform<T: Real>(
    spec: &PotentialSpec<T>,
    e: &EigenspaceBasis<T>,
    k: &WeightVector,
    ds: &Direction<T>,
) -> Result<DerivQuadForm<T>> {
    check_direction(spec, ds)?;
    Ok(quadform_from_samples(&samples(spec, e, k)?, k, ds))
}

fn check_direction<T: Real>(spec: &PotentialSpec<T>, ds: &Direction<T>) -> Result<()> {
    if ds.poly.nvars() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: ds.poly.nvars(),
        });
    }
    Ok(())
}

/// Jets of `sum_i c_i phi_i` for several coefficient vectors at once.
fn field_jets<T: Real>(basis: &Basis<T>, coeffs: &[&DVector<T>], x: &[T], order: usize) -> Vec<Jet<T>> {
    let n = basis.polytope().dim();
    let phi = basis.eval_jets(x, order);
    coeffs
        .iter()
        .map(|u| {
            phi.iter()
                .zip(u.iter())
                .fold(Jet::constant(n, order, T::zero()), |acc, (p, &c)| acc + p.scale(c))
        })
        .collect()
}

/// `V = G grad f` as order-2 jets.
fn flux_jets<T: Real>(g: &[Vec<Jet<T>>], f: &Jet<T>) -> Vec<Jet<T>> {
    let n = g.len();
    let grad: Vec<Jet<T>> = (0..n).map(|i| f.derivative(i)).collect();
    (0..n)
        .map(|i| {
            (0..n).fold(Jet::constant(n, 2, T::zero()), |acc, j| acc + g[i][j] * grad[j])
        })
        .collect()
}

fn q_from_jets<T: Real>(g: &[Vec<Jet<T>>], fa: &Jet<T>, fb: &Jet<T>, k: &[T]) -> T {
    let n = g.len();
    let va = flux_jets(g, fa);
    let vb = flux_jets(g, fb);
    let prod = *fa * *fb;
    let mut q = T::zero();
    for i in 0..n {
        for j in 0..n {
            q -= (va[i] * vb[j]).d2(i, j);
            q += k[i] * k[j] * prod.d2(i, j);
        }
    }
    q
}

/// Polarized defect `Q(f_a, f_b)` at `x` for fields given by coefficients.
pub fn q_polarized<T: Real>(
    spec: &PotentialSpec<T>,
    basis: &Basis<T>,
    ca: &DVector<T>,
    cb: &DVector<T>,
    k: &WeightVector,
    x: &[T],
) -> Result<T> {
    let g = spec.inverse_hessian_jets(x, 2)?;
    let f = field_jets(basis, &[ca, cb], x, 3);
    let kv: Vec<T> = k.as_slice().iter().map(|&v| T::from_int(v)).collect();
    Ok(q_from_jets(&g, &f[0], &f[1], &kv))
}

/// Samples `Q(f) = -d_ij(V_i V_j) + k^T Hess(f^2) k` on `points`.
pub fn q_field<T: Real>(
    spec: &PotentialSpec<T>,
    basis: &Basis<T>,
    f: &DVector<T>,
    k: &WeightVector,
    points: &[Vec<T>],
) -> Result<Vec<T>> {
    check_compatible(spec, basis, k)?;
    points
        .par_iter()
        .map(|x| {
            if !spec.polytope().is_interior(x, T::lit(crate::potential::INTERIOR_TOL)) {
                return Err(Error::GridOutsideInterior {
                    point: to_f64_vec(x),
                });
            }
            q_polarized(spec, basis, f, f, k, x)
        })
        .collect()
}

/// All polarized fields `Q(f_b, f_c)`, `b <= c`, over the eigenspace on `points`,
/// listed in the order `(0,0), (0,1), .., (0,m-1), (1,1), ..`.
pub fn q_polarized_fields<T: Real>(
    spec: &PotentialSpec<T>,
    e: &EigenspaceBasis<T>,
    k: &WeightVector,
    points: &[Vec<T>],
) -> Result<Vec<Vec<T>>> {
    check_compatible(spec, &e.basis, k)?;
    let m = e.dim();
    let kv: Vec<T> = k.as_slice().iter().map(|&v| T::from_int(v)).collect();
    let coeffs: Vec<&DVector<T>> = e.vectors.iter().collect();
    let per_point: Vec<Vec<T>> = points
        .par_iter()
        .map(|x| {
            if !spec.polytope().is_interior(x, T::lit(crate::potential::INTERIOR_TOL)) {
                return Err(Error::GridOutsideInterior {
                    point: to_f64_vec(x),
                });
            }
            let g = spec.inverse_hessian_jets(x, 2)?;
            let f = field_jets(&e.basis, &coeffs, x, 3);
            let mut out = Vec::with_capacity(m * (m + 1) / 2);
            for b in 0..m {
                for c in b..m {
                    out.push(q_from_jets(&g, &f[b], &f[c], &kv));
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let count = m * (m + 1) / 2;
    Ok((0..count)
        .map(|p| per_point.iter().map(|v| v[p]).collect())
        .collect())
}

/// Variation form after integration by parts, `int Q(f_a, f_b) ds`.
pub fn derivative_post_ibp<T: Real>(
    spec: &PotentialSpec<T>,
    e: &EigenspaceBasis<T>,
    k: &WeightVector,
    ds: &Direction<T>,
) -> Result<DerivQuadForm<T>> {
    if !ds.boundary_flat {
        return Err(Error::DirectionNotBoundaryFlat(ds.id.clone()));
    }
    check_direction(spec, ds)?;
    let m = e.dim();
    let rule = e.basis.domain().quadrature(e.quadrature_nodes);
    let fields = q_polarized_fields(spec, e, k, &rule.points)?;
    let mut g = DMatrix::zeros(m, m);
    let mut p = 0;
    for b in 0..m {
        for c in b..m {
            let v = rule
                .points
                .iter()
                .zip(&rule.weights)
                .zip(&fields[p])
                .fold(T::zero(), |acc, ((x, w), q)| acc + *w * *q * ds.poly.eval(x));
            g[(b, c)] = v;
            g[(c, b)] = v;
            p += 1;
        }
    }
    Ok(DerivQuadForm {
        direction: ds.id.clone(),
        matrix: g,
    })
}

fn check_perturbed<T: Real>(spec: &PotentialSpec<T>, ds: &Direction<T>, t: T, sign: char) -> Result<PotentialSpec<T>> {
    let s = if sign == '+' { t } else { -t };
    let p = spec
        .perturbed(ds, s)
        .map_err(|e| Error::PerturbedSpecInvalid { sign, reason: e.to_string() })?;
    p.ensure_spot().map_err(|e| Error::PerturbedSpecInvalid {
        sign,
        reason: e.to_string(),
    })?;
    Ok(p)
}

/// Central difference `(lambda_1(s + t ds) - lambda_1(s - t ds)) / 2t`.
pub fn fd_lambda<T: Real>(
    spec: &PotentialSpec<T>,
    k: &WeightVector,
    ds: &Direction<T>,
    t: T,
    opts: &SolverOptions,
) -> Result<T> {
    check_direction(spec, ds)?;
    if ds.poly.is_zero() {
        return Ok(T::zero());
    }
    let plus = check_perturbed(spec, ds, t, '+')?;
    let minus = check_perturbed(spec, ds, t, '-')?;
    let lp = solve_first_eigen(&plus, k, opts)?.lambda1;
    let lm = solve_first_eigen(&minus, k, opts)?.lambda1;
    Ok((lp - lm) / (t + t))
}

/// Finite-difference estimates at `t` and `t / 2` with their Richardson
/// extrapolation `(4 d(t/2) - d(t)) / 3`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FdEstimate {
    pub step: f64,
    pub at_step: f64,
    pub at_half_step: f64,
    pub extrapolated: f64,
}

pub fn fd_lambda_richardson<T: Real>(
    spec: &PotentialSpec<T>,
    k: &WeightVector,
    ds: &Direction<T>,
    t: T,
    opts: &SolverOptions,
) -> Result<FdEstimate> {
    let a = fd_lambda(spec, k, ds, t, opts)?.as_f64();
    let b = fd_lambda(spec, k, ds, t * T::lit(0.5), opts)?.as_f64();
    Ok(FdEstimate {
        step: t.as_f64(),
        at_step: a,
        at_half_step: b,
        extrapolated: (4.0 * b - a) / 3.0,
    })
}

/// Default finite-difference step `1e-4 * (1 + max |coefficient of v|)`.
pub fn default_fd_step<T: Real>(spec: &PotentialSpec<T>) -> T {
    T::lit(1e-4) * (T::one() + spec.correction().max_coefficient())
}

/// `(d_minus, d_plus)`: the largest and smallest eigenvalue of the variation form.
pub fn one_sided_derivatives<T: Real>(
    spec: &PotentialSpec<T>,
    e: &EigenspaceBasis<T>,
    k: &WeightVector,
    ds: &Direction<T>,
) -> Result<(T, T)> {
    Ok(derivative_quadform(spec, e, k, ds)?.one_sided())
}

/// Monomials of degree 1..=4 followed by their boundary-flat versions
/// `(prod l_k)^2 x^a` for degree 0..=4.
pub fn default_dictionary<T: Real>(p: &Polytope<T>) -> Vec<Direction<T>> {
    let n = p.dim();
    let exps = |lo: u32, hi: u32| {
        let mut out: Vec<Vec<u32>> = Vec::new();
        for d in lo..=hi {
            if n == 1 {
                out.push(vec![d]);
            } else {
                for i in (0..=d).rev() {
                    out.push(vec![i, d - i]);
                }
            }
        }
        out
    };
    let mut dict = Vec::new();
    for e in exps(1, 4) {
        let name = monomial_name(&e);
        dict.push(Direction::new(name, Polynomial::monomial(e, T::one()), false));
    }
    for e in exps(0, 4) {
        let name = format!("flat[{}]", monomial_name(&e));
        dict.push(boundary_flat_direction(p, &Polynomial::monomial(e, T::one()), &name));
    }
    dict
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionClass {
    /// `d_plus > tol` or `d_minus < -tol`: every branch moves the same way.
    Witness,
    /// `d_minus > tol > -tol > d_plus`: consistent with a critical point.
    Critical,
    /// Some one-sided derivative is within tolerance of zero.
    Boundary,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirectionRecord {
    pub id: String,
    pub d_minus: f64,
    pub d_plus: f64,
    pub class: DirectionClass,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    NotCritical,
    CriticalCandidate,
    Unresolved,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalityReport {
    pub lambda1: f64,
    pub cluster_dim: usize,
    pub tolerance: f64,
    pub records: Vec<DirectionRecord>,
    pub verdict: Verdict,
    pub witness: Option<String>,
}

pub fn classify(d_minus: f64, d_plus: f64, tol: f64) -> DirectionClass {
    if d_plus > tol || d_minus < -tol {
        DirectionClass::Witness
    } else if d_minus > tol && d_plus < -tol {
        DirectionClass::Critical
    } else {
        DirectionClass::Boundary
    }
}

/// Scans a dictionary of directions for a one-sided witness of non-criticality.
pub fn criticality_scan<T: Real>(
    spec: &PotentialSpec<T>,
    e: &EigenspaceBasis<T>,
    k: &WeightVector,
    directions: &[Direction<T>],
    tolerance: Option<f64>,
) -> Result<CriticalityReport> {
    if directions.is_empty() {
        return Err(Error::EmptyDictionary);
    }
    for d in directions {
        check_direction(spec, d)?;
    }
    let lambda1 = e.lambda1.as_f64();
    let tol = tolerance.unwrap_or(1e-7 * lambda1.abs().max(1.0));
    let s = samples(spec, e, k)?;
    let records: Vec<DirectionRecord> = directions
        .par_iter()
        .map(|d| {
            let (dm, dp) = quadform_from_samples(&s, k, d).one_sided();
            let (dm, dp) = (dm.as_f64(), dp.as_f64());
            DirectionRecord {
                id: d.id.clone(),
                d_minus: dm,
                d_plus: dp,
                class: classify(dm, dp, tol),
            }
        })
        .collect();
    let witness = records
        .iter()
        .find(|r| r.class == DirectionClass::Witness)
        .map(|r| r.id.clone());
    let verdict = if witness.is_some() {
        Verdict::NotCritical
    } else if records.iter().all(|r| r.class == DirectionClass::Critical) {
        Verdict::CriticalCandidate
    } else {
        Verdict::Unresolved
    };
    Ok(CriticalityReport {
        lambda1,
        cluster_dim: e.dim(),
        tolerance: tol,
        records,
        verdict,
        witness,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowMode {
    Ascend,
    Descend,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowOptions {
    pub steps: usize,
    pub step_size: f64,
    pub mode: FlowMode,
    /// Halvings of the step before giving up.
    pub max_halvings: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowStep {
    pub step: usize,
    /// Correction polynomial `v` as `(exponents, coefficient)` pairs.
    pub correction: Vec<(Vec<u32>, f64)>,
    pub lambda1: f64,
    pub direction: Option<String>,
    pub step_size: f64,
    /// Guaranteed one-sided rate along the chosen signed direction.
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowTrace {
    pub mode: FlowMode,
    pub steps: Vec<FlowStep>,
}

fn correction_terms<T: Real>(spec: &PotentialSpec<T>) -> Vec<(Vec<u32>, f64)> {
    spec.correction()
        .terms()
        .map(|(e, c)| (e.clone(), c.as_f64()))
        .collect()
}

/// Rescales each direction so `max |Hess ds|_F` over the interior grid is one.
fn normalized<T: Real>(p: &Polytope<T>, dirs: &[Direction<T>]) -> Vec<Direction<T>> {
    let grid = SpotGrid::standard(p, 17, 0);
    dirs.iter()
        .filter_map(|d| {
            let h = d.poly.hessian_polys();
            let scale = grid.interior.iter().fold(T::zero(), |m, x| {
                let f = h
                    .iter()
                    .flatten()
                    .fold(T::zero(), |a, q| a + q.eval(x).powi(2))
                    .sqrt();
                if f > m {
                    f
                } else {
                    m
                }
            });
            (scale > T::zero()).then(|| Direction::new(d.id.clone(), d.poly.scale(T::one() / scale), d.boundary_flat))
        })
        .collect()
}

/// Greedy nonsmooth ascent (or descent) of `lambda_1` over the dictionary.
///
/// Each step takes the signed direction with the best guaranteed one-sided
/// rate and halves the step until the new potential is in Spot(P) and the
/// eigenvalue moved strictly the right way.
pub fn ascent_flow<T: Real>(
    spec0: &PotentialSpec<T>,
    k: &WeightVector,
    solver: &SolverOptions,
    dictionary: &[Direction<T>],
    flow: &FlowOptions,
) -> Result<(FlowTrace, PotentialSpec<T>)> {
    if dictionary.is_empty() {
        return Err(Error::EmptyDictionary);
    }
    spec0.ensure_spot()?;
    let dirs = normalized(spec0.polytope(), dictionary);
    let mut spec = spec0.clone();
    let mut e = solve_first_eigen(&spec, k, solver)?;
    let mut steps = vec![FlowStep {
        step: 0,
        correction: correction_terms(&spec),
        lambda1: e.lambda1.as_f64(),
        direction: None,
        step_size: 0.0,
        rate: 0.0,
    }];
    let ascend = flow.mode == FlowMode::Ascend;
    for step in 1..=flow.steps {
        let lambda = e.lambda1;
        let tol = T::lit(1e-7) * lambda.abs().max(T::one());
        let s = samples(&spec, &e, k)?;
        // (rate, sign, index)
        let mut candidates: Vec<(T, T, usize)> = Vec::with_capacity(2 * dirs.len());
        for (i, d) in dirs.iter().enumerate() {
            let (dm, dp) = quadform_from_samples(&s, k, d).one_sided();
            let options = if ascend {
                [(dp, T::one()), (-dm, -T::one())]
            } else {
                [(-dm, T::one()), (dp, -T::one())]
            };
            candidates.extend(options.into_iter().map(|(rate, sign)| (rate, sign, i)));
        }
        // best rate first; ties keep dictionary order
        candidates.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
        let top = candidates.first().map_or(T::zero(), |c| c.0);
        if top <= tol {
            return Err(Error::Stalled {
                step,
                reason: format!(
                    "no direction with a guaranteed rate above {:e} (best {:e})",
                    tol.as_f64(),
                    top.as_f64()
                ),
            });
        }
        // backtrack along the best direction, falling back to the next ones
        // when the admissible region blocks it
        let mut accepted = None;
        'search: for &(rate, sign, idx) in candidates.iter().take_while(|c| c.0 > tol) {
            let mut eta = T::lit(flow.step_size);
            for _ in 0..=flow.max_halvings {
                let trial = spec.perturbed(&dirs[idx], sign * eta)?;
                if trial.ensure_spot().is_ok() {
                    if let Ok(te) = solve_first_eigen(&trial, k, solver) {
                        let better = if ascend { te.lambda1 > lambda } else { te.lambda1 < lambda };
                        if better {
                            accepted = Some((trial, te, rate, sign, idx, eta));
                            break 'search;
                        }
                    }
                }
                eta *= T::lit(0.5);
            }
        }
        let Some((next, ne, rate, sign, idx, eta)) = accepted else {
            return Err(Error::Stalled {
                step,
                reason: "backtracking found no admissible improving step along any direction".into(),
            });
        };
        spec = next;
        e = ne;
        let label = if sign > T::zero() {
            dirs[idx].id.clone()
        } else {
            format!("-{}", dirs[idx].id)
        };
        steps.push(FlowStep {
            step,
            correction: correction_terms(&spec),
            lambda1: e.lambda1.as_f64(),
            direction: Some(label),
            step_size: eta.as_f64(),
            rate: rate.as_f64(),
        });
    }
    Ok((
        FlowTrace {
            mode: flow.mode,
            steps,
        },
        spec,
    ))
}
