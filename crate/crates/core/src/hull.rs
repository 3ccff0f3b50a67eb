//! Does zero lie in the convex hull of the defect fields `Q(f)`, `f` in the
//! unit sphere of the first eigenspace?
//!
//! Since `Q` is quadratic in `f`, convex combinations of `Q(f_a)` are exactly
//! the fields `sum_bc W_bc Q(e_b, e_c)` with `W` positive semidefinite of unit
//! trace. We minimize the squared `L^2` norm of that field over the
//! spectraplex by accelerated projected gradient from several random starts.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::potential::PotentialSpec;
use crate::reduced::{EigenspaceBasis, WeightVector};
use crate::scalar::Real;
use crate::variation::{q_polarized_fields, Grid};

/// Relative residual below which zero is taken to lie in the hull.
pub const FEASIBILITY_TOL: f64 = 1e-6;

/// Polarized fields `Q(e_b, e_c)` sampled on a weighted grid.
#[derive(Clone, Debug)]
pub struct HullProblem {
    dim: usize,
    /// Inner products `<Q_bc, Q_de>` over ordered index pairs, `dim^2 x dim^2`.
    gram: DMatrix<f64>,
}

#[derive(Clone, Debug)]
pub struct HullOptions {
    pub restarts: usize,
    pub seed: u64,
    pub max_iterations: usize,
}

impl Default for HullOptions {
    fn default() -> Self {
        HullOptions {
            restarts: 8,
            seed: 0,
            max_iterations: 5000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HullReport {
    /// Minimal `L^2` norm of a combined field.
    pub residual: f64,
    /// Largest `L^2` norm of a single polarized field.
    pub field_scale: f64,
    pub feasible: bool,
    pub verdict: String,
    /// Minimizing `W`, PSD with unit trace.
    pub gram_weights: Vec<Vec<f64>>,
    /// Eigenvalues of `gram_weights`: the convex weights `alpha_a`.
    pub alphas: Vec<f64>,
    /// Best residual reached from each start, in seed order.
    pub restart_residuals: Vec<f64>,
}

impl HullProblem {
    /// `fields[p]` is `Q(e_b, e_c)` for the `p`-th pair `b <= c` in row-major
    /// upper-triangular order; `weights` are the grid integration weights.
    pub fn from_fields(dim: usize, fields: &[Vec<f64>], weights: &[f64]) -> Self {
        let pair = |b: usize, c: usize| {
            let (b, c) = if b <= c { (b, c) } else { (c, b) };
            b * dim - b * (b + 1) / 2 + c
        };
        let npairs = dim * (dim + 1) / 2;
        assert_eq!(fields.len(), npairs, "expected one field per pair b <= c");
        let mut inner = DMatrix::zeros(npairs, npairs);
        for p in 0..npairs {
            for q in p..npairs {
                let v: f64 = fields[p]
                    .iter()
                    .zip(&fields[q])
                    .zip(weights)
                    .map(|((a, b), w)| a * b * w)
                    .sum();
                inner[(p, q)] = v;
                inner[(q, p)] = v;
            }
        }
        let m2 = dim * dim;
        let gram = DMatrix::from_fn(m2, m2, |i, j| inner[(pair(i / dim, i % dim), pair(j / dim, j % dim))]);
        HullProblem { dim, gram }
    }

    /// Samples the polarized defect fields of the eigenspace on `grid`.
    pub fn from_eigenspace<T: Real>(
        spec: &PotentialSpec<T>,
        e: &EigenspaceBasis<T>,
        k: &WeightVector,
        grid: &Grid<T>,
    ) -> Result<Self> {
        grid.check_interior(spec.polytope())?;
        let fields = q_polarized_fields(spec, e, k, &grid.points)?;
        let fields: Vec<Vec<f64>> = fields
            .iter()
            .map(|f| f.iter().map(|v| v.as_f64()).collect())
            .collect();
        let weights: Vec<f64> = grid.weights.iter().map(|w| w.as_f64()).collect();
        Ok(Self::from_fields(e.dim(), &fields, &weights))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn vec(w: &DMatrix<f64>) -> nalgebra::DVector<f64> {
        // row-major flattening to match the ordered pair index b * dim + c
        nalgebra::DVector::from_iterator(w.len(), w.transpose().iter().copied())
    }

    /// Squared `L^2` norm of `sum_bc W_bc Q_bc`.
    pub fn objective(&self, w: &DMatrix<f64>) -> f64 {
        let v = Self::vec(w);
        v.dot(&(&self.gram * &v)).max(0.0)
    }

    fn gradient(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        let g = &self.gram * Self::vec(w) * 2.0;
        let m = self.dim;
        DMatrix::from_fn(m, m, |b, c| g[b * m + c])
    }

    pub fn field_scale(&self) -> f64 {
        let m = self.dim;
        (0..m * m)
            .map(|i| self.gram[(i, i)].max(0.0).sqrt())
            .fold(0.0, f64::max)
    }

    fn lipschitz(&self) -> f64 {
        let e = SymmetricEigen::new(self.gram.clone()).eigenvalues;
        2.0 * e.iter().copied().fold(0.0, f64::max)
    }

    /// FISTA from `start`; returns the final iterate and its objective.
    fn minimize_from(&self, start: DMatrix<f64>, lip: f64, max_iterations: usize) -> (DMatrix<f64>, f64) {
        if lip <= 0.0 {
            let f = self.objective(&start);
            return (start, f);
        }
        let step = 1.0 / lip;
        let mut x = start.clone();
        let mut y = start;
        let mut t = 1.0f64;
        let mut best = (x.clone(), self.objective(&x));
        for _ in 0..max_iterations {
            let next = project_spectraplex(&(&y - self.gradient(&y) * step));
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let delta = &next - &x;
            y = &next + &delta * ((t - 1.0) / t_next);
            x = next;
            t = t_next;
            let f = self.objective(&x);
            if f < best.1 {
                best = (x.clone(), f);
            }
            if delta.amax() < 1e-15 {
                break;
            }
        }
        best
    }

    pub fn solve(&self, opts: &HullOptions) -> HullReport {
        let m = self.dim;
        let lip = self.lipschitz();
        let restarts = opts.restarts.max(1);
        let runs: Vec<(DMatrix<f64>, f64)> = (0..restarts)
            .into_par_iter()
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(r as u64));
                let a = DMatrix::from_fn(m, m, |_, _| rng.random::<f64>() - 0.5);
                let w = &a * a.transpose() + DMatrix::identity(m, m) * 1e-3;
                let start = &w / w.trace();
                self.minimize_from(start, lip, opts.max_iterations)
            })
            .collect();
        let (best_w, best_f) = runs
            .iter()
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
            .cloned()
            .expect("at least one restart");
        let residual = best_f.sqrt();
        let scale = self.field_scale();
        let feasible = residual <= FEASIBILITY_TOL * scale.max(f64::MIN_POSITIVE);
        let mut alphas: Vec<f64> = SymmetricEigen::new(best_w.clone()).eigenvalues.iter().copied().collect();
        alphas.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        HullReport {
            residual,
            field_scale: scale,
            feasible,
            verdict: if feasible { "feasible" } else { "infeasible" }.to_string(),
            gram_weights: (0..m).map(|i| (0..m).map(|j| best_w[(i, j)]).collect()).collect(),
            alphas,
            restart_residuals: runs.iter().map(|r| r.1.sqrt()).collect(),
        }
    }
}

/// Projects a vector onto the probability simplex.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumulative += ui;
        let t = (cumulative - 1.0) / (i as f64 + 1.0);
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Frobenius projection onto `{W PSD, tr W = 1}`.
pub fn project_spectraplex(w: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (w + w.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mu = project_simplex(eig.eigenvalues.as_slice());
    let q = &eig.eigenvectors;
    let mut out = DMatrix::zeros(w.nrows(), w.ncols());
    for (k, &m) in mu.iter().enumerate() {
        if m > 0.0 {
            let col = q.column(k);
            out += col * col.transpose() * m;
        }
    }
    out
}

/// Convenience wrapper: sample the defect fields on `grid` and solve.
pub fn hull_feasibility<T: Real>(
    spec: &PotentialSpec<T>,
    e: &EigenspaceBasis<T>,
    k: &WeightVector,
    grid: &Grid<T>,
    opts: &HullOptions,
) -> Result<HullReport> {
    Ok(HullProblem::from_eigenspace(spec, e, k, grid)?.solve(opts))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_projection() {
        let p = project_simplex(&[0.5, 0.5]);
        assert_eq!(p, vec![0.5, 0.5]);
        let p = project_simplex(&[2.0, 0.0, -1.0]);
        assert_eq!(p, vec![1.0, 0.0, 0.0]);
        let p = project_simplex(&[0.2, 0.1]);
        assert!((p[0] - 0.55).abs() < 1e-15 && (p[1] - 0.45).abs() < 1e-15);
    }

    #[test]
    fn spectraplex_projection_is_psd_trace_one() {
        let w = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 2.0, -1.0, 0.5, 0.0, 0.5, 0.3]);
        let p = project_spectraplex(&w);
        assert!((p.trace() - 1.0).abs() < 1e-12);
        let e = SymmetricEigen::new(p.clone()).eigenvalues;
        assert!(e.iter().all(|v| *v > -1e-12));
        // idempotent
        assert!((project_spectraplex(&p) - &p).amax() < 1e-12);
    }

    #[test]
    fn antisymmetric_fixture_is_feasible() {
        let q: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin() + 0.2).collect();
        let neg: Vec<f64> = q.iter().map(|v| -v).collect();
        let zero = vec![0.0; 50];
        let weights = vec![0.04; 50];
        let problem = HullProblem::from_fields(2, &[q, zero, neg], &weights);
        let report = problem.solve(&HullOptions::default());
        assert!(report.residual <= 1e-8, "{}", report.residual);
        assert!(report.feasible);
        assert!((report.alphas.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_field_residual_is_its_norm() {
        let x: Vec<f64> = (0..100).map(|i| -1.0 + (i as f64 + 0.5) / 50.0).collect();
        let q: Vec<f64> = x.iter().map(|x| 1.0 + x).collect();
        let problem = HullProblem::from_fields(1, std::slice::from_ref(&q), &vec![0.02; 100]);
        let r = problem.solve(&HullOptions::default());
        let norm: f64 = q.iter().map(|v| v * v * 0.02).sum::<f64>().sqrt();
        assert!((r.residual - norm).abs() < 1e-12);
        assert!(!r.feasible);
        assert_eq!(r.gram_weights, vec![vec![1.0]]);
    }
}
