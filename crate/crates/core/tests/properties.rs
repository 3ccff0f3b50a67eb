use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use toric_spectra::cli::{Command, RunConfig};
use toric_spectra::hull::project_spectraplex;
use toric_spectra::poly::Polynomial;
use toric_spectra::polytope::{standardize_at_vertex, Polytope, UnimodularMap};
use toric_spectra::potential::{boundary_flat_direction, Direction, PotentialSpec};
use toric_spectra::reduced::{rayleigh_quotient, solve_first_eigen, EigenspaceBasis, SolverOptions, WeightVector};
use toric_spectra::specs::builtin;
use toric_spectra::variation::{classify, derivative_post_ibp, derivative_quadform, DirectionClass};

fn eigen(name: &str, degree: usize) -> (PotentialSpec<f64>, EigenspaceBasis<f64>) {
    let s: PotentialSpec<f64> = builtin(name).unwrap();
    let e = solve_first_eigen(&s, &WeightVector::zero(s.dim()), &SolverOptions::new(degree)).unwrap();
    (s, e)
}

fn poly2(c: &[f64]) -> Polynomial<f64> {
    let exps = [[1, 0], [0, 1], [2, 0], [1, 1], [0, 2], [3, 1], [2, 2]];
    Polynomial::from_terms(2, exps.iter().zip(c).map(|(e, c)| (e.to_vec(), *c)))
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 7)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn variation_form_is_linear(a in coeffs(), b in coeffs(), s in -2.0..2.0f64, t in -2.0..2.0f64) {
        let (spec, e) = eigen("product_square", 6);
        let k = WeightVector::zero(2);
        let d1 = Direction::new("a", poly2(&a), false);
        let d2 = Direction::new("b", poly2(&b), false);
        let g1 = derivative_quadform(&spec, &e, &k, &d1).unwrap().matrix;
        let g2 = derivative_quadform(&spec, &e, &k, &d2).unwrap().matrix;
        let g = derivative_quadform(&spec, &e, &k, &d1.combine(s, &d2, t)).unwrap().matrix;
        prop_assert!((g - (g1 * s + g2 * t)).amax() < 1e-10);
    }

    #[test]
    fn one_sided_derivatives_are_ordered(a in coeffs()) {
        let (spec, e) = eigen("unit_square", 6);
        let d = Direction::new("a", poly2(&a), false);
        let (dm, dp) = derivative_quadform(&spec, &e, &WeightVector::zero(2), &d).unwrap().one_sided();
        prop_assert!(dm >= dp);
        prop_assert_eq!(classify(dm, dp, 1e-7) == DirectionClass::Critical, dm > 1e-7 && dp < -1e-7);
    }

    #[test]
    fn variation_form_ignores_eigenspace_parametrization(a in coeffs(), angle in 0.0..std::f64::consts::TAU) {
        let (spec, e) = eigen("product_square", 6);
        let k = WeightVector::zero(2);
        let d = Direction::new("a", poly2(&a), false);
        let mut rotated = e.clone();
        let (c, s) = (angle.cos(), angle.sin());
        rotated.vectors = vec![&e.vectors[0] * c + &e.vectors[1] * s, &e.vectors[1] * c - &e.vectors[0] * s];
        let mut x = derivative_quadform(&spec, &e, &k, &d).unwrap().eigenvalues();
        let mut y = derivative_quadform(&spec, &rotated, &k, &d).unwrap().eigenvalues();
        x.sort_by(f64::total_cmp);
        y.sort_by(f64::total_cmp);
        for (u, v) in x.iter().zip(&y) {
            prop_assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn pre_and_post_forms_agree_on_flat_directions(a in prop::collection::vec(-1.0..1.0f64, 3)) {
        let (spec, e) = eigen("round_interval", 12);
        let k = WeightVector::zero(1);
        let p = Polynomial::from_terms(1, [(vec![0], a[0]), (vec![1], a[1]), (vec![2], a[2])]);
        let d = boundary_flat_direction(spec.polytope(), &p, "flat");
        let pre = derivative_quadform(&spec, &e, &k, &d).unwrap().matrix;
        let post = derivative_post_ibp(&spec, &e, &k, &d).unwrap().matrix;
        prop_assert!((pre - post).amax() < 1e-6);
    }

    #[test]
    fn rayleigh_quotient_bounds_first_eigenvalue(c in prop::collection::vec(-1.0..1.0f64, 9)) {
        let (spec, e) = eigen("round_interval", 8);
        let f = DVector::from_vec(c);
        prop_assume!(f.rows(1, 8).norm() > 1e-3);
        let k = WeightVector::zero(1);
        let q = rayleigh_quotient(&spec, &f, &e.basis, &k, e.quadrature_nodes).unwrap();
        prop_assert!(q >= e.lambda1 * (1.0 - 1e-12));
    }

    #[test]
    fn hessian_inverse_is_an_inverse(u in 0.02..0.98f64, v in 0.02..0.98f64, c in -0.3..0.3f64) {
        let p = Arc::new(Polytope::named("simplex").unwrap());
        let x = [u * (1.0 - v * 0.999), v * (1.0 - u) * 0.999];
        let corr = Polynomial::from_terms(2, [(vec![2, 0], c), (vec![0, 2], c)]);
        let s = PotentialSpec::new(p, 0.5, corr).unwrap();
        prop_assume!(s.polytope().min_facet_value(&x) > 1e-6);
        if let Ok((h, g)) = s.hessian_and_inverse(&x) {
            let err = (&h * &g - DMatrix::identity(2, 2)).amax();
            prop_assert!(err < 1e-9 * h.amax().max(1.0));
        }
    }

    #[test]
    fn standardization_permutes_facet_values(u in 0.01..0.99f64, v in 0.01..0.99f64, vertex in 0usize..4) {
        let p: Polytope<f64> = Polytope::named("square").unwrap();
        let x = [u, v];
        let (image, map) = standardize_at_vertex(&p, vertex).unwrap();
        let mut a = p.facet_values(&x).unwrap();
        let mut b = image.facet_values(&map.apply(&x)).unwrap();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        for (s, t) in a.iter().zip(&b) {
            prop_assert!((s - t).abs() < 1e-12);
        }
        prop_assert!(image.is_standard_at_origin());
    }

    #[test]
    fn unimodular_maps_invert(shears in prop::collection::vec((0usize..2, -3i64..=3), 1..5), b in (-2.0..2.0f64, -2.0..2.0f64)) {
        let mut m = vec![vec![1i64, 0], vec![0, 1]];
        for (axis, s) in shears {
            let e = if axis == 0 { vec![vec![1, s], vec![0, 1]] } else { vec![vec![1, 0], vec![s, 1]] };
            m = (0..2).map(|i| (0..2).map(|j| (0..2).map(|l| m[i][l] * e[l][j]).sum()).collect()).collect();
        }
        let map = UnimodularMap::new(m, vec![b.0, b.1]).unwrap();
        let x = [0.3, -0.7];
        let y = map.inverse().apply(&map.apply(&x));
        prop_assert!((y[0] - x[0]).abs() < 1e-12 && (y[1] - x[1]).abs() < 1e-12);
    }

    #[test]
    fn spectraplex_projection_lands_in_the_set(a in prop::collection::vec(-3.0..3.0f64, 9)) {
        let w = DMatrix::from_row_slice(3, 3, &a);
        let p = project_spectraplex(&(&w + w.transpose()));
        prop_assert!((p.trace() - 1.0).abs() < 1e-12);
        prop_assert!(p.clone().symmetric_eigenvalues().iter().all(|v| *v > -1e-12));
        prop_assert!((project_spectraplex(&p) - &p).amax() < 1e-10);
    }

    #[test]
    fn polynomial_product_evaluates_pointwise(a in coeffs(), b in coeffs(), x in -1.0..1.0f64, y in -1.0..1.0f64) {
        let (p, q) = (poly2(&a), poly2(&b));
        let lhs = p.mul(&q).eval(&[x, y]);
        let rhs = p.eval(&[x, y]) * q.eval(&[x, y]);
        prop_assert!((lhs - rhs).abs() < 1e-12);
        let j = p.eval_jet(&[x, y], 2);
        prop_assert!((j.d1(0) - p.derivative(0).eval(&[x, y])).abs() < 1e-12);
        prop_assert!((j.d2(0, 1) - p.derivative(0).derivative(1).eval(&[x, y])).abs() < 1e-12);
    }

    #[test]
    fn config_echo_round_trips(degree in 2usize..20, beta in 0.1..2.0f64, k in -3i64..=3, tol in 1e-9..1e-3f64) {
        let text = serde_json::json!({
            "polytope": "interval",
            "potential": { "beta": beta, "correction": [{ "exponents": [2], "coefficient": 0.1 }] },
            "weight": { "k": [k] },
            "solver": { "degree": degree, "cluster_tol": tol },
            "hull": { "grid": 20 }
        })
        .to_string();
        let cfg = RunConfig::from_json(&text).unwrap().resolve(Command::Hull).unwrap();
        let again = RunConfig::from_json(&cfg.echo().to_string()).unwrap().resolve(Command::Hull).unwrap();
        prop_assert_eq!(cfg, again);
    }
}
