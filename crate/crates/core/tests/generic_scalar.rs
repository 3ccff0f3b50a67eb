//! The library is generic over the scalar type; `f32` runs the same pipeline
//! with correspondingly looser tolerances.

use toric_spectra::potential::{Direction, PotentialSpec};
use toric_spectra::poly::Polynomial;
use toric_spectra::reduced::{solve_first_eigen, SolverOptions, WeightVector};
use toric_spectra::specs::builtin;
use toric_spectra::variation::derivative_quadform;

#[test]
fn round_sphere_in_single_precision() {
    let s: PotentialSpec<f32> = builtin("round_interval").unwrap();
    let e = solve_first_eigen(&s, &WeightVector::zero(1), &SolverOptions::new(6)).unwrap();
    assert!((e.lambda1 - 2.0).abs() < 1e-3, "{}", e.lambda1);
    let ds = Direction::new("x^2", Polynomial::monomial(vec![2], 1.0f32), false);
    let g = derivative_quadform(&s, &e, &WeightVector::zero(1), &ds).unwrap();
    assert!((g.matrix[(0, 0)] + 3.2).abs() < 1e-2, "{}", g.matrix[(0, 0)]);
}

#[test]
fn precisions_agree_on_the_square() {
    let k = WeightVector::zero(2);
    let a: PotentialSpec<f32> = builtin("unit_square").unwrap();
    let b: PotentialSpec<f64> = builtin("unit_square").unwrap();
    let la = solve_first_eigen(&a, &k, &SolverOptions::new(4)).unwrap();
    let lb = solve_first_eigen(&b, &k, &SolverOptions::new(4)).unwrap();
    assert!((la.lambda1 as f64 - lb.lambda1).abs() < 1e-3 * lb.lambda1);
    assert_eq!(la.dim(), lb.dim());
}
