//! Acceptance criteria AC01..AC14. Every test prints one `PASS`/`FAIL` line
//! and asserts the same condition.

use nalgebra::DVector;
use toric_spectra::checks::{
    expansion_identity_residual, log_radii, sphere_flux_identity_residual, symbol_scan, vertex_expansion_all,
};
use toric_spectra::hull::{HullOptions, HullProblem};
use toric_spectra::poly::Polynomial;
use toric_spectra::polytope::{unimodular_pushforward, UnimodularMap};
use toric_spectra::potential::{boundary_flat_direction, Direction, PotentialSpec};
use toric_spectra::reduced::basis::build_basis;
use toric_spectra::reduced::{assemble_forms, solve_first_eigen, SolverOptions, WeightVector};
use toric_spectra::specs::{builtin, BUILTIN_SPECS};
use toric_spectra::variation::{
    ascent_flow, criticality_scan, default_dictionary, derivative_post_ibp, derivative_quadform, fd_lambda,
    q_field, FlowMode, FlowOptions, Grid, Verdict,
};

fn verdict(id: &str, ok: bool, detail: String) {
    println!("{id} {} {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{id}: {detail}");
}

fn spec(name: &str) -> PotentialSpec<f64> {
    builtin(name).unwrap()
}

fn k1(k: i64) -> WeightVector {
    WeightVector::new(vec![k])
}

fn x_squared() -> Direction<f64> {
    Direction::new("x^2", Polynomial::monomial(vec![2], 1.0), false)
}

#[test]
fn ac01_round_sphere_spectrum() {
    let s = spec("round_interval");
    let opts = SolverOptions::new(16);
    let mut worst = Vec::new();
    let mut ok = true;
    for k in 0..=3i64 {
        let lambda = solve_first_eigen(&s, &k1(k), &opts).unwrap().lambda1;
        let exact = if k == 0 { 2.0 } else { (k * (k + 1)) as f64 };
        let tol = match k {
            0 => 1e-7,
            k if k % 2 == 0 => 1e-6,
            _ => 1e-5,
        };
        let err = (lambda - exact).abs();
        ok &= err <= tol;
        worst.push(format!("k={k}: {lambda:.10} (err {err:.1e}, tol {tol:.0e})"));
    }
    verdict("AC01", ok, worst.join("; "));
}

#[test]
fn ac02_coefficient_one_guillemin() {
    let e = solve_first_eigen(&spec("guillemin_interval"), &k1(0), &SolverOptions::new(16)).unwrap();
    let err = (e.lambda1 - 1.0).abs();
    verdict("AC02", err <= 1e-7, format!("lambda1 = {:.12} (err {err:.1e})", e.lambda1));
}

#[test]
fn ac03_product_square_cluster() {
    let opts = SolverOptions::new(12);
    let e = solve_first_eigen(&spec("product_square"), &WeightVector::zero(2), &opts).unwrap();
    let err = (e.lambda1 - 2.0).abs();
    verdict(
        "AC03",
        err <= 1e-5 && e.dim() == 2 && opts.cluster_tol == 1e-6,
        format!("lambda1 = {:.10} (err {err:.1e}), cluster dim {}", e.lambda1, e.dim()),
    );
}

#[test]
fn ac04_variation_oracle() {
    let s = spec("round_interval");
    let opts = SolverOptions::new(16);
    let ds = x_squared();
    let e0 = solve_first_eigen(&s, &k1(0), &opts).unwrap();
    let g0 = derivative_quadform(&s, &e0, &k1(0), &ds).unwrap().matrix[(0, 0)];
    let fd = fd_lambda(&s, &k1(0), &ds, 1e-4, &opts).unwrap();
    let e1 = solve_first_eigen(&s, &k1(1), &opts).unwrap();
    let g1 = derivative_quadform(&s, &e1, &k1(1), &ds).unwrap().matrix[(0, 0)];
    let r0 = (g0 + 16.0 / 5.0).abs() / (16.0 / 5.0);
    let rfd = (fd - g0).abs() / g0.abs();
    let r1 = (g1 - 8.0 / 5.0).abs();
    verdict(
        "AC04",
        r0 <= 1e-5 && rfd <= 1e-5 && r1 <= 1e-4,
        format!("k=0: {g0:.9} (fd {fd:.9}, rel gap {rfd:.1e}); k=1: {g1:.9} (err {r1:.1e})"),
    );
}

#[test]
fn ac05_form_agreement() {
    let s = spec("round_interval");
    let k = k1(0);
    let e = solve_first_eigen(&s, &k, &SolverOptions::new(16)).unwrap();
    let ds = boundary_flat_direction(s.polytope(), &Polynomial::constant(1, 1.0), "flat[1]");
    let exact = 128.0 / 35.0;
    let pre = derivative_quadform(&s, &e, &k, &ds).unwrap().matrix[(0, 0)];
    let post = derivative_post_ibp(&s, &e, &k, &ds).unwrap().matrix[(0, 0)];
    let grid = Grid::gauss(e.basis.domain(), 64);
    let q = q_field(&s, &e.basis, &e.vectors[0], &k, &grid.points).unwrap();
    let paired: f64 = q
        .iter()
        .zip(&grid.points)
        .zip(&grid.weights)
        .map(|((q, x), w)| q * ds.poly.eval(x) * w)
        .sum();
    let errs = [(pre - exact).abs(), (post - exact).abs(), (paired - exact).abs()];
    verdict(
        "AC05",
        errs.iter().all(|e| *e <= 1e-6),
        format!("pre {pre:.10}, post {post:.10}, grid pairing {paired:.10}, exact {exact:.10}"),
    );
}

#[test]
fn ac06_non_criticality_witnesses() {
    let cases = [
        ("guillemin_interval", 0i64),
        ("round_interval", 0),
        ("product_square", 0),
        ("simplex_guillemin", 0),
        ("round_interval", 1),
        ("round_interval", 2),
    ];
    let mut ok = true;
    let mut lines = Vec::new();
    for (name, kk) in cases {
        let s = spec(name);
        let k = if s.dim() == 1 { k1(kk) } else { WeightVector::zero(2) };
        let e = solve_first_eigen(&s, &k, &SolverOptions::new(10)).unwrap();
        let r = criticality_scan(&s, &e, &k, &default_dictionary(s.polytope()), None).unwrap();
        ok &= r.verdict == Verdict::NotCritical && r.witness.is_some();
        lines.push(format!("{name} k={kk}: {:?} witness {:?}", r.verdict, r.witness));
    }
    verdict("AC06", ok, lines.join("; "));
}

#[test]
fn ac07_hull_infeasibility() {
    let s = spec("round_interval");
    let k = k1(0);
    let e = solve_first_eigen(&s, &k, &SolverOptions::new(12)).unwrap();
    let grid = Grid::gauss(e.basis.domain(), 64);
    let opts = HullOptions::default();
    let r = HullProblem::from_eigenspace(&s, &e, &k, &grid).unwrap().solve(&opts);
    let target = 57.6f64.sqrt();
    let rel = (r.residual - target).abs() / target;

    let q: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin() + 0.2).collect();
    let neg: Vec<f64> = q.iter().map(|v| -v).collect();
    let fixture = HullProblem::from_fields(2, &[q, vec![0.0; 50], neg], &[0.04; 50]).solve(&opts);
    verdict(
        "AC07",
        rel <= 0.02 && !r.feasible && fixture.residual <= 1e-8 && fixture.feasible,
        format!(
            "round residual {:.5} (target {target:.5}, rel {rel:.1e}, {}); fixture residual {:.1e} ({})",
            r.residual, r.verdict, fixture.residual, fixture.verdict
        ),
    );
}

#[test]
fn ac08_flux_identity() {
    let s = spec("round_interval");
    let nodes = SolverOptions::min_nodes(16);
    let points: Vec<Vec<f64>> = (0..41).map(|i| vec![-1.0 + (i as f64 + 0.5) / 20.5]).collect();
    let mut worst: f64 = 0.0;
    for kk in 0..=2i64 {
        let k = k1(kk);
        let basis = build_basis(s.polytope(), &k, 16).unwrap();
        let sp = assemble_forms(&s, &basis, &k, nodes).unwrap().solve().unwrap();
        let skip = usize::from(kk == 0);
        for j in skip..skip + 3 {
            let f: DVector<f64> = sp.vectors.column(j).into_owned();
            let r = sphere_flux_identity_residual(&s, &basis, &f, sp.eigenvalues[j], kk, &points).unwrap();
            worst = worst.max(r);
        }
    }
    verdict("AC08", worst <= 1e-6, format!("max residual {worst:.2e} over k = 0, 1, 2 and three eigenpairs"));
}

#[test]
fn ac09_expansion_identity() {
    let s = spec("round_interval");
    let e = solve_first_eigen(&s, &k1(0), &SolverOptions::new(16)).unwrap();
    let pts: Vec<Vec<f64>> = (0..41).map(|i| vec![-1.0 + (i as f64 + 0.5) / 20.5]).collect();
    let r1 = expansion_identity_residual(&s, &e.basis, &e.vectors[0], e.lambda1, &pts).unwrap();

    let sq = spec("product_square");
    let k = WeightVector::zero(2);
    let e2 = solve_first_eigen(&sq, &k, &SolverOptions::new(10)).unwrap();
    let pts2 = e2.basis.domain().uniform_points(21);
    let r2 = e2
        .vectors
        .iter()
        .map(|f| expansion_identity_residual(&sq, &e2.basis, f, e2.lambda1, &pts2).unwrap())
        .fold(0.0, f64::max);
    verdict(
        "AC09",
        r1 <= 1e-6 && r2 <= 1e-5,
        format!("interval {r1:.2e}, product square {r2:.2e}"),
    );
}

#[test]
fn ac10_vertex_asymptotics() {
    let radii = log_radii(1e-3, 1e-1, 9);
    let mut min_exp = f64::INFINITY;
    let mut count = 0;
    for name in BUILTIN_SPECS {
        for r in vertex_expansion_all(&spec(name), &radii).unwrap() {
            min_exp = min_exp.min(r.exponent);
            count += 1;
        }
    }
    verdict("AC10", min_exp >= 1.9, format!("min fitted exponent {min_exp:.4} over {count} vertices"));
}

#[test]
fn ac11_nowhere_elliptic() {
    let cases: Vec<_> = BUILTIN_SPECS
        .iter()
        .map(|n| {
            let s = spec(n);
            let e = solve_first_eigen(&s, &WeightVector::zero(s.dim()), &SolverOptions::new(8)).unwrap();
            (s, e)
        })
        .collect();
    let scan = symbol_scan(&cases, 1000, 7).unwrap();
    verdict(
        "AC11",
        scan.max_relative_determinant <= 1e-9 && scan.max_combination_residual <= 1e-12,
        format!(
            "{} draws: max relative det {:.1e}, max row-combination residual {:.1e}",
            scan.draws, scan.max_relative_determinant, scan.max_combination_residual
        ),
    );
}

#[test]
fn ac12_unimodular_invariance() {
    let s = spec("simplex_guillemin");
    let map = UnimodularMap::new(vec![vec![2, 1], vec![1, 1]], vec![0.5, -1.0]).unwrap();
    let image = unimodular_pushforward(s.polytope(), &s, &map).unwrap();
    let opts = SolverOptions::new(10);
    let a = solve_first_eigen(&s, &WeightVector::zero(2), &opts).unwrap().lambda1;
    let b = solve_first_eigen(&image, &WeightVector::zero(2), &opts).unwrap().lambda1;
    let rel = (a - b).abs() / a;
    verdict("AC12", rel <= 1e-8, format!("source {a:.12}, image {b:.12}, rel gap {rel:.1e}"));
}

#[test]
fn ac13_ascent_flow() {
    let s = spec("guillemin_interval");
    let flow = FlowOptions {
        steps: 50,
        step_size: 0.05,
        mode: FlowMode::Ascend,
        max_halvings: 8,
    };
    let result = ascent_flow(&s, &k1(0), &SolverOptions::new(12), &default_dictionary(s.polytope()), &flow);
    match result {
        Ok((trace, _)) => {
            let l: Vec<f64> = trace.steps.iter().map(|s| s.lambda1).collect();
            let increasing = l.windows(2).all(|w| w[1] > w[0]);
            let gain = l[l.len() - 1] / l[0] - 1.0;
            verdict(
                "AC13",
                trace.steps.len() == 51 && increasing && gain >= 0.10,
                format!("{} -> {} over {} steps (gain {:.1}%)", l[0], l[l.len() - 1], l.len() - 1, gain * 100.0),
            );
        }
        Err(e) => verdict("AC13", false, format!("flow failed: {e}")),
    }
}

#[test]
fn ac14_rayleigh_ritz_monotone() {
    let mut ok = true;
    let mut lines = Vec::new();
    for name in BUILTIN_SPECS {
        let s = spec(name);
        let k = WeightVector::zero(s.dim());
        let l: Vec<f64> = [4, 6, 8, 10, 12]
            .iter()
            .map(|&d| solve_first_eigen(&s, &k, &SolverOptions::new(d)).unwrap().lambda1)
            .collect();
        // equal values up to rounding count as nonincreasing
        let mono = l.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
        ok &= mono;
        lines.push(format!("{name}: {:.10} -> {:.10}", l[0], l[4]));
    }
    verdict("AC14", ok, lines.join("; "));
}
