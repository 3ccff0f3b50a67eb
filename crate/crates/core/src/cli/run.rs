//! Command dispatch.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;
use serde_json::json;

use crate::checks::{
    expansion_identity_residual, legendre_oracle, log_radii, sphere_flux_identity_residual, symbol_scan,
    vertex_expansion_all,
};
use crate::hull::{HullOptions, HullProblem, HullReport};
use crate::potential::{Direction, PotentialSpec, SpotGrid};
use crate::reduced::basis::build_basis;
use crate::reduced::eigen::extract_cluster;
use crate::reduced::{assemble_forms, solve_first_eigen, EigenspaceBasis, WeightVector};
use crate::specs::builtin;
use crate::variation::{
    ascent_flow, criticality_scan, default_dictionary, default_fd_step, derivative_post_ibp,
    derivative_quadform, fd_lambda_richardson, q_polarized_fields, CriticalityReport, FdEstimate, FlowTrace,
    Grid,
};

use super::config::{direction, CheckKind, RunConfig};
use super::emit::FieldDump;
use super::{CliError, Command};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpotSummary {
    pub interior_points: usize,
    pub facet_points: usize,
    pub min_interior_eigenvalue: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumResult {
    pub lambda1: f64,
    pub cluster_dim: usize,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub zero_modes: Vec<f64>,
    pub basis_size: usize,
    pub quadrature_nodes: usize,
    pub spot: SpotSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PostIbp {
    pub d_minus: f64,
    pub d_plus: f64,
    /// Largest entrywise gap to the pre-integration-by-parts form.
    pub max_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DerivativeRecord {
    pub id: String,
    pub boundary_flat: bool,
    pub matrix: Vec<Vec<f64>>,
    pub d_minus: f64,
    pub d_plus: f64,
    pub post_ibp: Option<PostIbp>,
    pub fd: Option<FdEstimate>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DerivativeResult {
    pub lambda1: f64,
    pub cluster_dim: usize,
    pub records: Vec<DerivativeRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HullResult {
    pub lambda1: f64,
    pub cluster_dim: usize,
    pub grid_points: usize,
    pub report: HullReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowResult {
    pub initial_lambda1: f64,
    pub final_lambda1: f64,
    /// `final / initial - 1`.
    pub relative_gain: f64,
    pub trace: FlowTrace,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRecord {
    pub check: String,
    pub parameters: serde_json::Value,
    pub residual: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Results {
    Spectrum(SpectrumResult),
    Derivative(DerivativeResult),
    Critical(CriticalityReport),
    Hull(HullResult),
    Flow(FlowResult),
    Check(Vec<CheckRecord>),
}

/// Everything written to `report.json`; contains no timing data, so it is
/// reproducible for a fixed config and thread count.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub command: Command,
    pub config: RunConfig,
    pub results: Results,
    pub versions: BTreeMap<String, String>,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: RunReport,
    pub dumps: Vec<FieldDump>,
}

fn versions() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("toric-spectra".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("report-format".to_string(), "1".to_string()),
    ])
}

fn matrix_rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn dump_points(e: &EigenspaceBasis<f64>, per_axis: usize) -> Vec<Vec<f64>> {
    e.basis.domain().uniform_points(per_axis)
}

fn eigenfunction_dumps(e: &EigenspaceBasis<f64>, per_axis: usize) -> Vec<FieldDump> {
    let points = dump_points(e, per_axis);
    (0..e.dim())
        .map(|a| FieldDump {
            name: format!("eigenfunction_{a}"),
            values: points.iter().map(|x| e.eval(a, x)).collect(),
            points: points.clone(),
        })
        .collect()
}

fn q_dumps(
    spec: &PotentialSpec<f64>,
    e: &EigenspaceBasis<f64>,
    k: &WeightVector,
    per_axis: usize,
) -> Result<Vec<FieldDump>, CliError> {
    let points = dump_points(e, per_axis);
    let fields = q_polarized_fields(spec, e, k, &points)?;
    let m = e.dim();
    let mut out = Vec::with_capacity(fields.len());
    let mut it = fields.into_iter();
    for b in 0..m {
        for c in b..m {
            out.push(FieldDump {
                name: format!("q_field_{b}_{c}"),
                points: points.clone(),
                values: it.next().expect("one field per pair"),
            });
        }
    }
    Ok(out)
}

fn spot_checked(cfg: &RunConfig) -> Result<(PotentialSpec<f64>, SpotSummary), CliError> {
    let spec = cfg.build_spec()?;
    let grid = SpotGrid::standard(spec.polytope(), cfg.spot.per_axis, cfg.spot.per_facet);
    let report = spec.validate_spot(&grid);
    if let Some(f) = &report.first_failure {
        return Err(crate::Error::SpotViolation(f.describe()).into());
    }
    Ok((
        spec,
        SpotSummary {
            interior_points: report.interior_points,
            facet_points: report.facet_points,
            min_interior_eigenvalue: report.min_interior_eigenvalue,
        },
    ))
}

fn dictionary(cfg: &RunConfig, spec: &PotentialSpec<f64>) -> Result<Vec<Direction<f64>>, CliError> {
    let p = spec.polytope();
    match cfg.directions.as_ref().and_then(|d| d.dictionary.as_ref()) {
        None => Ok(default_dictionary(p)),
        Some(list) => list
            .iter()
            .enumerate()
            .map(|(i, d)| direction(p, d, &format!("directions.dictionary[{i}]")))
            .collect(),
    }
}

/// Runs `command` without touching the file system.
pub fn run_command(cfg: &RunConfig, command: Command) -> Result<RunOutput, CliError> {
    let (spec, spot) = spot_checked(cfg)?;
    let k = cfg.weight();
    let solver = cfg.solver_options();
    let per_axis = cfg.output.grid;
    let mut dumps = Vec::new();

    let results = match command {
        Command::Spectrum => {
            let e = solve_first_eigen(&spec, &k, &solver)?;
            if cfg.output.eigenfunctions {
                dumps.extend(eigenfunction_dumps(&e, per_axis));
            }
            Results::Spectrum(SpectrumResult {
                lambda1: e.lambda1,
                cluster_dim: e.dim(),
                eigenvalues: e.spectrum.clone(),
                residuals: e.spectrum_residuals.clone(),
                zero_modes: e.zero_modes.clone(),
                basis_size: e.basis.len(),
                quadrature_nodes: e.quadrature_nodes,
                spot,
            })
        }
        Command::Derivative => {
            let block = cfg.derivative.as_ref().expect("resolved config");
            let e = solve_first_eigen(&spec, &k, &solver)?;
            if cfg.output.eigenfunctions {
                dumps.extend(eigenfunction_dumps(&e, per_axis));
            }
            let mut records = Vec::with_capacity(block.directions.len());
            for (i, d) in block.directions.iter().enumerate() {
                let ds = direction(spec.polytope(), d, &format!("derivative.directions[{i}]"))?;
                let pre = derivative_quadform(&spec, &e, &k, &ds)?;
                let (d_minus, d_plus) = pre.one_sided();
                let post_ibp = if ds.boundary_flat {
                    let post = derivative_post_ibp(&spec, &e, &k, &ds)?;
                    let (pm, pp) = post.one_sided();
                    Some(PostIbp {
                        d_minus: pm,
                        d_plus: pp,
                        max_gap: (&post.matrix - &pre.matrix).amax(),
                    })
                } else {
                    None
                };
                let fd = if block.fd_check && e.dim() == 1 {
                    let t = block.fd_step.unwrap_or_else(|| default_fd_step(&spec));
                    Some(fd_lambda_richardson(&spec, &k, &ds, t, &solver)?)
                } else {
                    None
                };
                records.push(DerivativeRecord {
                    id: ds.id.clone(),
                    boundary_flat: ds.boundary_flat,
                    matrix: matrix_rows(&pre.matrix),
                    d_minus,
                    d_plus,
                    post_ibp,
                    fd,
                });
            }
            Results::Derivative(DerivativeResult {
                lambda1: e.lambda1,
                cluster_dim: e.dim(),
                records,
            })
        }
        Command::Critical => {
            let e = solve_first_eigen(&spec, &k, &solver)?;
            let dirs = dictionary(cfg, &spec)?;
            let tol = cfg.directions.as_ref().and_then(|d| d.tolerance);
            let report = criticality_scan(&spec, &e, &k, &dirs, tol)?;
            if cfg.output.q_fields {
                dumps.extend(q_dumps(&spec, &e, &k, per_axis)?);
            }
            Results::Critical(report)
        }
        Command::Hull => {
            let h = cfg.hull.as_ref().expect("resolved config");
            let e = solve_first_eigen(&spec, &k, &solver)?;
            let grid = Grid::gauss(e.basis.domain(), h.grid);
            let problem = HullProblem::from_eigenspace(&spec, &e, &k, &grid)?;
            let report = problem.solve(&HullOptions {
                restarts: h.restarts,
                seed: h.seed.unwrap_or(cfg.seed),
                max_iterations: h.max_iterations,
            });
            if cfg.output.q_fields {
                dumps.extend(q_dumps(&spec, &e, &k, per_axis)?);
            }
            Results::Hull(HullResult {
                lambda1: e.lambda1,
                cluster_dim: e.dim(),
                grid_points: grid.len(),
                report,
            })
        }
        Command::Flow => {
            let flow = cfg.flow_options().expect("resolved config");
            let dirs = dictionary(cfg, &spec)?;
            let (trace, end) = ascent_flow(&spec, &k, &solver, &dirs, &flow)?;
            let initial = trace.steps.first().map(|s| s.lambda1).unwrap_or(f64::NAN);
            let last = trace.steps.last().map(|s| s.lambda1).unwrap_or(f64::NAN);
            if cfg.output.eigenfunctions {
                let e = solve_first_eigen(&end, &k, &solver)?;
                dumps.extend(eigenfunction_dumps(&e, per_axis));
            }
            Results::Flow(FlowResult {
                initial_lambda1: initial,
                final_lambda1: last,
                relative_gain: last / initial - 1.0,
                trace,
            })
        }
        Command::Check => Results::Check(run_checks(cfg, &spec, &k)?),
    };

    Ok(RunOutput {
        report: RunReport {
            command,
            config: cfg.clone(),
            results,
            versions: versions(),
        },
        dumps,
    })
}

/// Passing thresholds of the structural checks.
pub const FLUX_TOL: f64 = 1e-6;
pub const EXPANSION_TOL_1D: f64 = 1e-6;
pub const EXPANSION_TOL_2D: f64 = 1e-5;
pub const VERTEX_MIN_EXPONENT: f64 = 1.9;
pub const SYMBOL_DET_TOL: f64 = 1e-9;
pub const SYMBOL_COMBINATION_TOL: f64 = 1e-12;

fn legendre_tol(k: i64) -> f64 {
    if k == 0 {
        1e-7
    } else if k % 2 == 0 {
        1e-6
    } else {
        1e-5
    }
}

fn run_checks(cfg: &RunConfig, spec: &PotentialSpec<f64>, k: &WeightVector) -> Result<Vec<CheckRecord>, CliError> {
    let block = cfg.checks.as_ref().expect("resolved config");
    let solver = cfg.solver_options();
    let nodes = solver.nodes();
    let mut out = Vec::new();
    for kind in &block.list {
        match kind {
            CheckKind::Legendre => {
                if spec.dim() != 1 {
                    return Err(CliError::Invalid("the Legendre oracle needs an interval".into()));
                }
                let kk = k.as_slice()[0];
                let e = solve_first_eigen(spec, k, &solver)?;
                let index = kk.abs().max(1);
                let oracle = legendre_oracle(kk, index)?;
                let residual = (e.lambda1 - oracle).abs() / oracle;
                out.push(CheckRecord {
                    check: "legendre".into(),
                    parameters: json!({ "k": kk, "index": index, "oracle": oracle, "lambda1": e.lambda1 }),
                    residual,
                    pass: residual <= legendre_tol(kk),
                });
            }
            CheckKind::Flux => {
                let basis = Arc::new(build_basis(spec.polytope(), k, solver.degree)?);
                let s = assemble_forms(spec, &basis, k, nodes)?.solve()?;
                let first = extract_cluster(basis.clone(), k, &s, solver.cluster_tol, nodes)?
                    .zero_modes
                    .len();
                let points = basis.domain().uniform_points(cfg.output.grid);
                let kk = k.as_slice()[0];
                for j in 0..3.min(s.eigenvalues.len() - first) {
                    let col = s.vectors.column(first + j).into_owned();
                    let lambda = s.eigenvalues[first + j];
                    let residual = sphere_flux_identity_residual(spec, &basis, &col, lambda, kk, &points)?;
                    out.push(CheckRecord {
                        check: "flux".into(),
                        parameters: json!({ "k": kk, "eigenpair": j, "lambda": lambda }),
                        residual,
                        pass: residual <= FLUX_TOL,
                    });
                }
            }
            CheckKind::Expansion => {
                if !k.is_zero() {
                    return Err(CliError::Invalid("the expansion identity needs weight k = 0".into()));
                }
                let e = solve_first_eigen(spec, k, &solver)?;
                let points = e.basis.domain().uniform_points(cfg.output.grid);
                let tol = if spec.dim() == 1 { EXPANSION_TOL_1D } else { EXPANSION_TOL_2D };
                for (a, f) in e.vectors.iter().enumerate() {
                    let residual = expansion_identity_residual(spec, &e.basis, f, e.lambda1, &points)?;
                    out.push(CheckRecord {
                        check: "expansion".into(),
                        parameters: json!({ "eigenfunction": a, "lambda1": e.lambda1 }),
                        residual,
                        pass: residual <= tol,
                    });
                }
            }
            CheckKind::Vertex => {
                let radii = log_radii(1e-3, 1e-1, 9);
                for r in vertex_expansion_all(spec, &radii)? {
                    out.push(CheckRecord {
                        check: "vertex".into(),
                        parameters: json!({ "vertex": r.vertex, "exponent": r.exponent }),
                        residual: r.max_deviation,
                        pass: r.exponent >= VERTEX_MIN_EXPONENT,
                    });
                }
            }
            CheckKind::Symbol => {
                let mut cases = vec![(spec.clone(), solve_first_eigen(spec, k, &solver)?)];
                for name in &block.symbol_specs {
                    let s: PotentialSpec<f64> = builtin(name)?;
                    let kz = WeightVector::zero(s.dim());
                    let e = solve_first_eigen(&s, &kz, &solver)?;
                    cases.push((s, e));
                }
                let seed = block.seed.unwrap_or(cfg.seed);
                let scan = symbol_scan(&cases, block.draws, seed)?;
                out.push(CheckRecord {
                    check: "symbol".into(),
                    parameters: json!({
                        "draws": scan.draws,
                        "seed": scan.seed,
                        "cases": cases.len(),
                        "max_combination_residual": scan.max_combination_residual,
                    }),
                    residual: scan.max_relative_determinant,
                    pass: scan.max_relative_determinant <= SYMBOL_DET_TOL
                        && scan.max_combination_residual <= SYMBOL_COMBINATION_TOL,
                });
            }
        }
    }
    Ok(out)
}
