//! Run configuration: strict JSON schema, default resolution and conversion
//! into library objects.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::poly::Polynomial;
use crate::polytope::{build_polytope, Facet, Polytope};
use crate::potential::{boundary_flat_direction, Direction, PotentialSpec};
use crate::reduced::{SolverOptions, WeightVector};
use crate::variation::{FlowMode, FlowOptions};

use super::{CliError, Command};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolytopeConfig {
    Named(String),
    Facets(Vec<FacetConfig>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FacetConfig {
    pub normal: Vec<i64>,
    pub offset: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub exponents: Vec<u32>,
    pub coefficient: f64,
}

fn default_beta() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub correction: Vec<TermConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightConfig {
    pub k: Vec<i64>,
}

fn default_cluster_tol() -> f64 {
    1e-6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub degree: usize,
    #[serde(default)]
    pub quadrature_nodes: Option<usize>,
    #[serde(default = "default_cluster_tol")]
    pub cluster_tol: f64,
}

fn default_spot_axis() -> usize {
    33
}

fn default_spot_facet() -> usize {
    65
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpotConfig {
    #[serde(default = "default_spot_axis")]
    pub per_axis: usize,
    #[serde(default = "default_spot_facet")]
    pub per_facet: usize,
}

impl Default for SpotConfig {
    fn default() -> Self {
        SpotConfig {
            per_axis: default_spot_axis(),
            per_facet: default_spot_facet(),
        }
    }
}

fn default_dump_grid() -> usize {
    41
}

/// Field dumps written next to the report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub eigenfunctions: bool,
    #[serde(default)]
    pub q_fields: bool,
    /// Uniform samples per reference axis.
    #[serde(default = "default_dump_grid")]
    pub grid: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            eigenfunctions: false,
            q_fields: false,
            grid: default_dump_grid(),
        }
    }
}

/// A polynomial direction; with `boundary_flat` the polynomial is multiplied
/// by the squared product of the facet functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectionConfig {
    #[serde(default)]
    pub id: Option<String>,
    pub terms: Vec<TermConfig>,
    #[serde(default)]
    pub boundary_flat: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectionsConfig {
    /// Absent: the built-in monomial and boundary-flat dictionary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dictionary: Option<Vec<DirectionConfig>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DerivativeConfig {
    pub directions: Vec<DirectionConfig>,
    /// Also run the central-difference oracle (simple eigenvalues only).
    #[serde(default)]
    pub fd_check: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd_step: Option<f64>,
}

fn default_halvings() -> usize {
    8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub steps: usize,
    pub step_size: f64,
    pub mode: FlowMode,
    #[serde(default = "default_halvings")]
    pub max_halvings: usize,
}

fn default_restarts() -> usize {
    8
}

fn default_iterations() -> usize {
    5000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HullConfig {
    /// Gauss nodes per reference axis.
    pub grid: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    /// Defaults to the root seed.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_iterations")]
    pub max_iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    Legendre,
    Flux,
    Expansion,
    Vertex,
    Symbol,
}

fn default_draws() -> usize {
    1000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksConfig {
    pub list: Vec<CheckKind>,
    /// Defaults to the root seed.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_draws")]
    pub draws: usize,
    /// Built-in potentials added to the symbol scan next to the configured one.
    #[serde(default)]
    pub symbol_specs: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub polytope: PolytopeConfig,
    pub potential: PotentialConfig,
    pub weight: WeightConfig,
    pub solver: SolverConfig,
    #[serde(default)]
    pub spot: SpotConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derivative: Option<DerivativeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directions: Option<DirectionsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hull: Option<HullConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<ChecksConfig>,
}

fn schema_error(e: serde_path_to_error::Error<serde_json::Error>) -> CliError {
    let path = e.path().to_string();
    let inner = e.into_inner();
    if inner.is_syntax() || inner.is_eof() {
        return CliError::Parse(inner.to_string());
    }
    let msg = inner.to_string();
    CliError::Schema { key: path, message: msg }
}

fn invalid(e: crate::Error) -> CliError {
    CliError::Invalid(e.to_string())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(schema_error)?;
        Ok(cfg)
    }

    /// Checks the blocks required by `command` and fills in derived defaults.
    pub fn resolve(mut self, command: Command) -> Result<Self, CliError> {
        let missing = |block: &'static str| CliError::MissingBlock { block, command };
        match command {
            Command::Derivative if self.derivative.is_none() => return Err(missing("derivative")),
            Command::Critical if self.directions.is_none() => return Err(missing("directions")),
            Command::Hull if self.hull.is_none() => return Err(missing("hull")),
            Command::Flow if self.flow.is_none() => return Err(missing("flow")),
            Command::Check if self.checks.is_none() => return Err(missing("checks")),
            _ => {}
        }
        if self.solver.quadrature_nodes.is_none() {
            self.solver.quadrature_nodes = Some(SolverOptions::min_nodes(self.solver.degree));
        }
        let seed = self.seed;
        if let Some(h) = self.hull.as_mut() {
            h.seed.get_or_insert(seed);
        }
        if let Some(c) = self.checks.as_mut() {
            c.seed.get_or_insert(seed);
        }
        self.solver_options().validate().map_err(invalid)?;
        Ok(self)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            degree: self.solver.degree,
            quadrature_nodes: self.solver.quadrature_nodes,
            cluster_tol: self.solver.cluster_tol,
        }
    }

    pub fn weight(&self) -> WeightVector {
        WeightVector::new(self.weight.k.clone())
    }

    pub fn build_polytope(&self) -> Result<Polytope<f64>, CliError> {
        let p = match &self.polytope {
            PolytopeConfig::Named(name) => Polytope::named(name).map_err(invalid)?,
            PolytopeConfig::Facets(facets) => build_polytope(
                facets
                    .iter()
                    .map(|f| Facet::new(f.normal.clone(), f.offset))
                    .collect(),
            )
            .map_err(invalid)?,
        };
        if self.weight.k.len() != p.dim() {
            return Err(CliError::Invalid(format!(
                "weight.k has length {} for a polytope of dimension {}",
                self.weight.k.len(),
                p.dim()
            )));
        }
        Ok(p)
    }

    pub fn build_spec(&self) -> Result<PotentialSpec<f64>, CliError> {
        let p = Arc::new(self.build_polytope()?);
        let v = polynomial(p.dim(), &self.potential.correction, "potential.correction")?;
        PotentialSpec::new(p, self.potential.beta, v).map_err(invalid)
    }

    pub fn flow_options(&self) -> Option<FlowOptions> {
        self.flow.as_ref().map(|f| FlowOptions {
            steps: f.steps,
            step_size: f.step_size,
            mode: f.mode,
            max_halvings: f.max_halvings,
        })
    }

    /// Serialized form; loading it back yields an equal config.
    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

pub(crate) fn polynomial(n: usize, terms: &[TermConfig], key: &str) -> Result<Polynomial<f64>, CliError> {
    let mut p = Polynomial::zero(n);
    for (i, t) in terms.iter().enumerate() {
        if t.exponents.len() != n {
            return Err(CliError::Schema {
                key: format!("{key}[{i}].exponents"),
                message: format!("expected {n} exponents, found {}", t.exponents.len()),
            });
        }
        p.add_term(t.exponents.clone(), t.coefficient);
    }
    Ok(p)
}

pub(crate) fn direction(p: &Polytope<f64>, d: &DirectionConfig, key: &str) -> Result<Direction<f64>, CliError> {
    let poly = polynomial(p.dim(), &d.terms, &format!("{key}.terms"))?;
    let base = poly.to_string();
    Ok(if d.boundary_flat {
        let id = d.id.clone().unwrap_or_else(|| format!("flat[{base}]"));
        boundary_flat_direction(p, &poly, &id)
    } else {
        Direction::new(d.id.clone().unwrap_or(base), poly, false)
    })
}

pub fn load_config(path: &Path, command: Command) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    RunConfig::from_json(&text)?.resolve(command)
}
