//! Job configuration: one TOML document per run.
//!
//! Complex numbers are `[re, im]` pairs and matrices are lists of rows.

use bkgraph_core::extensions::BoundaryCondition;
use bkgraph_core::graph::{MetricEdge, MetricGraph};
use bkgraph_core::halfline::HalflineState;
use bkgraph_core::spectra::CountingSide;
use bkgraph_core::{CMatrix, Complex64, OperatorKind};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Validate,
    Spectrum,
    Weyl,
    TraceCheck,
    HeatTrace,
    HalflineDemo,
    CountingCompare,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Validate => "validate",
            Task::Spectrum => "spectrum",
            Task::Weyl => "weyl",
            Task::TraceCheck => "trace-check",
            Task::HeatTrace => "heat-trace",
            Task::HalflineDemo => "halfline-demo",
            Task::CountingCompare => "counting-compare",
        }
    }

    fn needs_graph(self) -> bool {
        self != Task::HalflineDemo
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub task: Task,
    #[serde(default = "default_operator")]
    pub operator: OperatorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundaryConfig>,
    #[serde(default)]
    pub numeric: NumericConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halfline: Option<HalflineConfig>,
}

fn default_operator() -> OperatorKind {
    OperatorKind::Bk
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeConfig {
    pub id: String,
    pub from: String,
    pub to: String,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomGraphConfig {
    pub edges: usize,
    /// Size of the vertex pool; defaults to the edge count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<usize>,
    /// Range of left endpoints `a`.
    #[serde(default = "default_a_range")]
    pub a_range: [f64; 2],
    /// Range of logarithmic lengths `ln(b/a)`.
    #[serde(default = "default_length_range")]
    pub length_range: [f64; 2],
}

fn default_a_range() -> [f64; 2] {
    [0.5, 2.0]
}

fn default_length_range() -> [f64; 2] {
    [0.5, 2.0]
}

/// Either an explicit edge list or a seeded random graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edges: Vec<EdgeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomGraphConfig>,
}

pub type ComplexMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundaryConfig {
    RingPhase {
        c: f64,
    },
    BalancedFourier {
        c: f64,
    },
    Scattering {
        s: ComplexMatrix,
    },
    Dirichlet,
    Neumann,
    Robin {
        rho: Vec<f64>,
    },
    Kirchhoff,
    LogPicture {
        a: ComplexMatrix,
        b: ComplexMatrix,
    },
    Matrices {
        a: ComplexMatrix,
        b: ComplexMatrix,
    },
    /// Seeded random self-adjoint extension: a Haar-like unitary `S` for BK,
    /// `A = I - U`, `B = i(I + U)` for BK2.
    Random,
}

impl BoundaryConfig {
    /// Operator family the condition belongs to, if fixed by the kind.
    pub fn implied_operator(&self) -> Option<OperatorKind> {
        match self {
            BoundaryConfig::RingPhase { .. }
            | BoundaryConfig::BalancedFourier { .. }
            | BoundaryConfig::Scattering { .. } => Some(OperatorKind::Bk),
            BoundaryConfig::Matrices { .. } | BoundaryConfig::Random => None,
            _ => Some(OperatorKind::Bk2),
        }
    }

    /// Core boundary condition; `Random` is resolved by the caller.
    pub fn to_condition(&self, operator: OperatorKind) -> Result<Option<BoundaryCondition>, CliError> {
        Ok(Some(match self {
            BoundaryConfig::RingPhase { c } => BoundaryCondition::RingPhase { c: *c },
            BoundaryConfig::BalancedFourier { c } => BoundaryCondition::BalancedFourier { c: *c },
            BoundaryConfig::Scattering { s } => BoundaryCondition::Scattering(to_matrix("boundary.s", s)?),
            BoundaryConfig::Dirichlet => BoundaryCondition::Dirichlet,
            BoundaryConfig::Neumann => BoundaryCondition::Neumann,
            BoundaryConfig::Robin { rho } => BoundaryCondition::Robin(rho.clone()),
            BoundaryConfig::Kirchhoff => BoundaryCondition::Kirchhoff,
            BoundaryConfig::LogPicture { a, b } => {
                BoundaryCondition::LogPicture { a: to_matrix("boundary.a", a)?, b: to_matrix("boundary.b", b)? }
            }
            BoundaryConfig::Matrices { a, b } => BoundaryCondition::Matrices {
                kind: operator,
                a: to_matrix("boundary.a", a)?,
                b: to_matrix("boundary.b", b)?,
            },
            BoundaryConfig::Random => return Ok(None),
        }))
    }
}

/// Square complex matrix from rows of `[re, im]` pairs.
pub fn to_matrix(field: &'static str, rows: &ComplexMatrix) -> Result<CMatrix, CliError> {
    let n = rows.len();
    if n == 0 {
        return Err(CliError::Invalid { field, reason: "matrix is empty".into() });
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != n) {
        return Err(CliError::Invalid {
            field,
            reason: format!("row {bad} has {} entries, expected {n}", rows[bad].len()),
        });
    }
    Ok(CMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
}

pub fn from_matrix(m: &CMatrix) -> ComplexMatrix {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericConfig {
    /// Wave-number window; each task has its own default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_range: Option<[f64; 2]>,
    /// Root bracket width.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Scan grid spacing; `π/(4Θ')` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orbit_cutoff: Option<f64>,
    /// Orbit tail target when the cutoff is chosen automatically.
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Largest acceptable bound on the unscanned spectral tail.
    #[serde(default = "default_lhs_tol")]
    pub lhs_tol: f64,
    /// Gaussian widths for trace checks and heat traces.
    #[serde(default = "default_t_values")]
    pub t_values: Vec<f64>,
    #[serde(default = "default_side")]
    pub side: CountingSide,
    /// Start of the no-go comparison window.
    #[serde(default = "default_k_from")]
    pub k_from: f64,
    /// Rows in counting tables and the half-line demo.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Search depth for negative BK2 eigenvalues `-κ²`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_max: Option<f64>,
}

fn default_tol() -> f64 {
    1e-12
}
fn default_eps() -> f64 {
    1e-11
}
fn default_lhs_tol() -> f64 {
    1e-9
}
fn default_t_values() -> Vec<f64> {
    vec![0.1, 1.0]
}
fn default_side() -> CountingSide {
    CountingSide::Positive
}
fn default_k_from() -> f64 {
    50.0
}
fn default_samples() -> usize {
    40
}

impl Default for NumericConfig {
    fn default() -> Self {
        NumericConfig {
            k_range: None,
            tol: default_tol(),
            step: None,
            orbit_cutoff: None,
            eps: default_eps(),
            lhs_tol: default_lhs_tol(),
            t_values: default_t_values(),
            side: default_side(),
            k_from: default_k_from(),
            samples: default_samples(),
            kappa_max: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PacketKind {
    Fermi,
    GaussianLog,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalflineConfig {
    pub packet: PacketKind,
    /// Centre and width in `ln x` of the Gaussian packet.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    /// Dilation `φ(x) → φ(x / c)`, normalised.
    #[serde(default = "default_scale")]
    pub scale: f64,
}

fn default_scale() -> f64 {
    1.0
}

impl HalflineConfig {
    pub fn state(&self) -> Result<HalflineState, CliError> {
        let base = match self.packet {
            PacketKind::Fermi => HalflineState::fermi(),
            PacketKind::GaussianLog => HalflineState::gaussian_log(
                self.y0.ok_or(CliError::Missing("halfline.y0"))?,
                self.s.ok_or(CliError::Missing("halfline.s"))?,
            )?,
        };
        Ok(base.scaled(self.scale)?)
    }
}

impl JobConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Parse(e.to_string()))
    }

    /// Structural checks and numeric preconditions, before any computation.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.task.needs_graph() {
            let graph = self.graph.as_ref().ok_or(CliError::Missing("graph"))?;
            match (graph.edges.is_empty(), &graph.random) {
                (true, None) => return Err(CliError::Missing("graph.edges or graph.random")),
                (false, Some(_)) => {
                    return Err(CliError::Inconsistent("give either graph.edges or graph.random, not both".into()))
                }
                (true, Some(r)) => {
                    if r.edges == 0 {
                        return Err(CliError::Invalid {
                            field: "graph.random.edges",
                            reason: "must be positive".into(),
                        });
                    }
                    if r.vertices == Some(0) {
                        return Err(CliError::Invalid {
                            field: "graph.random.vertices",
                            reason: "must be positive".into(),
                        });
                    }
                    check_range("graph.random.a_range", r.a_range, true)?;
                    check_range("graph.random.length_range", r.length_range, true)?;
                }
                (false, None) => {}
            }
            let boundary = self.boundary.as_ref().ok_or(CliError::Missing("boundary"))?;
            if let Some(op) = boundary.implied_operator() {
                if op != self.operator {
                    return Err(CliError::Inconsistent(format!(
                        "boundary kind belongs to operator {}, config says {}",
                        op_name(op),
                        op_name(self.operator)
                    )));
                }
            }
        }
        let n = &self.numeric;
        if let Some(r) = n.k_range {
            check_range("numeric.k_range", r, false)?;
        }
        positive("numeric.tol", n.tol)?;
        positive("numeric.eps", n.eps)?;
        positive("numeric.lhs_tol", n.lhs_tol)?;
        if let Some(s) = n.step {
            positive("numeric.step", s)?;
        }
        if let Some(c) = n.orbit_cutoff {
            positive("numeric.orbit_cutoff", c)?;
        }
        if let Some(k) = n.kappa_max {
            positive("numeric.kappa_max", k)?;
        }
        if !n.k_from.is_finite() || n.k_from < 0.0 {
            return Err(CliError::Invalid {
                field: "numeric.k_from",
                reason: "must be finite and non-negative".into(),
            });
        }
        if n.samples < 2 {
            return Err(CliError::Invalid { field: "numeric.samples", reason: "need at least 2".into() });
        }
        if matches!(self.task, Task::TraceCheck | Task::HeatTrace) {
            if n.t_values.is_empty() {
                return Err(CliError::Invalid { field: "numeric.t_values", reason: "must not be empty".into() });
            }
            for &t in &n.t_values {
                positive("numeric.t_values", t)?;
            }
        }
        if let Some(h) = &self.halfline {
            positive("halfline.scale", h.scale)?;
        }
        Ok(())
    }

    pub fn build_graph(&self, seed: u64) -> Result<MetricGraph, CliError> {
        let graph = self.graph.as_ref().ok_or(CliError::Missing("graph"))?;
        match &graph.random {
            Some(r) => Ok(crate::random::random_graph(r, seed)?),
            None => {
                let edges = graph
                    .edges
                    .iter()
                    .map(|e| MetricEdge::new(e.id.clone(), e.from.clone(), e.to.clone(), e.a, e.b))
                    .collect();
                Ok(MetricGraph::new(edges)?)
            }
        }
    }
}

pub fn op_name(op: OperatorKind) -> &'static str {
    match op {
        OperatorKind::Bk => "bk",
        OperatorKind::Bk2 => "bk2",
    }
}

fn positive(field: &'static str, x: f64) -> Result<(), CliError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(CliError::Invalid { field, reason: format!("must be finite and positive, got {x}") })
    }
}

fn check_range(field: &'static str, r: [f64; 2], positive_lo: bool) -> Result<(), CliError> {
    if !(r[0].is_finite() && r[1].is_finite() && r[0] < r[1]) || (positive_lo && r[0] <= 0.0) {
        return Err(CliError::Invalid {
            field,
            reason: format!("need a finite range lo < hi, got [{}, {}]", r[0], r[1]),
        });
    }
    Ok(())
}
