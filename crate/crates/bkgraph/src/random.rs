//! Seeded random graphs and boundary data.

use bkgraph_core::extensions::{validate_extension, ExtensionSpec};
use bkgraph_core::graph::{MetricEdge, MetricGraph};
use bkgraph_core::linalg::{self, c64};
use bkgraph_core::{CMatrix, Complex64, OperatorKind, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RandomGraphConfig;

/// Stream separation so graph and boundary draws do not overlap.
const GRAPH_STREAM: u64 = 1;
const BOUNDARY_STREAM: u64 = 2;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Edges with uniformly drawn `a` and `ln(b/a)` between uniformly drawn
/// endpoints of a vertex pool.
pub fn random_graph(cfg: &RandomGraphConfig, seed: u64) -> Result<MetricGraph> {
    let mut r = rng(seed, GRAPH_STREAM);
    let pool = cfg.vertices.unwrap_or(cfg.edges).max(1);
    let edges = (0..cfg.edges)
        .map(|j| {
            let a = r.gen_range(cfg.a_range[0]..cfg.a_range[1]);
            let len: f64 = r.gen_range(cfg.length_range[0]..cfg.length_range[1]);
            let from = format!("v{}", r.gen_range(0..pool));
            let to = format!("v{}", r.gen_range(0..pool));
            MetricEdge::new(format!("e{j}"), from, to, a, a * len.exp())
        })
        .collect();
    MetricGraph::new(edges)
}

/// Unitary matrix `Q diag(e^{iφ}) Q†` with `Q` the eigenvectors of a random
/// Hermitian matrix and uniform phases.
pub fn random_unitary(r: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| c64(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)));
    let (_, q) = linalg::hermitian_eigen(&(&g + g.adjoint()));
    let phases: Vec<Complex64> =
        (0..n).map(|_| Complex64::from_polar(1.0, r.gen_range(-std::f64::consts::PI..std::f64::consts::PI))).collect();
    &q * linalg::diag(&phases) * q.adjoint()
}

/// Random self-adjoint extension of the given family on `edges` edges.
pub fn random_extension(kind: OperatorKind, edges: usize, seed: u64) -> Result<ExtensionSpec> {
    let mut r = rng(seed, BOUNDARY_STREAM);
    let u = random_unitary(&mut r, kind.boundary_rank(edges));
    match kind {
        OperatorKind::Bk => ExtensionSpec::from_scattering(&u),
        OperatorKind::Bk2 => {
            let id = linalg::identity(u.nrows());
            validate_extension(&id - &u, (&id + &u) * c64(0.0, 1.0), OperatorKind::Bk2)
        }
    }
}
