//! Metric graphs with edges `[a_j, b_j] ⊂ (0, ∞)` and their periodic orbits.
//!
//! Endpoint convention used by every boundary matrix in the crate: endpoint
//! `j` is the `a`-end of edge `j` (at its `from` vertex) and endpoint `E + j`
//! is the `b`-end (at its `to` vertex).

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::{CMatrix, Complex64, Error, Result};

/// One edge `[a, b]` directed from `from` (at `a`) to `to` (at `b`).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricEdge {
    pub id: String,
    pub a: f64,
    pub b: f64,
    pub from: String,
    pub to: String,
}

impl MetricEdge {
    pub fn new(id: impl Into<String>, from: impl Into<String>, to: impl Into<String>, a: f64, b: f64) -> Self {
        MetricEdge { id: id.into(), a, b, from: from.into(), to: to.into() }
    }

    /// Logarithmic length `ln(b/a)`.
    pub fn log_length(&self) -> f64 {
        libm::log(self.b / self.a)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricGraph {
    edges: Vec<MetricEdge>,
    vertices: Vec<String>,
    from_idx: Vec<usize>,
    to_idx: Vec<usize>,
}

impl MetricGraph {
    pub fn new(edges: Vec<MetricEdge>) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let mut ids = BTreeSet::new();
        let mut vertices: Vec<String> = Vec::new();
        let index_of = |name: &String, vertices: &mut Vec<String>| match vertices.iter().position(|v| v == name) {
            Some(i) => i,
            None => {
                vertices.push(name.clone());
                vertices.len() - 1
            }
        };
        let mut from_idx = Vec::with_capacity(edges.len());
        let mut to_idx = Vec::with_capacity(edges.len());
        for e in &edges {
            if !(e.a.is_finite() && e.b.is_finite() && e.a > 0.0 && e.b > e.a) {
                return Err(Error::InvalidEdge { edge: e.id.clone(), a: e.a, b: e.b });
            }
            if !ids.insert(e.id.clone()) {
                return Err(Error::DuplicateEdge(e.id.clone()));
            }
            from_idx.push(index_of(&e.from, &mut vertices));
            to_idx.push(index_of(&e.to, &mut vertices));
        }
        Ok(MetricGraph { edges, vertices, from_idx, to_idx })
    }

    /// A single directed loop `[a, b]` from a vertex to itself.
    pub fn ring(a: f64, b: f64) -> Result<Self> {
        Self::new(alloc::vec![MetricEdge::new("e0", "v0", "v0", a, b)])
    }

    /// A single edge `[a, b]` between two distinct vertices.
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::new(alloc::vec![MetricEdge::new("e0", "v0", "v1", a, b)])
    }

    /// Star with a common centre at the `a`-ends of all edges.
    pub fn star(ends: &[(f64, f64)]) -> Result<Self> {
        let edges = ends
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| MetricEdge::new(alloc::format!("e{i}"), "c", alloc::format!("leaf{i}"), a, b))
            .collect();
        Self::new(edges)
    }

    pub fn edges(&self) -> &[MetricEdge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Index of the `from` vertex of edge `j`.
    pub fn tail(&self, j: usize) -> usize {
        self.from_idx[j]
    }

    /// Index of the `to` vertex of edge `j`.
    pub fn head(&self, j: usize) -> usize {
        self.to_idx[j]
    }

    pub fn log_lengths(&self) -> Vec<f64> {
        self.edges.iter().map(MetricEdge::log_length).collect()
    }

    /// Total logarithmic length.
    pub fn total_length(&self) -> f64 {
        self.log_lengths().iter().sum()
    }

    pub fn min_length(&self) -> f64 {
        self.log_lengths().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn max_length(&self) -> f64 {
        self.log_lengths().into_iter().fold(0.0, f64::max)
    }

    pub fn a_values(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.a).collect()
    }

    pub fn b_values(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.b).collect()
    }

    /// Endpoint indices meeting at vertex `v`.
    pub fn endpoints_at(&self, v: usize) -> Vec<usize> {
        let e = self.edge_count();
        let mut out: Vec<usize> = (0..e).filter(|&j| self.from_idx[j] == v).collect();
        out.extend((0..e).filter(|&j| self.to_idx[j] == v).map(|j| e + j));
        out
    }

    /// Edges entering vertex `v` (their `b`-end sits there).
    pub fn incoming(&self, v: usize) -> Vec<usize> {
        (0..self.edge_count()).filter(|&j| self.to_idx[j] == v).collect()
    }

    /// Edges leaving vertex `v` (their `a`-end sits there).
    pub fn outgoing(&self, v: usize) -> Vec<usize> {
        (0..self.edge_count()).filter(|&j| self.from_idx[j] == v).collect()
    }

    /// Every vertex has as many incoming as outgoing edges.
    pub fn is_balanced(&self) -> bool {
        (0..self.vertex_count()).all(|v| self.incoming(v).len() == self.outgoing(v).len())
    }

    /// Number of connected components, ignoring edge direction.
    pub fn component_count(&self) -> usize {
        let n = self.vertex_count();
        let mut parent: Vec<usize> = (0..n).collect();
        fn root(parent: &mut [usize], mut v: usize) -> usize {
            while parent[v] != v {
                parent[v] = parent[parent[v]];
                v = parent[v];
            }
            v
        }
        for j in 0..self.edge_count() {
            let (a, b) = (root(&mut parent, self.from_idx[j]), root(&mut parent, self.to_idx[j]));
            parent[a] = b;
        }
        (0..n).filter(|&v| root(&mut parent, v) == v).count()
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() == 1
    }
}

/// Allowed bond-to-bond transitions: a walk may go from bond `i` to bond
/// `j` when the scattering entry `S[j][i]` is non-zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BondPattern {
    n: usize,
    allowed: Vec<bool>,
}

impl BondPattern {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut allowed = alloc::vec![false; n * n];
        for from in 0..n {
            for to in 0..n {
                allowed[to * n + from] = f(from, to);
            }
        }
        BondPattern { n, allowed }
    }

    /// Non-zero pattern of a scattering matrix.
    pub fn from_matrix(s: &CMatrix, tol: f64) -> Self {
        Self::from_fn(s.nrows(), |from, to| s[(to, from)].norm() > tol)
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn allows(&self, from: usize, to: usize) -> bool {
        self.allowed[to * self.n + from]
    }
}

/// A periodic orbit: a cyclic bond sequence up to rotation.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PeriodicOrbit {
    /// Canonical (lexicographically smallest) rotation of the bond cycle.
    pub bonds: Vec<usize>,
    pub length: f64,
    pub primitive_length: f64,
    pub repetition: usize,
}

impl PeriodicOrbit {
    /// Product of scattering amplitudes around the cycle.
    pub fn product(&self, s: &CMatrix) -> Complex64 {
        let n = self.bonds.len();
        (0..n).fold(Complex64::new(1.0, 0.0), |p, i| p * s[(self.bonds[(i + 1) % n], self.bonds[i])])
    }

    /// Product and its derivative for a matrix-valued `S(k)` with known
    /// `dS/dk`.
    pub fn product_with_derivative(&self, s: &CMatrix, ds: &CMatrix) -> (Complex64, Complex64) {
        let n = self.bonds.len();
        let mut p = Complex64::new(1.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let (to, from) = (self.bonds[(i + 1) % n], self.bonds[i]);
            dp = dp * s[(to, from)] + p * ds[(to, from)];
            p *= s[(to, from)];
        }
        (p, dp)
    }
}

/// Amplitude `ℓ_γp · ∏ S` of an orbit.
pub fn orbit_amplitude(orbit: &PeriodicOrbit, s: &CMatrix) -> Complex64 {
    orbit.product(s) * orbit.primitive_length
}

/// Upper bound on the number of canonical orbits produced before the
/// enumeration gives up.
pub const MAX_ORBITS: usize = 2_000_000;

/// All periodic orbits of length at most `max_length`, one per rotation
/// class, sorted by length.
pub fn enumerate_orbits(pattern: &BondPattern, bond_lengths: &[f64], max_length: f64) -> Result<Vec<PeriodicOrbit>> {
    let n = pattern.dimension();
    if bond_lengths.len() != n {
        return Err(Error::DimensionMismatch { what: "bond lengths", expected: n, got: bond_lengths.len() });
    }
    if bond_lengths.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::InvalidParameter { name: "bond_lengths", reason: "lengths must be positive".into() });
    }
    let limit = max_length * (1.0 + 1e-12);
    let mut out = Vec::new();
    let mut path = Vec::new();
    for start in 0..n {
        if bond_lengths[start] > limit {
            continue;
        }
        path.clear();
        path.push(start);
        extend(pattern, bond_lengths, limit, &mut path, bond_lengths[start], &mut out)?;
    }
    out.sort_by(|a: &PeriodicOrbit, b| a.length.total_cmp(&b.length).then_with(|| a.bonds.cmp(&b.bonds)));
    Ok(out)
}

fn extend(
    pattern: &BondPattern,
    lengths: &[f64],
    limit: f64,
    path: &mut Vec<usize>,
    len: f64,
    out: &mut Vec<PeriodicOrbit>,
) -> Result<()> {
    let start = path[0];
    let last = *path.last().expect("non-empty path");
    if pattern.allows(last, start) && is_canonical(path) {
        let r = repetition(path);
        out.push(PeriodicOrbit { bonds: path.clone(), length: len, primitive_length: len / r as f64, repetition: r });
        if out.len() > MAX_ORBITS {
            return Err(Error::InvalidParameter {
                name: "orbit_cutoff",
                reason: alloc::format!("more than {MAX_ORBITS} orbits below length {limit}"),
            });
        }
    }
    for next in start..pattern.dimension() {
        if pattern.allows(last, next) && len + lengths[next] <= limit {
            path.push(next);
            extend(pattern, lengths, limit, path, len + lengths[next], out)?;
            path.pop();
        }
    }
    Ok(())
}

fn is_canonical(path: &[usize]) -> bool {
    let n = path.len();
    (1..n).all(|r| {
        for i in 0..n {
            let (x, y) = (path[(i + r) % n], path[i]);
            if x != y {
                return x > y;
            }
        }
        true
    })
}

/// Number of times the primitive cycle repeats.
fn repetition(path: &[usize]) -> usize {
    let n = path.len();
    for p in 1..=n {
        if n % p == 0 && (0..n).all(|i| path[i] == path[i % p]) {
            return n / p;
        }
    }
    1
}
