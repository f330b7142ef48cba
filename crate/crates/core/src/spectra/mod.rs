//! Secular functions, real and negative eigenvalues, counting functions.

mod counting;
mod negative;
mod scan;

pub use counting::{counting_function, weyl_fit, CountingSide, WeylFit};
pub use negative::find_negative_eigenvalues;
pub use scan::{find_spectrum, Level, NegativeLevel, ScanChunk, ScanDiagnostics, ScanOptions, Scanner, Spectrum};

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::extensions::{
    kuchment_decompose, s_matrix_bk, s_matrix_bk2, Decomposition, DilationMatrices, ExtensionSpec,
};
use crate::graph::MetricGraph;
use crate::linalg::{self, c64};
use crate::{CMatrix, Complex64, Error, OperatorKind, Result};

#[derive(Debug, Clone)]
enum VertexPart {
    Constant(CMatrix),
    Robin(Box<Decomposition>),
}

/// Everything needed to evaluate `U(k) = S T(k)` for one graph and extension.
#[derive(Debug, Clone)]
pub struct SecularSystem {
    kind: OperatorKind,
    lengths: Vec<f64>,
    part: VertexPart,
}

impl SecularSystem {
    pub fn new(graph: &MetricGraph, spec: &ExtensionSpec) -> Result<Self> {
        let lengths = graph.log_lengths();
        let want = spec.kind.boundary_rank(graph.edge_count());
        if spec.dimension() != want {
            return Err(Error::DimensionMismatch { what: "boundary matrices", expected: want, got: spec.dimension() });
        }
        let part = match spec.kind {
            OperatorKind::Bk => VertexPart::Constant(s_matrix_bk(spec)?),
            OperatorKind::Bk2 => VertexPart::Robin(Box::new(kuchment_decompose(spec, &DilationMatrices::new(graph))?)),
        };
        Ok(SecularSystem { kind: spec.kind, lengths, part })
    }

    /// BK system with a given unitary S-matrix.
    pub fn from_scattering(graph: &MetricGraph, s: CMatrix) -> Result<Self> {
        let e = graph.edge_count();
        if s.nrows() != e || s.ncols() != e {
            return Err(Error::DimensionMismatch { what: "S-matrix", expected: e, got: s.nrows() });
        }
        let res = linalg::unitarity_residual(&s);
        if res > 1e-10 {
            return Err(Error::NotUnitary { residual: res });
        }
        Ok(SecularSystem { kind: OperatorKind::Bk, lengths: graph.log_lengths(), part: VertexPart::Constant(s) })
    }

    /// BK2 system from an existing decomposition.
    pub fn from_decomposition(graph: &MetricGraph, dec: Decomposition) -> Result<Self> {
        let m = 2 * graph.edge_count();
        if dec.dimension() != m {
            return Err(Error::DimensionMismatch { what: "decomposition", expected: m, got: dec.dimension() });
        }
        Ok(SecularSystem {
            kind: OperatorKind::Bk2,
            lengths: graph.log_lengths(),
            part: VertexPart::Robin(Box::new(dec)),
        })
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    /// Edge lengths `ℓ_j = ln(b_j / a_j)`.
    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    /// Size of `U(k)`: `E` for BK, `2E` for BK2.
    pub fn dimension(&self) -> usize {
        self.kind.boundary_rank(self.lengths.len())
    }

    pub fn total_length(&self) -> f64 {
        self.lengths.iter().sum()
    }

    pub fn min_length(&self) -> f64 {
        self.lengths.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_length(&self) -> f64 {
        self.lengths.iter().copied().fold(0.0, f64::max)
    }

    pub fn decomposition(&self) -> Option<&Decomposition> {
        match &self.part {
            VertexPart::Robin(d) => Some(d),
            VertexPart::Constant(_) => None,
        }
    }

    /// Eigenvalues of `L''` (empty for BK).
    pub fn robin_eigenvalues(&self) -> &[f64] {
        match &self.part {
            VertexPart::Robin(d) => &d.eigenvalues,
            VertexPart::Constant(_) => &[],
        }
    }

    /// True when the vertex matrix does not depend on `k`.
    pub fn is_k_independent(&self) -> bool {
        self.robin_eigenvalues().iter().all(|l| *l == 0.0)
    }

    /// `S` (BK) or `S''(k)` (BK2).
    pub fn vertex_matrix(&self, k: Complex64) -> Result<CMatrix> {
        match &self.part {
            VertexPart::Constant(s) => Ok(s.clone()),
            VertexPart::Robin(d) => s_matrix_bk2(d, k),
        }
    }

    /// `dS/dk`, zero for BK.
    pub fn vertex_matrix_derivative(&self, k: Complex64) -> Result<CMatrix> {
        match &self.part {
            VertexPart::Constant(s) => Ok(CMatrix::zeros(s.nrows(), s.ncols())),
            VertexPart::Robin(d) => d.s_matrix_derivative(k),
        }
    }

    pub fn t_matrix(&self, k: Complex64) -> CMatrix {
        t_matrix_from_lengths(self.kind, &self.lengths, k)
    }

    /// `U(k) = S T(k)`.
    pub fn evolution(&self, k: Complex64) -> Result<CMatrix> {
        let s = self.vertex_matrix(k)?;
        Ok(self.apply_t(s, k))
    }

    fn apply_t(&self, mut s: CMatrix, k: Complex64) -> CMatrix {
        // right-multiplication by T without forming it
        let e = self.lengths.len();
        let phases: Vec<Complex64> = self.lengths.iter().map(|&l| (c64(0.0, 1.0) * k * l).exp()).collect();
        match self.kind {
            OperatorKind::Bk => {
                for (j, p) in phases.iter().enumerate() {
                    let mut col = s.column_mut(j);
                    col *= *p;
                }
                s
            }
            OperatorKind::Bk2 => {
                let mut u = CMatrix::zeros(2 * e, 2 * e);
                for (j, &p) in phases.iter().enumerate() {
                    u.set_column(j, &(s.column(e + j) * p));
                    u.set_column(e + j, &(s.column(j) * p));
                }
                u
            }
        }
    }

    /// Scattering matrix on directed bonds together with bond lengths, such
    /// that `U(k) = S_bond(k) diag(e^{ikℓ})`. BK2 doubles every edge.
    pub fn bond_matrix(&self, k: Complex64) -> Result<CMatrix> {
        let s = self.vertex_matrix(k)?;
        Ok(self.to_bond(s))
    }

    pub fn bond_matrix_derivative(&self, k: Complex64) -> Result<CMatrix> {
        let ds = self.vertex_matrix_derivative(k)?;
        Ok(self.to_bond(ds))
    }

    fn to_bond(&self, s: CMatrix) -> CMatrix {
        match self.kind {
            OperatorKind::Bk => s,
            OperatorKind::Bk2 => s * linalg::swap(self.lengths.len()),
        }
    }

    pub fn bond_lengths(&self) -> Vec<f64> {
        match self.kind {
            OperatorKind::Bk => self.lengths.clone(),
            OperatorKind::Bk2 => self.lengths.iter().chain(&self.lengths).copied().collect(),
        }
    }

    /// Secular function `det(I - U(k))`.
    pub fn secular(&self, k: Complex64) -> Result<Complex64> {
        let n = self.dimension();
        Ok((linalg::identity(n) - self.evolution(k)?).determinant())
    }

    /// Wrapped eigenphases of `U(k)` in `[0, 2π)`, real `k`.
    pub fn eigenphases(&self, k: f64) -> Result<Vec<f64>> {
        let u = self.evolution(c64(k, 0.0))?;
        Ok(linalg::normal_eigenvalues(&u).into_iter().map(linalg::wrap_phase).collect())
    }

    /// Exact change of the continuous total phase `arg det U` from `k0` to `k1`.
    pub fn total_phase_increment(&self, k0: f64, k1: f64) -> f64 {
        let l = self.total_length();
        match self.kind {
            OperatorKind::Bk => l * (k1 - k0),
            OperatorKind::Bk2 => {
                let mut d = 2.0 * l * (k1 - k0);
                for &lambda in self.robin_eigenvalues() {
                    if lambda != 0.0 {
                        d -= 2.0 * (libm::atan(k1 / lambda) - libm::atan(k0 / lambda));
                    }
                }
                d
            }
        }
    }

    /// Bounds `(min, max)` on every eigenphase velocity `dθ/dk` over `[k0, k1]`.
    pub fn phase_rate_bounds(&self, k0: f64, k1: f64) -> (f64, f64) {
        let kmin = if k0 <= 0.0 && k1 >= 0.0 { 0.0 } else { k0.abs().min(k1.abs()) };
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        for &lambda in self.robin_eigenvalues() {
            if lambda != 0.0 {
                let v = -2.0 * lambda / (lambda * lambda + kmin * kmin);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (self.min_length() + lo, self.max_length() + hi)
    }
}

fn t_matrix_from_lengths(kind: OperatorKind, lengths: &[f64], k: Complex64) -> CMatrix {
    let e = lengths.len();
    let d: Vec<Complex64> = lengths.iter().map(|&l| (c64(0.0, 1.0) * k * l).exp()).collect();
    match kind {
        OperatorKind::Bk => linalg::diag(&d),
        OperatorKind::Bk2 => {
            let mut t = CMatrix::zeros(2 * e, 2 * e);
            for j in 0..e {
                t[(j, e + j)] = d[j];
                t[(e + j, j)] = d[j];
            }
            t
        }
    }
}

/// `T(k)`: `diag(e^{ikℓ})` for BK, `[[0, D], [D, 0]]` for BK2.
pub fn t_matrix(kind: OperatorKind, graph: &MetricGraph, k: Complex64) -> CMatrix {
    t_matrix_from_lengths(kind, &graph.log_lengths(), k)
}

/// `det(I - S T(k))` for a BK system.
pub fn secular_bk(sys: &SecularSystem, k: Complex64) -> Result<Complex64> {
    if sys.kind() != OperatorKind::Bk {
        return Err(Error::InvalidParameter { name: "kind", reason: "expected a BK system".into() });
    }
    sys.secular(k)
}

/// `det(I - S''(k) T(k))` for a BK2 system.
pub fn secular_bk2(sys: &SecularSystem, k: Complex64) -> Result<Complex64> {
    if sys.kind() != OperatorKind::Bk2 {
        return Err(Error::InvalidParameter { name: "kind", reason: "expected a BK2 system".into() });
    }
    sys.secular(k)
}

/// Multiplicities attached to `k = 0` for BK2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ZeroMode {
    /// Multiplicity of the eigenvalue `λ = 0`.
    pub g0: usize,
    /// Multiplicity of the eigenvalue one of `S''(0) T(0)`.
    pub n: usize,
    /// Whether a second probe `√2 k'` reproduced `g0`.
    pub probe_consistent: bool,
}

const UNIT_TOL: f64 = 1e-8;

fn unit_multiplicity(m: &CMatrix) -> usize {
    let n = m.nrows();
    let sv = linalg::singular_values(&(linalg::identity(n) - m));
    sv.iter().filter(|&&s| s < UNIT_TOL).count()
}

/// Kernel dimension of `I - S''(k') C(k')`, where `C` carries the
/// linear-plus-constant zero-energy solutions on each edge.
fn zero_mode_g0(sys: &SecularSystem, dec: &Decomposition, k_probe: f64) -> Result<usize> {
    let e = sys.lengths.len();
    let q = c64(0.0, 2.0 / k_probe);
    let mut cm = CMatrix::zeros(2 * e, 2 * e);
    for (j, &l) in sys.lengths.iter().enumerate() {
        let den = q + l;
        cm[(j, j)] = c64(l, 0.0) / den;
        cm[(e + j, e + j)] = c64(l, 0.0) / den;
        cm[(j, e + j)] = q / den;
        cm[(e + j, j)] = q / den;
    }
    let s = s_matrix_bk2(dec, c64(k_probe, 0.0))?;
    Ok(unit_multiplicity(&(s * cm)))
}

/// Zero-mode data `(g0, N)` for a BK2 system; `g0` is checked at a second
/// probe `√2 k'`.
pub fn zero_mode_test(sys: &SecularSystem, k_probe: f64) -> Result<ZeroMode> {
    let dec = sys
        .decomposition()
        .ok_or_else(|| Error::InvalidParameter { name: "kind", reason: "zero mode is defined for BK2".into() })?;
    if !(k_probe.is_finite() && k_probe != 0.0) {
        return Err(Error::InvalidParameter { name: "k_probe", reason: "must be real and non-zero".into() });
    }
    let g0 = zero_mode_g0(sys, dec, k_probe)?;
    let g0b = zero_mode_g0(sys, dec, k_probe * core::f64::consts::SQRT_2)?;
    let n = unit_multiplicity(&sys.evolution(c64(0.0, 0.0))?);
    Ok(ZeroMode { g0, n, probe_consistent: g0 == g0b })
}
