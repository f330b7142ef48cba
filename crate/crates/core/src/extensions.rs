//! Self-adjoint extensions: boundary matrices `(A, B)`, the BK S-matrix,
//! and the projector/Robin decomposition behind the BK2 vertex matrix.

use alloc::format;
use alloc::vec::Vec;

use crate::graph::MetricGraph;
use crate::linalg::{self, c64};
use crate::{CMatrix, Complex64, Error, OperatorKind, Result, TAU};

/// Default relative singular-value threshold for numerical rank.
pub const RANK_RTOL: f64 = 1e-10;
/// Singular values within this factor of the threshold are ambiguous.
pub const RANK_BAND: f64 = 100.0;
/// Eigenvalues of `L''` below this (relative) size are set to zero.
pub const ZERO_EIGENVALUE_RTOL: f64 = 1e-12;

/// Boundary-condition data `A φ₁ + B φ₂ = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionSpec {
    pub a: CMatrix,
    pub b: CMatrix,
    pub kind: OperatorKind,
}

/// Diagonal endpoint data of a graph together with the fixed matrices of
/// the boundary symplectic form.
#[derive(Debug, Clone)]
pub struct DilationMatrices {
    /// `diag(a_1..a_E, b_1..b_E)`.
    pub d_ab: Vec<f64>,
    /// `diag(+1_E, -1_E)`.
    pub i_pm: Vec<f64>,
    pub u: CMatrix,
    pub j: CMatrix,
}

impl DilationMatrices {
    pub fn new(graph: &MetricGraph) -> Self {
        let e = graph.edge_count();
        let mut d_ab = graph.a_values();
        d_ab.extend(graph.b_values());
        let i_pm = (0..2 * e).map(|i| if i < e { 1.0 } else { -1.0 }).collect();
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let u = CMatrix::from_fn(2 * e, 2 * e, |r, col| {
            let (br, bc) = (r / e, col / e);
            if r % e != col % e {
                return c64(0.0, 0.0);
            }
            match (br, bc) {
                (0, 0) => c64(0.0, s),
                (0, 1) => c64(s, 0.0),
                (1, 0) => c64(-s, 0.0),
                _ => c64(0.0, -s),
            }
        });
        let j = CMatrix::from_fn(2 * e, 2 * e, |r, col| {
            if r + e == col {
                c64(1.0, 0.0)
            } else if col + e == r {
                c64(-1.0, 0.0)
            } else {
                c64(0.0, 0.0)
            }
        });
        DilationMatrices { d_ab, i_pm, u, j }
    }

    pub fn edges(&self) -> usize {
        self.d_ab.len() / 2
    }

    /// `D^{p}` as a dense diagonal matrix.
    pub fn d_pow(&self, p: f64) -> CMatrix {
        let v: Vec<f64> = self.d_ab.iter().map(|&x| libm::pow(x, p)).collect();
        linalg::diag_real(&v)
    }

    pub fn i_pm_matrix(&self) -> CMatrix {
        linalg::diag_real(&self.i_pm)
    }

    /// Residual of `U (i I_±) U^dagger - J`.
    pub fn symplectic_residual(&self) -> f64 {
        let ii = self.i_pm_matrix() * c64(0.0, 1.0);
        linalg::max_abs(&(&self.u * ii * self.u.adjoint() - &self.j))
    }
}

/// Check the Lagrangian conditions `A B^dagger = B A^dagger`, `rank(A, B) = m`
/// and invertibility of `A ± iB`.
pub fn validate_extension(a: CMatrix, b: CMatrix, kind: OperatorKind) -> Result<ExtensionSpec> {
    let m = a.nrows();
    for (what, mat) in [("A", &a), ("B", &b)] {
        if mat.nrows() != m || mat.ncols() != m {
            return Err(Error::DimensionMismatch {
                what,
                expected: m,
                got: if mat.nrows() != m { mat.nrows() } else { mat.ncols() },
            });
        }
    }
    if m == 0 {
        return Err(Error::DimensionMismatch { what: "A", expected: 1, got: 0 });
    }
    if a.iter().chain(b.iter()).any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::InvalidParameter { name: "A, B", reason: "entries must be finite".into() });
    }
    let scale = 1.0f64.max(linalg::max_abs(&a)).max(linalg::max_abs(&b));
    let residual = linalg::max_abs(&(&a * b.adjoint() - &b * a.adjoint()));
    if residual > 1e-12 * scale * scale {
        return Err(Error::HermiticityViolation { residual });
    }
    let mut ab = CMatrix::zeros(m, 2 * m);
    ab.view_mut((0, 0), (m, m)).copy_from(&a);
    ab.view_mut((0, m), (m, m)).copy_from(&b);
    let r = linalg::rank(&ab, RANK_RTOL);
    if r < m {
        return Err(Error::RankDeficient { rank: r, expected: m });
    }
    for sign in [1.0, -1.0] {
        let mat = &a + &b * c64(0.0, sign);
        let sv = linalg::singular_values(&mat);
        if sv.last().copied().unwrap_or(0.0) <= RANK_RTOL * sv[0] {
            return Err(Error::RankDeficient { rank: linalg::rank(&mat, RANK_RTOL), expected: m });
        }
    }
    Ok(ExtensionSpec { a, b, kind })
}

impl ExtensionSpec {
    pub fn dimension(&self) -> usize {
        self.a.nrows()
    }

    /// BK boundary data realising a prescribed unitary S-matrix.
    pub fn from_scattering(s: &CMatrix) -> Result<Self> {
        let res = linalg::unitarity_residual(s);
        if res > 1e-10 {
            return Err(Error::NotUnitary { residual: res });
        }
        let n = s.nrows();
        let id = linalg::identity(n);
        let a = (&id - s * c64(0.0, 1.0)) * c64(0.5, 0.0);
        let b = (s - &id * c64(0.0, 1.0)) * c64(0.5, 0.0);
        validate_extension(a, b, OperatorKind::Bk)
    }

    /// BK2 boundary data from conditions written for the logarithmic
    /// variable `y = ln x` with `φ(y) = √x ψ(x)`: `A_L φ + B_L φ' = 0`,
    /// where `φ'` is the derivative pointing into the edge.
    pub fn from_log_picture(a_log: &CMatrix, b_log: &CMatrix, dil: &DilationMatrices) -> Result<Self> {
        let m = 2 * dil.edges();
        for (what, mat) in [("A_L", a_log), ("B_L", b_log)] {
            if mat.nrows() != m || mat.ncols() != m {
                return Err(Error::DimensionMismatch { what, expected: m, got: mat.nrows() });
            }
        }
        let a = (a_log + b_log * dil.i_pm_matrix() * c64(0.5, 0.0)) * dil.d_pow(-0.5);
        let b = b_log * dil.d_pow(0.5);
        validate_extension(a, b, OperatorKind::Bk2)
    }
}

/// The BK S-matrix `i (A + iB)^{-1} (A - iB)`.
pub fn s_matrix_bk(spec: &ExtensionSpec) -> Result<CMatrix> {
    if spec.kind != OperatorKind::Bk {
        return Err(Error::InvalidParameter { name: "kind", reason: "BK S-matrix needs a BK extension".into() });
    }
    let plus = &spec.a + &spec.b * c64(0.0, 1.0);
    let minus = &spec.a - &spec.b * c64(0.0, 1.0);
    let inv = plus.try_inverse().ok_or(Error::RankDeficient { rank: 0, expected: spec.dimension() })?;
    Ok(inv * minus * c64(0.0, 1.0))
}

/// Projector and Robin-part decomposition of BK2 boundary data.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub p_ker: CMatrix,
    pub p_perp: CMatrix,
    pub l_prime: CMatrix,
    pub l_dprime: CMatrix,
    pub a_dprime: CMatrix,
    pub b_dprime: CMatrix,
    /// Eigenvalues of `L''` on the range of `P_perp`, ascending.
    pub eigenvalues: Vec<f64>,
    /// Matching orthonormal eigenvectors (columns, full space).
    pub eigenvectors: CMatrix,
}

/// Options for [`kuchment_decompose`].
#[derive(Debug, Clone, Copy)]
pub struct DecomposeOptions {
    pub rank_rtol: f64,
    pub rank_band: f64,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions { rank_rtol: RANK_RTOL, rank_band: RANK_BAND }
    }
}

pub fn kuchment_decompose(spec: &ExtensionSpec, dil: &DilationMatrices) -> Result<Decomposition> {
    kuchment_decompose_with(spec, dil, DecomposeOptions::default())
}

pub fn kuchment_decompose_with(
    spec: &ExtensionSpec,
    dil: &DilationMatrices,
    opts: DecomposeOptions,
) -> Result<Decomposition> {
    let m = 2 * dil.edges();
    if spec.kind != OperatorKind::Bk2 {
        return Err(Error::InvalidParameter { name: "kind", reason: "decomposition needs a BK2 extension".into() });
    }
    if spec.dimension() != m {
        return Err(Error::DimensionMismatch { what: "boundary matrices", expected: m, got: spec.dimension() });
    }
    let a1 = &spec.a * dil.d_pow(0.5);
    let b1 = &spec.b * dil.d_pow(-0.5);
    let (p_ker, _) = linalg::kernel_projector(&b1, opts.rank_rtol, opts.rank_band)?;
    let id = linalg::identity(m);
    let p_perp = &id - &p_ker;
    let l1 = &p_perp * linalg::pseudo_inverse(&b1, opts.rank_rtol) * &a1 * &p_perp;
    let scale = 1.0f64.max(linalg::max_abs(&l1));
    let herm = linalg::hermiticity_residual(&l1);
    if herm > 1e-8 * scale {
        return Err(Error::HermiticityViolation { residual: herm });
    }
    let l_prime = (&l1 + l1.adjoint()) * c64(0.5, 0.0);
    let l2 = &p_perp * (&l_prime - dil.i_pm_matrix() * c64(0.5, 0.0)) * &p_perp;
    let l_dprime = (&l2 + l2.adjoint()) * c64(0.5, 0.0);
    let w = linalg::range_basis(&p_perp);
    let (mut eigenvalues, vecs) = linalg::hermitian_eigen(&(w.adjoint() * &l_dprime * &w));
    // round-off must not turn a Neumann-type direction into a Robin one
    let zero = ZERO_EIGENVALUE_RTOL * 1.0f64.max(linalg::max_abs(&l_dprime));
    for l in eigenvalues.iter_mut().filter(|l| l.abs() <= zero) {
        *l = 0.0;
    }
    let eigenvectors = &w * vecs;
    Ok(Decomposition {
        a_dprime: &p_ker + &l_dprime,
        b_dprime: p_perp.clone(),
        p_ker,
        p_perp,
        l_prime,
        l_dprime,
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalue of `S''(k)` along an eigenvector of `L''` with eigenvalue `lambda`.
#[inline]
pub fn robin_phase(lambda: f64, k: Complex64) -> Result<Complex64> {
    if lambda == 0.0 {
        return Ok(c64(1.0, 0.0));
    }
    let den = c64(lambda, 0.0) + c64(0.0, 1.0) * k;
    if den.norm() <= 1e-13 * lambda.abs() {
        return Err(Error::SingularAtK { k: k.im });
    }
    Ok(-(c64(lambda, 0.0) - c64(0.0, 1.0) * k) / den)
}

/// Derivative in `k` of [`robin_phase`].
#[inline]
pub fn robin_phase_derivative(lambda: f64, k: Complex64) -> Complex64 {
    if lambda == 0.0 {
        return c64(0.0, 0.0);
    }
    let den = c64(lambda, 0.0) + c64(0.0, 1.0) * k;
    c64(0.0, 2.0 * lambda) / (den * den)
}

impl Decomposition {
    /// Dimension `2E`.
    pub fn dimension(&self) -> usize {
        self.p_ker.nrows()
    }

    /// True when `L'' = 0`, i.e. the vertex matrix does not depend on `k`.
    pub fn is_k_independent(&self, tol: f64) -> bool {
        self.eigenvalues.iter().all(|l| l.abs() <= tol)
    }

    /// Smallest positive eigenvalue of `L''`, if any.
    pub fn min_positive_eigenvalue(&self) -> Option<f64> {
        self.eigenvalues.iter().copied().filter(|&l| l > 0.0).reduce(f64::min)
    }

    fn spectral_sum(&self, f: impl Fn(f64) -> Result<Complex64>, kernel_value: Complex64) -> Result<CMatrix> {
        let mut s = &self.p_ker * kernel_value;
        for (j, &lambda) in self.eigenvalues.iter().enumerate() {
            let v = self.eigenvectors.column(j);
            s += v * v.adjoint() * f(lambda)?;
        }
        Ok(s)
    }

    /// `dS''/dk`.
    pub fn s_matrix_derivative(&self, k: Complex64) -> Result<CMatrix> {
        self.spectral_sum(|l| Ok(robin_phase_derivative(l, k)), c64(0.0, 0.0))
    }
}

/// The BK2 vertex matrix `S''(k) = -(A'' - ikB'')(A'' + ikB'')^{-1}`, built
/// from the spectral decomposition of `L''`. At `k = 0` directions with
/// `λ = 0` take their limit `+1`.
pub fn s_matrix_bk2(dec: &Decomposition, k: Complex64) -> Result<CMatrix> {
    dec.spectral_sum(|l| robin_phase(l, k), c64(-1.0, 0.0))
}

/// The same matrix by direct inversion; used to cross-check the spectral route.
pub fn s_matrix_bk2_direct(dec: &Decomposition, k: Complex64) -> Result<CMatrix> {
    let ik = c64(0.0, 1.0) * k;
    let plus = &dec.a_dprime + &dec.b_dprime * ik;
    let minus = &dec.a_dprime - &dec.b_dprime * ik;
    let inv = plus.try_inverse().ok_or(Error::SingularAtK { k: k.im })?;
    Ok(-(minus * inv))
}

/// Result of [`squared_extension`].
#[derive(Debug, Clone)]
pub struct SquaredExtension {
    pub spec: ExtensionSpec,
    pub decomposition: Decomposition,
    /// `[[0, S], [S^dagger, 0]]`.
    pub s_matrix: CMatrix,
    /// Max deviation of the decomposed vertex matrix from the block form.
    pub block_residual: f64,
}

/// BK2 boundary data of the square of the BK extension with S-matrix `s`.
pub fn squared_extension(s: &CMatrix, graph: &MetricGraph) -> Result<SquaredExtension> {
    let e = graph.edge_count();
    if s.nrows() != e || s.ncols() != e {
        return Err(Error::DimensionMismatch { what: "S-matrix", expected: e, got: s.nrows() });
    }
    let res = linalg::unitarity_residual(s);
    if res > 1e-10 {
        return Err(Error::NotUnitary { residual: res });
    }
    let dil = DilationMatrices::new(graph);
    let sq = |v: &[f64], p: f64| linalg::diag_real(&v.iter().map(|&x| libm::pow(x, p)).collect::<Vec<_>>());
    let (av, bv) = (graph.a_values(), graph.b_values());
    let upper = sq(&av, 0.5) * s * sq(&bv, -0.5);
    let lower = sq(&av, -0.5) * s * sq(&bv, 0.5);
    let mut a = CMatrix::zeros(2 * e, 2 * e);
    let mut b = CMatrix::zeros(2 * e, 2 * e);
    for i in 0..e {
        a[(i, i)] = c64(-1.0, 0.0);
        b[(e + i, i)] = c64(1.0, 0.0);
    }
    a.view_mut((0, e), (e, e)).copy_from(&upper);
    b.view_mut((e, e), (e, e)).copy_from(&lower);
    let spec = validate_extension(a, b, OperatorKind::Bk2)?;
    let decomposition = kuchment_decompose(&spec, &dil)?;
    let mut block = CMatrix::zeros(2 * e, 2 * e);
    block.view_mut((0, e), (e, e)).copy_from(s);
    block.view_mut((e, 0), (e, e)).copy_from(&s.adjoint());
    let got = s_matrix_bk2(&decomposition, c64(1.0, 0.0))?;
    let block_residual = linalg::max_abs(&(&got - &block));
    Ok(SquaredExtension { spec, decomposition, s_matrix: block, block_residual })
}

/// If `s2` has the block form `[[0, X], [X^dagger, 0]]` with `X` unitary,
/// return `X`: only such vertex matrices arise from squaring a BK extension.
pub fn squared_block(s2: &CMatrix, tol: f64) -> Option<CMatrix> {
    let n = s2.nrows();
    if n % 2 != 0 || s2.ncols() != n {
        return None;
    }
    let e = n / 2;
    let x = s2.view((0, e), (e, e)).into_owned();
    let y = s2.view((e, 0), (e, e)).into_owned();
    let diag_blocks = linalg::max_abs(&s2.view((0, 0), (e, e)).into_owned())
        .max(linalg::max_abs(&s2.view((e, e), (e, e)).into_owned()));
    if diag_blocks > tol || linalg::max_abs(&(&y - x.adjoint())) > tol || linalg::unitarity_residual(&x) > tol {
        return None;
    }
    Some(x)
}

/// Named boundary conditions.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryCondition {
    /// BK: every vertex has one incoming and one outgoing edge; the
    /// S-matrix is the induced permutation times `e^{-2πic}`.
    RingPhase { c: f64 },
    /// BK on a balanced directed graph: a discrete Fourier block at each
    /// vertex times `e^{-2πic}`.
    BalancedFourier { c: f64 },
    /// BK with a prescribed unitary S-matrix.
    Scattering(CMatrix),
    /// BK2: `ψ = 0` at every endpoint.
    Dirichlet,
    /// BK2: vanishing derivative of `√x ψ` in `ln x` at every endpoint.
    Neumann,
    /// BK2: Robin parameter per endpoint (one value broadcasts).
    Robin(Vec<f64>),
    /// BK2: continuity and zero derivative sum at each vertex, in the
    /// logarithmic variable.
    Kirchhoff,
    /// BK2 conditions `A_L φ + B_L φ' = 0` in the logarithmic variable.
    LogPicture { a: CMatrix, b: CMatrix },
    /// Raw matrices.
    Matrices { kind: OperatorKind, a: CMatrix, b: CMatrix },
}

impl BoundaryCondition {
    pub fn operator_kind(&self) -> OperatorKind {
        match self {
            BoundaryCondition::RingPhase { .. }
            | BoundaryCondition::BalancedFourier { .. }
            | BoundaryCondition::Scattering(_) => OperatorKind::Bk,
            BoundaryCondition::Matrices { kind, .. } => *kind,
            _ => OperatorKind::Bk2,
        }
    }
}

fn fourier_scattering(graph: &MetricGraph, c: f64, ring_only: bool) -> Result<CMatrix> {
    if !(0.0..1.0).contains(&c) {
        return Err(Error::InvalidParameter { name: "c", reason: format!("must lie in [0, 1), got {c}") });
    }
    let e = graph.edge_count();
    let phase = Complex64::from_polar(1.0, -TAU * c);
    let mut s = CMatrix::zeros(e, e);
    for v in 0..graph.vertex_count() {
        let (inc, out) = (graph.incoming(v), graph.outgoing(v));
        if inc.len() != out.len() || (ring_only && inc.len() != 1) {
            let condition = if ring_only { "ring-phase" } else { "balanced-fourier" };
            return Err(Error::UnsupportedCondition {
                condition,
                reason: format!(
                    "vertex {} has in-degree {} and out-degree {}",
                    graph.vertices()[v],
                    inc.len(),
                    out.len()
                ),
            });
        }
        let d = inc.len();
        let norm = 1.0 / libm::sqrt(d as f64);
        for (i, &o) in out.iter().enumerate() {
            for (j, &n) in inc.iter().enumerate() {
                let w = Complex64::from_polar(norm, -TAU * (i * j) as f64 / d as f64);
                s[(o, n)] = phase * w;
            }
        }
    }
    Ok(s)
}

/// Boundary matrices realising a named condition on `graph`.
pub fn standard_bc(bc: &BoundaryCondition, graph: &MetricGraph) -> Result<ExtensionSpec> {
    let e = graph.edge_count();
    let m = 2 * e;
    let dil = DilationMatrices::new(graph);
    let zero = CMatrix::zeros(m, m);
    let id = linalg::identity(m);
    match bc {
        BoundaryCondition::RingPhase { c } => ExtensionSpec::from_scattering(&fourier_scattering(graph, *c, true)?),
        BoundaryCondition::BalancedFourier { c } => {
            ExtensionSpec::from_scattering(&fourier_scattering(graph, *c, false)?)
        }
        BoundaryCondition::Scattering(s) => {
            if s.nrows() != e || s.ncols() != e {
                return Err(Error::DimensionMismatch { what: "S-matrix", expected: e, got: s.nrows() });
            }
            ExtensionSpec::from_scattering(s)
        }
        BoundaryCondition::Dirichlet => validate_extension(id, zero, OperatorKind::Bk2),
        BoundaryCondition::Neumann => ExtensionSpec::from_log_picture(&zero, &id, &dil),
        BoundaryCondition::Robin(rho) => {
            let rho: Vec<f64> = match rho.len() {
                1 => alloc::vec![rho[0]; m],
                n if n == m => rho.clone(),
                n => return Err(Error::DimensionMismatch { what: "Robin parameters", expected: m, got: n }),
            };
            if rho.iter().any(|r| !r.is_finite()) {
                return Err(Error::InvalidParameter { name: "rho", reason: "must be finite".into() });
            }
            ExtensionSpec::from_log_picture(&linalg::diag_real(&rho), &id, &dil)
        }
        BoundaryCondition::Kirchhoff => {
            let mut a = CMatrix::zeros(m, m);
            let mut b = CMatrix::zeros(m, m);
            let mut row = 0;
            for v in 0..graph.vertex_count() {
                let ends = graph.endpoints_at(v);
                for w in ends.windows(2) {
                    a[(row, w[0])] = c64(1.0, 0.0);
                    a[(row, w[1])] = c64(-1.0, 0.0);
                    row += 1;
                }
                for &p in &ends {
                    b[(row, p)] = c64(1.0, 0.0);
                }
                row += 1;
            }
            ExtensionSpec::from_log_picture(&a, &b, &dil)
        }
        BoundaryCondition::LogPicture { a, b } => ExtensionSpec::from_log_picture(a, b, &dil),
        BoundaryCondition::Matrices { kind, a, b } => {
            let want = kind.boundary_rank(e);
            if a.nrows() != want {
                return Err(Error::DimensionMismatch { what: "A", expected: want, got: a.nrows() });
            }
            validate_extension(a.clone(), b.clone(), *kind)
        }
    }
}
