//! Geometric side of the trace formulas.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use super::TestFunction;
use crate::graph::{enumerate_orbits, orbit_amplitude, BondPattern, PeriodicOrbit};
use crate::linalg::{self, c64};
use crate::quad;
use crate::spectra::{find_negative_eigenvalues, zero_mode_test, SecularSystem, ZeroMode};
use crate::{CMatrix, Complex64, Error, OperatorKind, Result, TAU};

/// Accuracy targets for a trace check.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceOptions {
    /// Longest orbit included; chosen from the tail bound when `None`.
    pub orbit_cutoff: Option<f64>,
    /// Target for the orbit tail bound when choosing the cutoff.
    pub eps: f64,
    /// Largest acceptable bound on the unscanned part of the spectral sum.
    pub lhs_tol: f64,
    /// Convergence tolerance of the oscillatory quadratures.
    pub quad_tol: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions { orbit_cutoff: None, eps: 1e-11, lhs_tol: 1e-9, quad_tol: 1e-13 }
    }
}

/// Itemized right-hand side of a trace formula.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceTerms {
    pub kind: OperatorKind,
    /// `𝔏 ĥ(0)`.
    pub weyl: f64,
    /// `(g0 - N/2) h(0)`; zero for BK.
    pub boundary: f64,
    /// `-(1/4π) ∫ h(k) Im tr S''(k) / k dk`; zero for BK.
    pub s_integral: f64,
    pub orbit_sum: f64,
    pub orbit_count: usize,
    pub orbit_cutoff: f64,
    /// Bound on the omitted orbits (may be infinite when no bound is available).
    pub orbit_tail_bound: f64,
    /// Convergence estimate of the quadratures.
    pub quadrature_error: f64,
    pub l_min: f64,
    /// Minimiser of `𝔩(κ)` and its value, when `L''` has positive eigenvalues.
    pub sigma: Option<f64>,
    pub l_sigma: Option<f64>,
    /// Imaginary shift of the contour behind the tail bound.
    pub contour_shift: Option<f64>,
    pub zero_mode: Option<ZeroMode>,
}

impl TraceTerms {
    pub fn total(&self) -> f64 {
        self.weyl + self.boundary + self.s_integral + self.orbit_sum
    }
}

fn abs_matrix(s: &CMatrix) -> DMatrix<f64> {
    s.map(|z| z.norm())
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.iter().sum::<f64>()).fold(0.0, f64::max)
}

/// Rigorous bound on `Σ_{ℓ_γ > L} coef·|A_γ ĥ(ℓ_γ)|` for a constant bond
/// matrix. Orbits with `n` bonds contribute at most
/// `coef · tr(|S|^n) / n · sup_{ℓ ≥ max(L, n ℓ_min)} ℓ|ĥ(ℓ)|`.
fn constant_tail_bound(abs: &DMatrix<f64>, lmin: f64, coef: f64, h: &TestFunction, cutoff: f64) -> f64 {
    let m = abs.nrows() as f64;
    let nu = inf_norm(abs);
    let mut p = abs.clone();
    let mut log_scale = 0.0;
    let mut sum = 0.0;
    for n in 1..=100_000usize {
        if n > 1 {
            p = &p * abs;
            let mx = p.max();
            if mx == 0.0 {
                return sum;
            }
            p /= mx;
            log_scale += libm::log(mx);
        }
        let nf = n as f64;
        let w = h.hat_weighted_envelope(cutoff.max(nf * lmin));
        if w == 0.0 {
            return sum;
        }
        let tr = p.trace();
        if tr > 0.0 {
            sum += coef * libm::exp(libm::log(tr) + log_scale + libm::log(w) - libm::log(nf));
        }
        if nf * lmin >= cutoff && nf * lmin >= libm::sqrt(8.0) {
            // geometric remainder with ratio r for every later step
            let w_next = h.hat_weighted_envelope((nf + 1.0) * lmin);
            let r = nu * w_next / w;
            if r <= 0.5 {
                let a = coef * m * libm::exp(libm::log(inf_norm(&p)) + log_scale + libm::log(w) - libm::log(nf));
                return sum + 2.0 * r * a;
            }
        }
    }
    f64::INFINITY
}

fn auto_cutoff(lmin: f64, eps: f64, bound: impl Fn(f64) -> f64) -> Result<f64> {
    let mut l = lmin;
    while bound(l) > eps {
        l += 0.25 * lmin;
        if l > 1e4 * lmin {
            return Err(Error::ConvergenceFailure { what: "orbit cutoff selection", remainder: bound(l) });
        }
    }
    Ok(l)
}

struct OrbitSum {
    value: f64,
    count: usize,
    cutoff: f64,
    tail: f64,
}

fn constant_orbit_sum(
    s: &CMatrix,
    lengths: &[f64],
    coef: f64,
    h: &TestFunction,
    opts: &TraceOptions,
) -> Result<OrbitSum> {
    let abs = abs_matrix(s);
    let lmin = lengths.iter().copied().fold(f64::INFINITY, f64::min);
    let bound = |l: f64| constant_tail_bound(&abs, lmin, coef, h, l);
    let cutoff = match opts.orbit_cutoff {
        Some(c) => c,
        None => auto_cutoff(lmin, opts.eps, bound)?,
    };
    let orbits = enumerate_orbits(&BondPattern::from_matrix(s, 1e-14), lengths, cutoff)?;
    let value = orbits.iter().map(|o| coef * orbit_amplitude(o, s).re * h.hat(o.length)).sum();
    Ok(OrbitSum { value, count: orbits.len(), cutoff, tail: bound(cutoff) })
}

fn check_options(opts: &TraceOptions) -> Result<()> {
    if let Some(c) = opts.orbit_cutoff {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "orbit_cutoff",
                reason: "must be finite and non-negative".into(),
            });
        }
    }
    for (name, v) in [("eps", opts.eps), ("lhs_tol", opts.lhs_tol), ("quad_tol", opts.quad_tol)] {
        if !(v > 0.0) {
            return Err(Error::InvalidParameter { name, reason: "must be positive".into() });
        }
    }
    Ok(())
}

/// `𝔏ĥ(0) + 2 Σ_γ Re(A_γ) ĥ(ℓ_γ)` for a BK system.
pub fn trace_rhs_bk(sys: &SecularSystem, h: &TestFunction, opts: &TraceOptions) -> Result<TraceTerms> {
    if sys.kind() != OperatorKind::Bk {
        return Err(Error::InvalidParameter { name: "kind", reason: "expected a BK system".into() });
    }
    check_options(opts)?;
    let s = sys.vertex_matrix(c64(0.0, 0.0))?;
    let orbits = constant_orbit_sum(&s, &sys.bond_lengths(), 2.0, h, opts)?;
    Ok(TraceTerms {
        kind: OperatorKind::Bk,
        weyl: sys.total_length() * h.hat(0.0),
        boundary: 0.0,
        s_integral: 0.0,
        orbit_sum: orbits.value,
        orbit_count: orbits.count,
        orbit_cutoff: orbits.cutoff,
        orbit_tail_bound: orbits.tail,
        quadrature_error: 0.0,
        l_min: sys.min_length(),
        sigma: None,
        l_sigma: None,
        contour_shift: None,
        zero_mode: None,
    })
}

/// `𝔩(κ) = (ln(2E) + ln((λ+κ)/(λ-κ))) / κ` for `0 < κ < λ`.
pub fn orbit_convergence_length(bonds: usize, lambda: f64, kappa: f64) -> f64 {
    (libm::log(bonds as f64) + libm::log((lambda + kappa) / (lambda - kappa))) / kappa
}

/// Minimiser `σ` of [`orbit_convergence_length`] over `(0, λ)` and `𝔩(σ)`,
/// by golden-section search.
pub fn sigma_and_length(bonds: usize, lambda: f64) -> (f64, f64) {
    let f = |k: f64| orbit_convergence_length(bonds, lambda, k);
    let g = 0.5 * (libm::sqrt(5.0) - 1.0);
    let (mut a, mut b) = (lambda * 1e-9, lambda * (1.0 - 1e-12));
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        if b - a < 1e-15 * lambda {
            break;
        }
    }
    let s = 0.5 * (a + b);
    (s, f(s))
}

/// Entrywise majorant of `|S_bond(k + iη)|` over real `k`.
fn bond_majorant(sys: &SecularSystem, eta: f64) -> DMatrix<f64> {
    let dec = sys.decomposition().expect("BK2 system");
    let m = dec.dimension();
    let mut out = abs_matrix(&dec.p_ker);
    for (j, &lambda) in dec.eigenvalues.iter().enumerate() {
        let q = if lambda >= 0.0 { (lambda + eta) / (lambda - eta).abs() } else { 1.0 };
        let v: Vec<f64> = dec.eigenvectors.column(j).iter().map(|z| z.norm()).collect();
        for a in 0..m {
            for b in 0..m {
                out[(a, b)] += q * v[a] * v[b];
            }
        }
    }
    // S_bond = S'' · swap
    let e = m / 2;
    DMatrix::from_fn(m, m, |i, j| out[(i, (j + e) % m)])
}

/// One admissible contour: tail(L) ≤ coef · e^{-rate·L}.
#[derive(Clone, Copy)]
struct Contour {
    eta: f64,
    coef: f64,
    rate: f64,
}

impl Contour {
    fn bound(&self, l: f64) -> f64 {
        self.coef * libm::exp(-self.rate * l)
    }
}

/// Contours `Im k = η` with `η` below every pole of `S''` and every bound
/// state, and a split `e^{-ηℓ} ≤ e^{-θηL} e^{-(1-θ)ηℓ}` on the omitted
/// orbits. With `M = |S_bond| diag(e^{-(1-θ)ηℓ_b})` and `ρ(M) < 1`,
/// `Σ_γ |P_γ| e^{-(1-θ)ηℓ_γ} / r_γ ≤ -ln det(I - M)`.
fn contours(sys: &SecularSystem, h: &TestFunction, eta_cap: f64) -> Vec<Contour> {
    let lengths = sys.bond_lengths();
    let mut out = Vec::new();
    for i in 1..=40 {
        let eta = eta_cap * i as f64 / 41.0;
        let Some(jint) = h.derivative_strip_integral(eta) else { continue };
        let abs = bond_majorant(sys, eta);
        for j in 1..20 {
            let theta = j as f64 / 20.0;
            let mm = DMatrix::from_fn(abs.nrows(), abs.ncols(), |a, b| {
                abs[(a, b)] * libm::exp(-(1.0 - theta) * eta * lengths[b])
            });
            if linalg::spectral_radius_bound(&mm) >= 1.0 - 1e-9 {
                continue;
            }
            let cm: CMatrix = mm.map(|x| c64(x, 0.0));
            let det = (linalg::identity(cm.nrows()) - &cm).determinant().re;
            if !(det > 0.0) {
                continue;
            }
            out.push(Contour { eta, coef: jint / TAU * -libm::log(det), rate: theta * eta });
        }
    }
    out
}

fn robin_orbit_sum(
    sys: &SecularSystem,
    h: &TestFunction,
    opts: &TraceOptions,
    eta_cap: f64,
) -> Result<(OrbitSum, f64, Option<f64>)> {
    let lmin = sys.min_length();
    let cs = contours(sys, h, eta_cap);
    let best = |l: f64| cs.iter().map(|c| c.bound(l)).fold(f64::INFINITY, f64::min);
    let cutoff = match opts.orbit_cutoff {
        Some(c) => c,
        None => {
            let l = cs.iter().map(|c| libm::log(c.coef.max(1e-300) / opts.eps) / c.rate).fold(f64::INFINITY, f64::min);
            if !l.is_finite() {
                return Err(Error::ConvergenceFailure { what: "orbit tail bound", remainder: f64::INFINITY });
            }
            l.max(lmin)
        }
    };
    let tail = best(cutoff);
    let shift = cs.iter().min_by(|a, b| a.bound(cutoff).total_cmp(&b.bound(cutoff))).map(|c| c.eta);
    let lengths = sys.bond_lengths();
    let abs = bond_majorant(sys, 0.5 * eta_cap);
    let pattern = BondPattern::from_fn(abs.nrows(), |from, to| abs[(to, from)] > 1e-14);
    let orbits = enumerate_orbits(&pattern, &lengths, cutoff)?;
    let (value, err) = robin_orbit_integrals(sys, h, &orbits, opts)?;
    Ok((OrbitSum { value, count: orbits.len(), cutoff, tail }, err, shift))
}

/// `-(1/2π) Im ∫ h'(k) P_γ(k) e^{ikℓ_γ} / r_γ dk` for every orbit, which is
/// the orbit term `(1/2π) Im ∫ h(k) d/dk[P_γ e^{ikℓ_γ} / r_γ] dk` after
/// integration by parts.
fn robin_orbit_integrals(
    sys: &SecularSystem,
    h: &TestFunction,
    orbits: &[PeriodicOrbit],
    opts: &TraceOptions,
) -> Result<(f64, f64)> {
    if orbits.is_empty() {
        return Ok((0.0, 0.0));
    }
    let kmax = h.cutoff(1e-20);
    let lmax = orbits.iter().map(|o| o.length).fold(0.0, f64::max);
    let panels = libm::ceil(lmax * kmax / core::f64::consts::PI) as usize + 16;
    let mut failure = None;
    let (vals, err) = quad::composite_converged(
        |k, out: &mut [Complex64]| {
            let hp = h.derivative_complex(c64(k, 0.0)).map(|z| z.re).unwrap_or(0.0);
            match sys.bond_matrix(c64(k, 0.0)) {
                Ok(s) => {
                    for (o, slot) in orbits.iter().zip(out.iter_mut()) {
                        let phase = c64(0.0, k * o.length).exp();
                        *slot = o.product(&s) * phase * (hp / o.repetition as f64);
                    }
                }
                Err(e) => {
                    failure.get_or_insert(e);
                    out.iter_mut().for_each(|x| *x = c64(0.0, 0.0));
                }
            }
        },
        -kmax,
        kmax,
        orbits.len(),
        panels,
        opts.quad_tol,
        1 << 20,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((-vals.iter().map(|v| v.im).sum::<f64>() / TAU, err * orbits.len() as f64 / TAU))
}

/// `-(1/2π) ∫_0^∞ h(k) Σ_j 2λ_j / (λ_j² + k²) dk`.
fn s_integral(lambdas: &[f64], h: &TestFunction, opts: &TraceOptions) -> Result<(f64, f64)> {
    let lambdas: Vec<f64> = lambdas.iter().copied().filter(|l| *l != 0.0).collect();
    if lambdas.is_empty() {
        return Ok((0.0, 0.0));
    }
    let kmax = h.cutoff(1e-18);
    let lam_min = lambdas.iter().fold(f64::INFINITY, |m, l| m.min(l.abs()));
    let panels = libm::ceil(kmax / lam_min.min(1.0)) as usize + 32;
    let (v, err) = quad::composite_converged(
        |k, out: &mut [Complex64]| {
            let s: f64 = lambdas.iter().map(|l| 2.0 * l / (l * l + k * k)).sum();
            out[0] = c64(h.eval(k) * s, 0.0);
        },
        0.0,
        kmax,
        1,
        panels,
        opts.quad_tol,
        1 << 22,
    )?;
    Ok((-v[0].re / TAU, err / TAU))
}

/// Right-hand side for a BK2 system:
/// `𝔏ĥ(0) + (g0 - N/2) h(0) + S-integral + orbit sum`.
///
/// Orbits live on the `2E` directed bonds with amplitude `ℓ_γp ∏ S_bond`.
/// For a `k`-independent vertex matrix each orbit contributes
/// `Re(A_γ) ĥ(ℓ_γ)`; otherwise the orbit integrals are done by quadrature
/// and `ℓ_min > 𝔩(σ)` is required.
pub fn trace_rhs_bk2(sys: &SecularSystem, h: &TestFunction, opts: &TraceOptions) -> Result<TraceTerms> {
    let dec = sys
        .decomposition()
        .ok_or_else(|| Error::InvalidParameter { name: "kind", reason: "expected a BK2 system".into() })?;
    check_options(opts)?;
    let zm = zero_mode_test(sys, 1.0)?;
    let h0 = h.eval(0.0);
    let mut terms = TraceTerms {
        kind: OperatorKind::Bk2,
        weyl: sys.total_length() * h.hat(0.0),
        boundary: (zm.g0 as f64 - 0.5 * zm.n as f64) * h0,
        s_integral: 0.0,
        orbit_sum: 0.0,
        orbit_count: 0,
        orbit_cutoff: 0.0,
        orbit_tail_bound: 0.0,
        quadrature_error: 0.0,
        l_min: sys.min_length(),
        sigma: None,
        l_sigma: None,
        contour_shift: None,
        zero_mode: Some(zm),
    };
    if sys.is_k_independent() {
        let s = sys.bond_matrix(c64(1.0, 0.0))?;
        let o = constant_orbit_sum(&s, &sys.bond_lengths(), 1.0, h, opts)?;
        terms.orbit_sum = o.value;
        terms.orbit_count = o.count;
        terms.orbit_cutoff = o.cutoff;
        terms.orbit_tail_bound = o.tail;
        return Ok(terms);
    }
    if !h.is_analytic() {
        return Err(Error::InvalidParameter {
            name: "test_function",
            reason: "k-dependent vertex conditions need an analytic test function".into(),
        });
    }
    let bonds = 2 * sys.lengths().len();
    let lam_min = dec.min_positive_eigenvalue();
    let mut eta_cap = 20.0 / sys.min_length();
    if let Some(lam) = lam_min {
        let (s, ls) = sigma_and_length(bonds, lam);
        terms.sigma = Some(s);
        terms.l_sigma = Some(ls);
        if sys.min_length() <= ls {
            return Err(Error::ConditionViolated { l_min: sys.min_length(), l_sigma: ls });
        }
        eta_cap = lam;
    }
    // bound states below the contour would add terms h(iκ)
    if let Some(first) = find_negative_eigenvalues(sys, eta_cap)?.first() {
        eta_cap = eta_cap.min(first.kappa);
    }
    let (si, si_err) = s_integral(&dec.eigenvalues, h, opts)?;
    let (o, q_err, shift) = robin_orbit_sum(sys, h, opts, eta_cap)?;
    terms.s_integral = si;
    terms.orbit_sum = o.value;
    terms.orbit_count = o.count;
    terms.orbit_cutoff = o.cutoff;
    terms.orbit_tail_bound = o.tail;
    terms.quadrature_error = si_err + q_err;
    terms.contour_shift = shift;
    Ok(terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extensions::{standard_bc, BoundaryCondition};
    use crate::graph::MetricGraph;

    #[test]
    fn sigma_minimises_length() {
        let (s, ls) = sigma_and_length(2, 1.0);
        for k in [0.3, 0.5, 0.6, 0.7, 0.9] {
            assert!(orbit_convergence_length(2, 1.0, k) >= ls - 1e-12);
        }
        assert!((0.55..0.75).contains(&s), "{s}");
        assert!((ls - 3.45).abs() < 0.02, "{ls}");
    }

    #[test]
    fn constant_tail_bound_dominates_true_tail() {
        // Dirichlet interval: orbits of length 2nℓ, amplitude 2ℓ
        let l = 0.8;
        let h = TestFunction::gaussian(1.0).unwrap();
        let abs = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        for cutoff in [2.0, 5.0, 9.0] {
            let bound = constant_tail_bound(&abs, l, 1.0, &h, cutoff);
            let exact: f64 =
                (1..200).map(|n| 2.0 * n as f64 * l).filter(|&len| len > cutoff).map(|len| 2.0 * l * h.hat(len)).sum();
            assert!(bound >= exact && bound < 1e3 * exact.max(1e-300) + 1e-300, "{bound} {exact}");
        }
    }

    #[test]
    fn cutoff_below_shortest_orbit_leaves_weyl_term() {
        let g = MetricGraph::new(alloc::vec![
            crate::graph::MetricEdge::new("a", "u", "v", 1.0, 3.0),
            crate::graph::MetricEdge::new("b", "v", "u", 1.0, 4.0),
        ])
        .unwrap();
        let s = CMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)]);
        let sys = SecularSystem::from_scattering(&g, s).unwrap();
        let h = TestFunction::gaussian(0.2).unwrap();
        let t = trace_rhs_bk(&sys, &h, &TraceOptions { orbit_cutoff: Some(1.0), ..Default::default() }).unwrap();
        assert_eq!(t.orbit_count, 0);
        assert_eq!(t.total(), g.total_length() * h.hat(0.0));
    }

    #[test]
    fn dirichlet_heat_trace_closed_form() {
        let l = 1.3;
        let g = MetricGraph::interval(1.0, libm::exp(l)).unwrap();
        let sys = SecularSystem::new(&g, &standard_bc(&BoundaryCondition::Dirichlet, &g).unwrap()).unwrap();
        let t = 0.4;
        let h = TestFunction::gaussian(t).unwrap();
        let terms = trace_rhs_bk2(&sys, &h, &TraceOptions::default()).unwrap();
        let c = 1.0 / (2.0 * libm::sqrt(core::f64::consts::PI * t));
        let lp = 2.0 * l;
        let expect =
            l * c - 0.5 + (1..50).map(|n| lp * c * libm::exp(-(n as f64 * lp).powi(2) / (4.0 * t))).sum::<f64>();
        assert!((terms.total() - expect).abs() < 1e-12, "{} vs {}", terms.total(), expect);
        assert_eq!(terms.boundary, -0.5);
        assert!(terms.orbit_tail_bound < 1e-10);
    }

    #[test]
    fn neumann_has_no_s_integral() {
        let g = MetricGraph::interval(1.0, 5.0).unwrap();
        let sys = SecularSystem::new(&g, &standard_bc(&BoundaryCondition::Neumann, &g).unwrap()).unwrap();
        let terms = trace_rhs_bk2(&sys, &TestFunction::gaussian(1.0).unwrap(), &TraceOptions::default()).unwrap();
        assert_eq!(terms.s_integral, 0.0);
        assert_eq!(terms.boundary, 0.5);
    }

    #[test]
    fn robin_condition_violation() {
        let g = MetricGraph::interval(1.0, libm::exp(2.0)).unwrap();
        let sys =
            SecularSystem::new(&g, &standard_bc(&BoundaryCondition::Robin(alloc::vec![1.0]), &g).unwrap()).unwrap();
        let r = trace_rhs_bk2(&sys, &TestFunction::gaussian(1.0).unwrap(), &TraceOptions::default());
        assert!(matches!(r, Err(Error::ConditionViolated { .. })), "{r:?}");
    }
}
