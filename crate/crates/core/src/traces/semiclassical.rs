use alloc::vec::Vec;

use crate::graph::MetricGraph;
use crate::spectra::{counting_function, weyl_fit, CountingSide, Spectrum, WeylFit};
use crate::{Error, Result, TAU};

const PI: f64 = core::f64::consts::PI;

/// The two evaluations of the Dirichlet heat trace on one edge.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HeatTrace {
    pub t: f64,
    /// `Σ_{n≥1} e^{-(πn/ℓ)² t}`.
    pub spectral: f64,
    /// `ℓ/(2√(πt)) - 1/2 + (ℓ/√(πt)) Σ_{m≥1} e^{-m²ℓ²/t}`.
    pub theta: f64,
    pub spectral_remainder: f64,
    pub theta_remainder: f64,
}

/// `Σ_{n≥1} e^{-a n²}` and a bound on the omitted terms.
fn gaussian_series(a: f64) -> (f64, f64) {
    let mut sum = 0.0;
    let mut n = 1.0f64;
    loop {
        let term = libm::exp(-a * n * n);
        sum += term;
        let next = libm::exp(-a * (n + 1.0) * (n + 1.0));
        if next <= 1e-18 * sum || next == 0.0 {
            // later ratios are at most e^{-a(2n+3)}
            let rem = next / (1.0 - libm::exp(-a * (2.0 * n + 3.0)));
            return (sum, rem);
        }
        n += 1.0;
    }
}

/// Dirichlet heat trace on a single edge from the spectrum and from the
/// modular-transformed theta series.
pub fn heat_trace_pair(graph: &MetricGraph, t: f64) -> Result<HeatTrace> {
    if graph.edge_count() != 1 {
        return Err(Error::DimensionMismatch { what: "heat trace graph edges", expected: 1, got: graph.edge_count() });
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter { name: "t", reason: "must be positive and finite".into() });
    }
    let l = graph.total_length();
    let (spectral, spectral_remainder) = gaussian_series((PI / l) * (PI / l) * t);
    let (s, r) = gaussian_series(l * l / t);
    let c = l / libm::sqrt(PI * t);
    Ok(HeatTrace { t, spectral, theta: 0.5 * c - 0.5 + c * s, spectral_remainder, theta_remainder: c * r })
}

/// Smooth Riemann–von Mangoldt count `(E/2π) ln(E/2π) - E/2π + 7/8`, `E > 0`.
pub fn riemann_counting(e: f64) -> f64 {
    let x = e / TAU;
    x * libm::log(x) - x + 0.875
}

/// Semiclassical counts for the two operators at energy `E > 0`:
/// `(E/2π)(ln(E/2π) - 1) + 1` and `2[(k/2π) ln(k/2π) - k/2π + 7/8]`, `k = √E`.
pub fn semiclassical_counts(e: f64) -> (f64, f64) {
    let x = e / TAU;
    let bk = x * (libm::log(x) - 1.0) + 1.0;
    let bk2 = 2.0 * riemann_counting(libm::sqrt(e));
    (bk, bk2)
}

/// Quantization rule for [`ebk_levels`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EbkKind {
    /// `(2π/ℓ)(n + μ/4)`, `n = 0..=n_max`.
    Ring,
    /// `(π/ℓ)(n + μ/4)`, `n = 1..=n_max`.
    HardWall,
}

/// Semiclassical levels with Maslov index `μ`.
pub fn ebk_levels(ell: f64, mu: f64, n_max: usize, kind: EbkKind) -> Result<Vec<f64>> {
    if !(ell > 0.0 && ell.is_finite() && mu.is_finite()) {
        return Err(Error::InvalidParameter { name: "ell", reason: "length must be positive, μ finite".into() });
    }
    Ok(match kind {
        EbkKind::Ring => (0..=n_max).map(|n| TAU / ell * (n as f64 + 0.25 * mu)).collect(),
        EbkKind::HardWall => (1..=n_max).map(|n| PI / ell * (n as f64 + 0.25 * mu)).collect(),
    })
}

/// One sample of the graph-versus-Riemann comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NogoRow {
    pub k: f64,
    pub n_graph: usize,
    /// Fitted linear count `slope·k + intercept`.
    pub n_linear: f64,
    pub n_riemann: f64,
    /// `n_linear / n_riemann`.
    pub ratio: f64,
}

/// Evidence that a graph counting function is linear while the Riemann
/// count grows like `k ln k`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NogoReport {
    pub fit: WeylFit,
    pub rows: Vec<NogoRow>,
    /// The ratio decreases strictly from row to row.
    pub monotone_decreasing: bool,
    /// Largest `|N_graph - n_linear|` over the rows.
    pub max_staircase_deviation: f64,
    /// Extrapolated ratio at `k = 1000`.
    pub ratio_at_1000: f64,
}

/// Compare `N_graph(k)` (positive levels) with [`riemann_counting`] on
/// `samples` equally spaced points of `[k_from, k_max]`.
pub fn nogo_report(spec: &Spectrum, k_from: f64, samples: usize) -> Result<NogoReport> {
    if !(k_from > TAU) || samples < 2 {
        return Err(Error::InvalidParameter {
            name: "k_from",
            reason: "need k_from > 2π and at least 2 samples".into(),
        });
    }
    if spec.k_max <= k_from {
        return Err(Error::InvalidRange { lo: k_from, hi: spec.k_max });
    }
    let fit = weyl_fit(spec, CountingSide::Positive)?;
    let mut rows = Vec::with_capacity(samples);
    let mut dev = 0.0f64;
    for i in 0..samples {
        let k = k_from + (spec.k_max - k_from) * i as f64 / (samples - 1) as f64;
        let n_graph = counting_function(spec, k, CountingSide::Positive)?;
        let n_linear = fit.slope * k + fit.intercept;
        let n_riemann = riemann_counting(k);
        dev = dev.max((n_graph as f64 - n_linear).abs());
        rows.push(NogoRow { k, n_graph, n_linear, n_riemann, ratio: n_linear / n_riemann });
    }
    let monotone_decreasing = rows.windows(2).all(|w| w[1].ratio < w[0].ratio);
    let ratio_at_1000 = (fit.slope * 1000.0 + fit.intercept) / riemann_counting(1000.0);
    Ok(NogoReport { fit, rows, monotone_decreasing, max_staircase_deviation: dev, ratio_at_1000 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extensions::{standard_bc, BoundaryCondition};
    use crate::spectra::{find_spectrum, ScanOptions, SecularSystem};

    #[test]
    fn heat_trace_examples() {
        let g = MetricGraph::interval(1.0, libm::exp(PI)).unwrap();
        let h = heat_trace_pair(&g, 1.0).unwrap();
        assert!((h.spectral - 0.38631860).abs() < 1e-8);
        assert!((h.theta - h.spectral).abs() < 1e-12);
        for t in [0.05, 0.2, 1.0, 5.0, 0.01, 10.0] {
            let h = heat_trace_pair(&g, t).unwrap();
            assert!((h.theta - h.spectral).abs() < 1e-12, "t={t}");
        }
        // small t: leading terms up to the first orbit correction
        let t = 0.01;
        let h = heat_trace_pair(&g, t).unwrap();
        let lead = PI / (2.0 * libm::sqrt(PI * t)) - 0.5;
        assert!((h.spectral - lead).abs() <= 2.0 * PI / libm::sqrt(PI * t) * libm::exp(-PI * PI / t) + 1e-12);
    }

    #[test]
    fn direct_oracle() {
        let exact: f64 = (1..40).map(|n| libm::exp(-(n * n) as f64)).sum();
        let g = MetricGraph::interval(2.0, 2.0 * libm::exp(PI)).unwrap();
        assert!((heat_trace_pair(&g, 1.0).unwrap().spectral - exact).abs() < 1e-15);
    }

    #[test]
    fn counting_formulas() {
        assert!((riemann_counting(100.0) - 29.0).abs() < 0.1);
        let e = TAU * core::f64::consts::E;
        assert!((riemann_counting(e) - 0.875).abs() < 1e-14);
        let (bk, _) = semiclassical_counts(e);
        assert!((bk - 1.0).abs() < 1e-14);
        let (_, bk2) = semiclassical_counts(e * e);
        assert!((bk2 - 1.75).abs() < 1e-12);
    }

    #[test]
    fn ebk_examples() {
        let ring = ebk_levels(TAU, 0.0, 4, EbkKind::Ring).unwrap();
        assert_eq!(ring, alloc::vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        let c = 0.25;
        let l = 1.0;
        for (n, k) in ebk_levels(l, 4.0 * c, 10, EbkKind::Ring).unwrap().iter().enumerate() {
            assert!((k - TAU * (n as f64 + c)).abs() < 1e-12);
        }
        let hw = ebk_levels(2.0, 0.0, 3, EbkKind::HardWall).unwrap();
        assert!((hw[2] - 3.0 * PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn nogo_ratio_decreases() {
        let g = MetricGraph::interval(1.0, libm::exp(1.7)).unwrap();
        let sys = SecularSystem::new(&g, &standard_bc(&BoundaryCondition::Dirichlet, &g).unwrap()).unwrap();
        let sp = find_spectrum(&sys, 0.0, 400.0, ScanOptions::default()).unwrap();
        let r = nogo_report(&sp, 50.0, 40).unwrap();
        assert!(r.monotone_decreasing);
        assert!(r.ratio_at_1000 < r.rows[0].ratio);
        assert!(r.max_staircase_deviation <= 1.0);
    }
}
