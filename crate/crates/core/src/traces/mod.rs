//! Trace formulas, heat traces and counting-function comparisons.

mod orbits;
mod semiclassical;
mod test_function;

pub use orbits::{orbit_convergence_length, sigma_and_length, trace_rhs_bk, trace_rhs_bk2, TraceOptions, TraceTerms};
pub use semiclassical::{
    ebk_levels, heat_trace_pair, nogo_report, riemann_counting, semiclassical_counts, EbkKind, HeatTrace, NogoReport,
    NogoRow,
};
pub use test_function::{Tabulated, TestFunction};

use crate::spectra::{SecularSystem, Spectrum};
use crate::{Error, OperatorKind, Result, TAU};

/// Spectral side `Σ g_n h(k_n)` over the computed levels.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpectralSum {
    pub value: f64,
    /// Bound on the contribution of levels outside the scanned range.
    pub tail_bound: f64,
    pub levels: usize,
}

fn one_sided_tail(spec: &Spectrum, h: &TestFunction, start: f64) -> f64 {
    let rate = spec.max_phase_rate.max(1e-300);
    let w = TAU / rate;
    let per_window = spec.window_bound(w);
    let mut sum = 0.0;
    for j in 0..10_000_000u64 {
        let term = per_window * h.envelope(start + j as f64 * w);
        sum += term;
        if term == 0.0 || (j > 0 && term <= 1e-30 * sum) {
            return sum + term;
        }
    }
    f64::INFINITY
}

/// `Σ g_n h(k_n)`: all real levels for BK, `k_n > 0` plus `g0 h(0)` for BK2.
///
/// Negative BK2 eigenvalues are not included. Levels beyond the scanned
/// range are bounded with the level-density bound of the spectrum.
pub fn trace_lhs(spec: &Spectrum, h: &TestFunction, tol: f64) -> Result<SpectralSum> {
    let mut value = 0.0;
    let mut levels = 0;
    for l in &spec.levels {
        if spec.kind == OperatorKind::Bk2 && l.k <= 0.0 {
            continue;
        }
        value += l.multiplicity as f64 * h.eval(l.k);
        levels += 1;
    }
    let mut tail_bound = one_sided_tail(spec, h, spec.k_max);
    match spec.kind {
        OperatorKind::Bk => {
            if spec.k_min >= 0.0 {
                return Err(Error::InvalidParameter {
                    name: "k_min",
                    reason: "a BK trace needs a two-sided spectrum".into(),
                });
            }
            tail_bound += one_sided_tail(spec, h, -spec.k_min);
        }
        OperatorKind::Bk2 => {
            if let Some(z) = spec.zero_mode {
                value += z.g0 as f64 * h.eval(0.0);
            }
        }
    }
    if !(tail_bound <= tol) {
        return Err(Error::TailBoundExceeded { bound: tail_bound, tol });
    }
    Ok(SpectralSum { value, tail_bound, levels })
}

/// Both sides of a trace formula with an error budget.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceReport {
    pub lhs: SpectralSum,
    pub terms: TraceTerms,
    pub rhs_total: f64,
    pub discrepancy: f64,
    /// Sum of the spectral tail, orbit tail and quadrature bounds.
    pub error_budget: f64,
}

impl TraceReport {
    pub fn new(lhs: SpectralSum, terms: TraceTerms) -> Self {
        let rhs_total = terms.total();
        TraceReport {
            discrepancy: (lhs.value - rhs_total).abs(),
            error_budget: lhs.tail_bound + terms.orbit_tail_bound + terms.quadrature_error,
            lhs,
            terms,
            rhs_total,
        }
    }

    /// Whether the discrepancy is explained by the error budget plus `slack`.
    pub fn holds(&self, slack: f64) -> bool {
        self.discrepancy <= self.error_budget + slack
    }
}

/// Evaluate both sides of the trace formula for a computed spectrum.
pub fn check_trace(sys: &SecularSystem, spec: &Spectrum, h: &TestFunction, opts: &TraceOptions) -> Result<TraceReport> {
    if sys.kind() != spec.kind {
        return Err(Error::InvalidParameter { name: "kind", reason: "spectrum and system disagree".into() });
    }
    let lhs = trace_lhs(spec, h, opts.lhs_tol)?;
    let terms = match sys.kind() {
        OperatorKind::Bk => trace_rhs_bk(sys, h, opts)?,
        OperatorKind::Bk2 => trace_rhs_bk2(sys, h, opts)?,
    };
    Ok(TraceReport::new(lhs, terms))
}
