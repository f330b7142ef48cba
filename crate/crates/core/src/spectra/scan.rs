//! Real eigenvalues from eigenphase crossings of `U(k)`.
//!
//! For real `k` the eigenphases of the unitary `U(k)` pass through zero
//! only in the positive direction (for BK2 this holds for `k > 0`), so the
//! number of eigenvalues in `(k0, k1]` equals the number of crossings
//!
//! ```text
//! n = (ΔΘ - Δ Σ_j w_j) / 2π
//! ```
//!
//! where `Θ = arg det U` is known in closed form and `w_j ∈ [0, 2π)` are the
//! wrapped eigenphases. Bisection on this count isolates each eigenvalue and
//! its multiplicity.

use alloc::vec::Vec;
use core::ops::Range;

use super::{zero_mode_test, SecularSystem, ZeroMode};
use crate::{Error, OperatorKind, Result, TAU};

/// Solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// Grid spacing; `None` uses `π / (4 Θ')` with `Θ'` the mean total phase velocity.
    pub step: Option<f64>,
    /// Absolute bracket width at which a root is accepted.
    pub tol: f64,
    /// Maximum bisection depth; clusters unresolved at this depth are
    /// reported as a single level with summed multiplicity.
    pub max_depth: usize,
    /// BK2 only: wave numbers below this are attributed to the zero mode.
    pub zero_cut: f64,
    /// Probe wave number for the BK2 zero-mode test.
    pub zero_probe: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { step: None, tol: 1e-12, max_depth: 60, zero_cut: 1e-7, zero_probe: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Level {
    pub k: f64,
    pub multiplicity: usize,
}

/// A negative BK2 eigenvalue `λ = -κ²`, i.e. a zero at `k = iκ`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NegativeLevel {
    pub kappa: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScanDiagnostics {
    pub step: f64,
    pub intervals: usize,
    pub evaluations: usize,
    /// Largest distance of a crossing count from an integer before rounding.
    pub max_integrality_offset: f64,
    /// Levels whose count jump disagreed with the number of unit
    /// eigenvalues of `U(k_n)`.
    pub multiplicity_mismatches: usize,
    /// Levels accepted at the bisection depth limit.
    pub depth_limited: usize,
}

impl ScanDiagnostics {
    fn merge(&mut self, other: &ScanDiagnostics) {
        self.evaluations += other.evaluations;
        self.max_integrality_offset = self.max_integrality_offset.max(other.max_integrality_offset);
        self.multiplicity_mismatches += other.multiplicity_mismatches;
        self.depth_limited += other.depth_limited;
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Spectrum {
    pub kind: OperatorKind,
    /// Levels in `(k_min, k_max]`, ascending.
    pub levels: Vec<Level>,
    pub k_min: f64,
    pub k_max: f64,
    pub zero_mode: Option<ZeroMode>,
    pub negative: Vec<NegativeLevel>,
    pub diagnostics: ScanDiagnostics,
    /// Number of eigenphases of `U(k)`.
    pub phase_count: usize,
    /// Upper bound on every eigenphase velocity for `|k| ≥ k_max`.
    pub max_phase_rate: f64,
    pub total_length: f64,
}

impl Spectrum {
    /// Total multiplicity of the levels.
    pub fn count(&self) -> usize {
        self.levels.iter().map(|l| l.multiplicity).sum()
    }

    /// Upper bound on the number of eigenvalues (with multiplicity) in any
    /// window of width `w` beyond the computed range.
    pub fn window_bound(&self, w: f64) -> f64 {
        self.phase_count as f64 * (self.max_phase_rate * w / TAU + 1.0)
    }
}

/// Output of scanning a contiguous block of grid intervals.
#[derive(Debug, Clone, Default)]
pub struct ScanChunk {
    pub levels: Vec<Level>,
    pub diagnostics: ScanDiagnostics,
}

struct Sample {
    k: f64,
    sum: f64,
    phases: Vec<f64>,
}

/// Grid-based eigenvalue search, split into independent intervals so that
/// blocks can be processed concurrently with identical results.
pub struct Scanner<'a> {
    sys: &'a SecularSystem,
    intervals: Vec<(f64, f64)>,
    opts: ScanOptions,
    k_min: f64,
    k_max: f64,
    step: f64,
}

impl<'a> Scanner<'a> {
    /// Prepare a scan of `(k_min, k_max]`. For BK2 the window
    /// `[-zero_cut, zero_cut]` is excluded; negative wave numbers are
    /// scanned as mirror images.
    pub fn new(sys: &'a SecularSystem, k_min: f64, k_max: f64, opts: ScanOptions) -> Result<Self> {
        if !(k_min.is_finite() && k_max.is_finite() && k_min < k_max) {
            return Err(Error::InvalidRange { lo: k_min, hi: k_max });
        }
        if !(opts.tol > 0.0) {
            return Err(Error::InvalidParameter { name: "tol", reason: "must be positive".into() });
        }
        let rate = match sys.kind() {
            OperatorKind::Bk => sys.total_length(),
            OperatorKind::Bk2 => 2.0 * sys.total_length(),
        };
        let step = opts.step.unwrap_or(core::f64::consts::PI / (4.0 * rate));
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidParameter { name: "step", reason: "must be positive".into() });
        }
        let mut intervals = Vec::new();
        let mut push_range = |lo: f64, hi: f64| {
            if hi <= lo {
                return;
            }
            let n = libm::ceil((hi - lo) / step).max(1.0) as usize;
            for i in 0..n {
                let a = lo + (hi - lo) * i as f64 / n as f64;
                let b = if i + 1 == n { hi } else { lo + (hi - lo) * (i + 1) as f64 / n as f64 };
                intervals.push((a, b));
            }
        };
        match sys.kind() {
            OperatorKind::Bk => push_range(k_min, k_max),
            OperatorKind::Bk2 => {
                let z = opts.zero_cut;
                if k_min < -z {
                    push_range(k_min, (-z).min(k_max));
                }
                if k_max > z {
                    push_range(k_min.max(z), k_max);
                }
            }
        }
        Ok(Scanner { sys, intervals, opts, k_min, k_max, step })
    }

    pub fn interval_count(&self) -> usize {
        self.intervals.len()
    }

    fn sample(&self, k: f64, diag: &mut ScanDiagnostics) -> Result<Sample> {
        diag.evaluations += 1;
        let phases = self.sys.eigenphases(k)?;
        Ok(Sample { k, sum: phases.iter().sum(), phases })
    }

    /// Number of upward crossings of phase 0 from `a` to `b`.
    fn count(&self, a: &Sample, b: &Sample, diag: &mut ScanDiagnostics) -> Result<usize> {
        let x = (self.sys.total_phase_increment(a.k, b.k) - (b.sum - a.sum)) / TAU;
        let n = libm::round(x);
        let offset = (x - n).abs();
        diag.max_integrality_offset = diag.max_integrality_offset.max(offset);
        if offset > 1e-4 {
            return Err(Error::PhaseInconsistency { k: b.k, offset });
        }
        if n < 0.0 {
            return Err(Error::PhaseInconsistency { k: b.k, offset: n });
        }
        Ok(n as usize)
    }

    /// Scan the given block of intervals.
    pub fn scan(&self, block: Range<usize>) -> Result<ScanChunk> {
        let mut chunk = ScanChunk::default();
        let mut left: Option<Sample> = None;
        for idx in block {
            let (k0, k1) = self.intervals[idx];
            let s0 = match left.take() {
                Some(s) if s.k == k0 => s,
                _ => self.sample(k0, &mut chunk.diagnostics)?,
            };
            let s1 = self.sample(k1, &mut chunk.diagnostics)?;
            let n = self.count(&s0, &s1, &mut chunk.diagnostics)?;
            if n > 0 {
                self.isolate(&s0, k0, k1, 0, n, 0, &mut chunk)?;
            }
            left = Some(s1);
        }
        Ok(chunk)
    }

    #[allow(clippy::too_many_arguments)]
    fn isolate(
        &self,
        base: &Sample,
        lo: f64,
        hi: f64,
        c_lo: usize,
        c_hi: usize,
        depth: usize,
        chunk: &mut ScanChunk,
    ) -> Result<()> {
        if c_hi == c_lo {
            return Ok(());
        }
        let mid = 0.5 * (lo + hi);
        let width_ok = hi - lo <= self.opts.tol.max(4.0 * f64::EPSILON * mid.abs());
        if width_ok || depth >= self.opts.max_depth || mid <= lo || mid >= hi {
            if !width_ok {
                chunk.diagnostics.depth_limited += 1;
            }
            let multiplicity = c_hi - c_lo;
            let s = self.sample(mid, &mut chunk.diagnostics)?;
            let unit = s.phases.iter().filter(|&&w| w.min(TAU - w) < 1e-8).count();
            if unit != multiplicity {
                chunk.diagnostics.multiplicity_mismatches += 1;
            }
            chunk.levels.push(Level { k: mid, multiplicity });
            return Ok(());
        }
        let s = self.sample(mid, &mut chunk.diagnostics)?;
        let c_mid = self.count(base, &s, &mut chunk.diagnostics)?;
        if c_mid < c_lo || c_mid > c_hi {
            return Err(Error::ToleranceTooCoarse { k: mid });
        }
        self.isolate(base, lo, mid, c_lo, c_mid, depth + 1, chunk)?;
        self.isolate(base, mid, hi, c_mid, c_hi, depth + 1, chunk)
    }

    /// Combine the chunks of consecutive blocks (in order) into a spectrum.
    pub fn assemble(&self, chunks: Vec<ScanChunk>) -> Result<Spectrum> {
        let mut diagnostics =
            ScanDiagnostics { step: self.step, intervals: self.intervals.len(), ..Default::default() };
        let mut levels = Vec::new();
        for c in chunks {
            diagnostics.merge(&c.diagnostics);
            levels.extend(c.levels);
        }
        let zero_mode = match self.sys.kind() {
            OperatorKind::Bk2 => Some(zero_mode_test(self.sys, self.opts.zero_probe)?),
            OperatorKind::Bk => None,
        };
        let kk = self.k_max.abs().max(self.k_min.abs());
        Ok(Spectrum {
            kind: self.sys.kind(),
            levels,
            k_min: self.k_min,
            k_max: self.k_max,
            zero_mode,
            negative: Vec::new(),
            diagnostics,
            phase_count: self.sys.dimension(),
            max_phase_rate: self.sys.phase_rate_bounds(kk, f64::INFINITY).1,
            total_length: self.sys.total_length(),
        })
    }
}

/// All real eigenvalues in `(k_min, k_max]` with multiplicities.
///
/// BK2 spectra are reported for `k > 0` only (`λ = k²`); a negative `k_min`
/// is clamped. Use [`Scanner`] directly to scan mirror images.
pub fn find_spectrum(sys: &SecularSystem, k_min: f64, k_max: f64, opts: ScanOptions) -> Result<Spectrum> {
    let k_min = match sys.kind() {
        OperatorKind::Bk2 => k_min.max(0.0),
        OperatorKind::Bk => k_min,
    };
    let scanner = Scanner::new(sys, k_min, k_max, opts)?;
    let chunk = scanner.scan(0..scanner.interval_count())?;
    scanner.assemble(alloc::vec![chunk])
}
