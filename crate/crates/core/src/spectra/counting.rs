use alloc::vec::Vec;

use super::Spectrum;
use crate::{Error, OperatorKind, Result};

/// Which levels a counting function includes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum CountingSide {
    /// `0 < k_n ≤ k`.
    Positive,
    /// `|k_n| ≤ k`; for BK2 the same as `Positive`.
    Absolute,
}

fn effective_side(spec: &Spectrum, side: CountingSide) -> CountingSide {
    match spec.kind {
        OperatorKind::Bk2 => CountingSide::Positive,
        OperatorKind::Bk => side,
    }
}

/// Number of levels, with multiplicity, up to `k`.
pub fn counting_function(spec: &Spectrum, k: f64, side: CountingSide) -> Result<usize> {
    let side = effective_side(spec, side);
    let lo_needed = match side {
        CountingSide::Positive => 0.0,
        CountingSide::Absolute => -k,
    };
    if k > spec.k_max || (spec.kind == OperatorKind::Bk && spec.k_min > lo_needed.min(0.0)) {
        return Err(Error::RangeExceeded { value: k, lo: spec.k_min, hi: spec.k_max });
    }
    Ok(spec
        .levels
        .iter()
        .filter(|l| match side {
            CountingSide::Positive => l.k > 0.0 && l.k <= k,
            CountingSide::Absolute => l.k.abs() <= k,
        })
        .map(|l| l.multiplicity)
        .sum())
}

/// Least-squares fit of a staircase `N(k)` against `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeylFit {
    pub slope: f64,
    pub intercept: f64,
    /// `𝔏/π`, or `𝔏/(2π)` for one-sided BK counting.
    pub target: f64,
    pub relative_error: f64,
    pub points: usize,
}

/// Minimum number of levels for [`weyl_fit`].
pub const WEYL_MIN_LEVELS: usize = 20;

/// Fit the slope of the counting function over the computed levels.
///
/// Each level contributes the point `(|k_n|, N(k_n) - g_n / 2)`, the centre
/// of the jump, so an exactly linear staircase is fitted without bias.
pub fn weyl_fit(spec: &Spectrum, side: CountingSide) -> Result<WeylFit> {
    let side = effective_side(spec, side);
    let mut pts: Vec<(f64, usize)> = spec
        .levels
        .iter()
        .filter(|l| side == CountingSide::Absolute || l.k > 0.0)
        .map(|l| (l.k.abs(), l.multiplicity))
        .collect();
    if pts.len() < WEYL_MIN_LEVELS {
        return Err(Error::InsufficientData { needed: WEYL_MIN_LEVELS, have: pts.len() });
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut cum = 0usize;
    let data: Vec<(f64, f64)> = pts
        .iter()
        .map(|&(x, g)| {
            cum += g;
            (x, cum as f64 - 0.5 * g as f64)
        })
        .collect();
    let n = data.len() as f64;
    let mx = data.iter().map(|p| p.0).sum::<f64>() / n;
    let my = data.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = data.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = data.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let pi = core::f64::consts::PI;
    let target = match (spec.kind, side) {
        (OperatorKind::Bk, CountingSide::Positive) => spec.total_length / (2.0 * pi),
        _ => spec.total_length / pi,
    };
    Ok(WeylFit {
        slope,
        intercept: my - slope * mx,
        target,
        relative_error: (slope - target).abs() / target,
        points: data.len(),
    })
}
