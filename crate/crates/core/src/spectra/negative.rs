//! Negative BK2 eigenvalues `λ = -κ²` from zeros of `F(iκ)`.
//!
//! On the imaginary axis `S''(iκ)` is Hermitian, and
//! `F(iκ) = det(P) det(P - D^{1/2} S''(iκ) D^{1/2})` with `D = diag(e^{-κℓ})`
//! and `P` the edge swap. Zeros are found as sign changes in the inertia
//! of the Hermitian matrix `M(κ) = P - D^{1/2} S''(iκ) D^{1/2}` on intervals
//! between the poles `κ ∈ σ(L'')`.

use alloc::vec::Vec;

use super::{NegativeLevel, SecularSystem};
use crate::linalg::{self, c64};
use crate::{CMatrix, Error, OperatorKind, Result};

fn m_matrix(sys: &SecularSystem, kappa: f64) -> Result<CMatrix> {
    let e = sys.lengths().len();
    let s = sys.vertex_matrix(c64(0.0, kappa))?;
    let half: Vec<f64> = sys.lengths().iter().chain(sys.lengths()).map(|&l| libm::exp(-0.5 * kappa * l)).collect();
    let d = linalg::diag_real(&half);
    Ok(linalg::swap(e) - &d * s * &d)
}

fn negatives(sys: &SecularSystem, kappa: f64) -> Result<usize> {
    let (vals, _) = linalg::hermitian_eigen(&m_matrix(sys, kappa)?);
    Ok(vals.iter().filter(|&&v| v < 0.0).count())
}

/// Zeros of `F(iκ)` for `κ ∈ (0, kappa_max]`.
pub fn find_negative_eigenvalues(sys: &SecularSystem, kappa_max: f64) -> Result<Vec<NegativeLevel>> {
    if sys.kind() != OperatorKind::Bk2 {
        return Err(Error::InvalidParameter { name: "kind", reason: "negative eigenvalues are a BK2 notion".into() });
    }
    if !(kappa_max > 0.0 && kappa_max.is_finite()) {
        return Err(Error::InvalidParameter { name: "kappa_max", reason: "must be positive".into() });
    }
    let mut poles: Vec<f64> = sys.robin_eigenvalues().iter().copied().filter(|&l| l > 0.0 && l <= kappa_max).collect();
    poles.sort_by(f64::total_cmp);
    poles.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let mut bounds = Vec::with_capacity(poles.len() + 2);
    bounds.push(0.0);
    bounds.extend(poles.iter().copied());
    if poles.last().map_or(true, |&p| p < kappa_max) {
        bounds.push(kappa_max);
    }
    let step = (0.25 / sys.max_length()).min(0.02);
    let mut out = Vec::new();
    for w in bounds.windows(2) {
        let gap = 1e-9 * w[1].max(1.0);
        let at_pole = poles.contains(&w[1]);
        let (lo, hi) = (w[0] + gap, if at_pole { w[1] - gap } else { w[1] });
        if hi <= lo {
            continue;
        }
        let n = libm::ceil((hi - lo) / step).max(1.0) as usize;
        let mut a = lo;
        let mut na = negatives(sys, a)?;
        for i in 1..=n {
            let b = lo + (hi - lo) * i as f64 / n as f64;
            let nb = negatives(sys, b)?;
            if nb != na {
                out.push(refine(sys, a, na, b, nb)?);
            }
            a = b;
            na = nb;
        }
    }
    Ok(out)
}

fn refine(sys: &SecularSystem, mut a: f64, na: usize, mut b: f64, nb: usize) -> Result<NegativeLevel> {
    for _ in 0..80 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b || b - a < 1e-13 * b.max(1.0) {
            break;
        }
        if negatives(sys, mid)? == na {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(NegativeLevel { kappa: 0.5 * (a + b), multiplicity: na.abs_diff(nb) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extensions::{standard_bc, BoundaryCondition};
    use crate::graph::MetricGraph;
    use alloc::vec;

    fn sys(l: f64, bc: BoundaryCondition) -> SecularSystem {
        let g = MetricGraph::interval(1.0, libm::exp(l)).unwrap();
        SecularSystem::new(&g, &standard_bc(&bc, &g).unwrap()).unwrap()
    }

    /// Zeros of 1 - ((ρ+κ)/(ρ-κ))² e^{-2κℓ} by bisection on a fine grid.
    fn oracle(rho: f64, l: f64, kmax: f64) -> Vec<f64> {
        let f = |k: f64| {
            let r = (rho + k) / (rho - k);
            1.0 - r * r * libm::exp(-2.0 * k * l)
        };
        let mut out = Vec::new();
        let n = 20000;
        for i in 0..n {
            let (mut a, mut b) = (kmax * i as f64 / n as f64 + 1e-9, kmax * (i + 1) as f64 / n as f64);
            if (a - rho).abs() < 1e-6 || (b - rho).abs() < 1e-6 || (a < rho && b > rho) {
                continue;
            }
            if f(a) * f(b) < 0.0 {
                for _ in 0..100 {
                    let m = 0.5 * (a + b);
                    if f(a) * f(m) <= 0.0 {
                        b = m;
                    } else {
                        a = m;
                    }
                }
                out.push(a);
            }
        }
        out
    }

    #[test]
    fn dirichlet_and_neumann_have_none() {
        assert!(find_negative_eigenvalues(&sys(1.0, BoundaryCondition::Dirichlet), 10.0).unwrap().is_empty());
        assert!(find_negative_eigenvalues(&sys(1.0, BoundaryCondition::Neumann), 10.0).unwrap().is_empty());
    }

    #[test]
    fn robin_matches_bisection_oracle() {
        for (rho, l) in [(1.0, 6.0), (1.0, 1.5), (2.5, 3.0), (-1.0, 6.0)] {
            let got = find_negative_eigenvalues(&sys(l, BoundaryCondition::Robin(vec![rho])), 5.0).unwrap();
            let want = oracle(rho, l, 5.0);
            assert_eq!(got.len(), want.len(), "rho={rho} l={l}: {got:?} vs {want:?}");
            for (g, w) in got.iter().zip(&want) {
                assert!((g.kappa - w).abs() < 1e-9);
                assert_eq!(g.multiplicity, 1);
            }
        }
    }

    #[test]
    fn positive_robin_binds_near_rho() {
        let got = find_negative_eigenvalues(&sys(8.0, BoundaryCondition::Robin(vec![1.0])), 4.0).unwrap();
        assert_eq!(got.len(), 2);
        assert!(got.iter().all(|n| (n.kappa - 1.0).abs() < 1e-2));
    }
}
