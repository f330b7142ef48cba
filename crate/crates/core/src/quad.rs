//! Numerical quadrature: adaptive Gauss-Kronrod and composite Gauss-Legendre.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Complex64, Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: Complex64,
    pub error: f64,
    pub evaluations: usize,
}

fn gk15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += s * WGK[j];
        if j % 2 == 1 {
            g += s * WG[j / 2];
        }
    }
    (k * h, ((k - g) * h).norm())
}

/// Adaptive 15-point Gauss-Kronrod integration of a complex integrand.
///
/// Stops when the summed error estimate drops below
/// `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<F: FnMut(f64) -> Complex64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature { value: Complex64::new(0.0, 0.0), error: 0.0, evaluations: 0 });
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut parts = vec![(a, b, v, e)];
    let mut evals = 15;
    loop {
        let total: Complex64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.norm()) {
            return Ok(Quadrature { value: total, error: err, evaluations: evals });
        }
        if parts.len() >= max_intervals {
            return Err(Error::ConvergenceFailure { what: "adaptive quadrature", remainder: err });
        }
        let (idx, _) = parts.iter().enumerate().max_by(|x, y| x.1 .3.total_cmp(&y.1 .3)).expect("non-empty");
        let (lo, hi, _, _) = parts.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        evals += 30;
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

/// Real-valued convenience wrapper around [`integrate`].
pub fn integrate_real<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<(f64, f64)> {
    let q = integrate(|x| Complex64::new(f(x), 0.0), a, b, abs_tol, rel_tol, max_intervals)?;
    Ok((q.value.re, q.error))
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let pi = core::f64::consts::PI;
    for i in 0..n.div_ceil(2) {
        let mut z = libm::cos(pi * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Gauss-Legendre rule for vector-valued integrands.
///
/// `f(x, out)` accumulates nothing itself: it must overwrite `out`.
pub fn composite<F: FnMut(f64, &mut [Complex64])>(
    f: &mut F,
    a: f64,
    b: f64,
    panels: usize,
    order: usize,
    dim: usize,
) -> Vec<Complex64> {
    let (xs, ws) = gauss_legendre(order);
    let mut acc = vec![Complex64::new(0.0, 0.0); dim];
    let mut buf = vec![Complex64::new(0.0, 0.0); dim];
    let h = (b - a) / panels as f64;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (x, w) in xs.iter().zip(&ws) {
            f(lo + 0.5 * h * (x + 1.0), &mut buf);
            for (s, v) in acc.iter_mut().zip(&buf) {
                *s += v * (0.5 * h * w);
            }
        }
    }
    acc
}

/// Composite rule with panel doubling until successive estimates agree
/// to `tol` in every component.
pub fn composite_converged<F: FnMut(f64, &mut [Complex64])>(
    mut f: F,
    a: f64,
    b: f64,
    dim: usize,
    initial_panels: usize,
    tol: f64,
    max_panels: usize,
) -> Result<(Vec<Complex64>, f64)> {
    let order = 16;
    let mut panels = initial_panels.max(1);
    let mut prev = composite(&mut f, a, b, panels, order, dim);
    loop {
        panels *= 2;
        let next = composite(&mut f, a, b, panels, order, dim);
        let diff = prev.iter().zip(&next).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()));
        if diff <= tol {
            return Ok((next, diff));
        }
        if panels >= max_panels {
            return Err(Error::ConvergenceFailure { what: "composite quadrature", remainder: diff });
        }
        prev = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(5);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * libm::pow(*x, 8.0)).sum();
        assert!((s - 2.0 / 9.0).abs() < 1e-14);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_gaussian() {
        let (v, _) = integrate_real(|x| libm::exp(-x * x), -10.0, 10.0, 1e-14, 0.0, 200).unwrap();
        assert!((v - core::f64::consts::PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn adaptive_oscillatory() {
        // int_0^{2pi} e^{i 7 x} x dx = 2 pi / (7 i)
        let q = integrate(|x| Complex64::new(0.0, 7.0 * x).exp() * x, 0.0, crate::TAU, 1e-13, 0.0, 500).unwrap();
        let exact = Complex64::new(0.0, -crate::TAU / 7.0);
        assert!((q.value - exact).norm() < 1e-12);
    }

    #[test]
    fn composite_vector() {
        let (v, _) = composite_converged(
            |x, out: &mut [Complex64]| {
                out[0] = Complex64::new(libm::cos(x), 0.0);
                out[1] = Complex64::new(x * x, 0.0);
            },
            0.0,
            1.0,
            2,
            2,
            1e-14,
            1 << 10,
        )
        .unwrap();
        assert!((v[0].re - libm::sin(1.0)).abs() < 1e-14);
        assert!((v[1].re - 1.0 / 3.0).abs() < 1e-14);
    }
}
