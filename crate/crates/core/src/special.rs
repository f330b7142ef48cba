//! Complex Gamma and Riemann zeta on the critical strip.

use alloc::vec::Vec;

use crate::Complex64;

const PI: f64 = core::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Complex Gamma function (Lanczos, g = 7, with reflection).
pub fn gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        let pz = z * PI;
        return Complex64::new(PI, 0.0) / (pz.sin() * gamma(Complex64::new(1.0, 0.0) - z));
    }
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS[0], 0.0);
    for (i, &p) in LANCZOS.iter().enumerate().skip(1) {
        x += p / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    let sqrt_2pi = libm::sqrt(2.0 * PI);
    ((z + 0.5) * t.ln() - t).exp() * x * sqrt_2pi
}

const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

/// Log-Gamma for `Re z > 0`, continuous in `z` (not the principal
/// logarithm of [`gamma`]).
pub fn ln_gamma(z: Complex64) -> Complex64 {
    debug_assert!(z.re > 0.0);
    let mut shift = Complex64::new(0.0, 0.0);
    let mut w = z;
    while w.norm() < 20.0 {
        shift += w.ln();
        w += 1.0;
    }
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut pow = inv;
    for c in STIRLING {
        series += pow * c;
        pow *= inv2;
    }
    (w - 0.5) * w.ln() - w + 0.5 * libm::log(2.0 * PI) + series - shift
}

/// Dirichlet eta function by the Cohen-Villegas-Zagier accelerated
/// alternating series, valid for `Re s > 0`.
pub fn eta(s: Complex64) -> Complex64 {
    let t = s.im.abs();
    let digits = 38.0 + PI * t + libm::log(3.0 * (1.0 + 2.0 * t));
    let n = (libm::ceil(digits / libm::log(3.0 + libm::sqrt(8.0))) as usize).max(20);
    // d_k = n sum_{i<=k} (n+i-1)! 4^i / ((n-i)! (2i)!)
    let mut d = Vec::with_capacity(n + 1);
    let mut term = 1.0;
    let mut acc = 0.0;
    for i in 0..=n {
        acc += term;
        d.push(acc);
        let (fi, fnn) = (i as f64, n as f64);
        term *= 4.0 * (fnn + fi) * (fnn - fi) / ((2.0 * fi + 1.0) * (2.0 * fi + 2.0));
    }
    let dn = d[n];
    let mut sum = Complex64::new(0.0, 0.0);
    for (k, dk) in d.iter().enumerate().take(n) {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let weight = sign * (dn - dk) / dn;
        sum += (-s * libm::log(k as f64 + 1.0)).exp() * weight;
    }
    sum
}

/// Riemann zeta for `Re s > 0`, `s != 1`, via `zeta = eta / (1 - 2^{1-s})`.
pub fn zeta(s: Complex64) -> Complex64 {
    let denom = Complex64::new(1.0, 0.0) - ((Complex64::new(1.0, 0.0) - s) * libm::log(2.0)).exp();
    eta(s) / denom
}

/// Riemann-Siegel theta function.
pub fn riemann_siegel_theta(t: f64) -> f64 {
    ln_gamma(Complex64::new(0.25, 0.5 * t)).im - 0.5 * t * libm::log(PI)
}

/// Hardy's function `Z(t) = e^{i theta(t)} zeta(1/2 + i t)`, real for real `t`.
pub fn hardy_z(t: f64) -> f64 {
    let rot = Complex64::new(0.0, riemann_siegel_theta(t)).exp();
    (rot * zeta(Complex64::new(0.5, t))).re
}

/// Ordinates of the critical-line zeros in `(t_min, t_max)` found from
/// sign changes of Hardy's function on a grid of spacing `step`, each
/// refined by bisection.
pub fn critical_zeros(t_min: f64, t_max: f64, step: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut a = t_min;
    let mut za = hardy_z(a);
    while a < t_max {
        let b = (a + step).min(t_max);
        let zb = hardy_z(b);
        if za * zb < 0.0 {
            let (mut lo, mut hi, mut zlo) = (a, b, za);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let zm = hardy_z(mid);
                if zm * zlo <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    zlo = zm;
                }
                if hi - lo < 1e-13 {
                    break;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        a = b;
        za = zb;
    }
    out
}
