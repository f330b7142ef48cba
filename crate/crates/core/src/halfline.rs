//! The dilation operators on the half-line `x > 0`.
//!
//! In the variable `y = ln x`, `φ(x) = x^{-1/2} g(y)` maps `L²(ℝ_>, dx)`
//! unitarily onto `L²(ℝ, dy)`; the BK evolution becomes a translation and
//! the Mellin amplitude `A(k) = (2π)^{-1/2} ∫ x^{-1/2-ik} φ(x) dx` becomes
//! the Fourier transform of `g`.

use crate::linalg::c64;
use crate::quad;
use crate::special::{gamma, zeta};
use crate::{Complex64, Error, Result, TAU};

const PI: f64 = core::f64::consts::PI;

/// `1/√(ln 2 - 1/2)`, the normalisation of `1/(e^x + 1)`.
pub fn fermi_alpha() -> f64 {
    1.0 / libm::sqrt(core::f64::consts::LN_2 - 0.5)
}

/// Shape of a half-line wave packet.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Packet {
    /// `α / (e^x + 1)`.
    Fermi { alpha: f64 },
    /// `x^{-1/2} (πs²)^{-1/4} e^{-(ln x - y0)² / 2s²}`.
    GaussianLog { y0: f64, s: f64 },
}

/// A state `φ(x) = √c · packet(c x)` on the half-line.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HalflineState {
    pub packet: Packet,
    pub scale: f64,
}

/// Value with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: Complex64,
    pub error: f64,
}

// 1/(e^u+1) = 1/2 - u/4 + u³/48 - u⁵/480 + 17u⁷/80640 - 31u⁹/1451520 + ...
const FERMI_SERIES: [(i32, f64); 5] = [(0, 0.5), (1, -0.25), (3, 1.0 / 48.0), (5, -1.0 / 480.0), (7, 17.0 / 80640.0)];
const FERMI_NEXT: f64 = 31.0 / 1451520.0;
const FERMI_SERIES_END: f64 = 0.02;
const FERMI_TAIL_START: f64 = 45.0;

impl HalflineState {
    /// The normalised Fermi packet `α/(e^x+1)`.
    pub fn fermi() -> Self {
        HalflineState { packet: Packet::Fermi { alpha: fermi_alpha() }, scale: 1.0 }
    }

    pub fn gaussian_log(y0: f64, s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite() && y0.is_finite()) {
            return Err(Error::InvalidParameter { name: "s", reason: "width must be positive and finite".into() });
        }
        Ok(HalflineState { packet: Packet::GaussianLog { y0, s }, scale: 1.0 })
    }

    /// `x ↦ √c φ(c x)`; the Mellin amplitude picks up `c^{ik}`.
    pub fn scaled(self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter { name: "scale", reason: "must be positive and finite".into() });
        }
        Ok(HalflineState { scale: self.scale * c, ..self })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let c = self.scale;
        let u = c * x;
        libm::sqrt(c)
            * match self.packet {
                Packet::Fermi { alpha } => alpha / (libm::exp(u) + 1.0),
                Packet::GaussianLog { y0, s } => {
                    let y = libm::log(u);
                    libm::pow(PI * s * s, -0.25) * libm::exp(-(y - y0) * (y - y0) / (2.0 * s * s)) / libm::sqrt(u)
                }
            }
    }

    /// `‖φ‖²` in closed form.
    pub fn norm_squared(&self) -> f64 {
        match self.packet {
            Packet::Fermi { alpha } => alpha * alpha * (core::f64::consts::LN_2 - 0.5),
            Packet::GaussianLog { .. } => 1.0,
        }
    }
}

/// `(U(t)φ)(x) = e^{-t/2} φ(e^{-t} x)`.
pub fn evolve_bk(state: &HalflineState, t: f64, x: f64) -> Complex64 {
    c64(libm::exp(-0.5 * t) * state.eval(libm::exp(-t) * x), 0.0)
}

/// `∫_0^∞ |f(x)|² dx` by quadrature in `y = ln x` on `[y_lo, y_hi]`.
pub fn halfline_norm_squared(f: impl Fn(f64) -> Complex64, y_lo: f64, y_hi: f64) -> Result<Estimate> {
    let q = quad::integrate(
        |y| {
            let x = libm::exp(y);
            c64(f(x).norm_sqr() * x, 0.0)
        },
        y_lo,
        y_hi,
        1e-14,
        1e-13,
        4000,
    )?;
    Ok(Estimate { value: q.value, error: q.error })
}

/// Generalised eigenfunction `ψ_k(x) = (2π)^{-1/2} x^{-1/2+ik}`.
pub fn psi_k(k: f64, x: f64) -> Complex64 {
    c64(-0.5, k).expf(x) / libm::sqrt(TAU)
}

/// BK2 propagator `(4πi t x x0)^{-1/2} e^{i(ln x - ln x0)²/4t}` for complex
/// `t` with `Re t > 0` or `t > 0`, principal square root.
pub fn kernel_bk2_complex(x: f64, x0: f64, t: Complex64) -> Complex64 {
    let d = libm::log(x) - libm::log(x0);
    let pre = (c64(0.0, 4.0 * PI) * t * (x * x0)).sqrt().inv();
    pre * (c64(0.0, d * d) / (t * 4.0)).exp()
}

/// BK2 propagator for real `t > 0`.
pub fn kernel_bk2(x: f64, x0: f64, t: f64) -> Result<Complex64> {
    if !(x > 0.0 && x0 > 0.0 && t > 0.0) {
        return Err(Error::InvalidParameter { name: "kernel_bk2", reason: "need x, x0, t > 0".into() });
    }
    Ok(kernel_bk2_complex(x, x0, c64(t, 0.0)))
}

/// Resolvent kernel `(i / 2k√(x x0)) e^{ik|ln x - ln x0|}`.
pub fn green_bk2(x: f64, x0: f64, k: f64) -> Result<Complex64> {
    if k == 0.0 || !k.is_finite() {
        return Err(Error::SingularAtK { k });
    }
    if !(x > 0.0 && x0 > 0.0) {
        return Err(Error::InvalidParameter { name: "green_bk2", reason: "need x, x0 > 0".into() });
    }
    let d = (libm::log(x) - libm::log(x0)).abs();
    Ok(c64(0.0, 1.0) / (2.0 * k * libm::sqrt(x * x0)) * c64(0.0, k * d).exp())
}

/// `A(k) = (2π)^{-1/2} ∫_0^∞ x^{-1/2-ik} φ(x) dx` by quadrature in `y = ln x`.
///
/// For the Fermi packet, `[0, 0.02/c]` is integrated term by term from the
/// small-argument series and `[45/c, ∞)` is bounded analytically.
pub fn mellin_amplitude(state: &HalflineState, k: f64) -> Result<Estimate> {
    let c = state.scale;
    let integrand = |y: f64| {
        let x = libm::exp(y);
        c64(x * state.eval(x), 0.0) * c64(-0.5, -k).expf(x)
    };
    let (lo_part, lo_err, y_lo, y_hi, hi_err) = match state.packet {
        Packet::Fermi { alpha } => {
            let x_lo = FERMI_SERIES_END / c;
            let pre = libm::sqrt(c) * alpha;
            let mut acc = c64(0.0, 0.0);
            for (m, coef) in FERMI_SERIES {
                let p = c64(m as f64 + 0.5, -k);
                acc += p.expf(x_lo) / p * (coef * libm::pow(c, m as f64));
            }
            let rem = 2.0 * FERMI_NEXT * libm::pow(c, 9.0) * libm::pow(x_lo, 9.5) / 9.5;
            let x_hi = FERMI_TAIL_START / c;
            let tail = pre * libm::exp(-c * x_hi) / (c * libm::sqrt(x_hi));
            (acc * pre, pre * rem, libm::log(x_lo), libm::log(x_hi), tail)
        }
        Packet::GaussianLog { y0, s } => {
            // Gaussian in y centred at y0 - ln c; 40 widths leave < e^{-800}
            let centre = y0 - libm::log(c);
            (c64(0.0, 0.0), 0.0, centre - 40.0 * s, centre + 40.0 * s, 0.0)
        }
    };
    let q = quad::integrate(integrand, y_lo, y_hi, 1e-14, 1e-13, 8000).map_err(|e| match e {
        Error::ConvergenceFailure { remainder, .. } => {
            Error::ConvergenceFailure { what: "Mellin amplitude", remainder }
        }
        other => other,
    })?;
    let norm = 1.0 / libm::sqrt(TAU);
    Ok(Estimate { value: (q.value + lo_part) * norm, error: (q.error + lo_err + hi_err) * norm })
}

/// Closed form of the Fermi packet amplitude,
/// `(α/√(2π)) (1 - √2 2^{ik}) Γ(1/2 - ik) ζ(1/2 - ik)`.
pub fn fermi_amplitude_closed(k: f64) -> Complex64 {
    let s = c64(0.5, -k);
    let factor = c64(1.0, 0.0) - c64(0.5, k).expf(2.0);
    factor * gamma(s) * zeta(s) * (fermi_alpha() / libm::sqrt(TAU))
}

/// Closed form for a [`HalflineState`], when one exists.
pub fn amplitude_closed(state: &HalflineState, k: f64) -> Complex64 {
    let phase = c64(0.0, k).expf(state.scale);
    let base = match state.packet {
        Packet::Fermi { alpha } => fermi_amplitude_closed(k) * (alpha / fermi_alpha()),
        Packet::GaussianLog { y0, s } => {
            let n = libm::pow(PI * s * s, -0.25);
            c64(-0.5 * k * k * s * s, -k * y0).exp() * (n * s)
        }
    };
    base * phase
}

/// `Â(y) = (1/2π) ∫ A(k) e^{iky} dk` over `[-k_max, k_max]`.
pub fn amplitude_hat(amplitude: impl Fn(f64) -> Complex64, y: f64, k_max: f64) -> Result<Estimate> {
    let q = quad::integrate(|k| amplitude(k) * c64(0.0, k * y).exp(), -k_max, k_max, 1e-13, 1e-12, 4000)?;
    Ok(Estimate { value: q.value / TAU, error: q.error / TAU })
}

/// `φ(x) = ∫ A(k) ψ_k(x) dk` over `[-k_max, k_max]`.
pub fn reconstruct(amplitude: impl Fn(f64) -> Complex64, x: f64, k_max: f64) -> Result<Estimate> {
    let q = quad::integrate(|k| amplitude(k) * psi_k(k, x), -k_max, k_max, 1e-13, 1e-12, 4000)?;
    Ok(Estimate { value: q.value, error: q.error })
}

/// `∫ |A(k)|² dk` over `[-k_max, k_max]`.
pub fn parseval_integral(amplitude: impl Fn(f64) -> Complex64, k_max: f64) -> Result<Estimate> {
    let q = quad::integrate(|k| c64(amplitude(k).norm_sqr(), 0.0), -k_max, k_max, 1e-14, 1e-13, 4000)?;
    Ok(Estimate { value: q.value, error: q.error })
}

/// Large-`|k|` envelope `α²(3 - 2√2 cos(k ln 2)) e^{-π|k|} |ζ(1/2 - ik)|²`
/// of `|A(k)|²` for the Fermi packet.
pub fn fermi_envelope(k: f64) -> f64 {
    let a = fermi_alpha();
    let z = zeta(c64(0.5, -k));
    a * a
        * (3.0 - 2.0 * core::f64::consts::SQRT_2 * libm::cos(k * core::f64::consts::LN_2))
        * libm::exp(-PI * k.abs())
        * z.norm_sqr()
}
