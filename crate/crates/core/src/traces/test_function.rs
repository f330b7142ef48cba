use alloc::vec::Vec;

use crate::{Complex64, Error, Result};

const PI: f64 = core::f64::consts::PI;

/// Even test function `h(k)` with its transform `ĥ(y) = (1/2π)∫h(k)e^{iky}dk`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum TestFunction {
    /// `e^{-t k²}`.
    Gaussian { t: f64 },
    /// `(e^{-t(k-k0)²} + e^{-t(k+k0)²}) / 2`.
    ShiftedPair { t: f64, k0: f64 },
    /// Piecewise-linear table on `k ≥ 0`, extended evenly, zero past the last node.
    Tabulated(Tabulated),
}

/// Samples `h(k_i)` at `0 = k_0 < k_1 < ... < k_n` with `h(k_n) = 0`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tabulated {
    ks: Vec<f64>,
    hs: Vec<f64>,
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        libm::sin(x) / x
    }
}

impl Tabulated {
    pub fn new(ks: Vec<f64>, mut hs: Vec<f64>) -> Result<Self> {
        if ks.len() != hs.len() {
            return Err(Error::DimensionMismatch { what: "tabulated values", expected: ks.len(), got: hs.len() });
        }
        if ks.len() < 2 {
            return Err(Error::InsufficientData { needed: 2, have: ks.len() });
        }
        if ks[0] != 0.0 || ks.windows(2).any(|w| !(w[1] > w[0])) || ks.iter().chain(&hs).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "tabulated",
                reason: "nodes must start at 0, increase strictly and be finite".into(),
            });
        }
        let last = hs.len() - 1;
        if hs[last].abs() > 1e-12 {
            return Err(Error::InvalidParameter { name: "tabulated", reason: "last value must be zero".into() });
        }
        hs[last] = 0.0;
        Ok(Tabulated { ks, hs })
    }

    pub fn nodes(&self) -> (&[f64], &[f64]) {
        (&self.ks, &self.hs)
    }

    fn support(&self) -> f64 {
        self.ks[self.ks.len() - 1]
    }

    fn eval(&self, k: f64) -> f64 {
        let x = k.abs();
        if x >= self.support() {
            return 0.0;
        }
        let i = self.ks.partition_point(|&n| n <= x) - 1;
        let (k0, k1) = (self.ks[i], self.ks[i + 1]);
        self.hs[i] + (self.hs[i + 1] - self.hs[i]) * (x - k0) / (k1 - k0)
    }

    /// Per segment: slope `m`, and the two half-widths used in the transform.
    fn segments(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.ks.windows(2).zip(self.hs.windows(2)).map(|(k, h)| {
            let m = (h[1] - h[0]) / (k[1] - k[0]);
            (m, 0.5 * (k[0] + k[1]), 0.5 * (k[1] - k[0]))
        })
    }

    // ∫_0^X h cos(ky) dk = -2 Σ m p q sinc(p y) sinc(q y); the boundary
    // terms of the integration by parts vanish because h(X) = 0.
    fn hat(&self, y: f64) -> f64 {
        -2.0 * self.segments().map(|(m, p, q)| m * p * q * sinc(p * y) * sinc(q * y)).sum::<f64>() / PI
    }

    fn hat_weighted_envelope(&self, y: f64) -> f64 {
        // each term is bounded by min(A, B/ℓ²)
        self.segments()
            .map(|(m, p, q)| {
                let (a, b) = (2.0 * (m * p * q).abs() / PI, 2.0 * m.abs() / PI);
                if b == 0.0 {
                    return 0.0;
                }
                let peak = libm::sqrt(b / a);
                if y >= peak {
                    b / y
                } else {
                    libm::sqrt(a * b)
                }
            })
            .sum()
    }

    fn envelope(&self, k: f64) -> f64 {
        let x = k.abs();
        let mut m = self.eval(x).abs();
        for (kn, hn) in self.ks.iter().zip(&self.hs) {
            if *kn >= x {
                m = m.max(hn.abs());
            }
        }
        m
    }
}

fn gauss_hat(t: f64, y: f64) -> f64 {
    libm::exp(-y * y / (4.0 * t)) / (2.0 * libm::sqrt(PI * t))
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name: "t", reason: "must be positive and finite".into() })
    }
}

impl TestFunction {
    pub fn gaussian(t: f64) -> Result<Self> {
        check_t(t)?;
        Ok(TestFunction::Gaussian { t })
    }

    pub fn shifted_pair(t: f64, k0: f64) -> Result<Self> {
        check_t(t)?;
        if !k0.is_finite() {
            return Err(Error::InvalidParameter { name: "k0", reason: "must be finite".into() });
        }
        Ok(TestFunction::ShiftedPair { t, k0: k0.abs() })
    }

    /// Re-check parameters, e.g. after deserialization.
    pub fn validate(&self) -> Result<()> {
        match self {
            TestFunction::Gaussian { t } => check_t(*t),
            TestFunction::ShiftedPair { t, k0 } => TestFunction::shifted_pair(*t, *k0).map(|_| ()),
            TestFunction::Tabulated(tab) => Tabulated::new(tab.ks.clone(), tab.hs.clone()).map(|_| ()),
        }
    }

    pub fn eval(&self, k: f64) -> f64 {
        match self {
            TestFunction::Gaussian { t } => libm::exp(-t * k * k),
            TestFunction::ShiftedPair { t, k0 } => {
                0.5 * (libm::exp(-t * (k - k0) * (k - k0)) + libm::exp(-t * (k + k0) * (k + k0)))
            }
            TestFunction::Tabulated(tab) => tab.eval(k),
        }
    }

    /// Analytic continuation, when there is one.
    pub fn eval_complex(&self, z: Complex64) -> Option<Complex64> {
        match self {
            TestFunction::Gaussian { t } => Some((-z * z * *t).exp()),
            TestFunction::ShiftedPair { t, k0 } => {
                let (a, b) = (z - *k0, z + *k0);
                Some(((-a * a * *t).exp() + (-b * b * *t).exp()) * 0.5)
            }
            TestFunction::Tabulated(_) => None,
        }
    }

    /// `h'(z)` for analytic test functions.
    pub fn derivative_complex(&self, z: Complex64) -> Option<Complex64> {
        match self {
            TestFunction::Gaussian { t } => Some(-z * 2.0 * *t * (-z * z * *t).exp()),
            TestFunction::ShiftedPair { t, k0 } => {
                let (a, b) = (z - *k0, z + *k0);
                Some(-(a * (-a * a * *t).exp() + b * (-b * b * *t).exp()) * *t)
            }
            TestFunction::Tabulated(_) => None,
        }
    }

    pub fn is_analytic(&self) -> bool {
        !matches!(self, TestFunction::Tabulated(_))
    }

    pub fn hat(&self, y: f64) -> f64 {
        match self {
            TestFunction::Gaussian { t } => gauss_hat(*t, y),
            TestFunction::ShiftedPair { t, k0 } => libm::cos(k0 * y) * gauss_hat(*t, y),
            TestFunction::Tabulated(tab) => tab.hat(y),
        }
    }

    /// `sup_{|k'| ≥ |k|} |h(k')|`.
    pub fn envelope(&self, k: f64) -> f64 {
        let x = k.abs();
        match self {
            TestFunction::Gaussian { .. } => self.eval(x),
            TestFunction::ShiftedPair { k0, .. } => {
                if x <= *k0 {
                    1.0
                } else {
                    self.eval(x)
                }
            }
            TestFunction::Tabulated(tab) => tab.envelope(x),
        }
    }

    /// `sup_{ℓ ≥ y} ℓ |ĥ(ℓ)|`, for `y ≥ 0`.
    pub fn hat_weighted_envelope(&self, y: f64) -> f64 {
        match self {
            TestFunction::Gaussian { t } | TestFunction::ShiftedPair { t, .. } => {
                let peak = libm::sqrt(2.0 * t);
                let l = y.max(peak);
                l * gauss_hat(*t, l)
            }
            TestFunction::Tabulated(tab) => tab.hat_weighted_envelope(y),
        }
    }

    /// A `K` with `|h(k)| ≤ eps` for all `|k| ≥ K`.
    pub fn cutoff(&self, eps: f64) -> f64 {
        let eps = eps.clamp(1e-300, 0.5);
        match self {
            TestFunction::Gaussian { t } => libm::sqrt(-libm::log(eps) / t),
            TestFunction::ShiftedPair { t, k0 } => k0 + libm::sqrt(-libm::log(eps) / t),
            TestFunction::Tabulated(tab) => tab.support(),
        }
    }

    /// Upper bound on `∫ |h'(k + iη)| dk` over the real line.
    pub fn derivative_strip_integral(&self, eta: f64) -> Option<f64> {
        match self {
            // |h'(k+iη)| ≤ 2t(|k|+η) e^{-t(k²-η²)} for each Gaussian piece
            TestFunction::Gaussian { t } | TestFunction::ShiftedPair { t, .. } => {
                Some(libm::exp(t * eta * eta) * (2.0 + 2.0 * eta * libm::sqrt(PI * t)))
            }
            TestFunction::Tabulated(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;
    use crate::quad;
    use alloc::vec;

    fn numeric_hat(h: &TestFunction, y: f64) -> f64 {
        let k = h.cutoff(1e-18);
        let (v, _) = quad::integrate_real(|x| h.eval(x) * libm::cos(x * y), -k, k, 1e-14, 0.0, 2000).unwrap();
        v / (2.0 * PI)
    }

    #[test]
    fn gaussian_hat_values() {
        let h = TestFunction::gaussian(1.0).unwrap();
        assert!((h.hat(0.0) - 0.28209479177387814).abs() < 1e-15);
        let q = TestFunction::gaussian(0.25).unwrap();
        assert!((q.hat(0.0) - 1.0 / PI.sqrt()).abs() < 1e-15);
        for y in [0.3, 1.0, 2.5] {
            assert_eq!(h.hat(y), h.hat(-y));
            assert!((h.hat(y) - numeric_hat(&h, y)).abs() < 1e-12);
        }
    }

    #[test]
    fn shifted_and_tabulated_hats_match_quadrature() {
        let s = TestFunction::shifted_pair(0.5, 3.0).unwrap();
        let tab = TestFunction::Tabulated(
            Tabulated::new(vec![0.0, 0.5, 1.2, 2.0, 3.0], vec![1.0, 0.9, 0.4, 0.1, 0.0]).unwrap(),
        );
        for y in [0.0, 0.7, 2.0, 5.5] {
            assert!((s.hat(y) - numeric_hat(&s, y)).abs() < 1e-12);
            assert!((tab.hat(y) - numeric_hat(&tab, y)).abs() < 1e-9, "y={y}");
        }
    }

    #[test]
    fn evenness_and_envelopes_by_sampling() {
        let fs = [
            TestFunction::gaussian(0.3).unwrap(),
            TestFunction::shifted_pair(0.4, 2.0).unwrap(),
            TestFunction::Tabulated(Tabulated::new(vec![0.0, 1.0, 2.0], vec![1.0, 1.5, 0.0]).unwrap()),
        ];
        for h in &fs {
            for i in 0..200 {
                let k = i as f64 * 0.05;
                assert_eq!(h.eval(k), h.eval(-k));
                assert!(h.eval(k).abs() <= h.envelope(k * 0.9) + 1e-15);
                let y = 0.5 + i as f64 * 0.04;
                assert!(y * h.hat(y).abs() <= h.hat_weighted_envelope(y * 0.95) + 1e-15);
            }
        }
    }

    #[test]
    fn complex_continuation_agrees_on_real_axis() {
        let h = TestFunction::shifted_pair(0.7, 1.5).unwrap();
        for k in [-2.0, 0.0, 0.3, 4.0] {
            assert!((h.eval_complex(c64(k, 0.0)).unwrap().re - h.eval(k)).abs() < 1e-15);
            let fd = (h.eval(k + 1e-6) - h.eval(k - 1e-6)) / 2e-6;
            assert!((h.derivative_complex(c64(k, 0.0)).unwrap().re - fd).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(TestFunction::gaussian(0.0).is_err());
        assert!(TestFunction::gaussian(f64::NAN).is_err());
        assert!(Tabulated::new(vec![0.0, 1.0], vec![1.0, 0.5]).is_err());
        assert!(Tabulated::new(vec![0.1, 1.0], vec![1.0, 0.0]).is_err());
    }
}
