//! Small dense linear-algebra helpers on top of nalgebra.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::{CMatrix, Complex64, Error, Result};

/// Shorthand complex constructor.
#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Entrywise residual of `U U^dagger - I`.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    max_abs(&(u * u.adjoint() - identity(u.nrows())))
}

/// Entrywise residual of `H - H^dagger`.
pub fn hermiticity_residual(h: &CMatrix) -> f64 {
    max_abs(&(h - h.adjoint()))
}

/// Singular value decomposition `M = G V^dagger` with `G = U Σ`, from
/// one-sided Jacobi rotations. Columns are sorted by descending norm.
///
/// Jacobi keeps small singular values accurate to `eps * sigma_max`, which
/// the rank decisions below depend on.
#[derive(Debug, Clone)]
pub struct Svd {
    pub singular_values: Vec<f64>,
    /// `M V`; column `i` has norm `singular_values[i]`.
    pub g: CMatrix,
    /// Right singular vectors (columns), unitary.
    pub v: CMatrix,
}

const JACOBI_SWEEPS: usize = 80;

pub fn svd(m: &CMatrix) -> Svd {
    let n = m.ncols();
    let mut g = m.clone();
    let mut v = identity(n);
    // columns below this are zero to working precision; rotating them would
    // use phases computed from subnormal inner products
    let negligible = {
        let f = 1e-18 * m.norm();
        f * f
    };
    for _ in 0..JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = g.column(p).norm_squared();
                let beta = g.column(q).norm_squared();
                if alpha.min(beta) <= negligible {
                    continue;
                }
                let gamma = g.column(p).dotc(&g.column(q));
                let mag = gamma.norm();
                if mag <= 1e-15 * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let phase = gamma / mag;
                let zeta = (beta - alpha) / (2.0 * mag);
                let t = if zeta >= 0.0 { 1.0 } else { -1.0 } / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                for mat in [&mut g, &mut v] {
                    for r in 0..mat.nrows() {
                        let (x, y) = (mat[(r, p)], mat[(r, q)] * phase.conj());
                        mat[(r, p)] = x * c - y * s;
                        mat[(r, q)] = x * s + y * c;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|i| g.column(i).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let mut gs = CMatrix::zeros(m.nrows(), n);
    let mut vs = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        gs.set_column(dst, &g.column(src));
        vs.set_column(dst, &v.column(src));
    }
    Svd { singular_values: order.iter().map(|&i| norms[i]).collect(), g: gs, v: vs }
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    svd(m).singular_values
}

/// Numerical rank with threshold `rtol * sigma_max`.
pub fn rank(m: &CMatrix, rtol: f64) -> usize {
    let s = singular_values(m);
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > rtol * smax).count()
}

/// Orthogonal projector onto the kernel of a matrix.
///
/// Singular values inside `[threshold/band, threshold*band]` make the
/// split ambiguous and are reported instead of guessed.
pub fn kernel_projector(m: &CMatrix, rtol: f64, band: f64) -> Result<(CMatrix, usize)> {
    let n = m.ncols();
    let d = svd(m);
    let smax = d.singular_values.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return Ok((identity(n), n));
    }
    let thr = rtol * smax;
    let mut p = CMatrix::zeros(n, n);
    let mut nullity = 0;
    for (i, &s) in d.singular_values.iter().enumerate() {
        if s > thr / band && s < thr * band {
            return Err(Error::RankAmbiguous { sigma: s, threshold: thr });
        }
        if s <= thr {
            let v = d.v.column(i);
            p += v * v.adjoint();
            nullity += 1;
        }
    }
    Ok((p, nullity))
}

/// Moore-Penrose pseudo-inverse with threshold `rtol * sigma_max`.
pub fn pseudo_inverse(m: &CMatrix, rtol: f64) -> CMatrix {
    let d = svd(m);
    let smax = d.singular_values.first().copied().unwrap_or(0.0);
    let thr = (rtol * smax).max(f64::MIN_POSITIVE);
    let mut p = CMatrix::zeros(m.ncols(), m.nrows());
    for (i, &s) in d.singular_values.iter().enumerate() {
        if s > thr {
            p += d.v.column(i) * d.g.column(i).adjoint() * c64(1.0 / (s * s), 0.0);
        }
    }
    p
}

const JACOBI_EIGEN_SWEEPS: usize = 100;

/// Eigenvalues and orthonormal eigenvectors of a Hermitian matrix,
/// sorted ascending. Cyclic Jacobi: always terminates, and repeated
/// eigenvalues are no harder than distinct ones.
pub fn hermitian_eigen(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = h.nrows();
    let mut a = (h + h.adjoint()).scale(0.5);
    let mut v = identity(n);
    let frob = a.norm();
    for _ in 0..JACOBI_EIGEN_SWEEPS {
        let off: f64 =
            (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|ij| a[ij].norm_sqr()).sum();
        if libm::sqrt(off) <= 1e-16 * frob {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= 1e-300 || mag <= 1e-18 * frob {
                    continue;
                }
                let phase = apq / mag;
                let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * mag);
                let t = if tau >= 0.0 { 1.0 } else { -1.0 } / (tau.abs() + libm::sqrt(1.0 + tau * tau));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                // columns: A J and V J with J = [[c, s], [-s e^{-iφ}, c e^{-iφ}]]
                for mat in [&mut a, &mut v] {
                    for r in 0..n {
                        let (x, y) = (mat[(r, p)], mat[(r, q)] * phase.conj());
                        mat[(r, p)] = x * c - y * s;
                        mat[(r, q)] = x * s + y * c;
                    }
                }
                // rows: J^dagger A
                for col in 0..n {
                    let (x, y) = (a[(p, col)], a[(q, col)] * phase);
                    a[(p, col)] = x * c - y * s;
                    a[(q, col)] = x * s + y * c;
                }
                a[(p, q)] = c64(0.0, 0.0);
                a[(q, p)] = c64(0.0, 0.0);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let vals = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vecs = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &v.column(src));
    }
    (vals, vecs)
}

/// Count of (negative, near-zero, positive) eigenvalues of a Hermitian matrix.
pub fn inertia(h: &CMatrix, tol: f64) -> (usize, usize, usize) {
    let (vals, _) = hermitian_eigen(h);
    let mut out = (0, 0, 0);
    for v in vals {
        if v < -tol {
            out.0 += 1;
        } else if v > tol {
            out.2 += 1;
        } else {
            out.1 += 1;
        }
    }
    out
}

/// Eigen-decomposition of a normal matrix (unitary in practice).
///
/// The Hermitian part of `e^{-iβ} U` separates eigenvalues by
/// `cos(θ - β)`; pairs it cannot tell apart are split by the
/// anti-Hermitian part inside their common eigenspace.
pub fn normal_eigen(u: &CMatrix) -> (Vec<Complex64>, CMatrix) {
    const BETA: f64 = 0.618_033_988_749_895;
    const CLUSTER: f64 = 1e-8;
    let n = u.nrows();
    let rot = Complex64::from_polar(1.0, -BETA);
    let turned = u * rot;
    let (mvals, mut q) = hermitian_eigen(&(&turned + turned.adjoint()).scale(0.5));
    let scale = max_abs(u).max(f64::MIN_POSITIVE);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && mvals[end] - mvals[end - 1] <= CLUSTER * scale {
            end += 1;
        }
        if end - start > 1 {
            let w = q.columns(start, end - start).into_owned();
            let skew = (&turned - turned.adjoint()) * c64(0.0, -0.5);
            let (_, r) = hermitian_eigen(&(w.adjoint() * skew * &w));
            q.columns_mut(start, end - start).copy_from(&(w * r));
        }
        start = end;
    }
    let vals = (0..n).map(|i| q.column(i).dotc(&(u * q.column(i)))).collect();
    (vals, q)
}

/// Eigenvalues of a normal matrix.
pub fn normal_eigenvalues(u: &CMatrix) -> Vec<Complex64> {
    normal_eigen(u).0
}

/// Upper bound on the spectral radius of a square matrix from Gelfand's
/// formula, `ρ(M) ≤ ‖M^{2^j}‖^{1/2^j}`, tightest over `j ≤ 40`.
pub fn spectral_radius_bound(m: &DMatrix<f64>) -> f64 {
    let mut p = m.clone();
    let mut log_scale = 0.0;
    let mut best = f64::INFINITY;
    for j in 0..=40 {
        let norm = p.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let pow = libm::pow(2.0, j as f64);
        best = best.min(libm::exp((libm::log(norm) + log_scale) / pow));
        p /= norm;
        log_scale = 2.0 * (log_scale + libm::log(norm));
        p = &p * &p;
    }
    best
}

/// Columns spanning the range of an orthogonal projector.
pub fn range_basis(p: &CMatrix) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(p);
    let cols: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > 0.5).collect();
    let mut w = CMatrix::zeros(p.nrows(), cols.len());
    for (dst, &src) in cols.iter().enumerate() {
        w.set_column(dst, &vecs.column(src));
    }
    w
}

/// Block-diagonal matrix from a real diagonal.
pub fn diag_real(d: &[f64]) -> CMatrix {
    let n = d.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { c64(d[i], 0.0) } else { c64(0.0, 0.0) })
}

/// Block-diagonal matrix from a complex diagonal.
pub fn diag(d: &[Complex64]) -> CMatrix {
    let n = d.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { d[i] } else { Complex64::new(0.0, 0.0) })
}

/// The swap matrix `[[0, I], [I, 0]]` of size `2n`.
pub fn swap(n: usize) -> CMatrix {
    CMatrix::from_fn(2 * n, 2 * n, |i, j| if (i + n == j) || (j + n == i) { c64(1.0, 0.0) } else { c64(0.0, 0.0) })
}

/// Wrap an angle into `[0, 2 pi)`.
#[inline]
pub fn wrap_phase(z: Complex64) -> f64 {
    let w = libm::atan2(z.im, z.re);
    if w < 0.0 {
        w + crate::TAU
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotation(theta: f64) -> CMatrix {
        let (s, c) = (libm::sin(theta), libm::cos(theta));
        CMatrix::from_row_slice(2, 2, &[c64(c, 0.0), c64(-s, 0.0), c64(s, 0.0), c64(c, 0.0)])
    }

    #[test]
    fn normal_eigen_of_rotation() {
        let u = rotation(0.7);
        let (vals, vecs) = normal_eigen(&u);
        let mut phases: Vec<f64> = vals.iter().map(|z| z.arg()).collect();
        phases.sort_by(f64::total_cmp);
        assert!((phases[0] + 0.7).abs() < 1e-14 && (phases[1] - 0.7).abs() < 1e-14);
        for (i, &z) in vals.iter().enumerate() {
            let v = vecs.column(i).into_owned();
            let r = &u * &v - v.scale(1.0) * z;
            assert!(r.norm() < 1e-13);
        }
    }

    #[test]
    fn degenerate_unitary_is_handled() {
        let u = identity(3).scale(-1.0);
        let vals = normal_eigenvalues(&u);
        assert!(vals.iter().all(|z| (z + c64(1.0, 0.0)).norm() < 1e-14));
    }

    #[test]
    fn kernel_projector_rank() {
        let m = diag_real(&[1.0, 0.0, 2.0]);
        let (p, k) = kernel_projector(&m, 1e-10, 100.0).unwrap();
        assert_eq!(k, 1);
        assert!((p[(1, 1)].re - 1.0).abs() < 1e-14);
        let bad = diag_real(&[1.0, 1e-10, 2.0]);
        assert!(matches!(kernel_projector(&bad, 1e-10, 100.0), Err(Error::RankAmbiguous { .. })));
    }

    #[test]
    fn pseudo_inverse_of_projector() {
        let m = diag_real(&[2.0, 0.0]);
        let p = pseudo_inverse(&m, 1e-12);
        assert!((p[(0, 0)].re - 0.5).abs() < 1e-15 && p[(1, 1)].norm() < 1e-15);
    }

    #[test]
    fn svd_of_rank_deficient_complex_matrix() {
        let col =
            |k: f64| CMatrix::from_fn(4, 1, |i, _| c64(libm::cos(k * (i + 1) as f64), libm::sin(0.3 * k + i as f64)));
        let m = col(1.0) * col(2.0).adjoint() + col(0.4) * col(3.1).adjoint() * c64(0.2, -0.7);
        let m = m * diag_real(&[0.3, 1.0, 2.5, 7.0]);
        let d = svd(&m);
        assert!(max_abs(&(&d.g * d.v.adjoint() - &m)) < 1e-13);
        assert!(unitarity_residual(&d.v) < 1e-14);
        assert!(d.singular_values[2] < 1e-14 * d.singular_values[0]);
        let p = pseudo_inverse(&m, 1e-10);
        assert!(max_abs(&(&m * &p * &m - &m)) < 1e-12);
        assert!(max_abs(&(&p * &m * &p - &p)) < 1e-12);
        assert!(hermiticity_residual(&(&m * &p)) < 1e-13);
        let (k, nullity) = kernel_projector(&m, 1e-10, 100.0).unwrap();
        assert_eq!(nullity, 2);
        assert!(max_abs(&(&m * k)) < 1e-13);
    }

    #[test]
    fn svd_keeps_v_unitary_with_exact_kernel() {
        // rows [0 | 0] over [D | D X] with X unitary: the kernel columns
        // shrink into the subnormal range during the sweeps
        let x = test_unitary(3, &[0.4, -1.1, 2.6]);
        let d = diag_real(&[0.73, 0.8, 0.71]);
        let mut m = CMatrix::zeros(6, 6);
        m.view_mut((3, 0), (3, 3)).copy_from(&d);
        m.view_mut((3, 3), (3, 3)).copy_from(&(&d * &x));
        let s = svd(&m);
        assert!(unitarity_residual(&s.v) < 1e-14);
        let (k, nullity) = kernel_projector(&m, 1e-10, 100.0).unwrap();
        assert_eq!(nullity, 3);
        assert!(max_abs(&(&m * &k)) < 1e-14);
        assert!(max_abs(&(&k * &k - &k)) < 1e-14);
    }

    fn test_unitary(n: usize, phases: &[f64]) -> CMatrix {
        let h = CMatrix::from_fn(n, n, |i, j| c64(libm::cos((i * 3 + j) as f64), libm::sin((i + 2 * j) as f64)));
        let (_, q) = hermitian_eigen(&(&h + h.adjoint()));
        &q * diag(&phases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect::<Vec<_>>()) * q.adjoint()
    }

    #[test]
    fn normal_eigen_with_repeated_eigenvalues() {
        let pi = core::f64::consts::PI;
        let phases = [pi, pi, pi, pi, 0.3, -0.3, 0.3, 2.0];
        let u = test_unitary(8, &phases);
        let (vals, vecs) = normal_eigen(&u);
        assert!(unitarity_residual(&vecs) < 1e-13);
        assert!(max_abs(&(&vecs * diag(&vals) * vecs.adjoint() - &u)) < 1e-13);
        let mut got: Vec<f64> = vals.iter().map(|z| z.arg()).collect();
        let mut want: Vec<f64> = phases.iter().map(|&p| c64(libm::cos(p), libm::sin(p)).arg()).collect();
        got.sort_by(|a, b| a.total_cmp(b));
        want.sort_by(|a, b| a.total_cmp(b));
        for (g, w) in got.iter().zip(&want) {
            assert!((libm::cos(g - w) - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn hermitian_eigen_degenerate() {
        let u = test_unitary(6, &[0.0; 6]);
        let h = &u * diag_real(&[0.0, 0.0, 1.0, 1.0, 1.0, -2.0]) * u.adjoint();
        let (vals, vecs) = hermitian_eigen(&h);
        for (v, w) in vals.iter().zip([-2.0, 0.0, 0.0, 1.0, 1.0, 1.0]) {
            assert!((v - w).abs() < 1e-14);
        }
        assert!(max_abs(&(&vecs * diag_real(&vals) * vecs.adjoint() - &h)) < 1e-13);
    }

    #[test]
    fn gelfand_bound() {
        let m = DMatrix::from_row_slice(2, 2, &[0.5, 10.0, 0.0, 0.25]);
        let r = spectral_radius_bound(&m);
        assert!((0.5..0.5 * (1.0 + 1e-9)).contains(&r));
        assert_eq!(spectral_radius_bound(&DMatrix::zeros(3, 3)), 0.0);
    }

    #[test]
    fn wrap_phase_range() {
        assert!((wrap_phase(c64(0.0, -1.0)) - 1.5 * core::f64::consts::PI).abs() < 1e-15);
        assert_eq!(wrap_phase(c64(1.0, 0.0)), 0.0);
    }
}
