use nalgebra::{DMatrix, Matrix4, Vector4};

use crate::{Error, Result};

/// Spectral radius of a nonnegative 4×4 matrix by power iteration with
/// repeated squaring: step `k` uses `v = M^(2^k) 1` and stops when the
/// Collatz–Wielandt bounds `min_i (Mv)_i/v_i ≤ ρ ≤ max_i (Mv)_i/v_i` are
/// within `tol`. Returns the estimate, the upper bound and the positive
/// vector attaining it.
pub fn spectral_radius_power(
    m: &Matrix4<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, f64, Vector4<f64>)> {
    if m.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::Certificate("matrix has negative or non-finite entries".into()));
    }
    let mut p = Matrix4::identity();
    let (mut lo, mut hi) = (0.0, f64::INFINITY);
    for _ in 0..max_iter {
        let v = p * Vector4::repeat(1.0);
        if v.iter().any(|&x| !(x > 0.0)) {
            break;
        }
        let w = m * v;
        lo = f64::INFINITY;
        hi = 0.0f64;
        for i in 0..4 {
            let r = w[i] / v[i];
            lo = lo.min(r);
            hi = hi.max(r);
        }
        if hi - lo <= tol * hi.max(f64::MIN_POSITIVE) {
            return Ok((0.5 * (lo + hi), hi, v / v.amax()));
        }
        let next = if p == Matrix4::identity() { *m } else { p * p };
        let scale = next.amax();
        if scale == 0.0 || !scale.is_finite() {
            break;
        }
        p = next / scale;
    }
    Err(Error::Certificate(format!(
        "power iteration for the spectral radius did not settle: bounds [{lo}, {hi}]"
    )))
}

/// Spectral radius from the characteristic polynomial (Faddeev–LeVerrier
/// recursion on a diagonally balanced copy) and the eigenvalues of its
/// companion matrix. The largest modulus is then polished by Newton steps
/// on `det(λI − M)` started just above it, since polynomial roots lose
/// accuracy when eigenvalues cluster; for a nonnegative matrix the iteration
/// descends onto the Perron root.
pub fn spectral_radius_companion(m: &Matrix4<f64>) -> f64 {
    let coeffs = characteristic_polynomial(&balance(m));
    // Companion matrix of λ⁴ + c3 λ³ + c2 λ² + c1 λ + c0.
    let mut comp = DMatrix::<f64>::zeros(4, 4);
    for i in 1..4 {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..4 {
        comp[(i, 3)] = -coeffs[i];
    }
    let rho = comp
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if rho == 0.0 {
        return rho;
    }
    match newton_det(m, rho * (1.0 + 1e-4)) {
        Some(r) if (r - rho).abs() <= 1e-4 * rho => r,
        _ => rho,
    }
}

/// Newton iteration on `f(λ) = det(λI − M)` using
/// `f'(λ)/f(λ) = tr((λI − M)⁻¹)`.
fn newton_det(m: &Matrix4<f64>, start: f64) -> Option<f64> {
    let mut lam = start;
    for _ in 0..100 {
        let shifted = Matrix4::identity() * lam - m;
        let inv = shifted.try_inverse()?;
        let ratio = inv.trace();
        if !ratio.is_finite() || ratio == 0.0 {
            return Some(lam);
        }
        let step = 1.0 / ratio;
        lam -= step;
        if step.abs() <= 1e-15 * lam.abs() {
            return Some(lam);
        }
    }
    Some(lam)
}

/// Diagonal similarity `D M D⁻¹` equalizing off-diagonal row and column
/// norms, which leaves the spectrum unchanged.
fn balance(m: &Matrix4<f64>) -> Matrix4<f64> {
    let mut b = *m;
    for _ in 0..100 {
        let mut done = true;
        for i in 0..4 {
            let (mut r, mut c) = (0.0, 0.0);
            for j in (0..4).filter(|&j| j != i) {
                r += b[(i, j)].abs();
                c += b[(j, i)].abs();
            }
            if r == 0.0 || c == 0.0 {
                continue;
            }
            let f = (c / r).sqrt();
            if (f - 1.0).abs() > 1e-3 {
                done = false;
                for j in 0..4 {
                    b[(i, j)] *= f;
                    b[(j, i)] /= f;
                }
            }
        }
        if done {
            break;
        }
    }
    b
}

/// Coefficients `[c0, c1, c2, c3]` of the monic characteristic polynomial.
fn characteristic_polynomial(a: &Matrix4<f64>) -> [f64; 4] {
    let n = 4;
    let mut c = [0.0; 5];
    c[n] = 1.0;
    let mut mk = Matrix4::<f64>::zeros();
    for k in 1..=n {
        mk = a * mk + Matrix4::identity() * c[n - k + 1];
        c[n - k] = -(a * mk).trace() / k as f64;
    }
    [c[0], c[1], c[2], c[3]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangular_matrix_radius() {
        let m = Matrix4::new(
            0.5, 0.1, 0.0, 0.2, //
            0.0, 0.7, 0.3, 0.0, //
            0.0, 0.0, 0.9, 0.1, //
            0.0, 0.0, 0.0, 0.2,
        );
        assert!((spectral_radius_companion(&m) - 0.9).abs() < 1e-10);
    }

    #[test]
    fn characteristic_polynomial_of_diagonal() {
        let m = Matrix4::from_diagonal(&Vector4::new(1.0, 2.0, 3.0, 4.0));
        // (λ−1)(λ−2)(λ−3)(λ−4) = λ⁴ − 10λ³ + 35λ² − 50λ + 24
        assert_eq!(characteristic_polynomial(&m), [24.0, -50.0, 35.0, -10.0]);
    }

    #[test]
    fn power_and_companion_agree_on_positive_matrix() {
        let m = Matrix4::from_fn(|i, j| 0.05 + 0.1 * ((i * 4 + j) as f64).sin().abs());
        let (rho, hi, _) = spectral_radius_power(&m, 1e-12, 10_000).unwrap();
        assert!(hi >= rho);
        assert!((rho - spectral_radius_companion(&m)).abs() < 1e-10);
        let dense = DMatrix::from_fn(4, 4, |i, j| m[(i, j)]);
        let direct = dense.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!((rho - direct).abs() < 1e-10);
    }

    #[test]
    fn clustered_radius_near_one() {
        let m = Matrix4::new(
            0.99997, 1e-24, 1e-23, 1e-22, //
            1.3e8, 0.999996, 1e-21, 7.9e4, //
            2e-13, 5e-13, 1.0 - 1e-14, 4e-13, //
            44.7, 1e-27, 1e-26, 0.95,
        );
        let (rho, hi, _) = spectral_radius_power(&m, 1e-10, 10_000).unwrap();
        let comp = spectral_radius_companion(&m);
        assert!(hi < 1.0 + 1e-10);
        assert!((rho - comp).abs() < 1e-8, "{rho} vs {comp}");
    }
}
