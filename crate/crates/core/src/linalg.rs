//! Small dense vector helpers shared by the oracles and the simulator.

use nalgebra::DMatrix;

use crate::{Error, Result};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    norm2(a).sqrt()
}

/// `y += s * x`
#[inline]
pub fn axpy(s: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// `out_i = Σ_j w_ij v_j` for a stack of agent vectors.
pub fn mix(w: &DMatrix<f64>, vs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = vs.len();
    let d = vs.first().map_or(0, Vec::len);
    (0..n)
        .map(|i| {
            let mut acc = vec![0.0; d];
            for (j, v) in vs.iter().enumerate() {
                let wij = w[(i, j)];
                if wij != 0.0 {
                    axpy(wij, v, &mut acc);
                }
            }
            acc
        })
        .collect()
}

/// Sum of the agent vectors.
pub fn stack_sum(vs: &[Vec<f64>]) -> Vec<f64> {
    let d = vs.first().map_or(0, Vec::len);
    let mut acc = vec![0.0; d];
    for v in vs {
        axpy(1.0, v, &mut acc);
    }
    acc
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration. Converged once the Rayleigh quotient changes by less than
/// `tol` relative to its magnitude.
pub fn sym_power_max(m: &DMatrix<f64>, tol: f64, max_iter: usize) -> Result<f64> {
    let n = m.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    // A non-symmetric start vector avoids landing in an invariant subspace.
    let mut v = nalgebra::DVector::from_fn(n, |i, _| 1.0 + 0.1 * (i as f64 + 1.0).sqrt());
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let w = m * &v;
        let next = v.dot(&w);
        let wn = w.norm();
        if wn == 0.0 {
            return Ok(0.0);
        }
        v = w / wn;
        if (next - lambda).abs() <= tol * next.abs().max(f64::MIN_POSITIVE) {
            return Ok(next);
        }
        lambda = next;
    }
    Err(Error::Analysis {
        message: format!("power iteration did not converge in {max_iter} iterations"),
        residual: lambda,
    })
}

/// Smallest eigenvalue of a symmetric PSD matrix, via the largest eigenvalue
/// of the shifted matrix `λ_max I − m`.
pub fn sym_power_min(m: &DMatrix<f64>, tol: f64, max_iter: usize) -> Result<f64> {
    let top = sym_power_max(m, tol, max_iter)?;
    let n = m.nrows();
    let shifted = DMatrix::identity(n, n) * top - m;
    let gap = sym_power_max(&shifted, tol, max_iter)?;
    Ok((top - gap).max(0.0))
}
