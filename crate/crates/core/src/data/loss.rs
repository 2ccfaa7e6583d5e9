use super::Sample;
use crate::linalg::dot;
use crate::{Error, Result};

/// Number of classes of the multiclass loss.
pub const CLASSES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `(1/2M) Σ (aᵀθ − b)² + (r/2)‖θ‖²`.
    LeastSquares,
    /// Binary cross-entropy of a logistic model, labels in `{0, 1}`.
    BinaryLogistic,
    /// Multinomial logistic regression over [`CLASSES`] classes. The
    /// parameter vector stores class `k` in `θ[k·d .. (k+1)·d]`.
    Softmax,
}

impl LossKind {
    /// Length of the parameter vector for `d` features.
    pub fn param_dim(self, d: usize) -> usize {
        match self {
            LossKind::Softmax => CLASSES * d,
            _ => d,
        }
    }

    /// Factor multiplying `λ_max` of the feature second-moment matrix in the
    /// smoothness constant.
    pub fn curvature_factor(self) -> f64 {
        match self {
            LossKind::LeastSquares => 1.0,
            LossKind::BinaryLogistic => 0.25,
            LossKind::Softmax => 0.5,
        }
    }

    pub fn value_grad<'a>(
        self,
        theta: &[f64],
        batch: impl IntoIterator<Item = &'a Sample>,
        r: f64,
    ) -> Result<(f64, Vec<f64>)> {
        self.value_grad_shifted(theta, batch, r, 0.0)
    }

    /// As [`LossKind::value_grad`] with every regression target offset by
    /// `shift` (ignored by the classification losses).
    pub(crate) fn value_grad_shifted<'a>(
        self,
        theta: &[f64],
        batch: impl IntoIterator<Item = &'a Sample>,
        r: f64,
        shift: f64,
    ) -> Result<(f64, Vec<f64>)> {
        let mut grad = vec![0.0; theta.len()];
        let mut value = 0.0;
        let mut m = 0usize;
        let mut scratch = vec![0.0; CLASSES];
        for s in batch {
            m += 1;
            value += self.accumulate(theta, s, shift, &mut grad, &mut scratch)?;
        }
        if m == 0 {
            return Err(Error::domain("empty batch"));
        }
        let inv = 1.0 / m as f64;
        let reg = 0.5 * r * dot(theta, theta);
        for (g, th) in grad.iter_mut().zip(theta) {
            *g = *g * inv + r * th;
        }
        Ok((value * inv + reg, grad))
    }

    /// Adds one sample's gradient into `grad` and returns its loss.
    fn accumulate(self, theta: &[f64], s: &Sample, shift: f64, grad: &mut [f64], scratch: &mut [f64]) -> Result<f64> {
        let d = s.a.len();
        if theta.len() != self.param_dim(d) {
            return Err(Error::domain(format!(
                "parameter length {} does not match feature dimension {d}",
                theta.len()
            )));
        }
        match self {
            LossKind::LeastSquares => {
                let res = dot(&s.a, theta) - (s.b + shift);
                grad.iter_mut().zip(&s.a).for_each(|(g, a)| *g += res * a);
                Ok(0.5 * res * res)
            }
            LossKind::BinaryLogistic => {
                let u = dot(&s.a, theta);
                let coef = sigmoid(u) - s.b;
                grad.iter_mut().zip(&s.a).for_each(|(g, a)| *g += coef * a);
                // (1 − b)u − log s(u) = (1 − b)u + softplus(−u)
                Ok((1.0 - s.b) * u + softplus(-u))
            }
            LossKind::Softmax => {
                let label = s.b as usize;
                if s.b < 0.0 || label >= CLASSES || s.b.fract() != 0.0 {
                    return Err(Error::domain(format!("label {} outside 0..{CLASSES}", s.b)));
                }
                for (k, u) in scratch.iter_mut().enumerate() {
                    *u = dot(&s.a, &theta[k * d..(k + 1) * d]);
                }
                let max = scratch.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let z: f64 = scratch.iter().map(|u| (u - max).exp()).sum();
                let lse = max + z.ln();
                let loss = lse - scratch[label];
                for k in 0..CLASSES {
                    let p = (scratch[k] - lse).exp();
                    let coef = p - if k == label { 1.0 } else { 0.0 };
                    grad[k * d..(k + 1) * d]
                        .iter_mut()
                        .zip(&s.a)
                        .for_each(|(g, a)| *g += coef * a);
                }
                Ok(loss)
            }
        }
    }

    /// Fraction of correct predictions (thresholded at 1/2 for the binary
    /// loss, argmax for the multiclass loss). `None` for regression.
    pub fn accuracy<'a>(self, theta: &[f64], samples: impl IntoIterator<Item = &'a Sample>) -> Option<f64> {
        let mut hits = 0usize;
        let mut m = 0usize;
        for s in samples {
            m += 1;
            let pred = match self {
                LossKind::LeastSquares => return None,
                LossKind::BinaryLogistic => f64::from(dot(&s.a, theta) > 0.0),
                LossKind::Softmax => {
                    let d = s.a.len();
                    (0..CLASSES)
                        .map(|k| dot(&s.a, &theta[k * d..(k + 1) * d]))
                        .enumerate()
                        .fold((0, f64::NEG_INFINITY), |best, (k, u)| if u > best.1 { (k, u) } else { best })
                        .0 as f64
                }
            };
            hits += usize::from(pred == s.b);
        }
        (m > 0).then(|| hits as f64 / m as f64)
    }
}

pub fn least_squares_value_grad(theta: &[f64], batch: &[Sample], r: f64) -> Result<(f64, Vec<f64>)> {
    LossKind::LeastSquares.value_grad(theta, batch, r)
}

pub fn binary_logistic_value_grad(theta: &[f64], batch: &[Sample], r: f64) -> Result<(f64, Vec<f64>)> {
    LossKind::BinaryLogistic.value_grad(theta, batch, r)
}

/// `theta` is class-major: column `k` of the `d × 10` parameter matrix is
/// `theta[k·d .. (k+1)·d]`.
pub fn softmax_logistic_value_grad(theta: &[f64], batch: &[Sample], r: f64) -> Result<(f64, Vec<f64>)> {
    LossKind::Softmax.value_grad(theta, batch, r)
}

pub(crate) fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

fn softplus(u: f64) -> f64 {
    if u > 0.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}
