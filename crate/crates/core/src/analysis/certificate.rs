use nalgebra::{Matrix4, Vector4};

use super::spectral::{spectral_radius_companion, spectral_radius_power};
use super::ContractionParams;
use crate::{Error, Result};

const SAFETY: f64 = 0.9;
const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITER: usize = 10_000;
const AGREEMENT: f64 = 1e-8;

/// How the estimator-error self-coupling `m_0` is formed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CertifyMode {
    /// Time-varying objectives: `m_0 = (1−β)²(1+ζ_0)` with
    /// `ζ_0 ∈ (0, 1/(1−β)² − 1)`.
    Online { zeta0: f64 },
    /// Fixed objective: `m_0 = (1−β)²`.
    Static,
}

/// `m_0 … m_16` of the error recursion, indexed by their subscript.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MConstants(pub [f64; 17]);

impl std::ops::Index<usize> for MConstants {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub mode: CertifyMode,
    pub n: usize,
    pub beta: f64,
    pub mu: f64,
    pub l_g: f64,
    pub tau: f64,
    pub psi: f64,
    pub consts: MConstants,
    pub delta: [f64; 4],
    /// `[B1, B2, B3, 2/(n(μ+L)η)]`.
    pub bounds: [f64; 4],
    pub alpha: f64,
    pub m: Matrix4<f64>,
    /// `M(α) δ`.
    pub m_delta: [f64; 4],
    /// `(M(α) − I) δ`, negative in every row.
    pub m_delta_gap: [f64; 4],
    /// Power-iteration estimate and Collatz–Wielandt upper bound of `ρ(M(α))`.
    pub rho: f64,
    pub rho_upper: f64,
    /// Upper bound of `ρ(M(α)) − 1` from `max_i ((M − I)v)_i / v_i` at the
    /// power vector or at `δ`, which stays resolvable when `α` is so small
    /// that `ρ` rounds to one.
    pub rho_gap_upper: f64,
    /// `ρ(M(α))` from the companion matrix of the characteristic polynomial.
    pub rho_companion: f64,
}

/// `min(0.5·(1/(1−β)² − 1), 1)`.
pub fn default_zeta0(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok((0.5 * (1.0 / (1.0 - beta).powi(2) - 1.0)).min(1.0))
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Certificate(format!(
            "β = {beta}: a certificate needs 0 < β < 1"
        )));
    }
    Ok(())
}

fn m0(beta: f64, mode: CertifyMode) -> Result<f64> {
    check_beta(beta)?;
    let keep = (1.0 - beta).powi(2);
    match mode {
        CertifyMode::Static => Ok(keep),
        CertifyMode::Online { zeta0 } => {
            let upper = 1.0 / keep - 1.0;
            if !(zeta0 > 0.0 && zeta0 < upper) {
                return Err(Error::Certificate(format!(
                    "ζ_0 = {zeta0} outside (0, {upper}) for β = {beta}"
                )));
            }
            Ok(keep * (1.0 + zeta0))
        }
    }
}

/// The constants `m_k` and the matrix `M(α)`.
pub fn build_m(
    alpha: f64,
    beta: f64,
    params: &ContractionParams,
    n: usize,
    mu: f64,
    l_g: f64,
    mode: CertifyMode,
) -> Result<(MConstants, Matrix4<f64>)> {
    let (c, tau, phi) = (params.c, params.tau, params.varphi);
    if !(c > 0.0 && c < 1.0 && tau > 0.0 && tau < 1.0) {
        return Err(Error::Certificate(format!("invalid contraction factors c = {c}, τ = {tau}")));
    }
    if !(mu > 0.0 && l_g > 0.0) {
        return Err(Error::Certificate("μ and L must be positive".into()));
    }
    let nf = n as f64;
    let l2 = l_g * l_g;
    let c2 = c * c;
    let zeta = params.zeta(l_g);
    let nu = params.nu(l_g);
    let keep = (1.0 - beta).powi(2);
    let mut m = [0.0; 17];
    m[0] = m0(beta, mode)?;
    m[1] = 2.0 * nf * l2 * phi * phi * c2 * (1.0 + c2) / (1.0 - c2);
    m[2] = (1.0 + c2) * c2 / (1.0 - c2);
    m[3] = 2.0 * (1.0 + c2) * c2 * nf / (1.0 - c2);
    m[4] = zeta;
    m[5] = nu;
    m[6] = 2.0 * nf * l2 * nu;
    m[7] = 3.0 * params.psi * beta * beta * tau * tau / (1.0 - tau);
    m[8] = 2.0 * nf * nu;
    m[9] = 4.0 * l2 * phi * phi / mu;
    m[10] = 4.0 / (mu * nf * params.eta);
    m[11] = mu * nf;
    m[12] = 4.0 / mu;
    m[13] = 24.0 * keep * l2 * (c * phi + 1.0).powi(2);
    m[14] = 24.0 * keep * l2 * phi * phi * (1.0 + c).powi(2);
    m[15] = 2.0 * nf * l2 * phi * phi * m[13];
    m[16] = 2.0 * nf * m[13];
    let a2 = alpha * alpha;
    #[rustfmt::skip]
    let mat = Matrix4::new(
        (1.0 + c2) / 2.0 + a2 * m[1], a2 * m[2],            a2 * m[1],             a2 * m[3],
        m[4] + a2 * m[6],             tau + a2 * m[5],      a2 * m[6],             m[7] + a2 * m[8],
        alpha * m[9],                 alpha * m[10],        1.0 - alpha * m[11],   alpha * m[12],
        m[14] + a2 * m[15],           a2 * m[13],           a2 * m[15],            m[0] + a2 * m[16],
    );
    Ok((MConstants(m), mat))
}

/// `M(α) − I` with the diagonal formed without cancellation.
fn m_minus_identity(alpha: f64, m: &Matrix4<f64>, k: &MConstants, params: &ContractionParams) -> Matrix4<f64> {
    let a2 = alpha * alpha;
    let mut d = *m;
    d[(0, 0)] = -(1.0 - params.c * params.c) / 2.0 + a2 * k[1];
    d[(1, 1)] = -(1.0 - params.tau) + a2 * k[5];
    d[(2, 2)] = -alpha * k[11];
    d[(3, 3)] = -(1.0 - k[0]) + a2 * k[16];
    d
}

/// Builds the positive vector `δ`, the step-size bounds `B1–B3`, and
/// certifies `α = 0.9 · min(B1, B2, B3, 2/(n(μ+L)η))` by checking
/// `M(α)δ < δ` and `ρ(M(α)) < 1` with two independent spectral routes.
/// Both checks use `M(α) − I`, since for small `α` the diagonal of `M(α)`
/// rounds to one.
pub fn certify_step_size(
    params: &ContractionParams,
    n: usize,
    mu: f64,
    l_g: f64,
    beta: f64,
    mode: CertifyMode,
) -> Result<Certificate> {
    let (k, _) = build_m(0.0, beta, params, n, mu, l_g, mode)?;
    let (c, tau) = (params.c, params.tau);
    let d1 = 1.0;
    let d4 = 2.0 * k[14] / (1.0 - k[0]);
    let d2 = (2.0 / (1.0 - tau)) * (k[4] + 2.0 * k[7] * k[14] / (1.0 - k[0]));
    let d3 = (2.0 / k[11]) * (k[9] + k[10] * d2 + k[12] * d4);
    let delta = [d1, d2, d3, d4];

    let b1 = ((1.0 - c * c) / (2.0 * (k[1] * d1 + k[2] * d2 + k[1] * d3 + k[3] * d4))).sqrt();
    let b2 = ((k[4] * d1 + k[7] * d4) / (k[6] * d1 + k[5] * d2 + k[6] * d3 + k[8] * d4)).sqrt();
    let b3 = ((k[14] * d1) / (k[15] * d1 + k[13] * d2 + k[15] * d3 + k[16] * d4)).sqrt();
    let gd = 2.0 / (n as f64 * (mu + l_g) * params.eta);
    let bounds = [b1, b2, b3, gd];
    let alpha = SAFETY * bounds.iter().copied().fold(f64::INFINITY, f64::min);
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Certificate(format!("degenerate step-size bounds {bounds:?}")));
    }

    let (consts, m) = build_m(alpha, beta, params, n, mu, l_g, mode)?;
    let dv = Vector4::from(delta);
    let dec = m_minus_identity(alpha, &m, &consts, params);
    let step = dec * dv;
    if let Some(i) = (0..4).find(|&i| !(step[i] < 0.0)) {
        return Err(Error::Certificate(format!(
            "M(α)δ < δ fails in row {}: (M − I)δ = {}",
            i + 1,
            step[i]
        )));
    }
    let md = dv + step;
    let (rho, rho_upper, v) = spectral_radius_power(&m, POWER_TOL, POWER_MAX_ITER)?;
    // Collatz–Wielandt bound at the power vector and at δ itself.
    let cw = |w: &Vector4<f64>| {
        let g = dec * w;
        (0..4).map(|i| g[i] / w[i]).fold(f64::NEG_INFINITY, f64::max)
    };
    let rho_gap_upper = cw(&v).min(cw(&dv));
    let rho_companion = spectral_radius_companion(&m);
    if !(rho_gap_upper < 0.0) {
        return Err(Error::Certificate(format!(
            "spectral radius bound {rho_upper} (ρ − 1 ≤ {rho_gap_upper:e}) not below one"
        )));
    }
    if (rho - rho_companion).abs() > AGREEMENT {
        return Err(Error::Certificate(format!(
            "spectral radius estimates disagree: power {rho}, companion {rho_companion}"
        )));
    }
    Ok(Certificate {
        mode,
        n,
        beta,
        mu,
        l_g,
        tau: params.tau,
        psi: params.psi,
        consts,
        delta,
        bounds,
        alpha,
        m,
        m_delta: [md[0], md[1], md[2], md[3]],
        m_delta_gap: [step[0], step[1], step[2], step[3]],
        rho,
        rho_upper,
        rho_gap_upper,
        rho_companion,
    })
}

/// `(I − M(α))⁻¹ b` with `b = [0, 2nτ²ψβ²σ²/(1−τ), 0, 2nβ²σ²]`.
pub fn steady_state(cert: &Certificate, sigma2: f64) -> Result<[f64; 4]> {
    let nf = cert.n as f64;
    let bb = cert.beta * cert.beta * sigma2;
    let b = Vector4::new(
        0.0,
        2.0 * nf * cert.tau.powi(2) * cert.psi * bb / (1.0 - cert.tau),
        0.0,
        2.0 * nf * bb,
    );
    let lhs = Matrix4::identity() - cert.m;
    let x = lhs
        .lu()
        .solve(&b)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Certificate("I − M(α) is singular".into()))?;
    if x.iter().any(|&v| v < 0.0) {
        return Err(Error::Certificate(format!("negative steady-state entry in {x:?}")));
    }
    Ok([x[0], x[1], x[2], x[3]])
}
