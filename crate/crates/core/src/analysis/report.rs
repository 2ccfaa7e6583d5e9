use std::fmt::Write;

use super::{Certificate, CertifyMode, ContractionParams};

/// Plain-text audit of a step-size certificate. `steady` is the optional
/// `(I − M(α))⁻¹ b` vector.
pub fn certificate_report(
    cert: &Certificate,
    params: &ContractionParams,
    steady: Option<[f64; 4]>,
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# step-size certificate");
    let mode = match cert.mode {
        CertifyMode::Online { zeta0 } => format!("online (zeta0 = {zeta0:.6e})"),
        CertifyMode::Static => "static".to_string(),
    };
    let _ = writeln!(s, "mode        {mode}");
    let _ = writeln!(s, "n           {}", cert.n);
    let _ = writeln!(s, "beta        {:.6e}", cert.beta);
    let _ = writeln!(s, "mu          {:.6e}", cert.mu);
    let _ = writeln!(s, "L           {:.6e}", cert.l_g);
    let _ = writeln!(s);
    let _ = writeln!(s, "# mixing constants over {} rounds", params.horizon());
    for (name, v) in [
        ("c", params.c),
        ("tau", params.tau),
        ("eta", params.eta),
        ("psi", params.psi),
        ("kappa", params.kappa),
        ("varphi", params.varphi),
        ("gamma", params.gamma),
        ("a", params.a),
        ("b", params.b),
        ("zeta", params.zeta(cert.l_g)),
        ("nu", params.nu(cert.l_g)),
    ] {
        let _ = writeln!(s, "{name:<11} {v:.6e}");
    }
    let t_max = params.horizon();
    if t_max > 0 {
        let (zmax, numax) = (0..t_max).fold((0.0f64, 0.0f64), |(z, u), t| {
            (z.max(params.zeta_t(t, cert.l_g)), u.max(params.nu_t(t, cert.l_g)))
        });
        let _ = writeln!(s, "max zeta_t  {zmax:.6e}");
        let _ = writeln!(s, "max nu_t    {numax:.6e}");
        let _ = writeln!(
            s,
            "note        M(alpha) uses zeta = 24 L^2 varphi^2 tau^2 psi/(1-tau) and \
             nu = 6 L^2 (c varphi+1)^2 tau^2 psi/(1-tau); the per-round values \
             above use the factor 6 with (c varphi_(t+1)+varphi_t)^2 and gamma_t^2"
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "# recursion constants");
    for (k, v) in cert.consts.0.iter().enumerate() {
        let _ = writeln!(s, "m{k:<10} {v:.6e}");
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "# step size");
    for (i, v) in cert.delta.iter().enumerate() {
        let _ = writeln!(s, "delta{:<6} {v:.6e}", i + 1);
    }
    for (name, v) in ["B1", "B2", "B3", "gd"].iter().zip(cert.bounds) {
        let _ = writeln!(s, "{name:<11} {v:.6e}");
    }
    let _ = writeln!(s, "alpha       {:.6e}", cert.alpha);
    let _ = writeln!(s);
    let _ = writeln!(s, "# M(alpha)");
    for i in 0..4 {
        let row: Vec<String> = (0..4).map(|j| format!("{:.6e}", cert.m[(i, j)])).collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
    for i in 0..4 {
        let _ = writeln!(
            s,
            "(M delta){}  {:.6e}  (M delta - delta = {:.6e})",
            i + 1,
            cert.m_delta[i],
            cert.m_delta_gap[i]
        );
    }
    let _ = writeln!(s, "rho_power   {:.12e}", cert.rho);
    let _ = writeln!(s, "rho_upper   {:.12e}", cert.rho_upper);
    let _ = writeln!(s, "rho-1 <=    {:.6e}", cert.rho_gap_upper);
    let _ = writeln!(s, "rho_charpoly {:.12e}", cert.rho_companion);
    if let Some(v) = steady {
        let _ = writeln!(s);
        let _ = writeln!(s, "# steady state (I - M)^-1 b");
        for (i, x) in v.iter().enumerate() {
            let _ = writeln!(s, "V{:<10} {x:.6e}", i + 1);
        }
    }
    s
}
