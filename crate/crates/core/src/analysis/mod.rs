//! Contraction constants of the mixing chain, the 4×4 error-recursion
//! matrix `M(α)`, step-size certificates and Monte Carlo checks of the
//! per-round error bounds.

mod certificate;
mod contraction;
mod monitors;
mod report;
mod spectral;

pub use certificate::{
    build_m, certify_step_size, default_zeta0, steady_state, Certificate, CertifyMode, MConstants,
};
pub use contraction::{measure_contraction, ContractionParams, RoundConstants};
pub use monitors::{lemma_monitors, Bound, MIN_REPLICAS, BoundResult, MonitorInputs, MonitorReport, Violation};
pub use report::certificate_report;
pub use spectral::{spectral_radius_companion, spectral_radius_power};
