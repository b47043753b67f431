//! Numeric tolerances shared by every module.
//!
//! A single [`NumericConfig`] is read by all validity checks. The process-wide
//! value defaults to [`NumericConfig::default`] and can be replaced once, before
//! first use, with [`install`].

use std::sync::OnceLock;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericConfig {
    /// Max-abs deviation of `X - X^†` accepted as Hermitian.
    pub hermitian_tol: f64,
    /// Smallest eigenvalue accepted as positive semidefinite.
    pub psd_tol: f64,
    /// Accepted `|tr - 1|` for states.
    pub trace_tol: f64,
    /// Accepted `| ||v||^2 - 1 |` for pure states.
    pub unit_norm_tol: f64,
    /// Eigenvalues below this are clipped to zero before `sqrt`/`log`.
    pub eig_clip: f64,
    /// Eigenvalues below `support_rel * lambda_max` are outside the support.
    pub support_rel: f64,
    /// Weight outside the support above which a divergence is infinite.
    pub support_mass: f64,
    /// Tolerance on Kraus completeness, Choi positivity and trace preservation.
    pub cptp_tol: f64,
    /// Tolerance on POVM completeness and positivity.
    pub povm_tol: f64,
    /// Largest matrix dimension any operation may create.
    pub max_total_dim: usize,
    /// Largest Choi-matrix dimension `d_in * d_out` a channel may have.
    pub max_choi_dim: usize,
}

impl Default for NumericConfig {
    fn default() -> Self {
        Self {
            hermitian_tol: 1e-12,
            psd_tol: 1e-10,
            trace_tol: 1e-10,
            unit_norm_tol: 1e-12,
            eig_clip: 1e-14,
            support_rel: 1e-12,
            support_mass: 1e-10,
            cptp_tol: 1e-10,
            povm_tol: 1e-10,
            max_total_dim: 256,
            max_choi_dim: 4096,
        }
    }
}

static GLOBAL: OnceLock<NumericConfig> = OnceLock::new();

/// The process-wide configuration.
pub fn get() -> &'static NumericConfig {
    GLOBAL.get_or_init(NumericConfig::default)
}

/// Installs `cfg` as the process-wide configuration. Returns `false` when a
/// configuration was already in place (including an implicitly defaulted one).
pub fn install(cfg: NumericConfig) -> bool {
    GLOBAL.set(cfg).is_ok()
}
