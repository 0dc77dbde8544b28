//! Classical mean-field equations for the cavity and mechanical amplitudes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::model::SystemParams;

/// Mean amplitudes `alpha = <a>`, `beta = <b>` at time `t` (units `1/omega_b`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldState {
    pub t: f64,
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl MeanFieldState {
    pub fn origin(t: f64) -> Self {
        Self { t, alpha: Complex64::new(0.0, 0.0), beta: Complex64::new(0.0, 0.0) }
    }

    /// Intracavity photon number `|alpha|^2`.
    pub fn photon_number(&self) -> f64 {
        self.alpha.norm_sqr()
    }

    pub fn is_finite(&self) -> bool {
        self.alpha.re.is_finite()
            && self.alpha.im.is_finite()
            && self.beta.re.is_finite()
            && self.beta.im.is_finite()
    }
}

/// Time derivatives `(d alpha/dt, d beta/dt)` of the noiseless Langevin equations:
///
/// ```text
/// alpha' = -(i Delta_fb + kappa_fb) alpha + i g alpha (beta + beta*)
///          + 2 G_c alpha* exp(-i(Delta_c t - theta_c)) + t_b E
/// beta'  = -(i omega_b + kappa_b) beta + i g |alpha|^2
///          + 2 G_m beta* exp(-i(omega_m t - theta_m))
/// ```
pub fn mean_field_rhs(state: &MeanFieldState, params: &SystemParams) -> (Complex64, Complex64) {
    let d = params.derived();
    let i = Complex64::new(0.0, 1.0);
    let (alpha, beta, t) = (state.alpha, state.beta, state.t);

    let opa_phase = Complex64::from_polar(1.0, -(params.delta_c * t - params.theta_c));
    let mpa_phase = Complex64::from_polar(1.0, -(params.omega_m * t - params.theta_m));

    let dalpha = -(i * d.delta_fb + d.kappa_fb) * alpha
        + i * params.g * alpha * (2.0 * beta.re)
        + 2.0 * params.g_c * alpha.conj() * opa_phase
        + d.t_b * params.drive;
    let dbeta = -(i * params.omega_b_units() + params.kappa_b) * beta
        + i * params.g * alpha.norm_sqr()
        + 2.0 * params.g_m * beta.conj() * mpa_phase;
    (dalpha, dbeta)
}

/// Static solution of the cavity equation with coupling and pumps switched
/// off: `t_b E / (kappa_fb + i Delta_fb)`.
pub fn static_cavity_amplitude(params: &SystemParams) -> Complex64 {
    let d = params.derived();
    Complex64::new(d.t_b * params.drive, 0.0) / Complex64::new(d.kappa_fb, d.delta_fb)
}
