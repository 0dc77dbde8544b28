//! Drift and diffusion matrices of the linearised quadrature fluctuations.
//!
//! Quadrature ordering is `(dX_a, dY_a, dX_b, dY_b)` throughout.

use serde::{Deserialize, Serialize};

use crate::linalg::{Mat4, ZERO4};
use crate::mean_field::MeanFieldState;
use crate::model::SystemParams;

/// `A(t)` evaluated at one point of a mean-field trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftMatrix {
    pub entries: Mat4,
    pub t: f64,
}

/// Constant, diagonal noise-input matrix `D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionMatrix {
    pub entries: Mat4,
}

/// Time-dependent pump quadratures entering the drift matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpTerms {
    pub gamma_a: f64,
    pub zeta_a: f64,
    pub gamma_m: f64,
    pub zeta_m: f64,
}

impl PumpTerms {
    pub fn at(params: &SystemParams, t: f64) -> Self {
        let opa_freq = if params.variant.literal_opa_phase { params.delta_a } else { params.delta_c };
        let phi_a = opa_freq * t - params.theta_c;
        let phi_m = params.omega_m * t - params.theta_m;
        Self {
            gamma_a: 2.0 * params.g_c * libm::cos(phi_a),
            zeta_a: 2.0 * params.g_c * libm::sin(phi_a),
            gamma_m: 2.0 * params.g_m * libm::cos(phi_m),
            zeta_m: 2.0 * params.g_m * libm::sin(phi_m),
        }
    }
}

/// Fluctuation detuning `Delta'_fb = Delta_a - g (beta + beta*) - 2 kappa_a r_b sin(theta)`.
pub fn shifted_detuning(state: &MeanFieldState, params: &SystemParams) -> f64 {
    params.derived().delta_fb - 2.0 * params.g * state.beta.re
}

/// Builds `A(t)` from the current mean field.
///
/// With `G_x + i G_y = g alpha`:
///
/// ```text
/// [ -k + Ga     D' - za    -2Gy        0      ]
/// [ -D' - za   -k - Ga      2Gx        0      ]
/// [  0          0          -kb + Gm    wb - zm ]
/// [  2Gx        2Gy        -wb - zm   -kb - Gm ]
/// ```
pub fn build_drift_matrix(state: &MeanFieldState, params: &SystemParams, t: f64) -> DriftMatrix {
    let kappa_fb = params.derived().kappa_fb;
    let dp = shifted_detuning(state, params);
    let gx = params.g * state.alpha.re;
    let gy = params.g * state.alpha.im;
    let pump = PumpTerms::at(params, t);
    let wb = params.omega_b_units();
    let lower_freq = if params.variant.literal_phonon_entry { params.omega_m } else { wb };

    let mut a = ZERO4;
    a[0][0] = -kappa_fb + pump.gamma_a;
    a[0][1] = dp - pump.zeta_a;
    a[0][2] = -2.0 * gy;
    a[1][0] = -dp - pump.zeta_a;
    a[1][1] = -kappa_fb - pump.gamma_a;
    a[1][2] = 2.0 * gx;
    a[2][2] = -params.kappa_b + pump.gamma_m;
    a[2][3] = wb - pump.zeta_m;
    a[3][0] = 2.0 * gx;
    a[3][1] = 2.0 * gy;
    a[3][2] = -lower_freq - pump.zeta_m;
    a[3][3] = -params.kappa_b - pump.gamma_m;
    DriftMatrix { entries: a, t }
}

/// Photon-quadrature diffusion coefficient
/// `kappa_a t_b^2 (1 - 2 r_b cos(theta) + r_b^2) (2 N_a + 1)`.
pub fn photon_diffusion(params: &SystemParams) -> f64 {
    let t_b2 = 1.0 - params.r_b * params.r_b;
    let loop_factor = 1.0 - 2.0 * params.r_b * libm::cos(params.theta) + params.r_b * params.r_b;
    params.kappa_a * t_b2 * loop_factor * (2.0 * params.n_a + 1.0)
}

/// Phonon-quadrature diffusion coefficient `kappa_b (2 N_b + 1)`.
pub fn phonon_diffusion(params: &SystemParams) -> f64 {
    params.kappa_b * (2.0 * params.n_b() + 1.0)
}

pub fn build_diffusion_matrix(params: &SystemParams) -> DiffusionMatrix {
    let (da, db) = (photon_diffusion(params), phonon_diffusion(params));
    let mut d = ZERO4;
    d[0][0] = da;
    d[1][1] = da;
    d[2][2] = db;
    d[3][3] = db;
    DiffusionMatrix { entries: d }
}
