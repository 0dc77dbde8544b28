//! Cycle-averaged diagnostics of the cavity field: power balance, mean
//! amplitude and the effective cooperativity on the limit cycle.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cycle::LimitCycle;
use crate::error::Result;
use crate::model::{effective_cooperativity, SystemParams};

/// Cycle averages entering `2 kappa_fb <|alpha|^2> = P_om + P_OPA + P_drv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerBalance {
    /// `2 kappa_fb <|alpha|^2>`.
    pub loss: f64,
    /// Optomechanical term `<2 Re[alpha* i g alpha (beta + beta*)]>`; zero on any orbit.
    pub optomechanical: f64,
    /// OPA term `<2 Re[2 G_c alpha*^2 exp(-i(Delta_c t - theta_c))]>`.
    pub opa: f64,
    /// Drive term `<2 Re[alpha* t_b E]>`.
    pub drive: f64,
}

impl PowerBalance {
    pub fn injected(&self) -> f64 {
        self.optomechanical + self.opa + self.drive
    }

    /// `|loss - injected| / max(|loss|, |injected|)`; zero when both vanish.
    pub fn residual(&self) -> f64 {
        let (lhs, rhs) = (self.loss, self.injected());
        let scale = libm::fabs(lhs).max(libm::fabs(rhs));
        if scale == 0.0 {
            0.0
        } else {
            libm::fabs(lhs - rhs) / scale
        }
    }
}

/// Cycle averages by the rectangle rule on the periodic samples (spectrally
/// accurate for smooth periodic integrands).
pub fn power_balance(cycle: &LimitCycle, params: &SystemParams) -> PowerBalance {
    let d = params.derived();
    let i = Complex64::new(0.0, 1.0);
    let n = cycle.samples.len().max(1) as f64;
    let mut acc = PowerBalance { loss: 0.0, optomechanical: 0.0, opa: 0.0, drive: 0.0 };
    for s in &cycle.samples {
        let (alpha, beta, t) = (s.mean.alpha, s.mean.beta, s.mean.t);
        let ac = alpha.conj();
        let pump = Complex64::from_polar(1.0, -(params.delta_c * t - params.theta_c));
        acc.loss += 2.0 * d.kappa_fb * alpha.norm_sqr();
        acc.optomechanical += 2.0 * (ac * i * params.g * alpha * (2.0 * beta.re)).re;
        acc.opa += 2.0 * (ac * 2.0 * params.g_c * ac * pump).re;
        acc.drive += 2.0 * (ac * d.t_b * params.drive).re;
    }
    PowerBalance {
        loss: acc.loss / n,
        optomechanical: acc.optomechanical / n,
        opa: acc.opa / n,
        drive: acc.drive / n,
    }
}

pub fn power_balance_residual(cycle: &LimitCycle, params: &SystemParams) -> f64 {
    power_balance(cycle, params).residual()
}

/// `<|alpha|>` over the cycle.
pub fn mean_abs_alpha(cycle: &LimitCycle) -> f64 {
    let n = cycle.samples.len().max(1) as f64;
    cycle.samples.iter().map(|s| s.mean.alpha.norm()).sum::<f64>() / n
}

/// `<|alpha|^2>` over the cycle.
pub fn mean_photon_number(cycle: &LimitCycle) -> f64 {
    let n = cycle.samples.len().max(1) as f64;
    cycle.samples.iter().map(|s| s.mean.alpha.norm_sqr()).sum::<f64>() / n
}

/// Effective cooperativity on the limit cycle.
pub fn cycle_cooperativity(cycle: &LimitCycle, params: &SystemParams) -> Result<f64> {
    effective_cooperativity(params.g, mean_photon_number(cycle), params.derived().kappa_fb, params.kappa_b)
}
