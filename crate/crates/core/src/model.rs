//! Physical parameters, unit conversion and closed-form derived quantities.

use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants (CODATA 2018, exact SI definitions where applicable)
/// and conversions between SI and mechanical-frequency units.
pub mod units {
    /// Reduced Planck constant, J s.
    pub const HBAR: f64 = 1.054_571_817e-34;
    /// Boltzmann constant, J/K (exact).
    pub const K_B: f64 = 1.380_649e-23;
    /// Speed of light in vacuum, m/s (exact).
    pub const C: f64 = 299_792_458.0;

    /// Angular rate (rad/s) to units of `omega_b`.
    pub fn to_units(rate_si: f64, omega_b: f64) -> f64 {
        rate_si / omega_b
    }

    /// Units of `omega_b` back to an angular rate in rad/s.
    pub fn from_units(rate: f64, omega_b: f64) -> f64 {
        rate * omega_b
    }

    /// A frequency quoted as `rate / 2pi` in Hz, converted to units of `omega_b`.
    pub fn hz_to_units(freq_hz: f64, omega_b: f64) -> f64 {
        to_units(2.0 * core::f64::consts::PI * freq_hz, omega_b)
    }

    /// Inverse of [`hz_to_units`].
    pub fn units_to_hz(rate: f64, omega_b: f64) -> f64 {
        from_units(rate, omega_b) / (2.0 * core::f64::consts::PI)
    }

    /// Time in seconds to units of `1/omega_b`.
    pub fn seconds_to_units(t: f64, omega_b: f64) -> f64 {
        t * omega_b
    }
}

/// Alternative readings of the drift matrix, kept for comparison runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ModelVariant {
    /// Use `-omega_m - zeta_m` in entry (4,3) instead of `-omega_b - zeta_m`.
    pub literal_phonon_entry: bool,
    /// Evaluate the OPA phases in the drift matrix at `Delta_a t` instead of
    /// `Delta_c t`.
    pub literal_opa_phase: bool,
}

/// Every physical constant and drive setting of the model.
///
/// Rates, detunings and amplitudes are dimensionless multiples of the
/// mechanical frequency; `omega_b` itself is kept in rad/s as the unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Mechanical angular frequency in rad/s.
    pub omega_b: f64,
    pub kappa_a: f64,
    pub kappa_b: f64,
    pub delta_a: f64,
    /// OPA pump detuning `omega_c - 2 omega_l`.
    pub delta_c: f64,
    /// MPA modulation frequency.
    pub omega_m: f64,
    pub g: f64,
    pub g_c: f64,
    pub theta_c: f64,
    pub g_m: f64,
    pub theta_m: f64,
    /// Cavity drive amplitude `E`.
    pub drive: f64,
    /// Beam-splitter reflectivity.
    pub r_b: f64,
    /// Feedback phase shift.
    pub theta: f64,
    /// Bath temperature in kelvin.
    pub temperature: f64,
    /// Optical thermal occupation.
    pub n_a: f64,
    /// Explicit phonon occupation; when `None` it follows from `temperature`.
    pub n_b_override: Option<f64>,
    pub variant: ModelVariant,
}

/// Feedback-renormalised cavity quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub kappa_fb: f64,
    pub delta_fb: f64,
    pub t_b: f64,
}

impl SystemParams {
    /// The experimental parameter set used throughout the figures:
    /// `omega_b/2pi = 1 MHz`, `kappa_a/2pi = 0.5 MHz`, `kappa_b/2pi = 1 Hz`,
    /// `g/2pi = 4 Hz`, `E/2pi = 60 GHz`, `T = 20 mK`, with the pump settings
    /// of the limit-cycle study (`Delta_c = 1.18`, `omega_m/Delta_c = 1.7`,
    /// `G_c = 0.02`, `G_m/G_c = 1.5`).
    pub fn paper_defaults() -> Self {
        let omega_b = 2.0 * PI * 1.0e6;
        let delta_c = 1.18;
        Self {
            omega_b,
            kappa_a: 0.5,
            kappa_b: 1.0e-6,
            delta_a: 1.0,
            delta_c,
            omega_m: 1.7 * delta_c,
            g: 4.0e-6,
            g_c: 0.02,
            theta_c: 0.0,
            g_m: 0.03,
            theta_m: 0.0,
            drive: 6.0e4,
            r_b: 0.0,
            theta: 0.0,
            temperature: 0.02,
            n_a: 0.0,
            n_b_override: None,
            variant: ModelVariant::default(),
        }
    }

    /// Checks the invariants of the record.
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("omega_b", self.omega_b),
            ("kappa_a", self.kappa_a),
            ("kappa_b", self.kappa_b),
            ("delta_a", self.delta_a),
            ("delta_c", self.delta_c),
            ("omega_m", self.omega_m),
            ("g", self.g),
            ("G_c", self.g_c),
            ("theta_c", self.theta_c),
            ("G_m", self.g_m),
            ("theta_m", self.theta_m),
            ("E", self.drive),
            ("r_b", self.r_b),
            ("theta", self.theta),
            ("T", self.temperature),
            ("N_a", self.n_a),
        ];
        for (name, v) in all {
            if !v.is_finite() {
                return Err(Error::InvalidParams(alloc::format!("{name} is not finite")));
            }
        }
        if self.omega_b <= 0.0 {
            return Err(Error::InvalidParams("omega_b must be positive".into()));
        }
        let non_negative = [
            ("kappa_a", self.kappa_a),
            ("kappa_b", self.kappa_b),
            ("g", self.g),
            ("G_c", self.g_c),
            ("G_m", self.g_m),
            ("E", self.drive),
            ("T", self.temperature),
            ("N_a", self.n_a),
        ];
        for (name, v) in non_negative {
            if v < 0.0 {
                return Err(Error::InvalidParams(alloc::format!("{name} must be >= 0")));
            }
        }
        if !(0.0..1.0).contains(&self.r_b) {
            return Err(Error::InvalidParams("r_b must lie in [0, 1)".into()));
        }
        if let Some(n) = self.n_b_override {
            if !(n.is_finite() && n >= 0.0) {
                return Err(Error::InvalidParams("N_b must be finite and >= 0".into()));
            }
        }
        Ok(())
    }

    /// Beam-splitter transmission `sqrt(1 - r_b^2)`.
    pub fn t_b(&self) -> f64 {
        libm::sqrt(1.0 - self.r_b * self.r_b)
    }

    /// Mean phonon occupation of the mechanical bath.
    pub fn n_b(&self) -> f64 {
        match self.n_b_override {
            Some(n) => n,
            None => thermal_occupation(self.omega_b, self.temperature).unwrap_or(0.0),
        }
    }

    pub fn derived(&self) -> DerivedParams {
        DerivedParams {
            kappa_fb: effective_decay(self.kappa_a, self.r_b, self.theta),
            delta_fb: effective_detuning(self.delta_a, self.kappa_a, self.r_b, self.theta),
            t_b: self.t_b(),
        }
    }

    /// Mechanical frequency in its own units.
    pub const fn omega_b_units(&self) -> f64 {
        1.0
    }
}

/// Effective cavity decay under coherent feedback, `kappa_a (1 - 2 r_b cos theta)`.
/// Negative values mean net gain; callers decide whether that is admissible.
pub fn effective_decay(kappa_a: f64, r_b: f64, theta: f64) -> f64 {
    kappa_a * (1.0 - 2.0 * r_b * libm::cos(theta))
}

/// Effective detuning under coherent feedback, `Delta_a - 2 kappa_a r_b sin theta`.
pub fn effective_detuning(delta_a: f64, kappa_a: f64, r_b: f64, theta: f64) -> f64 {
    delta_a - 2.0 * kappa_a * r_b * libm::sin(theta)
}

/// Laser drive amplitude `sqrt(2 kappa_a P / (hbar omega_l))` in rad/s.
///
/// `power` in watts, `wavelength` in metres, `kappa_a_si` in rad/s.
pub fn drive_amplitude_from_power(power: f64, wavelength: f64, kappa_a_si: f64) -> Result<f64> {
    if !(power > 0.0 && wavelength > 0.0 && kappa_a_si > 0.0) {
        return Err(Error::Domain("laser power, wavelength and kappa_a must be positive"));
    }
    let omega_l = 2.0 * PI * units::C / wavelength;
    Ok(libm::sqrt(2.0 * kappa_a_si * power / (units::HBAR * omega_l)))
}

/// Inverse of [`drive_amplitude_from_power`]: laser power (W) for a drive
/// amplitude given in rad/s.
pub fn power_from_drive_amplitude(drive_si: f64, wavelength: f64, kappa_a_si: f64) -> Result<f64> {
    if !(drive_si >= 0.0 && wavelength > 0.0 && kappa_a_si > 0.0) {
        return Err(Error::Domain("drive, wavelength and kappa_a must be positive"));
    }
    let omega_l = 2.0 * PI * units::C / wavelength;
    Ok(drive_si * drive_si * units::HBAR * omega_l / (2.0 * kappa_a_si))
}

/// Bose-Einstein occupation `1 / (exp(hbar omega / k_B T) - 1)`; `omega` in
/// rad/s, `temperature` in kelvin. Zero at zero temperature.
pub fn thermal_occupation(omega: f64, temperature: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::Domain("thermal_occupation needs omega > 0"));
    }
    if !(temperature >= 0.0) {
        return Err(Error::Domain("thermal_occupation needs T >= 0"));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    let x = units::HBAR * omega / (units::K_B * temperature);
    Ok(1.0 / libm::expm1(x))
}

/// Effective cooperativity on the limit cycle, `4 g^2 <|alpha|^2> / (kappa_fb kappa_b)`.
pub fn effective_cooperativity(g: f64, mean_photon_number: f64, kappa_fb: f64, kappa_b: f64) -> Result<f64> {
    if !(kappa_fb > 0.0) {
        return Err(Error::GainRegime { kappa_fb });
    }
    if !(kappa_b > 0.0) {
        return Err(Error::Domain("effective_cooperativity needs kappa_b > 0"));
    }
    Ok(4.0 * g * g * mean_photon_number / (kappa_fb * kappa_b))
}

/// Default threshold on `|2 kappa_a r_b t_d|` below which loop delay is negligible.
pub const DELAY_THRESHOLD: f64 = 0.01;

/// Result of the instantaneous-feedback check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayValidity {
    pub ratio: f64,
    pub valid: bool,
}

/// Checks `|2 kappa_a r_b t_d| < threshold`. `kappa_a_si` in rad/s, `t_d` in seconds.
pub fn delay_validity(kappa_a_si: f64, r_b: f64, t_d: f64, threshold: f64) -> DelayValidity {
    let ratio = libm::fabs(2.0 * kappa_a_si * r_b * t_d);
    DelayValidity { ratio, valid: ratio < threshold }
}
