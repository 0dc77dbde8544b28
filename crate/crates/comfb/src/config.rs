//! Flat key-value parameter files.
//!
//! A parameter file is a TOML table without nesting. Every physical quantity
//! can be given either dimensionless (units of `omega_b`) or in SI form; a
//! quantity given twice in different forms is rejected. Command-line
//! overrides (`key=value`) are applied afterwards, in order, and replace any
//! earlier form of the same quantity.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use comfb_core::integrate::InitialCondition;
use comfb_core::model::{drive_amplitude_from_power, units, SystemParams};
use comfb_core::pipeline::PipelineSettings;
use toml::Value;

/// Ways a quantity may be written, first form canonical.
struct Group {
    quantity: &'static str,
    keys: &'static [&'static str],
}

const GROUPS: &[Group] = &[
    Group { quantity: "omega_b", keys: &["omega_b_over_2pi_hz"] },
    Group { quantity: "kappa_a", keys: &["kappa_a", "kappa_a_over_omega_b", "kappa_a_over_2pi_hz"] },
    Group { quantity: "kappa_b", keys: &["kappa_b", "kappa_b_over_omega_b", "kappa_b_over_2pi_hz"] },
    Group { quantity: "delta_a", keys: &["delta_a", "delta_a_over_omega_b", "delta_a_over_2pi_hz"] },
    Group { quantity: "delta_c", keys: &["delta_c", "delta_c_over_omega_b", "delta_c_over_2pi_hz"] },
    Group {
        quantity: "omega_m",
        keys: &["omega_m", "omega_m_over_omega_b", "omega_m_over_2pi_hz", "omega_m_over_delta_c"],
    },
    Group { quantity: "g", keys: &["g", "g_over_omega_b", "g_over_2pi_hz"] },
    Group { quantity: "G_c", keys: &["G_c", "G_c_over_omega_b", "G_c_over_2pi_hz"] },
    Group { quantity: "G_m", keys: &["G_m", "G_m_over_omega_b", "G_m_over_2pi_hz", "G_m_over_G_c"] },
    Group { quantity: "theta_c", keys: &["theta_c"] },
    Group { quantity: "theta_m", keys: &["theta_m"] },
    Group { quantity: "E", keys: &["E", "E_over_omega_b", "E_over_2pi_hz", "laser_power_w"] },
    Group { quantity: "laser_wavelength", keys: &["laser_wavelength_m"] },
    Group { quantity: "r_b", keys: &["r_b"] },
    Group { quantity: "theta", keys: &["theta"] },
    Group { quantity: "T", keys: &["T", "T_kelvin", "T_millikelvin"] },
    Group { quantity: "N_a", keys: &["N_a"] },
    Group { quantity: "N_b", keys: &["N_b"] },
    Group { quantity: "literal_phonon_entry", keys: &["literal_phonon_entry"] },
    Group { quantity: "literal_opa_phase", keys: &["literal_opa_phase"] },
    Group { quantity: "rtol", keys: &["rtol"] },
    Group { quantity: "atol", keys: &["atol"] },
    Group { quantity: "transient", keys: &["transient"] },
    Group { quantity: "convergence_tol", keys: &["convergence_tol"] },
    Group { quantity: "max_time", keys: &["max_time"] },
    Group { quantity: "max_steps", keys: &["max_steps"] },
    Group { quantity: "initial", keys: &["initial"] },
];

const DEFAULT_WAVELENGTH_M: f64 = 1550e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

fn group_of(key: &str) -> Option<&'static Group> {
    GROUPS.iter().find(|g| g.keys.contains(&key))
}

/// Every recognised key, for help texts.
pub fn known_keys() -> Vec<&'static str> {
    GROUPS.iter().flat_map(|g| g.keys.iter().copied()).collect()
}

/// Parameters and solver settings after loading a file and applying overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub params: SystemParams,
    pub settings: PipelineSettings,
    /// Effective key-value pairs, sorted by key.
    pub entries: BTreeMap<String, String>,
    /// Overrides in the order they were applied.
    pub overrides: Vec<String>,
}

/// Key-value entries with at most one form per quantity.
#[derive(Debug, Clone, Default)]
pub struct ParamSet {
    entries: BTreeMap<String, Value>,
}

impl ParamSet {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = text.parse().map_err(|e| ConfigError(format!("{e}")))?;
        let mut set = ParamSet::default();
        for (key, value) in table {
            if matches!(value, Value::Table(_) | Value::Array(_)) {
                return err(format!("`{key}`: nested values are not allowed"));
            }
            let group = group_of(&key).ok_or_else(|| ConfigError(format!("unknown key `{key}`")))?;
            if let Some(other) = group.keys.iter().find(|k| set.entries.contains_key(**k)) {
                return err(format!("`{key}` conflicts with `{other}`: both set {}", group.quantity));
            }
            set.entries.insert(key, value);
        }
        Ok(set)
    }

    /// Applies `key=value`, replacing any other form of the same quantity.
    pub fn set(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("override `{assignment}` is not key=value")))?;
        let key = key.trim();
        let group = group_of(key).ok_or_else(|| ConfigError(format!("unknown key `{key}`")))?;
        let value = parse_scalar(raw.trim());
        for k in group.keys {
            self.entries.remove(*k);
        }
        self.entries.insert(key.to_string(), value);
        Ok(())
    }

    fn float(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(Value::Float(x)) => Ok(Some(*x)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(v) => err(format!("`{key}` must be a number, got {v}")),
        }
    }

    fn boolean(&self, key: &str) -> Result<Option<bool>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(*b)),
            Some(v) => err(format!("`{key}` must be true or false, got {v}")),
        }
    }

    /// Resolves against the default parameter set.
    pub fn resolve(&self) -> Result<(SystemParams, PipelineSettings), ConfigError> {
        self.resolve_onto(SystemParams::paper_defaults(), PipelineSettings::default())
    }

    /// Resolves on top of `base` and `settings`; ratio keys use the
    /// resolved denominators.
    pub fn resolve_onto(
        &self,
        base: SystemParams,
        settings: PipelineSettings,
    ) -> Result<(SystemParams, PipelineSettings), ConfigError> {
        let mut p = base;
        if let Some(hz) = self.float("omega_b_over_2pi_hz")? {
            p.omega_b = 2.0 * PI * hz;
        }
        let wb = p.omega_b;
        let hz = |v: f64| units::hz_to_units(v, wb);

        // Plain rates: dimensionless or rate / 2pi in Hz.
        let rates: [(&str, &mut f64); 6] = [
            ("kappa_a", &mut p.kappa_a),
            ("kappa_b", &mut p.kappa_b),
            ("delta_a", &mut p.delta_a),
            ("delta_c", &mut p.delta_c),
            ("g", &mut p.g),
            ("G_c", &mut p.g_c),
        ];
        for (name, slot) in rates {
            if let Some(v) = self.float(name)?.or(self.float(&format!("{name}_over_omega_b"))?) {
                *slot = v;
            }
            if let Some(v) = self.float(&format!("{name}_over_2pi_hz"))? {
                *slot = hz(v);
            }
        }
        // Ratio forms refer to the resolved denominator.
        if let Some(v) = self.float("omega_m")?.or(self.float("omega_m_over_omega_b")?) {
            p.omega_m = v;
        }
        if let Some(v) = self.float("omega_m_over_2pi_hz")? {
            p.omega_m = hz(v);
        }
        if let Some(v) = self.float("omega_m_over_delta_c")? {
            p.omega_m = v * p.delta_c;
        }
        if let Some(v) = self.float("G_m")?.or(self.float("G_m_over_omega_b")?) {
            p.g_m = v;
        }
        if let Some(v) = self.float("G_m_over_2pi_hz")? {
            p.g_m = hz(v);
        }
        if let Some(v) = self.float("G_m_over_G_c")? {
            p.g_m = v * p.g_c;
        }
        if let Some(v) = self.float("E")?.or(self.float("E_over_omega_b")?) {
            p.drive = v;
        }
        if let Some(v) = self.float("E_over_2pi_hz")? {
            p.drive = hz(v);
        }
        let wavelength = self.float("laser_wavelength_m")?.unwrap_or(DEFAULT_WAVELENGTH_M);
        if let Some(power) = self.float("laser_power_w")? {
            let kappa_si = units::from_units(p.kappa_a, wb);
            let e_si = drive_amplitude_from_power(power, wavelength, kappa_si).map_err(|e| ConfigError(e.to_string()))?;
            p.drive = units::to_units(e_si, wb);
        } else if self.entries.contains_key("laser_wavelength_m") {
            return err("`laser_wavelength_m` is only used together with `laser_power_w`");
        }
        for (name, slot) in [("theta_c", &mut p.theta_c), ("theta_m", &mut p.theta_m), ("r_b", &mut p.r_b), ("theta", &mut p.theta)] {
            if let Some(v) = self.float(name)? {
                *slot = v;
            }
        }
        if let Some(v) = self.float("T")?.or(self.float("T_kelvin")?) {
            p.temperature = v;
        }
        if let Some(v) = self.float("T_millikelvin")? {
            p.temperature = v * 1e-3;
        }
        if let Some(v) = self.float("N_a")? {
            p.n_a = v;
        }
        if let Some(v) = self.float("N_b")? {
            p.n_b_override = Some(v);
        }
        if let Some(b) = self.boolean("literal_phonon_entry")? {
            p.variant.literal_phonon_entry = b;
        }
        if let Some(b) = self.boolean("literal_opa_phase")? {
            p.variant.literal_opa_phase = b;
        }
        p.validate().map_err(|e| ConfigError(e.to_string()))?;

        let mut s = settings;
        let floats: [(&str, &mut f64); 5] = [
            ("rtol", &mut s.integrator.rtol),
            ("atol", &mut s.integrator.atol),
            ("transient", &mut s.transient),
            ("convergence_tol", &mut s.convergence_tol),
            ("max_time", &mut s.max_time),
        ];
        for (name, slot) in floats {
            if let Some(v) = self.float(name)? {
                if !(v.is_finite() && v >= 0.0) {
                    return err(format!("`{name}` must be finite and >= 0"));
                }
                *slot = v;
            }
        }
        if let Some(v) = self.float("max_steps")? {
            if !(v >= 1.0) {
                return err("`max_steps` must be >= 1");
            }
            s.max_steps = v as u64;
        }
        match self.entries.get("initial") {
            None => {}
            Some(Value::String(x)) if x == "thermal" => s.integrator.initial = InitialCondition::Thermal,
            Some(Value::String(x)) if x == "displaced" => s.integrator.initial = InitialCondition::Displaced,
            Some(v) => return err(format!("`initial` must be \"thermal\" or \"displaced\", got {v}")),
        }
        Ok((p, s))
    }

    /// Effective entries rendered as strings, sorted by key.
    pub fn rendered(&self) -> BTreeMap<String, String> {
        self.entries.iter().map(|(k, v)| (k.clone(), v.to_string())).collect()
    }
}

/// Interprets an override value: number, boolean, or bare string.
fn parse_scalar(raw: &str) -> Value {
    if let Ok(i) = raw.parse::<i64>() {
        return Value::Integer(i);
    }
    if let Ok(x) = raw.parse::<f64>() {
        return Value::Float(x);
    }
    match raw {
        "true" => Value::Boolean(true),
        "false" => Value::Boolean(false),
        _ => Value::String(raw.trim_matches('"').to_string()),
    }
}

/// Loads an optional parameter file and applies `overrides` in order, on
/// top of the default parameter set.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Resolved, ConfigError> {
    load_onto(path, overrides, SystemParams::paper_defaults(), PipelineSettings::default())
}

/// As [`load`], starting from `base` and `settings`.
pub fn load_onto(
    path: Option<&Path>,
    overrides: &[String],
    base: SystemParams,
    settings: PipelineSettings,
) -> Result<Resolved, ConfigError> {
    let mut set = match path {
        Some(p) => ParamSet::from_file(p)?,
        None => ParamSet::default(),
    };
    for o in overrides {
        set.set(o)?;
    }
    let (params, settings) = set.resolve_onto(base, settings)?;
    Ok(Resolved { params, settings, entries: set.rendered(), overrides: overrides.to_vec() })
}
