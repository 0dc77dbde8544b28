//! Sweep specifications reproducing the published parameter maps.
//!
//! Axis ranges are not all stated with the figures; the chosen ranges are
//! listed per preset. `Delta_c = 1.18` throughout.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::measures::Measure;
use crate::model::SystemParams;
use crate::pipeline::PipelineSettings;
use crate::sweep::{Axis, ParamPath, SweepSpec};

/// Default points per axis of 2D presets.
pub const DEFAULT_GRID_2D: usize = 41;
/// Default points of 1D presets.
pub const DEFAULT_GRID_1D: usize = 81;
/// Default wall-clock budget per cell, seconds.
pub const DEFAULT_BUDGET_SECS: f64 = 120.0;

/// Every accepted preset name.
pub const PRESET_NAMES: [&str; 13] = [
    "fig2", "fig3a", "fig3b", "fig4", "fig4ab", "fig4cd", "fig5", "fig6", "fig6a", "fig6b", "fig7", "fig7a", "fig7bc",
];

/// Grid resolution override: `(n1, n2)`; `n2` is ignored by 1D presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub n1: usize,
    pub n2: usize,
}

/// Base parameters shared by the figures: the experimental set with
/// `G_c = 0.02`, `G_m / G_c = 1.5`, `omega_m / Delta_c = 1.7`.
fn base() -> SystemParams {
    SystemParams::paper_defaults()
}

/// GHz drive amplitude `E / 2pi` in units of `omega_b = 2pi x 1 MHz`.
fn drive_ghz(ghz: f64) -> f64 {
    ghz * 1e3
}

struct Layout {
    base: SystemParams,
    axis1: (ParamPath, f64, f64),
    axis2: Option<(ParamPath, f64, f64)>,
    outputs: Vec<Measure>,
}

fn layout(name: &str) -> Result<Layout> {
    use Measure::*;
    use ParamPath::*;
    let mut p = base();
    let r_range = (Rb, 0.0, 0.35);
    let l = match name {
        // Cavity limit cycle and E_N,max versus reflectivity.
        "fig2" => Layout { base: p, axis1: r_range, axis2: None, outputs: Measure::ALL.to_vec() },
        // E_N,max over (omega_m/Delta_c, r_b) at E/2pi = 50 GHz.
        "fig3a" => {
            p.drive = drive_ghz(50.0);
            p.g_m = 1.5 * p.g_c;
            Layout { base: p, axis1: (OmegaMOverDeltaC, 1.0, 2.0), axis2: Some(r_range), outputs: Measure::ALL.to_vec() }
        }
        // E_N,max over (G_m/G_c, r_b) at omega_m/Delta_c = 1.6.
        "fig3b" => {
            p.drive = drive_ghz(50.0);
            p.omega_m = 1.6 * p.delta_c;
            Layout { base: p, axis1: (GmOverGc, 0.0, 3.0), axis2: Some(r_range), outputs: Measure::ALL.to_vec() }
        }
        // Steering over (omega_m/Delta_c, r_b); E/2pi = 70 GHz, G_c = 0.03, G_m = 0.05.
        "fig4" | "fig4ab" => {
            p.drive = drive_ghz(70.0);
            p.g_c = 0.03;
            p.g_m = 0.05;
            Layout { base: p, axis1: (OmegaMOverDeltaC, 1.0, 2.0), axis2: Some(r_range), outputs: [GAB, GBA, EN].to_vec() }
        }
        // Steering over (G_m/G_c, r_b <= 0.3); E/2pi = 60 GHz, G_c = 0.03.
        "fig4cd" => {
            p.drive = drive_ghz(60.0);
            p.g_c = 0.03;
            p.omega_m = 1.7 * p.delta_c;
            Layout { base: p, axis1: (GmOverGc, 0.0, 3.0), axis2: Some((Rb, 0.0, 0.3)), outputs: [GAB, GBA, EN].to_vec() }
        }
        // Phonon purity and squeezing over (omega_m/Delta_c, r_b).
        "fig5" => {
            p.drive = drive_ghz(50.0);
            p.g_m = 1.5 * p.g_c;
            Layout { base: p, axis1: (OmegaMOverDeltaC, 1.0, 2.0), axis2: Some(r_range), outputs: [MuB, SB].to_vec() }
        }
        // E_N,max over (theta, G_m/G_c) at r_b = 0.2, omega_m/Delta_c = 1.5.
        "fig6" | "fig6a" => {
            p.drive = drive_ghz(50.0);
            p.r_b = 0.2;
            p.omega_m = 1.5 * p.delta_c;
            Layout { base: p, axis1: (Theta, 0.0, 2.0 * PI), axis2: Some((GmOverGc, 0.0, 3.0)), outputs: [EN, GAB, GBA].to_vec() }
        }
        // G_ab,max over (theta, G_m/G_c) at r_b = 0.15, omega_m/Delta_c = 1.3.
        "fig6b" => {
            p.drive = drive_ghz(50.0);
            p.r_b = 0.15;
            p.omega_m = 1.3 * p.delta_c;
            Layout { base: p, axis1: (Theta, 0.0, 2.0 * PI), axis2: Some((GmOverGc, 0.0, 3.0)), outputs: [GAB, GBA, EN].to_vec() }
        }
        // E_N,max over (T, r_b) at omega_m/Delta_c = 1.5, G_m/G_c = 1.5.
        "fig7" | "fig7a" => {
            p.drive = drive_ghz(50.0);
            p.g_m = 1.5 * p.g_c;
            p.omega_m = 1.5 * p.delta_c;
            Layout { base: p, axis1: (Temperature, 0.0, 0.1), axis2: Some(r_range), outputs: [EN, GAB, GBA].to_vec() }
        }
        // Steering over (T, r_b) at E/2pi = 70 GHz, G_m/G_c = 3.
        "fig7bc" => {
            p.drive = drive_ghz(70.0);
            p.g_m = 3.0 * p.g_c;
            p.omega_m = 1.5 * p.delta_c;
            Layout { base: p, axis1: (Temperature, 0.0, 0.1), axis2: Some(r_range), outputs: [GAB, GBA, EN].to_vec() }
        }
        _ => {
            let known = PRESET_NAMES.join(", ");
            return Err(Error::Spec(alloc::format!("unknown figure preset `{name}` (known: {known})")));
        }
    };
    Ok(l)
}

/// The sweep for figure preset `name`, at the default or given resolution.
pub fn figure_preset(name: &str, grid: Option<Grid>) -> Result<SweepSpec> {
    let name = name.trim().to_ascii_lowercase();
    let l = layout(&name)?;
    let (n1, n2) = match (grid, l.axis2.is_some()) {
        (Some(g), _) => (g.n1, g.n2),
        (None, true) => (DEFAULT_GRID_2D, DEFAULT_GRID_2D),
        (None, false) => (DEFAULT_GRID_1D, 1),
    };
    if n1 == 0 || (l.axis2.is_some() && n2 == 0) {
        return Err(Error::Spec("grid resolution must be positive".into()));
    }
    let (p1, lo1, hi1) = l.axis1;
    let spec = SweepSpec {
        name: String::from(name.as_str()),
        base: l.base,
        axis1: Axis::linspace(p1, lo1, hi1, n1),
        axis2: l.axis2.map(|(p, lo, hi)| Axis::linspace(p, lo, hi, n2)),
        outputs: l.outputs,
        budget_secs: DEFAULT_BUDGET_SECS,
        settings: PipelineSettings::default(),
    };
    spec.validate()?;
    Ok(spec)
}
