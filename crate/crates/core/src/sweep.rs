//! Parameter grids over the single-point pipeline.
//!
//! A [`SweepSpec`] is expanded into independent [`CellSpec`]s in a fixed
//! order; results are assembled back into a [`SweepResult`] whose cell order
//! never depends on how the cells were scheduled.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::contour::{marching_squares, Polyline};
use crate::cycle::best_rational;
use crate::error::{Error, Result};
use crate::measures::{Measure, PeriodicMaxima};
use crate::model::SystemParams;
use crate::pipeline::{run_point, Diagnostics, PipelineSettings, PointResult, Verdict};
use crate::stability::StabilityReport;

/// Largest denominator of snapped frequency ratios on sweep grids.
pub const GRID_RATIO_DENOMINATOR: u64 = 64;

/// A settable quantity of [`SystemParams`], or one of the ratio axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParamPath {
    KappaA,
    KappaB,
    DeltaA,
    DeltaC,
    OmegaM,
    G,
    Gc,
    ThetaC,
    Gm,
    ThetaM,
    Drive,
    Rb,
    Theta,
    Temperature,
    Na,
    Nb,
    /// `omega_m / Delta_c` with `Delta_c` held fixed.
    OmegaMOverDeltaC,
    /// `G_m / G_c` with `G_c` held fixed.
    GmOverGc,
}

impl ParamPath {
    pub const ALL: [ParamPath; 18] = [
        ParamPath::KappaA,
        ParamPath::KappaB,
        ParamPath::DeltaA,
        ParamPath::DeltaC,
        ParamPath::OmegaM,
        ParamPath::G,
        ParamPath::Gc,
        ParamPath::ThetaC,
        ParamPath::Gm,
        ParamPath::ThetaM,
        ParamPath::Drive,
        ParamPath::Rb,
        ParamPath::Theta,
        ParamPath::Temperature,
        ParamPath::Na,
        ParamPath::Nb,
        ParamPath::OmegaMOverDeltaC,
        ParamPath::GmOverGc,
    ];

    /// Canonical key, as used in config files and output headers.
    pub fn name(self) -> &'static str {
        match self {
            ParamPath::KappaA => "kappa_a",
            ParamPath::KappaB => "kappa_b",
            ParamPath::DeltaA => "delta_a",
            ParamPath::DeltaC => "delta_c",
            ParamPath::OmegaM => "omega_m",
            ParamPath::G => "g",
            ParamPath::Gc => "G_c",
            ParamPath::ThetaC => "theta_c",
            ParamPath::Gm => "G_m",
            ParamPath::ThetaM => "theta_m",
            ParamPath::Drive => "E",
            ParamPath::Rb => "r_b",
            ParamPath::Theta => "theta",
            ParamPath::Temperature => "T",
            ParamPath::Na => "N_a",
            ParamPath::Nb => "N_b",
            ParamPath::OmegaMOverDeltaC => "omega_m/delta_c",
            ParamPath::GmOverGc => "G_m/G_c",
        }
    }

    /// Parses a canonical key (case-insensitive).
    pub fn parse(s: &str) -> Result<Self> {
        let key = s.trim();
        ParamPath::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(key))
            .ok_or_else(|| Error::Spec(alloc::format!("unknown parameter path `{key}`")))
    }

    /// Changes the frequencies that set the modulation period.
    fn touches_frequencies(self) -> bool {
        matches!(self, ParamPath::DeltaC | ParamPath::OmegaM | ParamPath::OmegaMOverDeltaC)
    }

    pub fn get(self, p: &SystemParams) -> f64 {
        match self {
            ParamPath::KappaA => p.kappa_a,
            ParamPath::KappaB => p.kappa_b,
            ParamPath::DeltaA => p.delta_a,
            ParamPath::DeltaC => p.delta_c,
            ParamPath::OmegaM => p.omega_m,
            ParamPath::G => p.g,
            ParamPath::Gc => p.g_c,
            ParamPath::ThetaC => p.theta_c,
            ParamPath::Gm => p.g_m,
            ParamPath::ThetaM => p.theta_m,
            ParamPath::Drive => p.drive,
            ParamPath::Rb => p.r_b,
            ParamPath::Theta => p.theta,
            ParamPath::Temperature => p.temperature,
            ParamPath::Na => p.n_a,
            ParamPath::Nb => p.n_b(),
            ParamPath::OmegaMOverDeltaC => p.omega_m / p.delta_c,
            ParamPath::GmOverGc => p.g_m / p.g_c,
        }
    }

    /// Writes `value` into `p`; ratio axes set the numerator.
    pub fn set(self, p: &mut SystemParams, value: f64) {
        match self {
            ParamPath::KappaA => p.kappa_a = value,
            ParamPath::KappaB => p.kappa_b = value,
            ParamPath::DeltaA => p.delta_a = value,
            ParamPath::DeltaC => p.delta_c = value,
            ParamPath::OmegaM => p.omega_m = value,
            ParamPath::G => p.g = value,
            ParamPath::Gc => p.g_c = value,
            ParamPath::ThetaC => p.theta_c = value,
            ParamPath::Gm => p.g_m = value,
            ParamPath::ThetaM => p.theta_m = value,
            ParamPath::Drive => p.drive = value,
            ParamPath::Rb => p.r_b = value,
            ParamPath::Theta => p.theta = value,
            ParamPath::Temperature => p.temperature = value,
            ParamPath::Na => p.n_a = value,
            ParamPath::Nb => p.n_b_override = Some(value),
            ParamPath::OmegaMOverDeltaC => p.omega_m = value * p.delta_c,
            ParamPath::GmOverGc => p.g_m = value * p.g_c,
        }
    }
}

impl fmt::Display for ParamPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub path: ParamPath,
    pub values: Vec<f64>,
}

impl Axis {
    /// `n` evenly spaced values from `lo` to `hi` inclusive.
    pub fn linspace(path: ParamPath, lo: f64, hi: f64, n: usize) -> Self {
        let values = match n {
            0 => Vec::new(),
            1 => alloc::vec![lo],
            _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
        };
        Self { path, values }
    }

    fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Spec(alloc::format!("axis `{}` has no values", self.path)));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Spec(alloc::format!("axis `{}` has a non-finite value", self.path)));
        }
        let up = self.values.windows(2).all(|w| w[1] > w[0]);
        let down = self.values.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(Error::Spec(alloc::format!("axis `{}` is not strictly monotone", self.path)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Label carried into output files.
    pub name: String,
    pub base: SystemParams,
    pub axis1: Axis,
    pub axis2: Option<Axis>,
    pub outputs: Vec<Measure>,
    /// Wall-clock budget per cell in seconds; exceeding it yields a
    /// not-converged verdict.
    pub budget_secs: f64,
    pub settings: PipelineSettings,
}

impl SweepSpec {
    pub fn shape(&self) -> (usize, usize) {
        (self.axis1.values.len(), self.axis2.as_ref().map_or(1, |a| a.values.len()))
    }

    pub fn cell_count(&self) -> usize {
        let (n1, n2) = self.shape();
        n1 * n2
    }

    pub fn validate(&self) -> Result<()> {
        self.axis1.validate()?;
        if let Some(a2) = &self.axis2 {
            a2.validate()?;
            if a2.path == self.axis1.path {
                return Err(Error::Spec("both axes set the same parameter".into()));
            }
        }
        if self.outputs.is_empty() {
            return Err(Error::Spec("no output measures requested".into()));
        }
        if !(self.budget_secs > 0.0) {
            return Err(Error::Spec("budget per cell must be positive".into()));
        }
        let s = &self.settings;
        let tol = &s.integrator;
        if !(tol.rtol > 0.0 && tol.atol > 0.0 && s.convergence_tol > 0.0 && s.max_time > 0.0 && s.transient >= 0.0) {
            return Err(Error::Spec("integrator settings must be positive".into()));
        }
        self.base.validate().map_err(|e| Error::Spec(alloc::format!("base parameters: {e}")))
    }

    /// Fully resolved parameters of every cell, axis 1 varying fastest.
    pub fn expand(&self) -> Result<Vec<CellSpec>> {
        self.validate()?;
        let (n1, n2) = self.shape();
        let mut cells = Vec::with_capacity(n1 * n2);
        for i2 in 0..n2 {
            for i1 in 0..n1 {
                let mut params = self.base;
                let x1 = self.axis1.values[i1];
                let x2 = self.axis2.as_ref().map(|a| a.values[i2]);
                // Ratio axes read the fixed denominator from the base, so
                // absolute axes are applied first.
                let mut assigned = [(self.axis1.path, x1)].to_vec();
                if let (Some(a2), Some(v)) = (&self.axis2, x2) {
                    assigned.push((a2.path, v));
                }
                assigned.sort_by_key(|(p, _)| matches!(p, ParamPath::OmegaMOverDeltaC | ParamPath::GmOverGc));
                for &(path, v) in &assigned {
                    path.set(&mut params, v);
                }
                let snap = if assigned.iter().any(|(p, _)| p.touches_frequencies()) {
                    snap_frequency_ratio(&mut params)
                } else {
                    0.0
                };
                cells.push(CellSpec { index: cells.len(), i1, i2, x1, x2, params, snap });
            }
        }
        Ok(cells)
    }
}

/// Snaps `omega_m / Delta_c` to the nearest `p/q` with `q <= 64` when both
/// pumps are active; returns the snap distance in the ratio.
pub fn snap_frequency_ratio(p: &mut SystemParams) -> f64 {
    if !(p.g_c > 0.0 && p.g_m > 0.0 && p.delta_c != 0.0 && p.omega_m != 0.0) {
        return 0.0;
    }
    let ratio = p.omega_m / p.delta_c;
    let (num, den) = best_rational(libm::fabs(ratio), GRID_RATIO_DENOMINATOR);
    let snapped = libm::copysign(num as f64 / den as f64, ratio);
    p.omega_m = snapped * p.delta_c;
    libm::fabs(snapped - ratio)
}

/// One grid point, ready to dispatch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    /// Position in the output order.
    pub index: usize,
    pub i1: usize,
    pub i2: usize,
    pub x1: f64,
    pub x2: Option<f64>,
    pub params: SystemParams,
    /// Distance by which the frequency ratio was moved onto the rational grid.
    pub snap: f64,
}

/// The per-cell record kept in a sweep. The sampled cycle is dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub index: usize,
    pub i1: usize,
    pub i2: usize,
    pub x1: f64,
    pub x2: Option<f64>,
    pub snap: f64,
    pub verdict: Verdict,
    pub period: Option<f64>,
    pub maxima: Option<PeriodicMaxima>,
    pub stability: Option<StabilityReport>,
    pub diagnostics: Diagnostics,
    pub note: Option<String>,
}

impl CellResult {
    pub fn new(cell: &CellSpec, r: PointResult) -> Self {
        Self {
            index: cell.index,
            i1: cell.i1,
            i2: cell.i2,
            x1: cell.x1,
            x2: cell.x2,
            snap: cell.snap,
            verdict: r.verdict,
            period: r.period,
            maxima: r.maxima,
            stability: r.stability,
            diagnostics: r.diagnostics,
            note: r.note,
        }
    }

    /// The per-period maximum of `m`; `None` if no maxima were obtained.
    pub fn value(&self, m: Measure) -> Option<f64> {
        self.maxima.map(|mx| mx.get(m).value)
    }
}

/// Evaluates one cell. `abort` is polled during integration.
pub fn run_cell(cell: &CellSpec, settings: &PipelineSettings, abort: &mut dyn FnMut(f64) -> bool) -> CellResult {
    let mut s = *settings;
    s.keep_cycle = false;
    CellResult::new(cell, run_point(&cell.params, &s, abort))
}

/// Zero-level polylines of one measure over a 2D grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSet {
    pub measure: Measure,
    pub level: f64,
    pub polylines: Vec<Polyline>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    /// Every cell, in [`CellSpec::index`] order.
    pub cells: Vec<CellResult>,
    pub contours: Vec<ContourSet>,
}

impl SweepResult {
    /// Orders `cells` and checks that the grid is complete, then extracts
    /// the zero-steering boundaries.
    pub fn assemble(spec: SweepSpec, mut cells: Vec<CellResult>) -> Result<Self> {
        cells.sort_by_key(|c| c.index);
        let n = spec.cell_count();
        let complete = cells.len() == n && cells.iter().enumerate().all(|(k, c)| c.index == k);
        if !complete {
            return Err(Error::Spec(alloc::format!("sweep has {} of {} cells", cells.len(), n)));
        }
        let mut result = Self { spec, cells, contours: Vec::new() };
        result.contours = result.steering_contours()?;
        Ok(result)
    }

    /// Values of `m` as `z[i2][i1]`; cells without a usable result are NaN.
    pub fn grid(&self, m: Measure) -> Vec<Vec<f64>> {
        let (n1, n2) = self.spec.shape();
        let mut z = alloc::vec![alloc::vec![f64::NAN; n1]; n2];
        for c in &self.cells {
            if c.verdict == Verdict::Ok {
                if let Some(v) = c.value(m) {
                    z[c.i2][c.i1] = v;
                }
            }
        }
        z
    }

    fn steering_contours(&self) -> Result<Vec<ContourSet>> {
        let Some(a2) = &self.spec.axis2 else {
            return Ok(Vec::new());
        };
        let mut out = Vec::new();
        for m in [Measure::GAB, Measure::GBA] {
            if !self.spec.outputs.contains(&m) {
                continue;
            }
            let polylines = marching_squares(&self.spec.axis1.values, &a2.values, &self.grid(m), 0.0)?;
            out.push(ContourSet { measure: m, level: 0.0, polylines });
        }
        Ok(out)
    }

    /// Counts of each verdict.
    pub fn verdict_counts(&self) -> Vec<(Verdict, usize)> {
        let all = [Verdict::Ok, Verdict::Unstable, Verdict::NotConverged, Verdict::QuasiPeriodic, Verdict::Unphysical];
        all.into_iter().map(|v| (v, self.cells.iter().filter(|c| c.verdict == v).count())).collect()
    }
}

/// Serial reference runner; parallel scheduling lives in the std crate.
pub fn run_sweep_serial(spec: &SweepSpec) -> Result<SweepResult> {
    let cells = spec.expand()?;
    let results = cells.iter().map(|c| run_cell(c, &spec.settings, &mut |_| false)).collect();
    SweepResult::assemble(spec.clone(), results)
}

impl fmt::Display for SweepSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (n1, n2) = self.shape();
        write!(f, "{}: {} x ", self.name, self.axis1.path)?;
        match &self.axis2 {
            Some(a) => write!(f, "{} ({n1}x{n2})", a.path),
            None => write!(f, "- ({n1})"),
        }
    }
}

/// Parses measure names, e.g. `E_N,G_ab`.
pub fn parse_outputs(list: &str) -> Result<Vec<Measure>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| Measure::parse(s).ok_or_else(|| Error::Spec(alloc::format!("unknown measure `{s}`"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SweepSpec {
        SweepSpec {
            name: "t".into(),
            base: SystemParams::paper_defaults(),
            axis1: Axis::linspace(ParamPath::OmegaMOverDeltaC, 1.0, 2.0, 5),
            axis2: Some(Axis::linspace(ParamPath::Rb, 0.0, 0.3, 3)),
            outputs: Measure::ALL.to_vec(),
            budget_secs: 10.0,
            settings: PipelineSettings::default(),
        }
    }

    #[test]
    fn path_names_round_trip() {
        for p in ParamPath::ALL {
            assert_eq!(ParamPath::parse(p.name()).unwrap(), p);
        }
        assert!(matches!(ParamPath::parse("kappa_z"), Err(Error::Spec(_))));
    }

    #[test]
    fn expansion_order_and_ratios() {
        let s = spec();
        let cells = s.expand().unwrap();
        assert_eq!(cells.len(), 15);
        assert_eq!((cells[6].i1, cells[6].i2), (1, 1));
        let c = &cells[6];
        assert!((c.params.omega_m - 1.25 * s.base.delta_c).abs() < 1e-12);
        assert!((c.params.r_b - 0.15).abs() < 1e-12);
        assert_eq!(c.snap, 0.0);
    }

    #[test]
    fn ratio_axis_snaps_to_small_denominators() {
        let mut s = spec();
        s.axis1 = Axis { path: ParamPath::OmegaMOverDeltaC, values: alloc::vec![core::f64::consts::SQRT_2] };
        let c = &s.expand().unwrap()[0];
        let r = c.params.omega_m / c.params.delta_c;
        assert!(c.snap > 0.0 && c.snap < 1e-3);
        assert!((r - 41.0 / 29.0).abs() < 1e-12);
    }

    #[test]
    fn amplitude_ratio_follows_fixed_g_c() {
        let mut s = spec();
        s.axis1 = Axis::linspace(ParamPath::GmOverGc, 0.0, 3.0, 4);
        s.axis2 = Some(Axis::linspace(ParamPath::Gc, 0.01, 0.03, 2));
        let cells = s.expand().unwrap();
        let last = cells.last().unwrap();
        assert!((last.params.g_c - 0.03).abs() < 1e-15);
        assert!((last.params.g_m - 0.09).abs() < 1e-15);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut s = spec();
        s.axis1.values = alloc::vec![0.1, 0.1];
        assert!(matches!(s.expand(), Err(Error::Spec(_))));
        let mut s = spec();
        s.axis1.values = alloc::vec![f64::NAN];
        assert!(s.validate().is_err());
        let mut s = spec();
        s.outputs.clear();
        assert!(s.validate().is_err());
    }

    #[test]
    fn incomplete_grids_are_rejected() {
        let s = spec();
        assert!(SweepResult::assemble(s, Vec::new()).is_err());
    }
}
