//! Single-point pipeline: integrate through the transient, lock onto the
//! limit cycle, then evaluate measures, stability and diagnostics.

use alloc::collections::VecDeque;
use core::cell::Cell;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::cycle::{modulation_period, poincare_residual, samples_per_period, LimitCycle};
use crate::diagnostics::{cycle_cooperativity, mean_abs_alpha, mean_photon_number, power_balance};
use crate::error::{Error, Result};
use crate::integrate::{IntegratorSettings, Propagator, Sample};
use crate::measures::{periodic_maxima, CorrelationRecord, PeriodicMaxima};
use crate::model::SystemParams;
use crate::stability::{instantaneous_stability, stability_check, StabilityReport};

/// Outcome class of one parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Ok,
    Unstable,
    NotConverged,
    QuasiPeriodic,
    Unphysical,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Ok => "ok",
            Verdict::Unstable => "unstable",
            Verdict::NotConverged => "not-converged",
            Verdict::QuasiPeriodic => "quasi-periodic",
            Verdict::Unphysical => "unphysical",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Verdict::Ok, Verdict::Unstable, Verdict::NotConverged, Verdict::QuasiPeriodic, Verdict::Unphysical]
            .into_iter()
            .find(|v| v.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineSettings {
    pub integrator: IntegratorSettings,
    /// Time integrated before periodicity is first tested (units `1/omega_b`).
    pub transient: f64,
    /// Required Poincaré residual between consecutive periods.
    pub convergence_tol: f64,
    /// Give up (not converged) past this time.
    pub max_time: f64,
    /// Give up (not converged) after this many accepted solver steps.
    pub max_steps: u64,
    /// Keep the sampled cycle in the result.
    pub keep_cycle: bool,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        Self {
            integrator: IntegratorSettings::default(),
            transient: 200.0,
            convergence_tol: 1e-7,
            max_time: 2.0e4,
            max_steps: 2_000_000,
            keep_cycle: false,
        }
    }
}

/// Scalar diagnostics of a run; absent entries are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub cooperativity: Option<f64>,
    pub power_balance_residual: Option<f64>,
    pub mean_abs_alpha: Option<f64>,
    pub mean_photon_number: Option<f64>,
    pub min_symplectic: Option<f64>,
    pub max_asymmetry: Option<f64>,
    pub poincare_residual: Option<f64>,
    pub max_re_eig: Option<f64>,
    pub dominant_phonon_re: Option<f64>,
    /// Exponential growth rate of a runaway state.
    pub growth_rate: Option<f64>,
    /// Time reached by the integrator.
    pub t_final: f64,
    pub steps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub verdict: Verdict,
    pub period: Option<f64>,
    pub samples_per_period: usize,
    pub maxima: Option<PeriodicMaxima>,
    pub stability: Option<StabilityReport>,
    pub diagnostics: Diagnostics,
    pub cycle: Option<LimitCycle>,
    /// Message of the error that ended the run, if any.
    pub note: Option<alloc::string::String>,
}

impl PointResult {
    fn early(verdict: Verdict, diagnostics: Diagnostics, note: &Error) -> Self {
        Self {
            verdict,
            period: None,
            samples_per_period: 0,
            maxima: None,
            stability: None,
            diagnostics,
            cycle: None,
            note: Some(alloc::format!("{note}")),
        }
    }
}

/// Per-sample measures over the cycle.
pub fn cycle_records(cycle: &LimitCycle) -> Result<Vec<CorrelationRecord>> {
    cycle.samples.iter().map(|s| CorrelationRecord::from_covariance(&s.cov, s.mean.t)).collect()
}

const BLOWUP: f64 = 1e20;
/// Growth of the state norm, relative to its size after the first period,
/// treated as a runaway.
const RUNAWAY_FACTOR: f64 = 1e6;
/// Smaller growth that still counts as a runaway once the step budget is spent.
const STIFF_RUNAWAY_FACTOR: f64 = 1e2;

fn blown_up(samples: &[Sample]) -> bool {
    samples.iter().any(|s| s.flatten().iter().any(|v| !(libm::fabs(*v) < BLOWUP)))
}

fn state_norm(s: &Sample) -> f64 {
    s.flatten().iter().fold(1.0, |m: f64, v| m.max(libm::fabs(*v)))
}

/// Why [`converge`] stopped early.
struct Failure {
    error: Error,
    t: f64,
    steps: u64,
    /// Worst instantaneous eigenvalue seen at period boundaries.
    worst_eig: f64,
    /// Exponential growth rate of the state norm, for runaways.
    growth_rate: Option<f64>,
}

/// Integrates until the limit cycle is reached.
///
/// Returns the converged cycle, the time reached and the solver step count.
fn converge(
    params: &SystemParams,
    settings: &PipelineSettings,
    period: f64,
    n: usize,
    abort: &mut dyn FnMut(f64) -> bool,
) -> core::result::Result<(LimitCycle, f64, u64), Failure> {
    let stride = period / n as f64;
    let mut prop = Propagator::new(params, &settings.integrator, stride);
    let n64 = n as u64;
    let skip_periods = libm::ceil(settings.transient.max(0.0) / period) as u64;
    let mut worst_eig = f64::NEG_INFINITY;
    // Norm and time after the first period: the reference for runaways.
    let mut reference: Option<(f64, f64)> = None;

    let polls = Cell::new(0u64);
    let capped = Cell::new(false);
    let mut guard = |t: f64| {
        polls.set(polls.get() + 1);
        if polls.get() >= settings.max_steps {
            capped.set(true);
            return true;
        }
        abort(t)
    };

    let growth = |prop: &Propagator, reference: Option<(f64, f64)>, factor: f64| -> Option<f64> {
        let (t0, n0) = reference?;
        let norm = state_norm(&prop.current());
        let dt = prop.time() - t0;
        (norm > factor * n0 && dt > 0.0).then(|| libm::log(norm / n0) / dt)
    };
    let fail = |error: Error, prop: &Propagator, worst_eig: f64, reference: Option<(f64, f64)>| -> Failure {
        let mut f = Failure { error, t: prop.time(), steps: prop.stats().accepted, worst_eig, growth_rate: None };
        if capped.get() {
            f.growth_rate = growth(prop, reference, STIFF_RUNAWAY_FACTOR);
            f.error = match f.growth_rate {
                Some(_) => Error::Divergence { t: f.t, reason: "runaway growth" },
                None => Error::NotConverged { residual: f64::INFINITY, t: f.t },
            };
        }
        f
    };

    let mut k = 0;
    let mut periods: VecDeque<Vec<Sample>> = VecDeque::with_capacity(3);
    let mut residual = f64::INFINITY;
    let mut previous_residual = f64::INFINITY;
    loop {
        let measuring = k >= skip_periods * n64;
        let mut buf = Vec::with_capacity(if measuring { n } else { 0 });
        // Grid points k+1 ..= k+n: one full period, endpoint excluded.
        let from = if measuring { k + 1 } else { u64::MAX };
        if let Err(e) = prop.advance_to_index(k + n64, from, |s| buf.push(s), &mut guard) {
            return Err(fail(e, &prop, worst_eig, reference));
        }
        k += n64;
        let end = prop.current();
        if blown_up(core::slice::from_ref(&end)) || blown_up(&buf) {
            let e = Error::Divergence { t: prop.time(), reason: "state blow-up" };
            let mut f = fail(e, &prop, worst_eig, reference);
            f.growth_rate = growth(&prop, reference, 1.0);
            return Err(f);
        }
        match reference {
            None => reference = Some((prop.time(), state_norm(&end))),
            Some(_) => {
                if let Some(rate) = growth(&prop, reference, RUNAWAY_FACTOR) {
                    let e = Error::Divergence { t: prop.time(), reason: "runaway growth" };
                    let mut f = fail(e, &prop, worst_eig, reference);
                    f.growth_rate = Some(rate);
                    return Err(f);
                }
            }
        }
        if !measuring {
            continue;
        }
        worst_eig = worst_eig.max(instantaneous_stability(params, &end.mean).max_re_eig);
        if let Some(prev) = periods.back() {
            let r = poincare_residual(prev, &buf);
            residual = r.max(previous_residual);
            previous_residual = r;
        }
        periods.push_back(buf);
        if periods.len() > 3 {
            periods.pop_front();
        }
        if periods.len() == 3 && residual <= settings.convergence_tol {
            let samples = periods.pop_back().unwrap_or_default();
            let cycle = LimitCycle { period, samples, poincare_residual: residual };
            return Ok((cycle, prop.time(), prop.stats().accepted));
        }
        if prop.time() >= settings.max_time {
            let e = Error::NotConverged { residual, t: prop.time() };
            return Err(fail(e, &prop, worst_eig, reference));
        }
    }
}

/// Runs the full single-point pipeline. `abort` is polled during
/// integration; returning `true` yields a not-converged verdict.
pub fn run_point(params: &SystemParams, settings: &PipelineSettings, abort: &mut dyn FnMut(f64) -> bool) -> PointResult {
    let mut diag = Diagnostics::default();
    if let Err(e) = params.validate() {
        return PointResult::early(Verdict::Unphysical, diag, &e);
    }
    let kappa_fb = params.derived().kappa_fb;
    if kappa_fb <= 0.0 {
        let st = instantaneous_stability(params, &crate::mean_field::MeanFieldState::origin(0.0));
        diag.max_re_eig = Some(st.max_re_eig);
        diag.dominant_phonon_re = Some(st.dominant_phonon_re);
        return PointResult::early(Verdict::Unstable, diag, &Error::GainRegime { kappa_fb });
    }
    let period = match modulation_period(params) {
        Ok(p) => p,
        Err(e) => return PointResult::early(Verdict::QuasiPeriodic, diag, &e),
    };
    let n = samples_per_period(params, period);

    let (cycle, t_final, steps) = match converge(params, settings, period, n, abort) {
        Ok(v) => v,
        Err(Failure { error: e, t, steps, worst_eig: worst, growth_rate }) => {
            diag.t_final = t;
            diag.steps = steps;
            diag.growth_rate = growth_rate;
            if worst.is_finite() {
                diag.max_re_eig = Some(worst);
            }
            // A run that never settles while the linearisation has gain is
            // reported as unstable.
            let verdict = match e {
                Error::Divergence { .. } => Verdict::Unstable,
                Error::NotConverged { .. } if worst > 0.0 => Verdict::Unstable,
                _ => Verdict::NotConverged,
            };
            if let Error::NotConverged { residual, .. } = e {
                diag.poincare_residual = Some(residual);
            }
            let mut r = PointResult::early(verdict, diag, &e);
            r.period = Some(period);
            r.samples_per_period = n;
            return r;
        }
    };
    diag.t_final = t_final;
    diag.steps = steps;
    diag.poincare_residual = Some(cycle.poincare_residual);

    let stability = stability_check(params, &cycle);
    diag.max_re_eig = Some(stability.max_re_eig);
    diag.dominant_phonon_re = Some(stability.dominant_phonon_re);
    diag.power_balance_residual = Some(power_balance(&cycle, params).residual());
    diag.mean_abs_alpha = Some(mean_abs_alpha(&cycle));
    diag.mean_photon_number = Some(mean_photon_number(&cycle));
    diag.cooperativity = cycle_cooperativity(&cycle, params).ok();
    let mut min_nu = f64::INFINITY;
    let mut max_asym: f64 = 0.0;
    for s in &cycle.samples {
        min_nu = min_nu.min(s.cov.min_symplectic_eigenvalue());
        max_asym = max_asym.max(s.cov.asymmetry());
    }
    diag.min_symplectic = Some(min_nu);
    diag.max_asymmetry = Some(max_asym);

    let mut note = None;
    let maxima = match cycle_records(&cycle).and_then(|recs| periodic_maxima(&recs, period)) {
        Ok(m) => Some(m),
        Err(e) => {
            note = Some(alloc::format!("{e}"));
            None
        }
    };
    let verdict = if maxima.is_none() {
        Verdict::Unphysical
    } else if !stability.stable {
        Verdict::Unstable
    } else {
        Verdict::Ok
    };
    PointResult {
        verdict,
        period: Some(period),
        samples_per_period: n,
        maxima,
        stability: Some(stability),
        diagnostics: diag,
        cycle: if settings.keep_cycle { Some(cycle) } else { None },
        note,
    }
}
