//! Modulation period, rational approximation of frequency ratios and
//! limit-cycle detection on sampled trajectories.

use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{Sample, Trajectory};
use crate::model::SystemParams;

/// Relative tolerance used when rationalising frequency ratios.
pub const RATIONAL_TOL: f64 = 1e-9;
/// Largest denominator accepted when rationalising frequency ratios.
pub const MAX_PERIOD_DENOMINATOR: u64 = 4096;
/// Fastest drive cycle is resolved by at least this many samples.
pub const SAMPLES_PER_CYCLE: usize = 32;
/// Lower bound on samples per period.
pub const MIN_SAMPLES_PER_PERIOD: usize = 64;

/// Continued-fraction convergents of `x` (non-negative), up to denominator `max_q`.
fn convergents(x: f64, max_q: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut r = x;
    for _ in 0..64 {
        let a = libm::floor(r);
        if a > 1e15 {
            break;
        }
        let a = a as u64;
        let p2 = a.saturating_mul(p1).saturating_add(p0);
        let q2 = a.saturating_mul(q1).saturating_add(q0);
        if q2 > max_q {
            // Best semiconvergent within the bound.
            let k = (max_q - q0) / q1.max(1);
            if k > 0 && q1 > 0 {
                let (ps, qs) = (k * p1 + p0, k * q1 + q0);
                let semi = ps as f64 / qs as f64;
                let last = p1 as f64 / q1 as f64;
                if libm::fabs(semi - x) < libm::fabs(last - x) {
                    out.push((ps, qs));
                }
            }
            break;
        }
        out.push((p2, q2));
        let frac = r - a as f64;
        if frac < 1e-15 {
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        r = 1.0 / frac;
    }
    out
}

/// Smallest-denominator fraction `p/q` (lowest terms) with
/// `|x - p/q| <= tol * max(1, |x|)` and `q <= max_q`.
pub fn rationalize(x: f64, tol: f64, max_q: u64) -> Option<(u64, u64)> {
    if !(x.is_finite() && x >= 0.0) {
        return None;
    }
    let bound = tol * x.max(1.0);
    convergents(x, max_q)
        .into_iter()
        .find(|&(p, q)| libm::fabs(x - p as f64 / q as f64) <= bound)
}

/// Nearest fraction to `x` with denominator at most `max_q`.
pub fn best_rational(x: f64, max_q: u64) -> (u64, u64) {
    let x = x.max(0.0);
    let mut best = (libm::round(x) as u64, 1u64);
    let mut best_err = libm::fabs(x - best.0 as f64);
    for (p, q) in convergents(x, max_q) {
        let e = libm::fabs(x - p as f64 / q as f64);
        if e < best_err {
            best = (p, q);
            best_err = e;
        }
    }
    // Convergents plus the bounded semiconvergent are best approximations of
    // the second kind; a brute scan over q settles ties for small bounds.
    if max_q <= 256 {
        for q in 1..=max_q {
            let p = libm::round(x * q as f64);
            let e = libm::fabs(x - p / q as f64);
            if e < best_err - 1e-15 {
                best = (p as u64, q);
                best_err = e;
            }
        }
    }
    let g = gcd(best.0, best.1);
    (best.0 / g.max(1), best.1 / g.max(1))
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// Angular frequencies that modulate the dynamics (zero-amplitude pumps and
/// zero frequencies do not count).
pub fn drive_frequencies(params: &SystemParams) -> Vec<f64> {
    let mut f = Vec::new();
    if params.g_c > 0.0 && params.delta_c != 0.0 {
        f.push(libm::fabs(params.delta_c));
    }
    if params.g_c > 0.0 && params.variant.literal_opa_phase && params.delta_a != 0.0 {
        f.push(libm::fabs(params.delta_a));
    }
    if params.g_m > 0.0 && params.omega_m != 0.0 {
        f.push(libm::fabs(params.omega_m));
    }
    f
}

/// The common period of all drives. With no modulation the dynamics are
/// autonomous and one mechanical period is returned.
pub fn modulation_period(params: &SystemParams) -> Result<f64> {
    let freqs = drive_frequencies(params);
    let Some(&f0) = freqs.first() else {
        return Ok(2.0 * PI / params.omega_b_units());
    };
    let mut multiple = 1u64;
    for &f in &freqs[1..] {
        let ratio = f / f0;
        let (_, q) = rationalize(ratio, RATIONAL_TOL, MAX_PERIOD_DENOMINATOR)
            .ok_or(Error::QuasiPeriodic { ratio })?;
        multiple = lcm(multiple, q);
        if multiple > MAX_PERIOD_DENOMINATOR {
            return Err(Error::QuasiPeriodic { ratio });
        }
    }
    Ok(2.0 * PI * multiple as f64 / f0)
}

/// Number of samples per period: the fastest of the drive frequencies,
/// `omega_b` and `|Delta_a|` is resolved by [`SAMPLES_PER_CYCLE`] points.
pub fn samples_per_period(params: &SystemParams, period: f64) -> usize {
    let mut fastest = params.omega_b_units();
    for f in drive_frequencies(params) {
        fastest = fastest.max(f);
    }
    fastest = fastest.max(libm::fabs(params.delta_a));
    let cycles = period * fastest / (2.0 * PI);
    let n = libm::ceil(cycles * SAMPLES_PER_CYCLE as f64 - 1e-9) as usize;
    n.max(MIN_SAMPLES_PER_PERIOD)
}

/// The asymptotic periodic orbit, sampled over exactly one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCycle {
    pub period: f64,
    /// `samples[k]` is at `t_0 + k period / n`; the endpoint is excluded.
    pub samples: Vec<Sample>,
    pub poincare_residual: f64,
}

impl LimitCycle {
    pub fn t0(&self) -> f64 {
        self.samples.first().map_or(0.0, |s| s.mean.t)
    }

    pub fn dt(&self) -> f64 {
        self.period / self.samples.len() as f64
    }
}

/// Largest entry-wise relative change `|x(t+tau) - x(t)| / (1 + |x(t)|)`
/// between two equally sampled periods.
pub fn poincare_residual(earlier: &[Sample], later: &[Sample]) -> f64 {
    let mut worst: f64 = 0.0;
    for (a, b) in earlier.iter().zip(later) {
        let xa = a.flatten();
        let xb = b.flatten();
        for (u, v) in xa.iter().zip(xb.iter()) {
            let r = libm::fabs(v - u) / (1.0 + libm::fabs(*u));
            if !(r <= worst) {
                worst = r;
            }
        }
    }
    worst
}

/// Detects the limit cycle at the end of `trajectory`.
///
/// The trajectory must be uniformly sampled with a stride dividing the
/// modulation period and contain at least three periods; the residual is
/// the worse of the two comparisons between consecutive trailing periods.
pub fn detect_limit_cycle(trajectory: &Trajectory, params: &SystemParams, tol: f64) -> Result<LimitCycle> {
    let period = modulation_period(params)?;
    let dt = trajectory.stride;
    let n_f = period / dt;
    let n = libm::round(n_f) as usize;
    if n == 0 || libm::fabs(n_f - n as f64) > 1e-6 * n_f {
        return Err(Error::Coverage { samples: trajectory.samples.len(), needed: usize::MAX });
    }
    let total = trajectory.samples.len();
    if total < 3 * n {
        return Err(Error::Coverage { samples: total, needed: 3 * n });
    }
    let s = &trajectory.samples;
    let p1 = &s[total - 3 * n..total - 2 * n];
    let p2 = &s[total - 2 * n..total - n];
    let p3 = &s[total - n..];
    let residual = poincare_residual(p1, p2).max(poincare_residual(p2, p3));
    if !(residual <= tol) {
        let t = s.last().map_or(0.0, |x| x.mean.t);
        return Err(Error::NotConverged { residual, t });
    }
    Ok(LimitCycle { period, samples: p3.to_vec(), poincare_residual: residual })
}
