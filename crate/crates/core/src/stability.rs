//! Instantaneous-eigenvalue stability of the drift matrix along a cycle.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cycle::LimitCycle;
use crate::drift::build_drift_matrix;
use crate::linalg::{eigenvalues4, eigenvector4, Mat4};
use crate::mean_field::MeanFieldState;
use crate::model::SystemParams;

/// Fewest drift-matrix evaluations per period.
pub const MIN_STABILITY_SAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// All eigenvalues have negative real part at every sampled time.
    pub stable: bool,
    /// Largest real part over all eigenvalues and sampled times.
    pub max_re_eig: f64,
    /// Largest real part among eigenvalues whose eigenvectors live mostly on
    /// the phonon quadratures. `NaN` when no eigenvector is phonon-dominated.
    pub dominant_phonon_re: f64,
}

/// Eigenvalues of `a` with the weight of each eigenvector on `(X_b, Y_b)`.
pub fn eigen_with_phonon_weight(a: &Mat4) -> [(Complex64, f64); 4] {
    let ev = eigenvalues4(a);
    ev.map(|l| {
        let v = eigenvector4(a, l);
        let phonon = v[2].norm_sqr() + v[3].norm_sqr();
        let total = phonon + v[0].norm_sqr() + v[1].norm_sqr();
        (l, if total > 0.0 { phonon / total } else { 0.0 })
    })
}

#[derive(Debug, Clone, Copy)]
struct Accumulator {
    max_re: f64,
    phonon_re: f64,
}

impl Accumulator {
    fn new() -> Self {
        Self { max_re: f64::NEG_INFINITY, phonon_re: f64::NEG_INFINITY }
    }

    fn add(&mut self, a: &Mat4) {
        for (l, w) in eigen_with_phonon_weight(a) {
            self.max_re = self.max_re.max(l.re);
            if w > 0.5 {
                self.phonon_re = self.phonon_re.max(l.re);
            }
        }
    }

    fn finish(self) -> StabilityReport {
        let phonon = if self.phonon_re.is_finite() { self.phonon_re } else { f64::NAN };
        StabilityReport { stable: self.max_re < 0.0, max_re_eig: self.max_re, dominant_phonon_re: phonon }
    }
}

/// Stability at a single mean-field state.
pub fn instantaneous_stability(params: &SystemParams, state: &MeanFieldState) -> StabilityReport {
    let mut acc = Accumulator::new();
    acc.add(&build_drift_matrix(state, params, state.t).entries);
    acc.finish()
}

/// Evaluates the eigenvalues of `A(t)` at every cycle sample, and at no fewer
/// than [`MIN_STABILITY_SAMPLES`] times per period.
pub fn stability_check(params: &SystemParams, cycle: &LimitCycle) -> StabilityReport {
    let n = cycle.samples.len();
    let mut acc = Accumulator::new();
    if n == 0 {
        return acc.finish();
    }
    if n >= MIN_STABILITY_SAMPLES {
        for s in &cycle.samples {
            acc.add(&build_drift_matrix(&s.mean, params, s.mean.t).entries);
        }
        return acc.finish();
    }
    // Sparse cycles: interpolate the mean field linearly between samples.
    let dt = cycle.dt();
    for j in 0..MIN_STABILITY_SAMPLES {
        let x = j as f64 * n as f64 / MIN_STABILITY_SAMPLES as f64;
        let k = libm::floor(x) as usize;
        let frac = x - k as f64;
        let (a, b) = (&cycle.samples[k].mean, &cycle.samples[(k + 1) % n].mean);
        let state = MeanFieldState {
            t: a.t + frac * dt,
            alpha: a.alpha + (b.alpha - a.alpha) * frac,
            beta: a.beta + (b.beta - a.beta) * frac,
        };
        acc.add(&build_drift_matrix(&state, params, state.t).entries);
    }
    acc.finish()
}
