//! Adaptive Dormand-Prince 5(4) integrator on fixed-size real state vectors,
//! with the pair's fourth-order continuous extension for dense output.

use crate::error::{Error, Result};

/// Right-hand side of `y' = f(t, y)`.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N], dy: &mut [f64; N]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-12 }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Interpolation data for the most recent accepted step.
#[derive(Debug, Clone, Copy)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    coeff: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    /// State at `t` within `[t0, t0 + h]`.
    pub fn eval(&self, t: f64) -> [f64; N] {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let mut out = [0.0; N];
        for i in 0..N {
            let c = &self.coeff;
            out[i] = c[0][i] + s * (c[1][i] + s1 * (c[2][i] + s * (c[3][i] + s1 * c[4][i])));
        }
        out
    }
}

/// Counters for diagnostics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: u64,
    pub rejected: u64,
    pub evaluations: u64,
}

/// Integrator state: the current point, the FSAL derivative and step-size memory.
#[derive(Debug, Clone)]
pub struct Dopri5<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub tol: Tolerances,
    pub h_max: f64,
    pub stats: Stats,
    h: f64,
    k1: [f64; N],
    k1_valid: bool,
    fac_old: f64,
}

impl<const N: usize> Dopri5<N> {
    pub fn new(t0: f64, y0: [f64; N], tol: Tolerances) -> Self {
        Self {
            t: t0,
            y: y0,
            tol,
            h_max: f64::INFINITY,
            stats: Stats::default(),
            h: 0.0,
            k1: [0.0; N],
            k1_valid: false,
            fac_old: 1e-4,
        }
    }

    /// Current step-size proposal.
    pub fn step_size(&self) -> f64 {
        self.h
    }

    /// Replaces the state (e.g. after re-symmetrisation), keeping the step size.
    pub fn reset_state(&mut self, y: [f64; N]) {
        self.y = y;
        self.k1_valid = false;
    }

    fn error_norm(&self, y0: &[f64; N], y1: &[f64; N], err: &[f64; N]) -> f64 {
        let mut acc = 0.0;
        for i in 0..N {
            let sk = self.tol.atol + self.tol.rtol * libm::fabs(y0[i]).max(libm::fabs(y1[i]));
            let r = err[i] / sk;
            acc += r * r;
        }
        libm::sqrt(acc / N as f64)
    }

    fn initial_step<S: OdeSystem<N>>(&mut self, sys: &S, direction_span: f64) -> f64 {
        // Hairer & Wanner's starting-step heuristic.
        let f0 = self.k1;
        let sk = |v: f64| self.tol.atol + self.tol.rtol * libm::fabs(v);
        let mut dnf = 0.0;
        let mut dny = 0.0;
        for i in 0..N {
            let s = sk(self.y[i]);
            dnf += (f0[i] / s) * (f0[i] / s);
            dny += (self.y[i] / s) * (self.y[i] / s);
        }
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { 0.01 * libm::sqrt(dny / dnf) };
        h = h.min(direction_span).min(self.h_max);
        let mut y1 = [0.0; N];
        for i in 0..N {
            y1[i] = self.y[i] + h * f0[i];
        }
        let mut f1 = [0.0; N];
        sys.rhs(self.t + h, &y1, &mut f1);
        self.stats.evaluations += 1;
        let mut der2 = 0.0;
        for i in 0..N {
            let r = (f1[i] - f0[i]) / sk(self.y[i]);
            der2 += r * r;
        }
        let der2 = libm::sqrt(der2) / h;
        let der12 = libm::sqrt(dnf).max(der2);
        let h1 = if der12 <= 1e-15 { (1e-6_f64).max(h * 1e-3) } else { libm::pow(0.01 / der12, 0.2) };
        (100.0 * h).min(h1).min(direction_span).min(self.h_max)
    }

    /// Advances to exactly `t_end`, invoking `on_step` after every accepted
    /// step with its interpolant. `abort` is polled once per step; returning
    /// `true` stops the integration with [`Error::Aborted`].
    pub fn advance<S, F, A>(&mut self, sys: &S, t_end: f64, mut on_step: F, mut abort: A) -> Result<()>
    where
        S: OdeSystem<N>,
        F: FnMut(&DenseStep<N>),
        A: FnMut(f64) -> bool,
    {
        if t_end <= self.t {
            return Ok(());
        }
        if !self.k1_valid {
            let mut k1 = [0.0; N];
            sys.rhs(self.t, &self.y, &mut k1);
            self.stats.evaluations += 1;
            self.k1 = k1;
            self.k1_valid = true;
        }
        if self.h <= 0.0 {
            self.h = self.initial_step(sys, t_end - self.t);
        }

        let mut k2 = [0.0; N];
        let mut k3 = [0.0; N];
        let mut k4 = [0.0; N];
        let mut k5 = [0.0; N];
        let mut k6 = [0.0; N];
        let mut k7 = [0.0; N];
        let mut tmp = [0.0; N];
        let mut y1 = [0.0; N];
        let mut err = [0.0; N];

        while self.t < t_end {
            if abort(self.t) {
                return Err(Error::Aborted { t: self.t });
            }
            let remaining = t_end - self.t;
            let mut last = false;
            let mut h = self.h.min(self.h_max);
            if h >= remaining * (1.0 - 1e-12) {
                h = remaining;
                last = true;
            }
            if h < 1e-14 * (1.0 + libm::fabs(self.t)) {
                return Err(Error::Divergence { t: self.t, reason: "step size underflow" });
            }
            let (t, y, k1) = (self.t, &self.y, &self.k1);

            for i in 0..N {
                tmp[i] = y[i] + h * A21 * k1[i];
            }
            sys.rhs(t + C2 * h, &tmp, &mut k2);
            for i in 0..N {
                tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            sys.rhs(t + C3 * h, &tmp, &mut k3);
            for i in 0..N {
                tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            sys.rhs(t + C4 * h, &tmp, &mut k4);
            for i in 0..N {
                tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            sys.rhs(t + C5 * h, &tmp, &mut k5);
            for i in 0..N {
                tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            let t_new = if last { t_end } else { t + h };
            sys.rhs(t_new, &tmp, &mut k6);
            for i in 0..N {
                y1[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            sys.rhs(t_new, &y1, &mut k7);
            self.stats.evaluations += 6;
            for i in 0..N {
                err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            }
            let e = self.error_norm(y, &y1, &err);
            if !e.is_finite() || y1.iter().any(|v| !v.is_finite()) {
                self.stats.rejected += 1;
                self.h = h * FAC_MIN;
                if !(self.h > 1e-14 * (1.0 + libm::fabs(self.t))) {
                    return Err(Error::Divergence { t: self.t, reason: "non-finite state" });
                }
                continue;
            }

            let fac11 = libm::pow(e, 0.2 - BETA * 0.75);
            if e <= 1.0 {
                let mut fac = fac11 / libm::pow(self.fac_old, BETA);
                fac = (fac / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                let h_new = h / fac;
                self.fac_old = e.max(1e-4);

                let mut coeff = [[0.0; N]; 5];
                for i in 0..N {
                    let ydiff = y1[i] - y[i];
                    let bspl = h * k1[i] - ydiff;
                    coeff[0][i] = y[i];
                    coeff[1][i] = ydiff;
                    coeff[2][i] = bspl;
                    coeff[3][i] = ydiff - h * k7[i] - bspl;
                    coeff[4][i] =
                        h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                }
                let dense = DenseStep { t0: t, h, coeff };
                self.stats.accepted += 1;
                self.t = t_new;
                self.y = y1;
                self.k1 = k7;
                // A clamped final step should not shrink the next proposal.
                if !last || h_new > self.h {
                    self.h = h_new;
                }
                on_step(&dense);
            } else {
                self.stats.rejected += 1;
                self.h = h / (1.0 / FAC_MIN).min(fac11 / SAFETY);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Oscillator {
        omega: f64,
        gamma: f64,
    }

    impl OdeSystem<2> for Oscillator {
        fn rhs(&self, _t: f64, y: &[f64; 2], dy: &mut [f64; 2]) {
            dy[0] = y[1];
            dy[1] = -self.omega * self.omega * y[0] - 2.0 * self.gamma * y[1];
        }
    }

    struct Forced;

    impl OdeSystem<1> for Forced {
        fn rhs(&self, t: f64, _y: &[f64; 1], dy: &mut [f64; 1]) {
            dy[0] = libm::cos(t);
        }
    }

    #[test]
    fn harmonic_oscillator_accuracy() {
        let sys = Oscillator { omega: 2.0, gamma: 0.0 };
        let mut s = Dopri5::new(0.0, [1.0, 0.0], Tolerances { rtol: 1e-10, atol: 1e-12 });
        s.advance(&sys, 20.0, |_| {}, |_| false).unwrap();
        assert_eq!(s.t, 20.0);
        assert!((s.y[0] - libm::cos(40.0)).abs() < 1e-8);
        assert!((s.y[1] + 2.0 * libm::sin(40.0)).abs() < 1e-8);
    }

    #[test]
    fn dense_output_tracks_exact_solution() {
        let mut s = Dopri5::new(0.0, [0.0], Tolerances { rtol: 1e-10, atol: 1e-12 });
        let mut worst: f64 = 0.0;
        s.advance(
            &Forced,
            30.0,
            |step| {
                for k in 1..8 {
                    let t = step.t0 + step.h * k as f64 / 8.0;
                    worst = worst.max((step.eval(t)[0] - libm::sin(t)).abs());
                }
            },
            |_| false,
        )
        .unwrap();
        assert!(worst < 1e-8, "dense error {worst}");
    }

    #[test]
    fn abort_is_reported() {
        let sys = Oscillator { omega: 1.0, gamma: 0.1 };
        let mut s = Dopri5::new(0.0, [1.0, 0.0], Tolerances::default());
        let r = s.advance(&sys, 100.0, |_| {}, |t| t > 5.0);
        assert!(matches!(r, Err(Error::Aborted { .. })));
    }

    struct Blowup;

    impl OdeSystem<1> for Blowup {
        fn rhs(&self, _t: f64, y: &[f64; 1], dy: &mut [f64; 1]) {
            dy[0] = y[0] * y[0];
        }
    }

    #[test]
    fn finite_time_blowup_is_divergence() {
        let mut s = Dopri5::new(0.0, [1.0], Tolerances::default());
        let r = s.advance(&Blowup, 2.0, |_| {}, |_| false);
        assert!(matches!(r, Err(Error::Divergence { .. })), "{r:?}");
    }
}
