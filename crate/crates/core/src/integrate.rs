//! Joint integration of the mean field and the covariance (Lyapunov) equation
//! `V' = A(t) V + V A(t)^T + D`.

use alloc::vec::Vec;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::drift::{build_diffusion_matrix, build_drift_matrix};
use crate::error::{Error, Result};
use crate::linalg::Mat4;
use crate::mean_field::{mean_field_rhs, static_cavity_amplitude, MeanFieldState};
use crate::measures::CovarianceMatrix;
use crate::model::SystemParams;
use crate::ode::{Dopri5, OdeSystem, Stats, Tolerances};

/// Real state dimension: 4 mean-field components and the 10 independent
/// entries of the symmetric covariance matrix.
pub const STATE_DIM: usize = 14;

const UPPER: [(usize, usize); 10] =
    [(0, 0), (0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3)];

/// Mean field and covariance at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub mean: MeanFieldState,
    pub cov: CovarianceMatrix,
}

impl Sample {
    pub fn from_state(t: f64, y: &[f64; STATE_DIM]) -> Self {
        let mut v = [[0.0; 4]; 4];
        for (k, &(i, j)) in UPPER.iter().enumerate() {
            v[i][j] = y[4 + k];
            v[j][i] = y[4 + k];
        }
        Self {
            mean: MeanFieldState { t, alpha: Complex64::new(y[0], y[1]), beta: Complex64::new(y[2], y[3]) },
            cov: CovarianceMatrix(v),
        }
    }

    /// `[Re alpha, Im alpha, Re beta, Im beta, V_00, V_01, ..., V_33]`
    /// (upper triangle of `V`, row-major).
    pub fn flatten(&self) -> [f64; STATE_DIM] {
        let mut y = [0.0; STATE_DIM];
        y[0] = self.mean.alpha.re;
        y[1] = self.mean.alpha.im;
        y[2] = self.mean.beta.re;
        y[3] = self.mean.beta.im;
        let v = self.cov.entries();
        for (k, &(i, j)) in UPPER.iter().enumerate() {
            y[4 + k] = v[i][j];
        }
        y
    }

    pub fn is_finite(&self) -> bool {
        self.flatten().iter().all(|v| v.is_finite())
    }
}

/// Initial condition of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum InitialCondition {
    /// `alpha = beta = 0`, thermal covariance `diag[N_a+1/2, N_a+1/2, N_b+1/2, N_b+1/2]`.
    #[default]
    Thermal,
    /// Static cavity amplitude, static radiation-pressure displacement and a
    /// vacuum covariance; used to probe basin independence.
    Displaced,
}

impl InitialCondition {
    pub fn sample(self, params: &SystemParams) -> Sample {
        match self {
            InitialCondition::Thermal => Sample {
                mean: MeanFieldState::origin(0.0),
                cov: CovarianceMatrix::thermal(params.n_a, params.n_b()),
            },
            InitialCondition::Displaced => {
                let alpha = static_cavity_amplitude(params);
                let i = Complex64::new(0.0, 1.0);
                let beta = i * params.g * alpha.norm_sqr() / (i * params.omega_b_units() + params.kappa_b);
                Sample { mean: MeanFieldState { t: 0.0, alpha, beta }, cov: CovarianceMatrix::vacuum() }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSettings {
    pub rtol: f64,
    pub atol: f64,
    pub initial: InitialCondition,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        let t = Tolerances::default();
        Self { rtol: t.rtol, atol: t.atol, initial: InitialCondition::default() }
    }
}

impl IntegratorSettings {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances { rtol: self.rtol, atol: self.atol }
    }
}

/// The coupled 14-dimensional ODE.
pub struct JointSystem<'a> {
    params: &'a SystemParams,
    diffusion: Mat4,
}

impl<'a> JointSystem<'a> {
    pub fn new(params: &'a SystemParams) -> Self {
        Self { params, diffusion: build_diffusion_matrix(params).entries }
    }
}

impl OdeSystem<STATE_DIM> for JointSystem<'_> {
    fn rhs(&self, t: f64, y: &[f64; STATE_DIM], dy: &mut [f64; STATE_DIM]) {
        let mean = MeanFieldState { t, alpha: Complex64::new(y[0], y[1]), beta: Complex64::new(y[2], y[3]) };
        let (da, db) = mean_field_rhs(&mean, self.params);
        dy[0] = da.re;
        dy[1] = da.im;
        dy[2] = db.re;
        dy[3] = db.im;

        let a = build_drift_matrix(&mean, self.params, t).entries;
        let mut v = [[0.0; 4]; 4];
        for (k, &(i, j)) in UPPER.iter().enumerate() {
            v[i][j] = y[4 + k];
            v[j][i] = y[4 + k];
        }
        // M = A V; V' = M + M^T + D.
        let mut m = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] = a[i][0] * v[0][j] + a[i][1] * v[1][j] + a[i][2] * v[2][j] + a[i][3] * v[3][j];
            }
        }
        for (k, &(i, j)) in UPPER.iter().enumerate() {
            dy[4 + k] = m[i][j] + m[j][i] + self.diffusion[i][j];
        }
    }
}

/// Uniformly sampled output of an integration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub stride: f64,
    pub samples: Vec<Sample>,
}

/// Stepper that emits samples on the grid `origin + k * stride`.
pub struct Propagator<'a> {
    system: JointSystem<'a>,
    solver: Dopri5<STATE_DIM>,
    origin: f64,
    stride: f64,
    next_index: u64,
}

impl<'a> Propagator<'a> {
    pub fn new(params: &'a SystemParams, settings: &IntegratorSettings, stride: f64) -> Self {
        let start = settings.initial.sample(params);
        let t0 = start.mean.t;
        Self {
            system: JointSystem::new(params),
            solver: Dopri5::new(t0, start.flatten(), settings.tolerances()),
            origin: t0,
            stride,
            next_index: 0,
        }
    }

    pub fn time(&self) -> f64 {
        self.solver.t
    }

    /// Time of the `k`-th grid point.
    pub fn grid_time(&self, k: u64) -> f64 {
        self.origin + k as f64 * self.stride
    }

    pub fn next_index(&self) -> u64 {
        self.next_index
    }

    pub fn current(&self) -> Sample {
        Sample::from_state(self.solver.t, &self.solver.y)
    }

    pub fn stats(&self) -> Stats {
        self.solver.stats
    }

    /// Integrates up to grid point `k_end` (inclusive), handing every grid
    /// sample in `(now, t(k_end)]` to `sink`. Samples before `record_from`
    /// are skipped.
    pub fn advance_to_index<S, A>(&mut self, k_end: u64, record_from: u64, mut sink: S, abort: A) -> Result<()>
    where
        S: FnMut(Sample),
        A: FnMut(f64) -> bool,
    {
        let t_end = self.grid_time(k_end);
        let origin = self.origin;
        let stride = self.stride;
        let next = &mut self.next_index;
        let mut bad: Option<f64> = None;
        self.solver.advance(
            &self.system,
            t_end,
            |step| {
                let t1 = step.t1();
                while *next <= k_end {
                    let tk = origin + *next as f64 * stride;
                    if tk > t1 {
                        break;
                    }
                    let s = Sample::from_state(tk, &step.eval(tk));
                    if !s.is_finite() {
                        bad.get_or_insert(tk);
                    }
                    if *next >= record_from {
                        sink(s);
                    }
                    *next += 1;
                }
            },
            abort,
        )?;
        if let Some(t) = bad {
            return Err(Error::Divergence { t, reason: "non-finite state" });
        }
        // The final grid point coincides with the solver's endpoint.
        if self.next_index <= k_end {
            let s = Sample::from_state(t_end, &self.solver.y);
            if self.next_index >= record_from {
                sink(s);
            }
            self.next_index = k_end + 1;
        }
        Ok(())
    }
}

/// Integrates from the configured initial condition to `t_end`, storing a
/// sample every `stride` (the initial point included).
pub fn integrate(params: &SystemParams, t_end: f64, stride: f64, settings: &IntegratorSettings) -> Result<Trajectory> {
    if !(t_end > 0.0 && stride > 0.0) {
        return Err(Error::Domain("integrate needs t_end > 0 and stride > 0"));
    }
    params.validate()?;
    let mut prop = Propagator::new(params, settings, stride);
    let k_end = libm::floor(t_end / stride + 1e-9) as u64;
    let mut samples = Vec::with_capacity(k_end as usize + 1);
    samples.push(prop.current());
    prop.next_index = 1;
    prop.advance_to_index(k_end, 1, |s| samples.push(s), |_| false)?;
    Ok(Trajectory { stride, samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_round_trip() {
        let y: [f64; STATE_DIM] = core::array::from_fn(|i| i as f64 * 0.5 - 2.0);
        let s = Sample::from_state(1.0, &y);
        assert_eq!(s.flatten(), y);
        assert_eq!(s.cov.asymmetry(), 0.0);
    }

    #[test]
    fn uncoupled_system_thermalises() {
        let mut p = SystemParams::paper_defaults();
        p.g = 0.0;
        p.g_c = 0.0;
        p.g_m = 0.0;
        p.drive = 0.0;
        p.kappa_b = 0.05;
        p.n_b_override = Some(3.0);
        let mut settings = IntegratorSettings::default();
        settings.initial = InitialCondition::Displaced;
        let traj = integrate(&p, 400.0, 1.0, &settings).unwrap();
        let v = traj.samples.last().unwrap().cov;
        let target = CovarianceMatrix::thermal(0.0, 3.0);
        for i in 0..4 {
            for j in 0..4 {
                assert!((v.0[i][j] - target.0[i][j]).abs() < 1e-6, "{i}{j}: {}", v.0[i][j]);
            }
        }
        assert_eq!(traj.samples.len(), 401);
        assert!((traj.samples[200].mean.t - 200.0).abs() < 1e-12);
    }
}
