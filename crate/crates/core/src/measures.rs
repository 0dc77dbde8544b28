//! Gaussian correlation and state-quality measures of a two-mode covariance
//! matrix, and their maxima over one period.
//!
//! Convention: vacuum quadrature variance is 1/2, so the vacuum covariance
//! matrix is `I/2` and physical states satisfy `nu_min >= 1/2`.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{det2, det4, max_abs_asymmetry, sym2_eigenvalues, Mat2, Mat4};

/// Tolerance on the uncertainty principle, `nu_min >= 1/2 - PHYSICALITY_TOL`.
pub const PHYSICALITY_TOL: f64 = 1e-6;
/// Negative radicands down to `-RADICAND_TOL` (relative to the squared
/// scale of the terms) are clamped to zero.
pub const RADICAND_TOL: f64 = 1e-12;
/// Purity tolerance on `det V_b >= 1/4`.
pub const PURITY_TOL: f64 = 1e-9;

/// Symmetric 4x4 quadrature covariance matrix, ordered `(X_a, Y_a, X_b, Y_b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceMatrix(pub Mat4);

impl CovarianceMatrix {
    /// Wraps `m`, averaging it with its transpose.
    pub fn symmetrized(m: Mat4) -> Self {
        let mut s = m;
        for i in 0..4 {
            for j in (i + 1)..4 {
                let v = 0.5 * (m[i][j] + m[j][i]);
                s[i][j] = v;
                s[j][i] = v;
            }
        }
        Self(s)
    }

    pub fn vacuum() -> Self {
        Self::thermal(0.0, 0.0)
    }

    /// Product of thermal states with occupations `n_a`, `n_b`.
    pub fn thermal(n_a: f64, n_b: f64) -> Self {
        let mut m = [[0.0; 4]; 4];
        m[0][0] = n_a + 0.5;
        m[1][1] = n_a + 0.5;
        m[2][2] = n_b + 0.5;
        m[3][3] = n_b + 0.5;
        Self(m)
    }

    /// Two-mode squeezed vacuum with squeezing parameter `r`.
    pub fn two_mode_squeezed(r: f64) -> Self {
        let c = 0.5 * libm::cosh(2.0 * r);
        let s = 0.5 * libm::sinh(2.0 * r);
        Self([[c, 0.0, s, 0.0], [0.0, c, 0.0, -s], [s, 0.0, c, 0.0], [0.0, -s, 0.0, c]])
    }

    pub fn entries(&self) -> &Mat4 {
        &self.0
    }

    fn block(&self, r0: usize, c0: usize) -> Mat2 {
        let m = &self.0;
        [[m[r0][c0], m[r0][c0 + 1]], [m[r0 + 1][c0], m[r0 + 1][c0 + 1]]]
    }

    /// Photon block `V_a`.
    pub fn block_a(&self) -> Mat2 {
        self.block(0, 0)
    }

    /// Phonon block `V_b`.
    pub fn block_b(&self) -> Mat2 {
        self.block(2, 2)
    }

    /// Correlation block `V_ab`.
    pub fn block_ab(&self) -> Mat2 {
        self.block(0, 2)
    }

    pub fn det(&self) -> f64 {
        det4(&self.0)
    }

    pub fn asymmetry(&self) -> f64 {
        max_abs_asymmetry(&self.0)
    }

    /// Symplectic eigenvalues `(nu_minus, nu_plus)`.
    pub fn symplectic_eigenvalues(&self) -> (f64, f64) {
        let delta = det2(&self.block_a()) + det2(&self.block_b()) + 2.0 * det2(&self.block_ab());
        let det = self.det();
        let disc = (delta * delta - 4.0 * det).max(0.0);
        let root = libm::sqrt(disc);
        let minus = libm::sqrt((0.5 * (delta - root)).max(0.0));
        let plus = libm::sqrt((0.5 * (delta + root)).max(0.0));
        (minus, plus)
    }

    pub fn min_symplectic_eigenvalue(&self) -> f64 {
        self.symplectic_eigenvalues().0
    }

    pub fn is_physical(&self) -> bool {
        self.min_symplectic_eigenvalue() >= 0.5 - PHYSICALITY_TOL
    }

    fn require_physical(&self) -> Result<()> {
        let nu = self.min_symplectic_eigenvalue();
        if nu >= 0.5 - PHYSICALITY_TOL {
            Ok(())
        } else {
            Err(Error::Unphysical { min_symplectic: nu })
        }
    }
}

/// Which determinant enters the entanglement and steering formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DetReading {
    /// Full 4x4 determinant; the standard Gaussian formulas.
    #[default]
    Full,
    /// Determinant of the 2x2 correlation block, read literally. Diverges on
    /// uncorrelated states; diagnostics only.
    Block,
}

fn clamp_radicand(value: f64, scale: f64) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -RADICAND_TOL * scale.max(1.0) {
        Ok(0.0)
    } else {
        Err(Error::NumericalDegeneracy { radicand: value })
    }
}

/// Smallest partially transposed symplectic eigenvalue `eta^-`.
pub fn eta_minus(v: &CovarianceMatrix, reading: DetReading) -> Result<f64> {
    let det_ab = det2(&v.block_ab());
    let sigma = det2(&v.block_a()) + det2(&v.block_b()) - 2.0 * det_ab;
    let det = match reading {
        DetReading::Full => v.det(),
        DetReading::Block => det_ab,
    };
    let inner = clamp_radicand(sigma * sigma - 4.0 * det, sigma * sigma)?;
    let outer = clamp_radicand(sigma - libm::sqrt(inner), libm::fabs(sigma))?;
    Ok(core::f64::consts::FRAC_1_SQRT_2 * libm::sqrt(outer))
}

/// Logarithmic negativity `max[0, -ln(2 eta^-)]`.
pub fn log_negativity(v: &CovarianceMatrix) -> Result<f64> {
    log_negativity_with(v, DetReading::Full)
}

pub fn log_negativity_with(v: &CovarianceMatrix, reading: DetReading) -> Result<f64> {
    if reading == DetReading::Full {
        v.require_physical()?;
    }
    let eta = eta_minus(v, reading)?;
    Ok((-libm::log(2.0 * eta)).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SteeringDirection {
    /// Photon mode steers the phonon mode.
    AtoB,
    /// Phonon mode steers the photon mode.
    BtoA,
}

/// Gaussian steering `max[0, 1/2 ln(det V_steerer / (4 det V))]`.
pub fn steering(v: &CovarianceMatrix, direction: SteeringDirection) -> Result<f64> {
    steering_with(v, direction, DetReading::Full)
}

pub fn steering_with(v: &CovarianceMatrix, direction: SteeringDirection, reading: DetReading) -> Result<f64> {
    if reading == DetReading::Full {
        v.require_physical()?;
    }
    let steerer = match direction {
        SteeringDirection::AtoB => det2(&v.block_a()),
        SteeringDirection::BtoA => det2(&v.block_b()),
    };
    let det = match reading {
        DetReading::Full => v.det(),
        DetReading::Block => det2(&v.block_ab()),
    };
    Ok((0.5 * libm::log(steerer / (4.0 * det))).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quadrature {
    X,
    Y,
}

/// Squeezing of one quadrature relative to vacuum, in dB.
pub fn quadrature_squeezing(v_b: &Mat2, which: Quadrature) -> Result<f64> {
    let var = match which {
        Quadrature::X => v_b[0][0],
        Quadrature::Y => v_b[1][1],
    };
    if !(var > 0.0) {
        return Err(Error::Domain("quadrature variance must be positive"));
    }
    Ok(-10.0 * libm::log10(var / 0.5))
}

/// Squeezing along the optimal quadrature, `-10 log10(2 lambda_min)`, in dB.
pub fn optimal_squeezing(v_b: &Mat2) -> Result<f64> {
    let (lmin, _) = sym2_eigenvalues(v_b);
    if !(lmin > 0.0) {
        return Err(Error::Domain("phonon block is not positive definite"));
    }
    Ok(-10.0 * libm::log10(2.0 * lmin))
}

/// Single-mode purity `1 / (2 sqrt(det V_b))`.
pub fn purity(v_b: &Mat2) -> Result<f64> {
    let (lmin, _) = sym2_eigenvalues(v_b);
    let det = det2(v_b);
    if !(lmin > 0.0) {
        return Err(Error::Domain("phonon block is not positive definite"));
    }
    if det < 0.25 - PURITY_TOL {
        return Err(Error::Domain("phonon block violates det V_b >= 1/4"));
    }
    Ok((0.5 / libm::sqrt(det)).min(1.0))
}

/// Effective thermal occupation of the phonon block, `sqrt(det V_b) - 1/2`.
pub fn effective_occupation(v_b: &Mat2) -> f64 {
    libm::sqrt(det2(v_b).max(0.0)) - 0.5
}

/// The five scalar measures at one instant (or their per-period maxima).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRecord {
    pub t: f64,
    pub e_n: f64,
    pub g_ab: f64,
    pub g_ba: f64,
    /// Optimal phonon squeezing in dB.
    pub s_b: f64,
    pub mu_b: f64,
}

impl CorrelationRecord {
    pub fn from_covariance(v: &CovarianceMatrix, t: f64) -> Result<Self> {
        v.require_physical()?;
        let v_b = v.block_b();
        Ok(Self {
            t,
            e_n: log_negativity(v)?,
            g_ab: steering(v, SteeringDirection::AtoB)?,
            g_ba: steering(v, SteeringDirection::BtoA)?,
            s_b: optimal_squeezing(&v_b)?,
            mu_b: purity(&v_b)?,
        })
    }

    pub fn get(&self, m: Measure) -> f64 {
        match m {
            Measure::EN => self.e_n,
            Measure::GAB => self.g_ab,
            Measure::GBA => self.g_ba,
            Measure::SB => self.s_b,
            Measure::MuB => self.mu_b,
        }
    }
}

/// Names of the scalar measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Measure {
    EN,
    GAB,
    GBA,
    SB,
    MuB,
}

impl Measure {
    pub const ALL: [Measure; 5] = [Measure::EN, Measure::GAB, Measure::GBA, Measure::SB, Measure::MuB];

    pub fn name(self) -> &'static str {
        match self {
            Measure::EN => "E_N",
            Measure::GAB => "G_ab",
            Measure::GBA => "G_ba",
            Measure::SB => "S_b",
            Measure::MuB => "mu_b",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name().eq_ignore_ascii_case(s))
    }
}

/// A per-period maximum and where it occurs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakValue {
    pub value: f64,
    pub t: f64,
}

/// Per-measure maxima over one period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicMaxima {
    pub e_n: PeakValue,
    pub g_ab: PeakValue,
    pub g_ba: PeakValue,
    pub s_b: PeakValue,
    pub mu_b: PeakValue,
}

impl PeriodicMaxima {
    pub fn get(&self, m: Measure) -> PeakValue {
        match m {
            Measure::EN => self.e_n,
            Measure::GAB => self.g_ab,
            Measure::GBA => self.g_ba,
            Measure::SB => self.s_b,
            Measure::MuB => self.mu_b,
        }
    }

    /// The maxima as a record (`t` is the period start).
    pub fn as_record(&self, t: f64) -> CorrelationRecord {
        CorrelationRecord {
            t,
            e_n: self.e_n.value,
            g_ab: self.g_ab.value,
            g_ba: self.g_ba.value,
            s_b: self.s_b.value,
            mu_b: self.mu_b.value,
        }
    }
}

/// Index and value of the first largest element.
pub fn discrete_max(values: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best
}

/// Vertex of the parabola through `(-1, left), (0, mid), (1, right)`:
/// returns `(offset, value)`. Falls back to the middle sample when the
/// three points are not strictly concave.
pub fn refine_peak(left: f64, mid: f64, right: f64) -> (f64, f64) {
    let curvature = left - 2.0 * mid + right;
    if !(curvature < 0.0) || mid == 0.0 {
        return (0.0, mid);
    }
    let offset = (0.5 * (left - right) / curvature).clamp(-0.5, 0.5);
    let value = mid - 0.25 * (left - right) * offset;
    (offset, value.max(mid))
}

/// Maxima over one period of uniformly spaced records.
///
/// The records must be `t_k = t_0 + k tau / n` for `k = 0..n` (the endpoint
/// `t_0 + tau` excluded), `n >= 32`; the sequence is treated as periodic when
/// refining around the discrete arg-max.
pub fn periodic_maxima(records: &[CorrelationRecord], period: f64) -> Result<PeriodicMaxima> {
    const MIN_SAMPLES: usize = 32;
    let n = records.len();
    if n < MIN_SAMPLES {
        return Err(Error::Coverage { samples: n, needed: MIN_SAMPLES });
    }
    let dt = period / n as f64;
    let span = records[n - 1].t - records[0].t;
    if !(libm::fabs(span + dt - period) <= 1e-6 * period.max(1.0)) {
        return Err(Error::Coverage { samples: n, needed: MIN_SAMPLES });
    }
    let peak = |m: Measure| -> PeakValue {
        let values: Vec<f64> = records.iter().map(|r| r.get(m)).collect();
        let (k, v) = discrete_max(&values).unwrap_or((0, f64::NAN));
        let left = values[(k + n - 1) % n];
        let right = values[(k + 1) % n];
        let (offset, value) = refine_peak(left, v, right);
        PeakValue { value, t: records[k].t + offset * dt }
    };
    Ok(PeriodicMaxima {
        e_n: peak(Measure::EN),
        g_ab: peak(Measure::GAB),
        g_ba: peak(Measure::GBA),
        s_b: peak(Measure::SB),
        mu_b: peak(Measure::MuB),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn vacuum_measures() {
        let v = CovarianceMatrix::vacuum();
        let rec = CorrelationRecord::from_covariance(&v, 0.0).unwrap();
        assert_eq!(rec.e_n, 0.0);
        assert_eq!(rec.g_ab, 0.0);
        assert_eq!(rec.g_ba, 0.0);
        assert_abs_diff_eq!(rec.s_b, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rec.mu_b, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn two_mode_squeezed_vacuum() {
        for r in [0.1, 0.5, 1.0] {
            let v = CovarianceMatrix::two_mode_squeezed(r);
            assert_abs_diff_eq!(log_negativity(&v).unwrap(), 2.0 * r, epsilon = 1e-9);
            let expected = libm::log(libm::cosh(2.0 * r));
            assert_abs_diff_eq!(steering(&v, SteeringDirection::AtoB).unwrap(), expected, epsilon = 1e-9);
            assert_abs_diff_eq!(steering(&v, SteeringDirection::BtoA).unwrap(), expected, epsilon = 1e-9);
        }
    }

    #[test]
    fn product_thermal_states_are_uncorrelated() {
        let v = CovarianceMatrix::thermal(0.3, 12.0);
        assert_eq!(log_negativity(&v).unwrap(), 0.0);
        assert_eq!(steering(&v, SteeringDirection::AtoB).unwrap(), 0.0);
        assert_eq!(steering(&v, SteeringDirection::BtoA).unwrap(), 0.0);
    }

    #[test]
    fn literal_block_reading_diverges_on_vacuum() {
        let v = CovarianceMatrix::vacuum();
        let g = steering_with(&v, SteeringDirection::AtoB, DetReading::Block).unwrap();
        assert!(g.is_infinite());
    }

    #[test]
    fn unphysical_matrix_is_rejected() {
        let v = CovarianceMatrix::thermal(-0.2, 0.0);
        assert!(matches!(log_negativity(&v), Err(Error::Unphysical { .. })));
        assert!(matches!(steering(&v, SteeringDirection::BtoA), Err(Error::Unphysical { .. })));
    }

    #[test]
    fn squeezing_examples() {
        let vac = [[0.5, 0.0], [0.0, 0.5]];
        assert_abs_diff_eq!(quadrature_squeezing(&vac, Quadrature::X).unwrap(), 0.0, epsilon = 1e-15);
        let r = 1.0;
        let sq = [[0.5 * libm::exp(-2.0 * r), 0.0], [0.0, 0.5 * libm::exp(2.0 * r)]];
        assert_abs_diff_eq!(quadrature_squeezing(&sq, Quadrature::X).unwrap(), 8.685_889_638, epsilon = 1e-8);
        let n = 3.0;
        let th = [[n + 0.5, 0.0], [0.0, n + 0.5]];
        assert_abs_diff_eq!(
            quadrature_squeezing(&th, Quadrature::Y).unwrap(),
            -10.0 * libm::log10(2.0 * n + 1.0),
            epsilon = 1e-12
        );
        assert!(quadrature_squeezing(&[[0.0, 0.0], [0.0, 1.0]], Quadrature::X).is_err());
    }

    #[test]
    fn optimal_squeezing_examples() {
        assert_abs_diff_eq!(optimal_squeezing(&[[0.5, 0.0], [0.0, 0.5]]).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            optimal_squeezing(&[[0.3, 0.0], [0.0, 0.9]]).unwrap(),
            2.218_487_496,
            epsilon = 1e-8
        );
        let (r, phi) = (0.5_f64, core::f64::consts::PI / 7.0);
        let (c, s) = (libm::cos(phi), libm::sin(phi));
        let (l1, l2) = (0.5 * libm::exp(-2.0 * r), 0.5 * libm::exp(2.0 * r));
        let m = [[c * c * l1 + s * s * l2, c * s * (l1 - l2)], [c * s * (l1 - l2), s * s * l1 + c * c * l2]];
        assert_abs_diff_eq!(optimal_squeezing(&m).unwrap(), 20.0 * r / core::f64::consts::LN_10, epsilon = 1e-10);
        assert!(optimal_squeezing(&[[1.0, 2.0], [2.0, 1.0]]).is_err());
    }

    #[test]
    fn purity_examples() {
        assert_abs_diff_eq!(purity(&[[0.5, 0.0], [0.0, 0.5]]).unwrap(), 1.0, epsilon = 1e-15);
        let n = 2.5;
        assert_abs_diff_eq!(purity(&[[n + 0.5, 0.0], [0.0, n + 0.5]]).unwrap(), 1.0 / (2.0 * n + 1.0), epsilon = 1e-14);
        let r = 0.8;
        let sq = [[0.5 * libm::exp(-2.0 * r), 0.0], [0.0, 0.5 * libm::exp(2.0 * r)]];
        assert_abs_diff_eq!(purity(&sq).unwrap(), 1.0, epsilon = 1e-12);
        assert!(purity(&[[0.4, 0.0], [0.0, 0.4]]).is_err());
    }

    #[test]
    fn discrete_and_refined_maxima() {
        assert_eq!(discrete_max(&[0.0, 0.3, 0.1]), Some((1, 0.3)));
        // Exact on parabolas.
        let f = |x: f64| 2.0 - (x - 0.2) * (x - 0.2);
        let (off, val) = refine_peak(f(-1.0), f(0.0), f(1.0));
        assert_abs_diff_eq!(off, 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(val, 2.0, epsilon = 1e-12);
        assert_eq!(refine_peak(0.0, 0.0, 0.0), (0.0, 0.0));
    }

    #[test]
    fn constant_records_have_constant_maxima() {
        let tau = 5.0;
        let recs: Vec<_> = (0..40)
            .map(|k| CorrelationRecord { t: k as f64 * tau / 40.0, e_n: 0.2, g_ab: 0.0, g_ba: 0.1, s_b: 1.5, mu_b: 0.7 })
            .collect();
        let m = periodic_maxima(&recs, tau).unwrap();
        assert_eq!(m.e_n.value, 0.2);
        assert_eq!(m.g_ba.value, 0.1);
        assert_eq!(m.s_b.value, 1.5);
        assert_eq!(m.mu_b.value, 0.7);
        assert!(periodic_maxima(&recs[..20], tau).is_err());
        assert!(periodic_maxima(&recs, 2.0 * tau).is_err());
    }
}
