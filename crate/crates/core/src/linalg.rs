//! Fixed-size dense linear algebra for 2x2 and 4x4 real matrices.

use num_complex::Complex64;

pub type Mat2 = [[f64; 2]; 2];
pub type Mat4 = [[f64; 4]; 4];

pub const ZERO4: Mat4 = [[0.0; 4]; 4];

pub fn identity4() -> Mat4 {
    let mut m = ZERO4;
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn det2(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Determinant by cofactor expansion over 2x2 minors of the first two rows.
pub fn det4(m: &Mat4) -> f64 {
    let s0 = m[0][0] * m[1][1] - m[1][0] * m[0][1];
    let s1 = m[0][0] * m[1][2] - m[1][0] * m[0][2];
    let s2 = m[0][0] * m[1][3] - m[1][0] * m[0][3];
    let s3 = m[0][1] * m[1][2] - m[1][1] * m[0][2];
    let s4 = m[0][1] * m[1][3] - m[1][1] * m[0][3];
    let s5 = m[0][2] * m[1][3] - m[1][2] * m[0][3];

    let c5 = m[2][2] * m[3][3] - m[3][2] * m[2][3];
    let c4 = m[2][1] * m[3][3] - m[3][1] * m[2][3];
    let c3 = m[2][1] * m[3][2] - m[3][1] * m[2][2];
    let c2 = m[2][0] * m[3][3] - m[3][0] * m[2][3];
    let c1 = m[2][0] * m[3][2] - m[3][0] * m[2][2];
    let c0 = m[2][0] * m[3][1] - m[3][0] * m[2][1];

    s0 * c5 - s1 * c4 + s2 * c3 + s3 * c2 - s4 * c1 + s5 * c0
}

pub fn transpose4(m: &Mat4) -> Mat4 {
    let mut t = ZERO4;
    for i in 0..4 {
        for j in 0..4 {
            t[i][j] = m[j][i];
        }
    }
    t
}

pub fn mul4(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut c = ZERO4;
    for i in 0..4 {
        for k in 0..4 {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..4 {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

pub fn trace4(m: &Mat4) -> f64 {
    m[0][0] + m[1][1] + m[2][2] + m[3][3]
}

pub fn max_abs_asymmetry(m: &Mat4) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            worst = worst.max(libm::fabs(m[i][j] - m[j][i]));
        }
    }
    worst
}

/// Eigenvalues of a real symmetric 2x2 matrix, ascending.
pub fn sym2_eigenvalues(m: &Mat2) -> (f64, f64) {
    let mean = 0.5 * (m[0][0] + m[1][1]);
    let half_diff = 0.5 * (m[0][0] - m[1][1]);
    let off = 0.5 * (m[0][1] + m[1][0]);
    let r = libm::hypot(half_diff, off);
    (mean - r, mean + r)
}

/// Coefficients `[c0, c1, c2, c3]` of the monic characteristic polynomial
/// `l^4 + c3 l^3 + c2 l^2 + c1 l + c0` (Faddeev-LeVerrier).
pub fn char_poly4(a: &Mat4) -> [f64; 4] {
    let mut m = *a;
    let c3 = -trace4(&m);
    let mut shifted = m;
    for (i, row) in shifted.iter_mut().enumerate() {
        row[i] += c3;
    }
    m = mul4(a, &shifted);
    let c2 = -0.5 * trace4(&m);
    shifted = m;
    for (i, row) in shifted.iter_mut().enumerate() {
        row[i] += c2;
    }
    m = mul4(a, &shifted);
    let c1 = -trace4(&m) / 3.0;
    let c0 = det4(a);
    [c0, c1, c2, c3]
}

fn poly_eval(c: &[f64; 4], z: Complex64) -> (Complex64, Complex64) {
    // Horner for p and p'.
    let mut p = Complex64::new(1.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for k in (0..4).rev() {
        dp = dp * z + p;
        p = p * z + c[k];
    }
    (p, dp)
}

/// All four eigenvalues of a real 4x4 matrix, sorted by descending real part
/// (ties by imaginary part).
pub fn eigenvalues4(a: &Mat4) -> [Complex64; 4] {
    let c = char_poly4(a);
    let radius = libm::pow(libm::fabs(c[0]), 0.25).max(1e-3);
    let mut z = [Complex64::new(0.0, 0.0); 4];
    for (k, zk) in z.iter_mut().enumerate() {
        let ang = 0.4 + k as f64 * core::f64::consts::FRAC_PI_2;
        *zk = Complex64::from_polar(radius, ang) - Complex64::new(c[3] / 4.0, 0.0);
    }
    // Aberth-Ehrlich iteration.
    for _ in 0..500 {
        let mut max_step: f64 = 0.0;
        for i in 0..4 {
            let (p, dp) = poly_eval(&c, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let mut sum = Complex64::new(0.0, 0.0);
            for j in 0..4 {
                if i != j {
                    let d = z[i] - z[j];
                    if d.norm() > 0.0 {
                        sum += d.inv();
                    }
                }
            }
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * sum);
            if step.re.is_finite() && step.im.is_finite() {
                z[i] -= step;
                max_step = max_step.max(step.norm() / (1.0 + z[i].norm()));
            }
        }
        if max_step < 1e-15 {
            break;
        }
    }
    // Real matrices have conjugate-symmetric spectra; snap tiny imaginary parts.
    for zi in z.iter_mut() {
        if libm::fabs(zi.im) < 1e-13 * (1.0 + libm::fabs(zi.re)) {
            zi.im = 0.0;
        }
    }
    sort_desc(&mut z);
    z
}

fn sort_desc(z: &mut [Complex64; 4]) {
    for i in 1..4 {
        let mut j = i;
        while j > 0 && (z[j].re > z[j - 1].re || (z[j].re == z[j - 1].re && z[j].im > z[j - 1].im)) {
            z.swap(j, j - 1);
            j -= 1;
        }
    }
}

/// A right eigenvector of `a` for eigenvalue `lambda`, normalised to unit
/// 2-norm, from the null space of `a - lambda I` (Gaussian elimination with
/// full pivoting).
pub fn eigenvector4(a: &Mat4, lambda: Complex64) -> [Complex64; 4] {
    let mut m = [[Complex64::new(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = Complex64::new(a[i][j], 0.0);
        }
        m[i][i] -= lambda;
    }
    let mut col_perm = [0usize, 1, 2, 3];
    // Reduce the top-left 3x3 with full pivoting; the last pivot is the
    // (numerically) zero one.
    for k in 0..3 {
        let (mut pr, mut pc, mut best) = (k, k, -1.0);
        for i in k..4 {
            for j in k..4 {
                let v = m[i][j].norm();
                if v > best {
                    best = v;
                    pr = i;
                    pc = j;
                }
            }
        }
        m.swap(k, pr);
        if pc != k {
            for row in m.iter_mut() {
                row.swap(k, pc);
            }
            col_perm.swap(k, pc);
        }
        if best == 0.0 {
            continue;
        }
        for i in (k + 1)..4 {
            let f = m[i][k] / m[k][k];
            for j in k..4 {
                let mkj = m[k][j];
                m[i][j] -= f * mkj;
            }
        }
    }
    // Back-substitute with the free variable set to one.
    let mut x = [Complex64::new(0.0, 0.0); 4];
    x[3] = Complex64::new(1.0, 0.0);
    for k in (0..3).rev() {
        let mut s = Complex64::new(0.0, 0.0);
        for j in (k + 1)..4 {
            s += m[k][j] * x[j];
        }
        x[k] = if m[k][k].norm() > 0.0 { -s / m[k][k] } else { Complex64::new(0.0, 0.0) };
    }
    let mut v = [Complex64::new(0.0, 0.0); 4];
    for (k, &c) in col_perm.iter().enumerate() {
        v[c] = x[k];
    }
    let norm = libm::sqrt(v.iter().map(|c| c.norm_sqr()).sum::<f64>());
    if norm > 0.0 {
        for c in v.iter_mut() {
            *c /= norm;
        }
    }
    v
}
