//! Spherical and Riccati–Bessel functions of complex argument.
//!
//! Conventions follow the usual light-scattering texts:
//! `psi_n(z) = z j_n(z)`, `chi_n(z) = -z y_n(z)`, `xi_n(z) = psi_n(z) - i chi_n(z) = z h_n^(1)(z)`.
//!
//! The layered-sphere solver only needs logarithmic derivatives and ratios of
//! these functions, which never overflow. The explicit function values are
//! exposed for verification work (boundary-matching solves, closed-form checks).

use num_complex::Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Extra orders added on top of the requested maximum before starting a
/// downward recurrence.
pub const DOWNWARD_MARGIN: usize = 15;

/// Starting order for downward recurrences evaluated at `z`.
pub fn downward_start(n_max: usize, z: Complex64) -> usize {
    let r = z.norm();
    n_max.max((r + 8.0 * r.cbrt()).ceil() as usize) + DOWNWARD_MARGIN
}

/// `j_0 ..= j_{n_max}` by Miller's downward recurrence, normalized against the
/// closed forms of `j_0` and `j_1`.
pub fn spherical_jn(n_max: usize, z: Complex64) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n_max + 1];
    if z.norm() == 0.0 {
        out[0] = Complex64::new(1.0, 0.0);
        return out;
    }
    let start = downward_start(n_max, z);
    let mut next = Complex64::new(0.0, 0.0);
    let mut cur = Complex64::new(1e-30, 0.0);
    let mut tmp = vec![Complex64::new(0.0, 0.0); start + 1];
    tmp[start] = cur;
    for n in (1..=start).rev() {
        let prev = Complex64::new((2 * n + 1) as f64, 0.0) / z * cur - next;
        next = cur;
        cur = prev;
        tmp[n - 1] = cur;
        if cur.norm() > 1e250 {
            let s = 1.0 / cur.norm();
            for v in tmp[n - 1..].iter_mut() {
                *v *= s;
            }
            next *= s;
            cur *= s;
        }
    }
    let j0 = z.sin() / z;
    let j1 = z.sin() / (z * z) - z.cos() / z;
    // Normalize against the larger closed form; the recurrence is only accurate
    // relative to the envelope.
    let scale = if j0.norm() >= j1.norm() {
        j0 / tmp[0]
    } else {
        j1 / tmp[1]
    };
    for (o, t) in out.iter_mut().zip(tmp.iter()) {
        *o = t * scale;
    }
    out
}

/// `y_0 ..= y_{n_max}` by upward recurrence (stable for the irregular solution).
pub fn spherical_yn(n_max: usize, z: Complex64) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n_max + 1];
    out[0] = -z.cos() / z;
    if n_max == 0 {
        return out;
    }
    out[1] = -z.cos() / (z * z) - z.sin() / z;
    for n in 1..n_max {
        out[n + 1] = Complex64::new((2 * n + 1) as f64, 0.0) / z * out[n] - out[n - 1];
    }
    out
}

/// Riccati–Bessel function values and first derivatives.
#[derive(Debug, Clone)]
pub struct RiccatiValues {
    pub psi: Vec<Complex64>,
    pub dpsi: Vec<Complex64>,
    pub chi: Vec<Complex64>,
    pub dchi: Vec<Complex64>,
}

impl RiccatiValues {
    pub fn xi(&self, n: usize) -> Complex64 {
        self.psi[n] - I * self.chi[n]
    }

    pub fn dxi(&self, n: usize) -> Complex64 {
        self.dpsi[n] - I * self.dchi[n]
    }
}

/// `psi_n`, `chi_n` and their derivatives for `n = 0 ..= n_max`.
pub fn riccati(n_max: usize, z: Complex64) -> RiccatiValues {
    let j = spherical_jn(n_max, z);
    let y = spherical_yn(n_max, z);
    let psi: Vec<Complex64> = j.iter().map(|v| v * z).collect();
    let chi: Vec<Complex64> = y.iter().map(|v| -v * z).collect();
    let mut dpsi = vec![Complex64::new(0.0, 0.0); n_max + 1];
    let mut dchi = vec![Complex64::new(0.0, 0.0); n_max + 1];
    dpsi[0] = z.cos();
    dchi[0] = -z.sin();
    for n in 1..=n_max {
        let nz = Complex64::new(n as f64, 0.0) / z;
        dpsi[n] = psi[n - 1] - nz * psi[n];
        dchi[n] = chi[n - 1] - nz * chi[n];
    }
    RiccatiValues {
        psi,
        dpsi,
        chi,
        dchi,
    }
}

/// Riccati–Bessel functions normalized against `xi_n` at one argument:
/// `psi_n / xi_n`, `psi_n' / xi_n` and `xi_n' / xi_n`.
///
/// These stay bounded for real arguments and are only scaled by the single
/// factor `exp(2 Im z)` for lossy ones, which is returned separately instead of
/// being folded in. Zeros of `psi_n` need no special treatment.
#[derive(Debug, Clone)]
pub struct XiNormalized {
    /// `(psi_n / xi_n) exp(-2 Im z)`
    pub psi: Vec<Complex64>,
    /// `(psi_n' / xi_n) exp(-2 Im z)`
    pub dpsi: Vec<Complex64>,
    /// `xi_n' / xi_n`
    pub dxi: Vec<Complex64>,
    /// `2 Im z`
    pub log_scale: f64,
}

/// Miller downward recurrence for `psi_n(z) exp(-Im z)`.
fn psi_scaled(n_max: usize, z: Complex64) -> (Vec<Complex64>, Vec<Complex64>) {
    // sin z and cos z times exp(-Im z), without forming exp(Im z)
    let up = Complex64::new(-2.0 * z.im, z.re).exp();
    let down = Complex64::new(0.0, -z.re).exp();
    let sin = (up - down) / (2.0 * I);
    let cos = (up + down) * 0.5;
    let psi0 = sin;
    let psi1 = sin / z - cos;
    let start = downward_start(n_max, z);
    let mut tmp = vec![Complex64::new(0.0, 0.0); start + 1];
    let mut next = Complex64::new(0.0, 0.0);
    let mut cur = Complex64::new(1e-30, 0.0);
    tmp[start] = cur;
    for n in (1..=start).rev() {
        let prev = Complex64::new((2 * n + 1) as f64, 0.0) / z * cur - next;
        next = cur;
        cur = prev;
        tmp[n - 1] = cur;
        if cur.norm() > 1e250 {
            let s = 1.0 / cur.norm();
            for v in tmp[n - 1..].iter_mut() {
                *v *= s;
            }
            next *= s;
            cur *= s;
        }
    }
    let scale = if psi0.norm() >= psi1.norm() {
        psi0 / tmp[0]
    } else {
        psi1 / tmp[1]
    };
    let psi: Vec<Complex64> = tmp[..=n_max].iter().map(|t| t * scale).collect();
    let mut dpsi = vec![cos; n_max + 1];
    for n in 1..=n_max {
        dpsi[n] = psi[n - 1] - Complex64::new(n as f64, 0.0) / z * psi[n];
    }
    (psi, dpsi)
}

pub fn xi_normalized(n_max: usize, z: Complex64) -> XiNormalized {
    let (psi, dpsi) = psi_scaled(n_max, z);
    // xi_n(z) exp(Im z), upward.
    let phase = Complex64::new(0.0, z.re).exp();
    let mut xi = vec![Complex64::new(0.0, 0.0); n_max + 1];
    xi[0] = -I * phase;
    if n_max >= 1 {
        xi[1] = -phase * (I / z + 1.0);
    }
    for n in 1..n_max {
        xi[n + 1] = Complex64::new((2 * n + 1) as f64, 0.0) / z * xi[n] - xi[n - 1];
    }
    let mut out = XiNormalized {
        psi: Vec::with_capacity(n_max + 1),
        dpsi: Vec::with_capacity(n_max + 1),
        dxi: Vec::with_capacity(n_max + 1),
        log_scale: 2.0 * z.im,
    };
    for n in 0..=n_max {
        let dxi = if n == 0 {
            phase
        } else {
            xi[n - 1] - Complex64::new(n as f64, 0.0) / z * xi[n]
        };
        out.psi.push(psi[n] / xi[n]);
        out.dpsi.push(dpsi[n] / xi[n]);
        out.dxi.push(dxi / xi[n]);
    }
    out
}
