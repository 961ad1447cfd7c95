//! External Mie coefficients of a concentric multilayer sphere.
//!
//! The field in each layer is carried outward as the logarithmic derivative of
//! its radial function at the layer's outer boundary, one value per multipole
//! order and polarization. Crossing a shell uses the logarithmic derivatives of
//! `psi` and `xi` at both shell radii together with the quotient of the
//! `psi/xi` ratios, so no Bessel function value is ever formed and the
//! recursion is free of overflow for large or lossy arguments.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::bessel::{xi_normalized, XiNormalized};
use super::{LayerStack, MaterialLibrary, ScatterError, SpectralGrid, Spectrum};

/// Series truncation order `ceil(x + 4 x^{1/3} + 2)`, never below 3.
pub fn max_multipole_order(size_parameter: f64) -> Result<usize, ScatterError> {
    if !(size_parameter > 0.0) || !size_parameter.is_finite() {
        return Err(ScatterError::Argument(format!(
            "size parameter must be positive and finite, got {size_parameter}"
        )));
    }
    let n = (size_parameter + 4.0 * size_parameter.cbrt() + 2.0).ceil() as usize;
    Ok(n.max(3))
}

/// `a_n`, `b_n` for `n = 1 ..= order` (index 0 holds order 1).
#[derive(Debug, Clone, PartialEq)]
pub struct MieCoefficients {
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
}

impl MieCoefficients {
    pub fn order(&self) -> usize {
        self.a.len()
    }
}

fn wavenumber(wavelength: f64, host_index: f64) -> f64 {
    2.0 * PI * host_index / wavelength
}

fn check_inputs(wavelength: f64, host_index: f64) -> Result<(), ScatterError> {
    if !(wavelength > 0.0 && wavelength.is_finite()) {
        return Err(ScatterError::Argument(format!("invalid wavelength {wavelength}")));
    }
    if !(host_index > 0.0 && host_index.is_finite()) {
        return Err(ScatterError::Argument(format!("invalid host index {host_index}")));
    }
    Ok(())
}

/// Relative refractive index of every layer at `wavelength`.
fn relative_indices(
    stack: &LayerStack,
    materials: &MaterialLibrary,
    wavelength: f64,
    host_index: f64,
) -> Result<Vec<Complex64>, ScatterError> {
    (0..stack.num_layers())
        .map(|l| materials.refractive_index(stack.material(l), wavelength).map(|n| n / host_index))
        .collect()
}

pub fn mie_coefficients(
    stack: &LayerStack,
    materials: &MaterialLibrary,
    wavelength: f64,
    host_index: f64,
) -> Result<MieCoefficients, ScatterError> {
    check_inputs(wavelength, host_index)?;
    let x = wavenumber(wavelength, host_index) * stack.outer_radius();
    let order = max_multipole_order(x)?;
    mie_coefficients_to_order(stack, materials, wavelength, host_index, order)
}

/// Same as [`mie_coefficients`] with an explicit truncation order.
pub fn mie_coefficients_to_order(
    stack: &LayerStack,
    materials: &MaterialLibrary,
    wavelength: f64,
    host_index: f64,
    order: usize,
) -> Result<MieCoefficients, ScatterError> {
    check_inputs(wavelength, host_index)?;
    if order == 0 {
        return Err(ScatterError::Argument("truncation order must be at least 1".into()));
    }
    let m = relative_indices(stack, materials, wavelength, host_index)?;
    let k = wavenumber(wavelength, host_index);
    let x: Vec<f64> = stack.radii().iter().map(|r| k * r).collect();
    let n_max = order;

    // Field in the core: the regular solution, as a (value, derivative) pair up to scale.
    let core = xi_normalized(n_max, m[0] * x[0]);
    let mut te: Vec<(Complex64, Complex64)> = core.psi.iter().copied().zip(core.dpsi.iter().copied()).collect();
    let mut tm = te.clone();

    for l in 1..m.len() {
        let inner = xi_normalized(n_max, m[l] * x[l - 1]);
        let outer = xi_normalized(n_max, m[l] * x[l]);
        // exp(2 Im z) of the inner argument relative to the outer one
        let damping = (inner.log_scale - outer.log_scale).exp();
        let ratio = m[l] / m[l - 1];
        for n in 0..=n_max {
            // TM: u and u'/m continuous. TE: u/m and u' continuous.
            let (u, du) = tm[n];
            tm[n] = cross_shell(&inner, &outer, damping, n, u, du * ratio);
            let (u, du) = te[n];
            te[n] = cross_shell(&inner, &outer, damping, n, u * ratio, du);
        }
        check_finite(&tm, l)?;
        check_finite(&te, l)?;
    }

    let outer = m.len() - 1;
    let host = xi_normalized(n_max, Complex64::new(x[outer], 0.0));
    let m_l = m[outer];
    let mut a = Vec::with_capacity(n_max);
    let mut b = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let (u, du) = tm[n];
        let an = (host.dpsi[n] * (u * m_l) - du * host.psi[n]) / (host.dxi[n] * (u * m_l) - du);
        let (u, du) = te[n];
        let bn = (host.dpsi[n] * u - (du * m_l) * host.psi[n]) / (host.dxi[n] * u - du * m_l);
        if !an.is_finite() || !bn.is_finite() {
            return Err(ScatterError::Numerical { layer: outer, order: n });
        }
        a.push(an);
        b.push(bn);
    }
    Ok(MieCoefficients { a, b })
}

/// Carries the field `(u, u')` given at a shell's inner radius out to its outer radius.
///
/// Inside the shell `u = psi + t xi`; `t` is fixed by the inner pair and the result is
/// returned divided by `xi` at the outer radius.
fn cross_shell(
    inner: &XiNormalized,
    outer: &XiNormalized,
    damping: f64,
    n: usize,
    u: Complex64,
    du: Complex64,
) -> (Complex64, Complex64) {
    let t = -(inner.dpsi[n] * u - du * inner.psi[n]) / (inner.dxi[n] * u - du) * damping;
    (outer.psi[n] + t, outer.dpsi[n] + t * outer.dxi[n])
}

fn check_finite(field: &[(Complex64, Complex64)], layer: usize) -> Result<(), ScatterError> {
    match field.iter().skip(1).position(|(u, du)| !u.is_finite() || !du.is_finite()) {
        Some(i) => Err(ScatterError::Numerical { layer, order: i + 1 }),
        None => Ok(()),
    }
}

/// `(2 pi / k^2) sum (2n + 1)(|a_n|^2 + |b_n|^2)`, in the squared length unit of `wavelength`.
pub fn cross_section_from_coefficients(coeffs: &MieCoefficients, wavelength: f64, host_index: f64) -> f64 {
    let k = wavenumber(wavelength, host_index);
    let sum: f64 = coeffs
        .a
        .iter()
        .zip(&coeffs.b)
        .enumerate()
        .map(|(i, (a, b))| (2 * i + 3) as f64 * (a.norm_sqr() + b.norm_sqr()))
        .sum();
    2.0 * PI / (k * k) * sum
}

/// Scattering cross-section in nm².
pub fn scattering_cross_section(
    stack: &LayerStack,
    materials: &MaterialLibrary,
    wavelength: f64,
    host_index: f64,
) -> Result<f64, ScatterError> {
    let coeffs = mie_coefficients(stack, materials, wavelength, host_index)?;
    Ok(cross_section_from_coefficients(&coeffs, wavelength, host_index))
}

/// Scattering cross-section on every grid wavelength, evaluated in grid order.
pub fn spectrum(
    stack: &LayerStack,
    materials: &MaterialLibrary,
    grid: &SpectralGrid,
    host_index: f64,
) -> Result<Spectrum, ScatterError> {
    let values = (0..grid.len())
        .map(|i| scattering_cross_section(stack, materials, grid.wavelength(i), host_index))
        .collect::<Result<Vec<_>, _>>()?;
    Spectrum::new(*grid, values)
}

/// Spectra of many stacks, fanned out over the rayon pool. Output order follows input order.
pub fn spectra_parallel(
    stacks: &[LayerStack],
    materials: &MaterialLibrary,
    grid: &SpectralGrid,
    host_index: f64,
) -> Result<Vec<Spectrum>, (usize, ScatterError)> {
    stacks
        .par_iter()
        .enumerate()
        .map(|(i, s)| spectrum(s, materials, grid, host_index).map_err(|e| (i, e)))
        .collect()
}
