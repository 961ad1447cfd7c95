//! Brute-force layered-sphere solver: for every multipole order, write the
//! tangential-field matching conditions at all interfaces as one dense complex
//! linear system and solve it by Gaussian elimination. Shares nothing with the
//! library's recursion except the Bessel function values themselves.

use std::f64::consts::PI;

use multishell::scatter::bessel::{riccati, RiccatiValues};
use multishell::scatter::{LayerStack, MaterialLibrary};
use num_complex::Complex64;

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    Electric,
    Magnetic,
}

fn solve(mut a: Vec<Vec<Complex64>>, mut rhs: Vec<Complex64>) -> Vec<Complex64> {
    let n = rhs.len();
    // Equilibrate rows then columns.
    for r in 0..n {
        let s = a[r].iter().map(|v| v.norm()).fold(0.0, f64::max);
        if s > 0.0 {
            for v in a[r].iter_mut() {
                *v /= s;
            }
            rhs[r] /= s;
        }
    }
    let mut col_scale = vec![1.0; n];
    for c in 0..n {
        let s = (0..n).map(|r| a[r][c].norm()).fold(0.0, f64::max);
        if s > 0.0 {
            col_scale[c] = s;
            for row in a.iter_mut() {
                row[c] /= s;
            }
        }
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].norm().partial_cmp(&a[j][col].norm()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        rhs.swap(col, pivot);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f.norm() == 0.0 {
                continue;
            }
            for c in col..n {
                let v = a[col][c];
                a[r][c] -= f * v;
            }
            let v = rhs[col];
            rhs[r] -= f * v;
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for r in (0..n).rev() {
        let mut acc = rhs[r];
        for c in r + 1..n {
            acc -= a[r][c] * x[c];
        }
        x[r] = acc / a[r][r];
    }
    for (v, s) in x.iter_mut().zip(col_scale) {
        *v /= s;
    }
    x
}

fn coefficient(
    n: usize,
    mode: Mode,
    m: &[Complex64],
    inner: &[RiccatiValues],
    outer: &[RiccatiValues],
    host: &RiccatiValues,
) -> Complex64 {
    let layers = m.len();
    let dim = 2 * layers;
    let mut a = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
    let mut rhs = vec![Complex64::new(0.0, 0.0); dim];
    // Column of (psi, chi) amplitudes of layer l; the core has psi only.
    let col_psi = |l: usize| if l == 0 { 0 } else { 2 * l - 1 };
    let col_chi = |l: usize| 2 * l;
    let s_col = dim - 1;
    // value and derivative weights (TM: u, u'/m; TE: u/m, u')
    let weights = |mi: Complex64| match mode {
        Mode::Electric => (Complex64::new(1.0, 0.0), 1.0 / mi),
        Mode::Magnetic => (1.0 / mi, Complex64::new(1.0, 0.0)),
    };
    for j in 0..layers {
        let r0 = 2 * j;
        // inner side: layer j at its outer radius
        let (wv, wd) = weights(m[j]);
        let f = &outer[j];
        a[r0][col_psi(j)] += wv * f.psi[n];
        a[r0 + 1][col_psi(j)] += wd * f.dpsi[n];
        if j > 0 {
            a[r0][col_chi(j)] += wv * f.chi[n];
            a[r0 + 1][col_chi(j)] += wd * f.dchi[n];
        }
        // outer side: layer j+1 at its inner radius, or the host
        if j + 1 < layers {
            let (wv, wd) = weights(m[j + 1]);
            let g = &inner[j + 1];
            a[r0][col_psi(j + 1)] -= wv * g.psi[n];
            a[r0 + 1][col_psi(j + 1)] -= wd * g.dpsi[n];
            a[r0][col_chi(j + 1)] -= wv * g.chi[n];
            a[r0 + 1][col_chi(j + 1)] -= wd * g.dchi[n];
        } else {
            // host field psi - s xi with unit index
            a[r0][s_col] += host.xi(n);
            a[r0 + 1][s_col] += host.dxi(n);
            rhs[r0] = host.psi[n];
            rhs[r0 + 1] = host.dpsi[n];
        }
    }
    solve(a, rhs)[s_col]
}

/// `(a_n, b_n)` for `n = 1 ..= order` by direct boundary matching.
pub fn coefficients(
    stack: &LayerStack,
    materials: &MaterialLibrary,
    wavelength: f64,
    host_index: f64,
    order: usize,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let k = 2.0 * PI * host_index / wavelength;
    let mut radius = 0.0;
    let mut x = Vec::new();
    let mut m = Vec::new();
    for (l, t) in stack.thicknesses().iter().enumerate() {
        radius += t;
        x.push(k * radius);
        m.push(materials.refractive_index(stack.material(l), wavelength).unwrap() / host_index);
    }
    let inner: Vec<RiccatiValues> = (0..m.len())
        .map(|l| {
            let r = if l == 0 { x[0] } else { x[l - 1] };
            riccati(order, m[l] * r)
        })
        .collect();
    let outer: Vec<RiccatiValues> = (0..m.len()).map(|l| riccati(order, m[l] * x[l])).collect();
    let host = riccati(order, Complex64::new(x[x.len() - 1], 0.0));
    let mut an = Vec::new();
    let mut bn = Vec::new();
    for n in 1..=order {
        an.push(coefficient(n, Mode::Electric, &m, &inner, &outer, &host));
        bn.push(coefficient(n, Mode::Magnetic, &m, &inner, &outer, &host));
    }
    (an, bn)
}

pub fn cross_section(
    stack: &LayerStack,
    materials: &MaterialLibrary,
    wavelength: f64,
    host_index: f64,
    order: usize,
) -> f64 {
    let k = 2.0 * PI * host_index / wavelength;
    let (a, b) = coefficients(stack, materials, wavelength, host_index, order);
    let sum: f64 = (0..order)
        .map(|i| (2 * i + 3) as f64 * (a[i].norm_sqr() + b[i].norm_sqr()))
        .sum();
    2.0 * PI / (k * k) * sum
}
