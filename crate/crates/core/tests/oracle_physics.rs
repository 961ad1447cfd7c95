mod common;

use std::f64::consts::PI;

use common::{boundary, rel_diff};
use multishell::scatter::{
    cross_section_from_coefficients, max_multipole_order, mie_coefficients_to_order, scattering_cross_section,
    spectrum, LayerStack, MaterialLibrary, MaterialTable, SpectralGrid, SILICA,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn constant_lib(name: &str, n: Complex64) -> MaterialLibrary {
    let mut lib = MaterialLibrary::default();
    lib.insert(MaterialTable::constant(name, n, 300.0, 900.0).unwrap());
    lib
}

#[test]
fn rayleigh_cross_section() {
    let m: f64 = 1.5;
    let lib = constant_lib("Glass", Complex64::new(m, 0.0));
    for &wl in &[400.0, 600.0, 800.0] {
        let x = 0.005;
        let a = x * wl / (2.0 * PI);
        let k = 2.0 * PI / wl;
        let s = LayerStack::uniform(vec![a], "Glass").unwrap();
        let sigma = scattering_cross_section(&s, &lib, wl, 1.0).unwrap();
        let lorentz = (m * m - 1.0) / (m * m + 2.0);
        let rayleigh = 8.0 / 3.0 * PI * k.powi(4) * a.powi(6) * lorentz * lorentz;
        assert!(rel_diff(sigma, rayleigh) < 5e-3, "{sigma} vs {rayleigh}");
    }
}

#[test]
fn twelve_layer_stack_matches_boundary_matching() {
    let lib = MaterialLibrary::default();
    let s = LayerStack::silica_titania(vec![50.0; 12]).unwrap();
    let wl = 600.0;
    let x = 2.0 * PI / wl * s.outer_radius();
    let order = max_multipole_order(x).unwrap();
    let fast = scattering_cross_section(&s, &lib, wl, 1.0).unwrap();
    let slow = boundary::cross_section(&s, &lib, wl, 1.0, order);
    assert!(rel_diff(fast, slow) < 1e-6, "{fast} vs {slow}");
}

#[test]
fn coated_absorbing_sphere_matches_boundary_matching() {
    let mut lib = MaterialLibrary::default();
    lib.insert(MaterialTable::constant("Lossy", Complex64::new(0.6, 2.2), 300.0, 900.0).unwrap());
    let s = LayerStack::new(vec![40.0, 15.0, 35.0], [SILICA.into(), "Lossy".into()]).unwrap();
    for &wl in &[420.0, 555.0, 790.0] {
        let order = max_multipole_order(2.0 * PI * 1.33 / wl * s.outer_radius()).unwrap();
        let fast = mie_coefficients_to_order(&s, &lib, wl, 1.33, order).unwrap();
        let (a, b) = boundary::coefficients(&s, &lib, wl, 1.33, order);
        for n in 0..3 {
            assert!((fast.a[n] - a[n]).norm() <= 1e-7 * a[n].norm().max(1e-12), "a{n}");
            assert!((fast.b[n] - b[n]).norm() <= 1e-7 * b[n].norm().max(1e-12), "b{n}");
        }
    }
}

#[test]
fn three_layer_spectrum_matches_pointwise_oracle() {
    let lib = MaterialLibrary::default();
    let grid = SpectralGrid::default();
    let s = LayerStack::silica_titania(vec![35.0, 62.0, 48.0]).unwrap();
    let sp = spectrum(&s, &lib, &grid, 1.0).unwrap();
    assert_eq!(sp.len(), 400);
    for (i, v) in sp.values().iter().enumerate() {
        let wl = grid.wavelength(i);
        let order = max_multipole_order(2.0 * PI / wl * s.outer_radius()).unwrap();
        let expected = boundary::cross_section(&s, &lib, wl, 1.0, order);
        assert!(rel_diff(*v, expected) < 1e-8, "i={i}: {v} vs {expected}");
    }
}

#[test]
fn index_matched_stack_has_zero_spectrum() {
    let lib = constant_lib("Host", Complex64::new(1.0, 0.0));
    let s = LayerStack::uniform(vec![50.0, 40.0, 60.0], "Host").unwrap();
    let sp = spectrum(&s, &lib, &SpectralGrid::default(), 1.0).unwrap();
    assert_eq!(sp.len(), 400);
    assert!(sp.values().iter().all(|v| *v == 0.0));
}

#[test]
fn spectrum_is_deterministic() {
    let lib = MaterialLibrary::default();
    let s = LayerStack::silica_titania(vec![31.0, 66.0, 44.0, 52.0]).unwrap();
    let g = SpectralGrid::default();
    let a = spectrum(&s, &lib, &g, 1.0).unwrap();
    let b = spectrum(&s, &lib, &g, 1.0).unwrap();
    assert!(a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn merging_same_material_layers_is_invisible(
        t in prop::collection::vec(30.0f64..70.0, 2..8),
        split in 0.1f64..0.9,
        wl in 400.0f64..800.0,
    ) {
        let lib = MaterialLibrary::default();
        // Split the outermost layer of a titania/titania stack in two.
        let whole = LayerStack::uniform(t.clone(), "TiO2").unwrap();
        let mut parts = t.clone();
        let last = parts.pop().unwrap();
        parts.push(last * split);
        parts.push(last * (1.0 - split));
        let split_stack = LayerStack::uniform(parts, "TiO2").unwrap();
        let a = scattering_cross_section(&whole, &lib, wl, 1.0).unwrap();
        let b = scattering_cross_section(&split_stack, &lib, wl, 1.0).unwrap();
        prop_assert!(rel_diff(a, b) <= 1e-9, "{} vs {}", a, b);
    }

    #[test]
    fn series_is_converged_in_design_box(
        t in prop::collection::vec(30.0f64..70.0, 1..13),
        i in 0usize..400,
    ) {
        let lib = MaterialLibrary::default();
        let s = LayerStack::silica_titania(t).unwrap();
        let wl = SpectralGrid::default().wavelength(i);
        let order = max_multipole_order(2.0 * PI / wl * s.outer_radius()).unwrap();
        let base = cross_section_from_coefficients(&mie_coefficients_to_order(&s, &lib, wl, 1.0, order).unwrap(), wl, 1.0);
        let more = cross_section_from_coefficients(&mie_coefficients_to_order(&s, &lib, wl, 1.0, 2 * order).unwrap(), wl, 1.0);
        prop_assert!(rel_diff(base, more) < 1e-9, "{} vs {}", base, more);
    }

    #[test]
    fn efficiency_depends_only_on_size_parameter(
        radius in 20.0f64..400.0,
        factor in 0.6f64..1.6,
        n in 1.2f64..2.6,
    ) {
        let lib = constant_lib("M", Complex64::new(n, 0.0));
        let wl = 500.0;
        let s1 = LayerStack::uniform(vec![radius], "M").unwrap();
        let s2 = LayerStack::uniform(vec![radius * factor], "M").unwrap();
        let q1 = scattering_cross_section(&s1, &lib, wl, 1.0).unwrap() / (PI * radius * radius);
        let r2 = radius * factor;
        let q2 = scattering_cross_section(&s2, &lib, wl * factor, 1.0).unwrap() / (PI * r2 * r2);
        prop_assert!(rel_diff(q1, q2) < 1e-9, "{} vs {}", q1, q2);
    }

    #[test]
    fn spectra_are_positive_and_finite(t in prop::collection::vec(30.0f64..70.0, 1..13)) {
        let lib = MaterialLibrary::default();
        let s = LayerStack::silica_titania(t).unwrap();
        let g = SpectralGrid::new(400.0, 800.0, 41).unwrap();
        let sp = spectrum(&s, &lib, &g, 1.0).unwrap();
        prop_assert!(sp.values().iter().all(|v| v.is_finite() && *v > 0.0));
    }
}
