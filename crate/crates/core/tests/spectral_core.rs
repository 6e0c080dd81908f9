use std::f64::consts::PI;

use approx::assert_relative_eq;
use proptest::prelude::*;
use rchwave::spectral::{analyze_even, differentiate, inner, quadrature, synthesize, Field, Grid, WaveProfile, SYMMETRY_TOL};
use rchwave::Error;

fn profile_strategy(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0_f64, 1..k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn synthesize_analyze_round_trip(coeffs in profile_strategy(31)) {
        let grid = Grid::new(32).unwrap();
        let p = WaveProfile::new(&grid, coeffs).unwrap();
        prop_assume!(p.coeff_norm() > 1e-3);
        let f = synthesize(&p);
        let back = analyze_even(&f, SYMMETRY_TOL).unwrap();
        for (a, b) in p.coeffs().iter().zip(back.coeffs()) {
            prop_assert!((a - b).abs() <= 1e-12 * p.coeff_norm());
        }
        prop_assert!(synthesize(&back).sub(&f).max_abs() <= 1e-12 * f.max_abs().max(1e-300));
    }

    #[test]
    fn even_profiles_have_zero_mean(coeffs in profile_strategy(15)) {
        let grid = Grid::new(16).unwrap();
        let f = WaveProfile::new(&grid, coeffs).unwrap().to_field();
        prop_assert!(quadrature(&f).abs() <= 1e-12);
    }

    #[test]
    fn energy_matches_quadrature(coeffs in profile_strategy(15)) {
        let grid = Grid::new(16).unwrap();
        let p = WaveProfile::new(&grid, coeffs).unwrap();
        let f = p.to_field();
        let d = p.derivative(1);
        let direct = 0.5 * (inner(&f, &f) + inner(&d, &d));
        prop_assert!((p.e_functional() - direct).abs() <= 1e-12 * direct.max(1e-300));
    }

    #[test]
    fn resampling_is_exact(coeffs in profile_strategy(15)) {
        let coarse = Grid::new(16).unwrap();
        let fine = Grid::new(64).unwrap();
        let p = WaveProfile::new(&coarse, coeffs).unwrap();
        let q = p.resample(&fine);
        prop_assert!((q.e_functional() - p.e_functional()).abs() <= 1e-12 * p.e_functional().max(1e-300));
        for x in [0.0, 0.3, 2.0, 5.5] {
            let (a, b) = (p.eval(x), q.eval(x));
            for i in 0..3 {
                prop_assert!((a[i] - b[i]).abs() <= 1e-11);
            }
        }
    }
}

#[test]
fn grid_minimum() {
    assert!(matches!(Grid::new(4), Err(Error::Domain(_))));
    let g = Grid::new(8).unwrap();
    assert_eq!(g.len(), 16);
    assert_eq!(g.retained(), 7);
    assert_relative_eq!(g.spacing(), PI / 8.0);
}

#[test]
fn spectral_derivatives() {
    let g = Grid::new(32).unwrap();
    let f = Field::from_fn(&g, |x| (3.0 * x).sin() + 0.5 * (2.0 * x).cos());
    let d1 = differentiate(&f, 1);
    let d2 = differentiate(&f, 2);
    let e1 = Field::from_fn(&g, |x| 3.0 * (3.0 * x).cos() - (2.0 * x).sin());
    let e2 = Field::from_fn(&g, |x| -9.0 * (3.0 * x).sin() - 2.0 * (2.0 * x).cos());
    assert!(d1.sub(&e1).max_abs() < 1e-12);
    assert!(d2.sub(&e2).max_abs() < 1e-11);
}

#[test]
fn odd_fields_are_rejected() {
    let g = Grid::new(16).unwrap();
    let f = Field::from_fn(&g, |x| x.cos() + 1e-3 * x.sin());
    assert!(matches!(analyze_even(&f, SYMMETRY_TOL), Err(Error::SymmetryViolation { .. })));
}

#[test]
fn quadrature_is_spectral() {
    let g = Grid::new(16).unwrap();
    let f = Field::from_fn(&g, |x| (x.cos()).exp());
    // ∫ e^{cos x} dx = 2π I₀(1).
    assert_relative_eq!(quadrature(&f), 2.0 * PI * 1.266_065_877_752_008_4, max_relative = 1e-14);
}

#[test]
fn stokes_energy_by_parseval() {
    let g = Grid::new(16).unwrap();
    let (a, omega) = (0.1, 1.0);
    let p = WaveProfile::new(&g, vec![a, a * a / omega]).unwrap();
    assert_relative_eq!(p.e_functional(), PI * (a * a + 2.5 * a.powi(4) / (omega * omega)), max_relative = 1e-14);
}
