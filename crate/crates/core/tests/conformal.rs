use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use jdisc::conformal::*;
use jdisc::grid::{lp_norm, DiscGrid, GridFunction};
use jdisc::verify::boundary_correspondence;
use jdisc::weighted::weight_r;
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn normalization_and_symmetry() {
    let map = ConformalMap::new();
    assert!((map.phi(c(1.0, 0.0)) - 1.0).norm() <= 1e-6);
    assert!((map.phi(c(-1.0, 0.0)) + 1.0).norm() <= 1e-6);
    assert!((map.phi(c(0.0, 1.0)) - c(0.0, 1.0)).norm() <= 1e-6);
    let p0 = map.phi(c(0.0, 0.0));
    assert!(p0.re.abs() <= 1e-6 && p0.im > 0.0 && p0.im < 1.0);
    // Φ(−conj ζ) = −conj Φ(ζ)
    for z in [c(0.3, 0.4), c(-0.7, -0.2), c(0.1, -0.9)] {
        assert!((map.phi(-z.conj()) + map.phi(z).conj()).norm() < 1e-10);
    }
}

#[test]
fn lower_arc_maps_to_bottom_side() {
    let map = ConformalMap::new();
    for k in 1..32 {
        let z = Complex64::from_polar(1.0, PI + PI * k as f64 / 32.0);
        assert!(map.phi(z).im.abs() <= 1e-4);
    }
}

#[test]
fn derivative_blows_up_with_exponent_three_quarters() {
    let map = ConformalMap::new();
    let a = map.phi_prime(c(1.0 - 1e-2, 0.0)).unwrap().norm();
    let b = map.phi_prime(c(1.0 - 1e-4, 0.0)).unwrap().norm();
    let exponent = (b / a).ln() / (1e-2f64 / 1e-4).ln();
    assert!((exponent - 0.75).abs() <= 0.05 * 0.75, "{exponent}");
    assert!(map.phi_prime(c(0.0, 1.0)).is_err());
}

#[test]
fn derivative_norm_is_stable_under_refinement() {
    let map = ConformalMap::new();
    let norm = |n: usize| {
        let g = Arc::new(DiscGrid::new(n).unwrap());
        let vals = g
            .centers()
            .iter()
            .map(|&t| map.phi_prime(t).unwrap())
            .collect();
        lp_norm(&GridFunction::from_values(g, 1, vals).unwrap(), 2.2).unwrap()
    };
    let (a, b) = (norm(64), norm(128));
    assert!(a.is_finite() && (a - b).abs() <= 0.05 * b);
}

#[test]
fn derivative_argument_is_constant_on_lower_arc() {
    // on γ₃ the image side is horizontal, so arg(Φ′ · iζ) is constant
    let map = ConformalMap::new();
    let m = 400;
    let args: Vec<f64> = (1..m)
        .map(|k| {
            let z = Complex64::from_polar(1.0, PI + PI * k as f64 / m as f64);
            (map.phi_prime(z).unwrap() * c(0.0, 1.0) * z).arg()
        })
        .collect();
    let worst = args
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-3, "{worst}");
}

#[test]
fn r_times_derivative_has_square_root_form() {
    // R Φ′ = const · (ζ−1)^{-1/2}(ζ+1)^{-1/2}: the product (R Φ′)² (1 − ζ²) is constant
    let map = ConformalMap::new();
    let val = |z: Complex64| {
        let q = weight_r(z).unwrap() * map.phi_prime(z).unwrap();
        q * q * (1.0 - z * z)
    };
    let reference = val(c(0.0, 0.0));
    for z in [c(0.4, 0.3), c(-0.2, -0.6), c(0.7, 0.1)] {
        assert!((val(z) - reference).norm() <= 1e-9 * reference.norm());
    }
}

#[test]
fn inverse_and_retraction() {
    let map = ConformalMap::new();
    let zeta = c(0.3, 0.1);
    assert!((map.phi_inverse(map.phi(zeta)).unwrap() - zeta).norm() <= 1e-6);
    assert!((map.phi_inverse(c(1.0, 0.0)).unwrap() - 1.0).norm() <= 1e-12);
    assert!(map.phi_inverse(c(0.0, 0.5)).unwrap().re.abs() <= 1e-6);
    assert!(map.phi_inverse(c(0.0, -0.5)).is_err());

    let z0 = c(0.0, 0.5);
    let inside = c(0.1, 0.3);
    assert_eq!(
        map.psi(inside, z0).unwrap(),
        map.phi_inverse(inside).unwrap()
    );
    let exit = map.triangle().exit_point(z0, c(2.0, 0.0));
    assert!((exit - c(2.0 / 3.0, 1.0 / 3.0)).norm() <= 1e-8);
    assert!(
        (map.psi(c(2.0, 0.0), z0).unwrap() - map.phi_inverse(c(2.0 / 3.0, 1.0 / 3.0)).unwrap())
            .norm()
            <= 1e-8
    );
    assert!(map.psi(c(2.0, 0.0), c(0.0, 1.5)).is_err());
    for k in 0..64 {
        let z = Complex64::from_polar(3.0, TAU * k as f64 / 64.0);
        assert!(map.psi(z, z0).unwrap().norm() <= 1.0);
    }
    let on_side = c(-0.4, 0.6);
    let a = map.psi(on_side, z0).unwrap();
    let b = map.psi(on_side * (1.0 + 1e-12), z0).unwrap();
    assert!((a - b).norm() <= 1e-8);
}

#[test]
fn boundary_correspondence_and_degree() {
    let map = ConformalMap::new();
    assert!(boundary_correspondence(&map, 4000) <= 1e-3);
    assert!((map.boundary_winding(256, c(0.0, 0.5)) - 1.0).abs() < 1e-9);
}

#[test]
fn image_area_is_one() {
    assert!((TriangleGeometry.area() - 1.0).abs() < 1e-15);
    assert!((ConformalMap::new().dirichlet_energy() - 1.0).abs() < 1e-8);
}
