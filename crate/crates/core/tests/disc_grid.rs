use std::sync::Arc;

use jdisc::grid::{lp_norm, Arc3, BoundaryTrace, DiscGrid, GridFunction};
use num_complex::Complex64;
use proptest::prelude::*;

fn grid16() -> Arc<DiscGrid> {
    Arc::new(DiscGrid::new(16).unwrap())
}

fn values(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec(
        (-10.0f64..10.0, -10.0f64..10.0).prop_map(|(a, b)| Complex64::new(a, b)),
        len,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lp_norm_is_homogeneous(vals in values(grid16().len()), s in -5.0f64..5.0, p in 1.0f64..4.0) {
        let g = grid16();
        let f = GridFunction::from_values(g.clone(), 1, vals.clone()).unwrap();
        let sf = GridFunction::from_values(g, 1, vals.iter().map(|v| v * s).collect()).unwrap();
        let a = lp_norm(&sf, p).unwrap();
        let b = s.abs() * lp_norm(&f, p).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b.max(1.0));
    }

    #[test]
    fn lp_norm_triangle_inequality(u in values(2 * grid16().len()), v in values(2 * grid16().len()), p in 1.0f64..4.0) {
        let g = grid16();
        let f = GridFunction::from_values(g.clone(), 2, u.clone()).unwrap();
        let h = GridFunction::from_values(g.clone(), 2, v.clone()).unwrap();
        let sum = GridFunction::from_values(g, 2, u.iter().zip(&v).map(|(a, b)| a + b).collect()).unwrap();
        let lhs = lp_norm(&sum, p).unwrap();
        let rhs = lp_norm(&f, p).unwrap() + lp_norm(&h, p).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }
}

#[test]
fn constant_norms() {
    let g = Arc::new(DiscGrid::new(64).unwrap());
    let one = GridFunction::from_fn(g.clone(), |_| Complex64::new(1.0, 0.0));
    let n2 = lp_norm(&one, 2.0).unwrap();
    assert!((n2 - std::f64::consts::PI.sqrt()).abs() / std::f64::consts::PI.sqrt() <= 0.03);
    let cst = Complex64::new(3.0, -4.0);
    let f = GridFunction::from_fn(g.clone(), |_| cst);
    let p = 2.2;
    assert!((lp_norm(&f, p).unwrap() - 5.0 * g.total_area().powf(1.0 / p)).abs() < 1e-12);
    assert_eq!(
        lp_norm(&GridFunction::zeros(g.clone(), 1), 2.0).unwrap(),
        0.0
    );
    assert!(lp_norm(&one, 0.5).is_err());
}

#[test]
fn smooth_function_norm_converges() {
    let f = |t: Complex64| Complex64::new((-4.0 * t.norm_sqr()).exp(), 0.0);
    let norms: Vec<f64> = [32usize, 64, 128]
        .iter()
        .map(|&n| {
            lp_norm(
                &GridFunction::from_fn(Arc::new(DiscGrid::new(n).unwrap()), f),
                2.0,
            )
            .unwrap()
        })
        .collect();
    // O(1/n): successive differences shrink
    assert!((norms[2] - norms[1]).abs() < (norms[1] - norms[0]).abs() + 1e-6);
    // exact value: ∫_D e^{-8|t|²} = π(1 − e^{-8})/8
    let exact = (std::f64::consts::PI * (1.0 - (-8.0f64).exp()) / 8.0).sqrt();
    assert!((norms[2] - exact).abs() < 1e-2);
}

#[test]
fn trace_counts() {
    let tr = BoundaryTrace::new(16).unwrap();
    let count = |a: Arc3| tr.arcs().iter().filter(|&&x| x == a).count();
    assert_eq!(
        (
            count(Arc3::Gamma1),
            count(Arc3::Gamma2),
            count(Arc3::Gamma3)
        ),
        (4, 4, 8)
    );
    for p in tr.points() {
        for mark in [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
        ] {
            assert!((p - mark).norm() > 0.1);
        }
    }
    assert!(BoundaryTrace::new(18).is_err());
    assert!(BoundaryTrace::new(12).is_err());
}

#[test]
fn grid_validation() {
    assert!(DiscGrid::new(7).is_err());
    let g = DiscGrid::new(8).unwrap();
    assert!(g.centers().iter().all(|t| t.norm() < 1.0));
}
