use jdisc::error::Error;
use jdisc::grid::GridFunction;
use jdisc::solver::*;
use jdisc::structure::*;
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn bump(dim: usize) -> BumpParams {
    BumpParams {
        w_center: vec![Complex64::default(); dim - 1],
        ..BumpParams::default()
    }
}

#[test]
fn trivial_structure_gives_the_conformal_map() {
    let f = builtin_field(BuiltinKind::Zero, 2, &bump(2)).unwrap();
    let z0 = c(0.1, 0.4);
    let w0 = [c(0.3, -0.2)];
    let sol = solve_disc(&f, z0, &w0, 16, 64, SolverParams::default()).unwrap();
    assert!(sol.stats.converged);
    assert_eq!(sol.stats.outer_iterations, 1);
    assert!(sol.y.sup_norm() == 0.0);
    let map = jdisc::conformal::ConformalMap::new();
    for (k, &t) in sol.grid.centers().iter().enumerate() {
        assert!((sol.z[k] - map.phi(t)).norm() < 1e-12);
        assert_eq!(sol.w.channel(0)[k], w0[0]);
    }
    assert!((sol.z_at_tau - z0).norm() < 1e-6);
}

#[test]
fn invalid_targets_and_fields_are_rejected() {
    let f = builtin_field(BuiltinKind::Zero, 2, &bump(2)).unwrap();
    let on_edge = solve_disc(
        &f,
        c(0.0, 0.0),
        &[Complex64::default()],
        16,
        64,
        SolverParams::default(),
    );
    assert!(matches!(on_edge, Err(Error::InvalidArgument(_))));
    let wrong_w0 = solve_disc(&f, c(0.0, 0.5), &[], 16, 64, SolverParams::default());
    assert!(matches!(wrong_w0, Err(Error::InvalidArgument(_))));

    let strong = BumpParams {
        amplitude: 1.2,
        ..bump(2)
    };
    assert!(builtin_field(BuiltinKind::DiagBump, 2, &strong).is_err());

    let bad = SolverParams {
        p: 1.5,
        ..SolverParams::default()
    };
    assert!(bad.validate().is_err());
    let bad = SolverParams {
        theta: 0.0,
        ..SolverParams::default()
    };
    assert!(bad.validate().is_err());
}

#[test]
fn inner_solve_with_zero_structure_stops_at_once() {
    let f = builtin_field(BuiltinKind::Zero, 3, &bump(3)).unwrap();
    let solver = DiscSolver::new(&f, 16, 64, SolverParams::default()).unwrap();
    let z = solver.phi_on_grid().to_vec();
    let w = GridFunction::zeros(solver.grid().clone(), 2);
    let inner = solver.solve_inner(&z, &w).unwrap();
    assert!(inner.iterations <= 1);
    assert_eq!(inner.y.sup_norm(), 0.0);
}

#[test]
fn assembly_and_tau_update_with_zero_density() {
    let f = builtin_field(BuiltinKind::Zero, 2, &bump(2)).unwrap();
    let solver = DiscSolver::new(&f, 16, 64, SolverParams::default()).unwrap();
    let y = GridFunction::zeros(solver.grid().clone(), 2);
    let w0 = [c(1.0, 2.0)];
    let a = solver.assemble_disc(&y, c(0.0, 0.2), &w0, true);
    assert_eq!(a.z, solver.phi_on_grid());
    assert!(a.w.values().iter().all(|v| *v == w0[0]));
    assert!(a.w_trace.iter().all(|v| *v == w0[0]));

    let z0 = c(0.2, 0.3);
    let tau = solver.update_tau(y.channel(0), c(0.0, 0.1), z0).unwrap();
    assert!((solver.map().phi(tau) - z0).norm() < 1e-8);
}

#[test]
fn coupled_structure_moves_the_fibre_coordinate() {
    let f = builtin_field(BuiltinKind::CoupledBump, 2, &bump(2)).unwrap();
    let w0 = [c(0.05, -0.02)];
    let sol = solve_disc(&f, c(0.0, 0.5), &w0, 32, 256, SolverParams::default()).unwrap();
    assert!(sol.stats.converged);
    let spread = sol
        .w
        .channel(0)
        .iter()
        .map(|v| (v - w0[0]).norm())
        .fold(0.0, f64::max);
    assert!(spread > 1e-4, "{spread}");
    assert_eq!(sol.w_at_tau, w0.to_vec());
    let re0 = sol.w_trace[0].re;
    for v in &sol.w_trace {
        assert!((v.re - re0).abs() < 1e-9);
    }
    assert!((sol.z_at_tau - sol.z0).norm() < 1e-6);
}

#[test]
fn outer_iteration_budget_reports_best_iterate() {
    let f = builtin_field(BuiltinKind::DiagBump, 2, &bump(2)).unwrap();
    let params = SolverParams {
        outer_max_iters: 1,
        ..SolverParams::default()
    };
    match solve_disc(&f, c(0.0, 0.5), &[Complex64::default()], 16, 64, params) {
        Err(Error::NonConvergence {
            iterations, best, ..
        }) => {
            assert_eq!(iterations, 1);
            assert!(!best.stats.converged);
            assert!(best.diagnostics.is_some());
        }
        other => panic!("expected non-convergence, got {other:?}"),
    }
}
