//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use jdisc::conformal::ConformalMap;
use jdisc::grid::{DiscGrid, GridFunction};
use jdisc::solver::{solve_disc, DiscSolution, SolverParams};
use jdisc::structure::*;
use jdisc::verify::*;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const M: usize = 256;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(checks: &[(&str, bool, String)]) -> Self {
        let failed: Vec<String> = checks
            .iter()
            .filter(|c| !c.1)
            .map(|c| format!("{} ({})", c.0, c.2))
            .collect();
        let detail = if failed.is_empty() {
            checks
                .iter()
                .map(|c| format!("{}={}", c.0, c.2))
                .collect::<Vec<_>>()
                .join(", ")
        } else {
            format!("failed: {}", failed.join("; "))
        };
        Self {
            passed: failed.is_empty(),
            detail,
        }
    }

    fn error(e: impl std::fmt::Display) -> Self {
        Self {
            passed: false,
            detail: format!("error: {e}"),
        }
    }
}

fn check(
    name: &'static str,
    passed: bool,
    value: impl std::fmt::Display,
) -> (&'static str, bool, String) {
    (name, passed, value.to_string())
}

fn suite_checks(
    results: &[CheckResult],
    names: &[&'static str],
) -> Vec<(&'static str, bool, String)> {
    names
        .iter()
        .map(|&n| match results.iter().find(|r| r.name == n) {
            Some(r) => check(n, r.passed, format!("{:.2e}", r.value)),
            None => check(n, false, "missing"),
        })
        .collect()
}

fn z0() -> Complex64 {
    Complex64::new(0.0, 0.5)
}

fn bump_field(kind: BuiltinKind) -> BuiltinField {
    let params = BumpParams {
        amplitude: 0.5,
        z_center: z0(),
        w_center: vec![Complex64::default()],
        radius: 0.2,
    };
    builtin_field(kind, 2, &params).expect("builtin field")
}

fn solve_fixture(kind: BuiltinKind, n: usize) -> jdisc::Result<(DiscSolution, Diagnostics)> {
    let field = bump_field(kind);
    let params = SolverParams::default();
    let sol = solve_disc(&field, z0(), &[Complex64::default()], n, M, params.clone())?;
    let diag = diagnose(&sol, &field, &ConformalMap::new(), params.p)?;
    Ok((sol, diag))
}

fn operator_identities(suite: &[CheckResult], elapsed: f64) -> Outcome {
    let mut checks = suite_checks(
        suite,
        &["t_of_one_interior", "t_of_one_exterior", "dbar_identity"],
    );
    checks.push(check("runtime_s", elapsed < 30.0, format!("{elapsed:.1}")));
    Outcome::new(&checks)
}

fn isometry() -> Outcome {
    let defect = |n: usize, j: usize| {
        let grid = Arc::new(DiscGrid::new(n)?);
        let f = GridFunction::from_fn(
            grid,
            smooth_bump(Complex64::new(0.1, 0.2), 0.4, Complex64::new(1.0, -0.5)),
        );
        isometry_defect(&f, j)
    };
    let mut checks = Vec::new();
    for (j, name_fine, name_mono) in [
        (1, "s1_defect_128", "s1_decreases"),
        (2, "s2_defect_128", "s2_decreases"),
    ] {
        match (defect(64, j), defect(128, j)) {
            (Ok(coarse), Ok(fine)) => {
                checks.push(check(name_fine, fine <= 3e-2, format!("{fine:.2e}")));
                checks.push(check(
                    name_mono,
                    fine < coarse,
                    format!("{coarse:.2e}->{fine:.2e}"),
                ));
            }
            (Err(e), _) | (_, Err(e)) => return Outcome::error(e),
        }
    }
    Outcome::new(&checks)
}

fn boundary_conditions(suite: &[CheckResult]) -> Outcome {
    Outcome::new(&suite_checks(
        suite,
        &[
            "boundary_condition_t1",
            "boundary_condition_t2",
            "x_argument_mod_pi",
        ],
    ))
}

fn conformal_map(suite: &[CheckResult]) -> Outcome {
    Outcome::new(&suite_checks(
        suite,
        &[
            "phi_normalization",
            "phi_inverse_roundtrip",
            "psi_exit_point",
            "phi_winding",
        ],
    ))
}

fn trivial_solve() -> Outcome {
    let map = ConformalMap::new();
    let (sol, diag) = match solve_fixture(BuiltinKind::Zero, 64) {
        Ok(r) => r,
        Err(e) => return Outcome::error(e),
    };
    let z_err = sol
        .grid
        .centers()
        .iter()
        .zip(&sol.z)
        .map(|(&t, &z)| (z - map.phi(t)).norm())
        .fold(0.0, f64::max);
    let tau_err = match map.phi_inverse(z0()) {
        Ok(t) => (t - sol.tau).norm(),
        Err(e) => return Outcome::error(e),
    };
    Outcome::new(&[
        check("converged", sol.stats.converged, sol.stats.converged),
        check(
            "outer_iterations",
            sol.stats.outer_iterations <= 2,
            sol.stats.outer_iterations,
        ),
        check("z_minus_phi", z_err <= 1e-6, format!("{z_err:.2e}")),
        check(
            "area_stokes",
            (0.99..=1.01).contains(&diag.area_stokes),
            format!("{:.6}", diag.area_stokes),
        ),
        check("tau_error", tau_err <= 1e-6, format!("{tau_err:.2e}")),
        check(
            "z_at_tau_error",
            diag.z_at_tau_error <= 1e-6,
            format!("{:.2e}", diag.z_at_tau_error),
        ),
    ])
}

/// Error-type diagnostics of the nontrivial fixture, with their thresholds.
fn error_measures(d: &Diagnostics) -> Vec<(&'static str, f64, f64)> {
    vec![
        ("cr_residual_relative", d.cr_residual_relative, 1e-6),
        ("area_stokes_error", (d.area_stokes - 1.0).abs(), 5e-2),
        ("area_jacobian_error", (d.area_jacobian - 1.0).abs(), 5e-2),
        ("containment_margin", d.containment_margin, 2e-2),
        ("trace_distance", d.trace_distance, 2e-2),
        ("z_at_tau_error", d.z_at_tau_error, 1e-3),
        ("w_at_tau_error", d.w_at_tau_error, 0.0),
    ]
}

/// Status-type requirements: these must hold, they have no magnitude to improve.
fn status_checks(sol: &DiscSolution, d: &Diagnostics) -> Vec<(&'static str, bool, String)> {
    vec![
        check("converged", d.converged, d.converged),
        check("degree", d.degree == 1, d.degree),
        check(
            "tau_abs",
            d.tau_abs <= 1.0 - 1e-3,
            format!("{:.5}", d.tau_abs),
        ),
        check(
            "w_at_tau_exact",
            sol.w_at_tau == sol.w0,
            sol.w_at_tau == sol.w0,
        ),
    ]
}

fn nontrivial_solve(fine: &jdisc::Result<(DiscSolution, Diagnostics)>, elapsed: f64) -> Outcome {
    let (sol, d) = match fine {
        Ok(r) => r,
        Err(e) => return Outcome::error(e),
    };
    let mut checks = status_checks(sol, d);
    for (name, value, threshold) in error_measures(d) {
        checks.push(check(name, value <= threshold, format!("{value:.2e}")));
    }
    checks.push(check("runtime_s", elapsed < 300.0, format!("{elapsed:.1}")));
    Outcome::new(&checks)
}

fn refinement(
    coarse: &jdisc::Result<(DiscSolution, Diagnostics)>,
    fine: &jdisc::Result<(DiscSolution, Diagnostics)>,
) -> Outcome {
    let ((sc, dc), (sf, df)) = match (coarse, fine) {
        (Ok(c), Ok(f)) => (c, f),
        (Err(e), _) | (_, Err(e)) => return Outcome::error(e),
    };
    let mut checks = Vec::new();
    for ((name, vc, threshold), (_, vf, _)) in
        error_measures(dc).into_iter().zip(error_measures(df))
    {
        // below a thousandth of the acceptance threshold both values are roundoff
        let floor = 1e-3 * threshold;
        let ok = vf <= vc || (vc <= floor && vf <= floor);
        checks.push(check(name, ok, format!("{vc:.2e}->{vf:.2e}")));
    }
    for ((name, ok_c, vc), (_, ok_f, vf)) in
        status_checks(sc, dc).into_iter().zip(status_checks(sf, df))
    {
        checks.push(check(name, ok_c && ok_f, format!("{vc}->{vf}")));
    }
    Outcome::new(&checks)
}

fn a_from_j_roundtrip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut standard: f64 = 0.0;
    let mut worst: f64 = 0.0;
    for n in 1..=3 {
        match a_from_j_matrix(&j_standard(n)) {
            Ok(a) => standard = standard.max(a.iter().map(|v| v.norm()).fold(0.0, f64::max)),
            Err(e) => return Outcome::error(e),
        }
        for _ in 0..20 {
            let a = DMatrix::from_fn(n, n, |_, _| {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let a = a.map(|v| v * (rng.gen_range(0.0..0.95) / spectral_norm(&a).max(1e-12)));
            let back = match j_from_a(&a).and_then(|j| a_from_j_matrix(&j)) {
                Ok(b) => b,
                Err(e) => return Outcome::error(e),
            };
            worst = worst.max((back - a).iter().map(|v| v.norm()).fold(0.0, f64::max));
        }
    }
    Outcome::new(&[
        check(
            "standard_to_zero",
            standard <= 1e-12,
            format!("{standard:.2e}"),
        ),
        check("roundtrip", worst <= 1e-8, format!("{worst:.2e}")),
    ])
}

fn a_priori_bound(fine: &jdisc::Result<(DiscSolution, Diagnostics)>) -> Outcome {
    let (_, d) = match fine {
        Ok(r) => r,
        Err(e) => return Outcome::error(e),
    };
    let a = d.a_declared;
    let denom = 1.0 - a * d.s_emp;
    let bound = if denom > 0.0 {
        a * d.phi_prime_norm_p / denom
    } else {
        f64::INFINITY
    };
    Outcome::new(&[
        check(
            "contraction",
            denom > 0.0,
            format!("a*s_emp={:.3}", a * d.s_emp),
        ),
        check(
            "y_norm_p",
            d.y_norm_p <= 1.1 * bound,
            format!("{:.4}<=1.1*{:.4}", d.y_norm_p, bound),
        ),
    ])
}

fn main() -> ExitCode {
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();

    let t = Instant::now();
    let suite = run_operator_suite(64, M, 1);
    let suite_time = t.elapsed().as_secs_f64();
    let suite = match suite {
        Ok(s) => s,
        Err(e) => {
            println!("operator suite failed: {e}");
            return ExitCode::FAILURE;
        }
    };
    results.push((
        1,
        "operator identities",
        operator_identities(&suite, suite_time),
    ));
    results.push((2, "isometry", isometry()));
    results.push((3, "boundary conditions", boundary_conditions(&suite)));
    results.push((4, "conformal map", conformal_map(&suite)));
    results.push((5, "trivial solve", trivial_solve()));

    let t = Instant::now();
    let fine = solve_fixture(BuiltinKind::DiagBump, 64);
    let fine_time = t.elapsed().as_secs_f64();
    let coarse = solve_fixture(BuiltinKind::DiagBump, 32);
    results.push((6, "nontrivial solve", nontrivial_solve(&fine, fine_time)));
    results.push((7, "refinement consistency", refinement(&coarse, &fine)));
    results.push((8, "A from J", a_from_j_roundtrip()));
    results.push((9, "a priori bound", a_priori_bound(&fine)));

    let mut all = true;
    for (k, name, outcome) in &results {
        all &= outcome.passed;
        let tag = if outcome.passed { "PASS" } else { "FAIL" };
        println!("criterion {k} [{tag}] {name}: {}", outcome.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
