//! Quantitative checks of a computed disc, and the standalone operator battery.

use std::f64::consts::{E, FRAC_PI_4, PI, TAU};
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cauchy::{beurling, cauchy_green};
use crate::conformal::{ConformalMap, TriangleGeometry};
use crate::error::{invalid, Error, Result};
use crate::grid::{lp_norm, Arc3, BoundaryTrace, DiscGrid, GridFunction};
use crate::solver::DiscSolution;
use crate::structure::StructureField;
use crate::weighted::{
    boundary_violation, weight_r, weight_x, weighted_beurling, weighted_cg, BoundaryKind,
};

/// Everything measured on a solution. Serializes to a flat key-value map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub converged: bool,
    pub cr_residual_p: f64,
    /// `cr_residual_p / (1 + ‖Y‖_p)`.
    pub cr_residual_relative: f64,
    pub y_norm_p: f64,
    pub area_stokes: f64,
    /// Contribution of `w` to `area_stokes`.
    pub area_stokes_w: f64,
    pub area_jacobian: f64,
    pub boundary_violation_t1: f64,
    pub boundary_violation_t2: f64,
    pub containment_margin: f64,
    /// Largest distance of a boundary sample of `z` from the boundary of the triangle.
    pub trace_distance: f64,
    pub degree: i64,
    pub tau_re: f64,
    pub tau_im: f64,
    pub tau_abs: f64,
    pub z_at_tau_error: f64,
    pub w_at_tau_error: f64,
    pub outer_iterations: usize,
    pub inner_iterations_total: usize,
    pub inner_iterations_last: usize,
    pub last_change: f64,
    pub s_emp_1: f64,
    pub s_emp_2: f64,
    pub s_emp: f64,
    pub a_measured: f64,
    pub a_declared: f64,
    pub a_s_emp: f64,
    pub phi_prime_norm_p: f64,
    pub a_priori_bound: f64,
    pub active_cells: usize,
}

/// Both area computations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AreaReport {
    pub stokes: f64,
    pub stokes_z: f64,
    pub stokes_w: f64,
    pub jacobian: f64,
}

/// `‖Z_ζ̄ − A(Z) conj(Z_ζ)‖_p` with `Z_ζ̄ = (u, v)` and `Z_ζ = (S₂u + Φ′, S₁v)`.
pub fn cr_residual(sol: &DiscSolution, field: &dyn StructureField, p: f64) -> Result<f64> {
    let n = sol.dim();
    if field.dim() != n {
        return Err(invalid(format!(
            "structure has dimension {}, solution {n}",
            field.dim()
        )));
    }
    let grid = sol.grid.clone();
    let mut res = GridFunction::zeros(grid.clone(), n);
    let mut w = vec![Complex64::default(); n - 1];
    let mut dz = DVector::<Complex64>::zeros(n);
    for k in 0..grid.len() {
        for c in 0..n - 1 {
            w[c] = sol.w.channel(c)[k];
        }
        for c in 0..n {
            dz[c] = sol.z_zeta.channel(c)[k].conj();
        }
        let a = field.eval(sol.z[k], &w);
        let image = a * &dz;
        for c in 0..n {
            res.channel_mut(c)[k] = sol.y.channel(c)[k] - image[c];
        }
    }
    lp_norm(&res, p)
}

/// `(i/2) ∮ g dḡ` by the trapezoid rule on the closed polyline through the
/// samples, with the values at the arc endpoints inserted between arcs.
fn stokes_polyline(
    trace: &BoundaryTrace,
    values: &[Complex64],
    corner_value: impl Fn(Complex64) -> Complex64,
) -> f64 {
    let m = trace.len();
    let mut pts = Vec::with_capacity(m + 3);
    for j in 0..m {
        pts.push(values[j]);
        if let Some(c) = trace.corner_after(j) {
            pts.push(corner_value(c));
        }
    }
    let mut acc = Complex64::default();
    for j in 0..pts.len() {
        let a = pts[j];
        let b = pts[(j + 1) % pts.len()];
        acc += (a + b) * 0.5 * (b - a).conj();
    }
    (Complex64::new(0.0, 0.5) * acc).re
}

fn corner_index(c: Complex64) -> usize {
    if c.re > 0.5 {
        0
    } else if c.im > 0.5 {
        1
    } else {
        2
    }
}

/// Area of the disc from the boundary (Stokes) and from the interior Jacobian.
///
/// The Jacobian sum uses `|S₂u + Φ′|² = |S₂u|² + 2 Re(S₂u conj Φ′) + |Φ′|²` and
/// replaces the cell sum of the last term, which converges slowly because of
/// the corner singularities of `Φ′`, by the Dirichlet energy of `Φ` computed
/// by adaptive quadrature.
pub fn area_report(sol: &DiscSolution, map: &ConformalMap) -> AreaReport {
    let trace = &sol.trace;
    let m = trace.len();
    let stokes_z = stokes_polyline(trace, &sol.z_trace, |c| sol.z_corners[corner_index(c)]);
    let mut stokes_w = 0.0;
    for ch in 0..sol.dim() - 1 {
        let vals = &sol.w_trace[ch * m..(ch + 1) * m];
        stokes_w += stokes_polyline(trace, vals, |c| sol.w_corners[ch * 3 + corner_index(c)]);
    }

    let grid = &sol.grid;
    let mut sum = 0.0;
    for k in 0..grid.len() {
        let s2u = sol.z_zeta.channel(0)[k] - sol.phi_prime[k];
        sum += s2u.norm_sqr() + 2.0 * (s2u * sol.phi_prime[k].conj()).re
            - sol.y.channel(0)[k].norm_sqr();
        for c in 1..sol.dim() {
            sum += sol.z_zeta.channel(c)[k].norm_sqr() - sol.y.channel(c)[k].norm_sqr();
        }
    }
    AreaReport {
        stokes: stokes_z + stokes_w,
        stokes_z,
        stokes_w,
        jacobian: sum * grid.cell_area() + map.dirichlet_energy(),
    }
}

/// Winding number of the closed polyline about `center`, and the largest
/// distance of its points from the boundary of the triangle.
pub fn winding_degree(values: &[Complex64], center: Complex64) -> Result<(i64, f64)> {
    if values.is_empty() {
        return Err(invalid("winding number of an empty trace"));
    }
    if let Some(v) = values.iter().find(|v| (**v - center).norm() <= 1e-6) {
        return Err(Error::Indeterminate(format!(
            "trace point {v} lies within 1e-6 of {center}"
        )));
    }
    let mut total = 0.0;
    for j in 0..values.len() {
        let a = values[j] - center;
        let b = values[(j + 1) % values.len()] - center;
        total += (b / a).arg();
    }
    let tri = TriangleGeometry;
    let dist = values
        .iter()
        .map(|&v| tri.boundary_distance(v))
        .fold(0.0, f64::max);
    Ok(((total / TAU).round() as i64, dist))
}

/// Largest distance of the grid values from the closed triangle.
pub fn containment_margin(z: &[Complex64]) -> f64 {
    let tri = TriangleGeometry;
    z.iter().map(|&v| tri.distance(v)).fold(0.0, f64::max)
}

/// `|‖S_j f‖₂ − ‖f‖₂| / ‖f‖₂`.
pub fn isometry_defect(f: &GridFunction, j: usize) -> Result<f64> {
    let nf = lp_norm(f, 2.0)?;
    if nf == 0.0 {
        return Err(invalid("isometry defect of the zero function"));
    }
    let s = weighted_beurling(j, f)?;
    Ok((lp_norm(&s, 2.0)? - nf).abs() / nf)
}

/// All diagnostics of a solution.
pub fn diagnose(
    sol: &DiscSolution,
    field: &dyn StructureField,
    map: &ConformalMap,
    p: f64,
) -> Result<Diagnostics> {
    let cr = cr_residual(sol, field, p)?;
    let area = area_report(sol, map);
    let trace = &sol.trace;
    let t1 = trace.with_values(sol.dim() - 1, sol.t1v_trace.clone())?;
    let t2 = trace.with_values(1, sol.t2u_trace.clone())?;
    let (degree, trace_distance) = winding_degree(&sol.z_trace, Complex64::new(0.0, 0.5))?;
    let st = &sol.stats;
    let w_err = sol
        .w_at_tau
        .iter()
        .zip(&sol.w0)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    Ok(Diagnostics {
        converged: st.converged,
        cr_residual_p: cr,
        cr_residual_relative: cr / (1.0 + st.y_norm_p),
        y_norm_p: st.y_norm_p,
        area_stokes: area.stokes,
        area_stokes_w: area.stokes_w,
        area_jacobian: area.jacobian,
        boundary_violation_t1: boundary_violation(&t1, BoundaryKind::T1),
        boundary_violation_t2: boundary_violation(&t2, BoundaryKind::T2),
        containment_margin: containment_margin(&sol.z),
        trace_distance,
        degree,
        tau_re: sol.tau.re,
        tau_im: sol.tau.im,
        tau_abs: sol.tau.norm(),
        z_at_tau_error: (sol.z_at_tau - sol.z0).norm(),
        w_at_tau_error: w_err,
        outer_iterations: st.outer_iterations,
        inner_iterations_total: st.inner_iterations_total,
        inner_iterations_last: st.inner_iterations_last,
        last_change: st.last_change,
        s_emp_1: st.s_emp_1,
        s_emp_2: st.s_emp_2,
        s_emp: st.s_emp,
        a_measured: st.a_measured,
        a_declared: st.a_declared,
        a_s_emp: st.a_declared * st.s_emp,
        phi_prime_norm_p: st.phi_prime_norm_p,
        a_priori_bound: st.a_priori_bound,
        active_cells: st.active_cells,
    })
}

/// `a e · exp(−1/(1 − |t − c|²/r²))`, a smooth bump of height `|a|` supported in the disc of radius `r` about `c`.
pub fn smooth_bump(
    center: Complex64,
    radius: f64,
    amplitude: Complex64,
) -> impl Fn(Complex64) -> Complex64 {
    move |t| {
        let s = (t - center).norm_sqr() / (radius * radius);
        if s >= 1.0 {
            Complex64::default()
        } else {
            amplitude * (E * (-1.0 / (1.0 - s)).exp())
        }
    }
}

/// Centered-difference `(∂f, ∂̄f)` at the cells whose four neighbours all lie inside the disc of radius `radius`.
pub fn finite_difference_derivatives(
    grid: &DiscGrid,
    f: &[Complex64],
    radius: f64,
) -> Vec<(usize, Complex64, Complex64)> {
    let h = grid.h();
    let mut out = Vec::new();
    for k in 0..grid.len() {
        if grid.center(k).norm() + 1.5 * h >= radius {
            continue;
        }
        let (c, r) = grid.lattice_position(k);
        let (c, r) = (c as isize, r as isize);
        let (Some(e), Some(w), Some(n), Some(s)) = (
            grid.cell_at(c + 1, r),
            grid.cell_at(c - 1, r),
            grid.cell_at(c, r + 1),
            grid.cell_at(c, r - 1),
        ) else {
            continue;
        };
        let dx = (f[e] - f[w]) / (2.0 * h);
        let dy = (f[n] - f[s]) / (2.0 * h);
        let i = Complex64::new(0.0, 1.0);
        out.push((k, (dx - i * dy) * 0.5, (dx + i * dy) * 0.5));
    }
    out
}

fn relative_l2(pairs: impl Iterator<Item = (Complex64, Complex64)>) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (a, b) in pairs {
        num += (a - b).norm_sqr();
        den += b.norm_sqr();
    }
    (num / den.max(f64::MIN_POSITIVE)).sqrt()
}

/// One entry of the operator battery.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
    /// Set when the check is not meaningful at this resolution; such checks do not count as failures.
    pub note: Option<String>,
}

impl CheckResult {
    fn new(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            threshold,
            passed: value <= threshold,
            note: None,
        }
    }

    /// Whether the check counts against the suite.
    pub fn counts_as_failure(&self) -> bool {
        !self.passed && self.note.is_none()
    }
}

/// Grid size below which the isometry checks are reported but not enforced.
pub const MIN_ISOMETRY_RESOLUTION: usize = 64;

/// Operator identities, isometry, branch, boundary-condition and conformal-map checks
/// on an `n`-grid with `m` boundary samples.
pub fn run_operator_suite(n: usize, m: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let grid = Arc::new(DiscGrid::new(n)?);
    let trace = BoundaryTrace::new(m)?;
    let map = ConformalMap::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let zero = Complex64::default();
    let i = Complex64::new(0.0, 1.0);

    // T(1) = conj(ζ) inside, 1/ζ outside
    let one = GridFunction::from_fn(grid.clone(), |_| Complex64::new(1.0, 0.0));
    let inside = grid.interior_cells(0.9);
    let pts: Vec<Complex64> = inside.iter().map(|&k| grid.center(k)).collect();
    let t1 = cauchy_green(&one, &pts);
    let err = t1
        .iter()
        .zip(&pts)
        .map(|(a, z)| (a - z.conj()).norm())
        .fold(0.0, f64::max);
    out.push(CheckResult::new("t_of_one_interior", err, 1e-2));
    let ext = cauchy_green(&one, &[Complex64::new(2.0, 0.0)])[0];
    out.push(CheckResult::new(
        "t_of_one_exterior",
        (ext - 0.5).norm(),
        1e-2,
    ));

    // ∂̄T f = f and S f = ∂T f by finite differences
    let bump = GridFunction::from_fn(
        grid.clone(),
        smooth_bump(Complex64::new(0.1, -0.15), 0.5, Complex64::new(1.0, 0.4)),
    );
    let tf = cauchy_green(&bump, grid.centers());
    let sf = beurling(&bump);
    let fd = finite_difference_derivatives(&grid, &tf, 0.95);
    out.push(CheckResult::new(
        "dbar_identity",
        relative_l2(fd.iter().map(|&(k, _, dbar)| (dbar, bump.channel(0)[k]))),
        5e-2,
    ));
    out.push(CheckResult::new(
        "s_matches_fd_of_t",
        relative_l2(fd.iter().map(|&(k, d, _)| (d, sf.channel(0)[k]))),
        5e-2,
    ));
    let small = GridFunction::from_fn(
        grid.clone(),
        smooth_bump(Complex64::new(-0.1, 0.2), 0.45, Complex64::new(0.7, -0.6)),
    );
    for j in [1usize, 2] {
        let t = weighted_cg(j, &small, grid.centers())?;
        let s = weighted_beurling(j, &small)?;
        let fd = finite_difference_derivatives(&grid, &t, 0.9);
        out.push(CheckResult::new(
            &format!("dbar_identity_t{j}"),
            relative_l2(fd.iter().map(|&(k, _, dbar)| (dbar, small.channel(0)[k]))),
            5e-2,
        ));
        out.push(CheckResult::new(
            &format!("s{j}_matches_fd_of_t{j}"),
            relative_l2(fd.iter().map(|&(k, d, _)| (d, s.channel(0)[k]))),
            5e-2,
        ));
        let mut iso = CheckResult::new(
            &format!("isometry_defect_s{j}"),
            isometry_defect(&small, j)?,
            3e-2,
        );
        if n < MIN_ISOMETRY_RESOLUTION && !iso.passed {
            iso.note = Some("below minimum resolution".into());
        }
        out.push(iso);
    }

    // branches of R and X
    let r0 = weight_r(zero)?;
    out.push(CheckResult::new(
        "r_at_origin",
        (r0 - Complex64::from_polar(1.0, 0.75 * PI)).norm(),
        1e-12,
    ));
    let mut arg_err: f64 = 0.0;
    let mut quartic: f64 = 0.0;
    for (&z, &arc) in trace.points().iter().zip(trace.arcs()) {
        let x = weight_x(z)?;
        let expected = match arc {
            Arc3::Gamma1 => 3.0 * FRAC_PI_4,
            Arc3::Gamma2 => FRAC_PI_4,
            Arc3::Gamma3 => 0.0,
        };
        let d = (x.arg() - expected).rem_euclid(PI);
        arg_err = arg_err.max(d.min(PI - d));
        let x4 = x.powi(4);
        quartic = quartic.max(x4.im.abs() / x4.norm());
    }
    out.push(CheckResult::new("x_argument_mod_pi", arg_err, 1e-8));
    out.push(CheckResult::new("x_fourth_power_real", quartic, 1e-8));

    // boundary conditions on random bumps
    let (mut v1, mut v2): (f64, f64) = (0.0, 0.0);
    for _ in 0..5 {
        let c = Complex64::new(rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4));
        let r = rng.gen_range(0.15..0.35);
        let a = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let f = GridFunction::from_fn(grid.clone(), smooth_bump(c, r, a));
        for (j, kind) in [(1usize, BoundaryKind::T1), (2, BoundaryKind::T2)] {
            let vals = weighted_cg(j, &f, trace.points())?;
            let sup = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let worst = boundary_violation(&trace.with_values(1, vals)?, kind) * sup.max(1.0)
                / sup.max(f64::MIN_POSITIVE);
            if j == 1 {
                v1 = v1.max(worst);
            } else {
                v2 = v2.max(worst);
            }
        }
    }
    out.push(CheckResult::new("boundary_condition_t1", v1, 2e-2));
    out.push(CheckResult::new("boundary_condition_t2", v2, 2e-2));

    // conformal map
    let norm_err = [1.0, -1.0]
        .into_iter()
        .map(|x| (map.phi(Complex64::new(x, 0.0)) - x).norm())
        .chain(std::iter::once((map.phi(i) - i).norm()))
        .fold(0.0, f64::max);
    out.push(CheckResult::new("phi_normalization", norm_err, 1e-6));
    out.push(CheckResult::new(
        "phi_boundary_correspondence",
        boundary_correspondence(&map, 4000),
        1e-3,
    ));
    let winding = map.boundary_winding(m, Complex64::new(0.0, 0.5));
    out.push(CheckResult::new("phi_winding", (winding - 1.0).abs(), 1e-9));
    let mut roundtrip: f64 = 0.0;
    for _ in 0..20 {
        let zeta = Complex64::from_polar(rng.gen_range(0.0..0.95), rng.gen_range(0.0..TAU));
        roundtrip = roundtrip.max((map.phi_inverse(map.phi(zeta))? - zeta).norm());
    }
    out.push(CheckResult::new("phi_inverse_roundtrip", roundtrip, 1e-6));

    // Ψ
    let z0 = Complex64::new(0.0, 0.5);
    let exit = map.triangle().exit_point(z0, Complex64::new(2.0, 0.0));
    out.push(CheckResult::new(
        "psi_exit_point",
        (exit - Complex64::new(2.0 / 3.0, 1.0 / 3.0)).norm(),
        1e-8,
    ));
    let psi = map.psi(Complex64::new(2.0, 0.0), z0)?;
    let direct = map.phi_inverse(Complex64::new(2.0 / 3.0, 1.0 / 3.0))?;
    out.push(CheckResult::new(
        "psi_exterior_branch",
        (psi - direct).norm(),
        1e-8,
    ));
    let on_side = Complex64::new(0.25, 0.75);
    let continuity = (map.psi(on_side, z0)? - map.psi(on_side * (1.0 + 1e-12), z0)?).norm();
    out.push(CheckResult::new(
        "psi_boundary_continuity",
        continuity,
        1e-8,
    ));
    Ok(out)
}

/// Sampled Hausdorff distance between `Φ(γ_k)` and the matching side, maximized over the three arcs.
///
/// Arcs are sampled with a parameter graded like `t⁴` toward both ends, which
/// spreads the image points evenly along each side.
pub fn boundary_correspondence(map: &ConformalMap, samples: usize) -> f64 {
    let tri = TriangleGeometry;
    let sides = tri.sides();
    let arcs = [(0.0, 0.5 * PI), (0.5 * PI, PI), (PI, TAU)];
    let mut worst: f64 = 0.0;
    for (side, (a, b)) in sides.iter().zip(arcs) {
        let image: Vec<Complex64> = (0..=samples)
            .map(|j| {
                let t = j as f64 / samples as f64;
                let g = t.powi(4) / (t.powi(4) + (1.0 - t).powi(4));
                map.phi(Complex64::from_polar(1.0, a + (b - a) * g))
            })
            .collect();
        let to_side = image.iter().map(|&z| side.distance(z)).fold(0.0, f64::max);
        let from_side = (0..=samples)
            .map(|j| {
                let p = side.start + (side.end - side.start) * (j as f64 / samples as f64);
                image
                    .iter()
                    .map(|&z| (z - p).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max);
        worst = worst.max(to_side).max(from_side);
    }
    worst
}
