//! Fixed-point construction of a `J`-holomorphic disc `Z = (z, w)` with
//! `z(bD) ⊂ bΔ`, `Re w(bD) = Re w⁰` and `Z(τ) = (z⁰, w⁰)`.
//!
//! The disc is written as
//!
//! ```text
//! z = T₂u + Φ,        w = T₁v − T₁v(τ) + w⁰,
//! ```
//!
//! so that `Z_ζ̄ = (u, v)` and `Z_ζ = (S₂u + Φ′, S₁v)`. For fixed `(z, w)` the
//! densities solve `Y = A(z, w) conj(S Y + (Φ′, 0))`, a contraction in `L^p`
//! when `a·s < 1`. The outer loop is a damped Picard iteration on
//! `(z, w, τ) ↦ (z̃, w̃, Ψ(z⁰ − T₂u(τ)))`.

use std::sync::Arc;

use log::{debug, info, warn};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conformal::ConformalMap;
use crate::error::{invalid, Error, Result};
use crate::grid::{lp_norm, BoundaryTrace, DiscGrid, GridFunction};
use crate::structure::{validate_structure, ProbeSet, StructureField, DEFAULT_NORM_MARGIN};
use crate::verify::{diagnose, Diagnostics};
use crate::weighted::{Weight, WeightedOperators};

/// Iteration controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    /// Lebesgue exponent of the inner contraction, in `(2, 8/3)`.
    pub p: f64,
    pub inner_tol: f64,
    pub inner_max_iters: usize,
    /// Sup-norm change of `(z, w, τ)` under one undamped map application.
    pub outer_tol: f64,
    pub outer_max_iters: usize,
    /// Damping `θ ∈ (0, 1]`.
    pub theta: f64,
    /// Sup-norm cap on `(z, w)`; exceeding it aborts with a divergence error.
    pub guard: f64,
    /// Largest accepted sampled `‖A‖₂`.
    pub norm_margin: f64,
    /// Undamped steps taken after the damped loop has met `outer_tol`.
    pub polish_iters: usize,
    /// Target change of the polish phase; also caps the inner tolerance during polishing.
    pub polish_tol: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            p: 2.2,
            inner_tol: 1e-9,
            inner_max_iters: 200,
            outer_tol: 1e-6,
            outer_max_iters: 500,
            theta: 0.5,
            guard: 1e3,
            norm_margin: DEFAULT_NORM_MARGIN,
            polish_iters: 30,
            polish_tol: 1e-12,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 2.0 && self.p < 8.0 / 3.0) {
            return Err(invalid(format!("p must lie in (2, 8/3) (got {})", self.p)));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(invalid(format!(
                "damping must lie in (0, 1] (got {})",
                self.theta
            )));
        }
        for (name, v) in [
            ("inner_tol", self.inner_tol),
            ("outer_tol", self.outer_tol),
            ("guard", self.guard),
            ("polish_tol", self.polish_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!(
                    "{name} must be positive and finite (got {v})"
                )));
            }
        }
        if self.inner_max_iters == 0 || self.outer_max_iters == 0 {
            return Err(invalid("iteration limits must be positive"));
        }
        if !(self.norm_margin > 0.0 && self.norm_margin < 1.0) {
            return Err(invalid(format!(
                "norm_margin must lie in (0, 1) (got {})",
                self.norm_margin
            )));
        }
        Ok(())
    }
}

/// Result of one inner solve.
#[derive(Debug, Clone)]
pub struct InnerSolution {
    /// `Y = (u, v)`, `dim` channels.
    pub y: GridFunction,
    /// `(S₂u, S₁v)` on every cell (without `Φ′`).
    pub sy: GridFunction,
    pub iterations: usize,
    /// Last observed `‖Y_{k+1} − Y_k‖ / ‖Y_k − Y_{k−1}‖`.
    pub contraction_ratio: f64,
    /// `‖S₂u‖_p / ‖u‖_p`, 0 when `u = 0`.
    pub s_ratio_2: f64,
    /// `‖S₁v‖_p / ‖v‖_p`, 0 when `v = 0`.
    pub s_ratio_1: f64,
    /// `‖SY‖_p / ‖Y‖_p`.
    pub s_ratio: f64,
    pub active_cells: usize,
}

/// `(z, w)` on the grid cells and the boundary trace.
#[derive(Debug, Clone)]
pub struct Assembled {
    pub z: Vec<Complex64>,
    /// `dim − 1` channels.
    pub w: GridFunction,
    pub z_trace: Vec<Complex64>,
    /// Channel-major, `dim − 1` channels.
    pub w_trace: Vec<Complex64>,
    /// `T₂u` on the trace.
    pub t2u_trace: Vec<Complex64>,
    /// `T₁v` on the trace, channel-major.
    pub t1v_trace: Vec<Complex64>,
}

/// Counters and empirical constants of a solve.
#[derive(Debug, Clone, Default, Serialize)]
pub struct SolveStats {
    pub converged: bool,
    pub outer_iterations: usize,
    pub inner_iterations_total: usize,
    pub inner_iterations_last: usize,
    pub last_change: f64,
    pub contraction_ratio_last: f64,
    /// Largest `‖S₁v‖/‖v‖` seen.
    pub s_emp_1: f64,
    /// Largest `‖S₂u‖/‖u‖` seen.
    pub s_emp_2: f64,
    /// Largest `‖SY‖/‖Y‖` seen.
    pub s_emp: f64,
    pub a_measured: f64,
    pub a_declared: f64,
    pub y_norm_p: f64,
    pub phi_prime_norm_p: f64,
    /// `a‖Φ′‖_p / (1 − a·s_emp)`; infinite when `a·s_emp ≥ 1`.
    pub a_priori_bound: f64,
    pub active_cells: usize,
}

/// A computed disc.
#[derive(Debug, Clone)]
pub struct DiscSolution {
    pub grid: Arc<DiscGrid>,
    pub trace: BoundaryTrace,
    pub z0: Complex64,
    pub w0: Vec<Complex64>,
    pub tau: Complex64,
    /// `Z_ζ̄ = (u, v)`.
    pub y: GridFunction,
    /// `Z_ζ = (S₂u + Φ′, S₁v)`.
    pub z_zeta: GridFunction,
    pub phi_prime: Vec<Complex64>,
    pub z: Vec<Complex64>,
    pub w: GridFunction,
    pub z_trace: Vec<Complex64>,
    pub w_trace: Vec<Complex64>,
    pub t2u_trace: Vec<Complex64>,
    pub t1v_trace: Vec<Complex64>,
    /// `z` at the prevertices `1, i, −1`.
    pub z_corners: [Complex64; 3],
    /// `w` at the prevertices, channel-major.
    pub w_corners: Vec<Complex64>,
    /// `z(τ)` and `w(τ)` evaluated by the same quadrature as the grid values.
    pub z_at_tau: Complex64,
    pub w_at_tau: Vec<Complex64>,
    pub stats: SolveStats,
    pub diagnostics: Option<Diagnostics>,
}

impl DiscSolution {
    pub fn dim(&self) -> usize {
        self.y.channels()
    }
}

/// Solver for one structure field, grid and boundary trace.
///
/// Kernel columns are cached across outer iterations and across calls to
/// [`solve`](Self::solve).
#[derive(Debug)]
pub struct DiscSolver<'f> {
    field: &'f dyn StructureField,
    params: SolverParams,
    map: Arc<ConformalMap>,
    ops: WeightedOperators,
    phi_grid: Vec<Complex64>,
    phi_prime_grid: Vec<Complex64>,
    phi_trace: Vec<Complex64>,
    phi_prime_norm: f64,
    a_measured: f64,
}

#[derive(Debug, Clone)]
struct State {
    z: Vec<Complex64>,
    w: GridFunction,
    tau: Complex64,
}

#[derive(Debug)]
struct Step {
    next: State,
    inner: InnerSolution,
    change: f64,
}

const CORNERS: [Complex64; 3] = [
    Complex64 { re: 1.0, im: 0.0 },
    Complex64 { re: 0.0, im: 1.0 },
    Complex64 { re: -1.0, im: 0.0 },
];

impl<'f> DiscSolver<'f> {
    pub fn new(
        field: &'f dyn StructureField,
        n: usize,
        m: usize,
        params: SolverParams,
    ) -> Result<Self> {
        Self::with_map(field, n, m, params, Arc::new(ConformalMap::new()))
    }

    /// Validates the parameters and the field (sampled on `Φ` of the grid) and caches `Φ`, `Φ′`.
    pub fn with_map(
        field: &'f dyn StructureField,
        n: usize,
        m: usize,
        params: SolverParams,
        map: Arc<ConformalMap>,
    ) -> Result<Self> {
        params.validate()?;
        if field.dim() == 0 {
            return Err(Error::InvalidStructure(
                "dimension must be at least 1".into(),
            ));
        }
        let declared = field.norm_bound();
        if !(0.0..1.0).contains(&declared) {
            return Err(Error::InvalidStructure(format!(
                "declared norm bound {declared} is not in [0, 1)"
            )));
        }
        let grid = Arc::new(DiscGrid::new(n)?);
        let trace = BoundaryTrace::new(m)?;
        let phi_grid: Vec<Complex64> = grid.centers().iter().map(|&t| map.phi(t)).collect();
        let phi_prime_grid = grid
            .centers()
            .iter()
            .map(|&t| map.phi_prime(t))
            .collect::<Result<Vec<_>>>()?;
        let phi_trace = trace.points().iter().map(|&t| map.phi(t)).collect();

        let probe = ProbeSet::standard(field, &phi_grid, 1, 0x5eed);
        let a_measured = validate_structure(field, &probe)?;
        if a_measured > params.norm_margin {
            return Err(Error::InvalidStructure(format!(
                "sampled ‖A‖₂ = {a_measured:.4} exceeds the accepted margin {}",
                params.norm_margin
            )));
        }
        if a_measured > declared * (1.0 + 1e-9) + 1e-12 {
            return Err(Error::InvalidStructure(format!(
                "sampled ‖A‖₂ = {a_measured:.4} exceeds the declared bound {declared}"
            )));
        }
        let phi_prime_norm = lp_norm(
            &GridFunction::from_values(grid.clone(), 1, phi_prime_grid.clone())?,
            params.p,
        )?;
        Ok(Self {
            field,
            params,
            map,
            ops: WeightedOperators::new(grid, trace),
            phi_grid,
            phi_prime_grid,
            phi_trace,
            phi_prime_norm,
            a_measured,
        })
    }

    pub fn grid(&self) -> &Arc<DiscGrid> {
        self.ops.grid()
    }

    pub fn params(&self) -> &SolverParams {
        &self.params
    }

    pub fn map(&self) -> &ConformalMap {
        &self.map
    }

    pub fn operators(&self) -> &WeightedOperators {
        &self.ops
    }

    pub fn phi_on_grid(&self) -> &[Complex64] {
        &self.phi_grid
    }

    pub fn phi_prime_on_grid(&self) -> &[Complex64] {
        &self.phi_prime_grid
    }

    pub fn a_measured(&self) -> f64 {
        self.a_measured
    }

    fn dim(&self) -> usize {
        self.field.dim()
    }

    /// `A(z_k, w_k)` on every cell where it is nonzero.
    fn structure_on_grid(
        &self,
        z: &[Complex64],
        w: &GridFunction,
    ) -> Vec<(usize, DMatrix<Complex64>)> {
        let m = self.dim() - 1;
        let mut wk = vec![Complex64::default(); m];
        let mut out = Vec::new();
        for (k, &zk) in z.iter().enumerate() {
            for (c, slot) in wk.iter_mut().enumerate() {
                *slot = w.channel(c)[k];
            }
            let a = self.field.eval(zk, &wk);
            if a.iter().any(|x| *x != Complex64::default()) {
                out.push((k, a));
            }
        }
        out
    }

    /// `(S₂ y₀, S₁ y₁, …)` on the listed rows, row-major per channel.
    fn apply_s_rows(&self, y: &GridFunction, rows: &[usize]) -> Vec<Vec<Complex64>> {
        (0..y.channels())
            .map(|c| {
                let w = if c == 0 { Weight::Q2 } else { Weight::Q1 };
                self.ops.s_on_rows(w, y.channel(c), rows)
            })
            .collect()
    }

    fn apply_s_grid(&self, y: &GridFunction) -> GridFunction {
        let rows: Vec<usize> = (0..self.grid().len()).collect();
        let vals = self.apply_s_rows(y, &rows);
        let mut out = GridFunction::zeros(self.grid().clone(), y.channels());
        for (c, v) in vals.into_iter().enumerate() {
            out.channel_mut(c).copy_from_slice(&v);
        }
        out
    }

    /// Picard iteration for `Y = A(z, w) conj(S Y + (Φ′, 0))` from `Y = 0`.
    pub fn solve_inner(&self, z: &[Complex64], w: &GridFunction) -> Result<InnerSolution> {
        self.solve_inner_to(z, w, self.params.inner_tol)
    }

    fn solve_inner_to(&self, z: &[Complex64], w: &GridFunction, tol: f64) -> Result<InnerSolution> {
        let grid = self.grid().clone();
        let n = self.dim();
        let p = self.params.p;
        let structure = self.structure_on_grid(z, w);
        let rows: Vec<usize> = structure.iter().map(|(k, _)| *k).collect();

        let mut y = GridFunction::zeros(grid.clone(), n);
        let mut prev_diff = f64::NAN;
        let mut ratio = 0.0;
        let mut expanding = 0usize;
        let mut iterations = 0;
        let mut rhs = DVector::<Complex64>::zeros(n);
        loop {
            iterations += 1;
            let s = self.apply_s_rows(&y, &rows);
            let mut next = GridFunction::zeros(grid.clone(), n);
            for (idx, (k, a)) in structure.iter().enumerate() {
                rhs[0] = (s[0][idx] + self.phi_prime_grid[*k]).conj();
                for c in 1..n {
                    rhs[c] = s[c][idx].conj();
                }
                let out = a * &rhs;
                for c in 0..n {
                    next.channel_mut(c)[*k] = out[c];
                }
            }
            let mut delta = next.clone();
            for (d, old) in delta.values_mut().iter_mut().zip(y.values()) {
                *d -= old;
            }
            let diff = lp_norm(&delta, p)?;
            let prev_norm = lp_norm(&y, p)?;
            if prev_diff.is_finite() && prev_diff > 0.0 {
                ratio = diff / prev_diff;
                if ratio >= 1.0 {
                    expanding += 1;
                } else {
                    expanding = 0;
                }
                if expanding >= 10 {
                    return Err(Error::ContractionFailure {
                        ratio,
                        steps: expanding,
                    });
                }
            }
            debug!("inner {iterations}: ‖ΔY‖ = {diff:.3e}, ratio {ratio:.3}");
            prev_diff = diff;
            y = next;
            if diff <= tol * prev_norm.max(1.0) {
                break;
            }
            if !diff.is_finite() {
                return Err(Error::Numeric(
                    "inner iteration produced non-finite values".into(),
                ));
            }
            if iterations >= self.params.inner_max_iters {
                warn!("inner iteration stopped at the limit of {iterations} steps (‖ΔY‖ = {diff:.3e})");
                break;
            }
        }

        let sy = self.apply_s_grid(&y);
        let ratio_of = |num: &GridFunction, den: &GridFunction| -> Result<f64> {
            let d = lp_norm(den, p)?;
            Ok(if d > 0.0 { lp_norm(num, p)? / d } else { 0.0 })
        };
        let channel = |f: &GridFunction, cs: std::ops::Range<usize>| -> Result<GridFunction> {
            let m = grid.len();
            GridFunction::from_values(
                grid.clone(),
                cs.len(),
                f.values()[cs.start * m..cs.end * m].to_vec(),
            )
        };
        let s_ratio_2 = ratio_of(&channel(&sy, 0..1)?, &channel(&y, 0..1)?)?;
        let s_ratio_1 = if n > 1 {
            ratio_of(&channel(&sy, 1..n)?, &channel(&y, 1..n)?)?
        } else {
            0.0
        };
        let s_ratio = ratio_of(&sy, &y)?;
        Ok(InnerSolution {
            y,
            sy,
            iterations,
            contraction_ratio: ratio,
            s_ratio_2,
            s_ratio_1,
            s_ratio,
            active_cells: rows.len(),
        })
    }

    /// `z = T₂u + Φ`, `w = T₁v − T₁v(τ) + w⁰` on the grid and, if requested, the trace.
    pub fn assemble_disc(
        &self,
        y: &GridFunction,
        tau: Complex64,
        w0: &[Complex64],
        with_trace: bool,
    ) -> Assembled {
        let grid = self.grid().clone();
        let m = self.dim() - 1;
        let t2u = self.ops.t_on_grid(Weight::Q2, y.channel(0));
        let z: Vec<Complex64> = t2u.iter().zip(&self.phi_grid).map(|(a, b)| a + b).collect();
        let mut w = GridFunction::zeros(grid, m);
        let trace_len = self.ops.trace().len();
        let mut w_trace = Vec::with_capacity(m * trace_len);
        let mut t1v_trace = Vec::with_capacity(m * trace_len);
        for c in 0..m {
            let v = y.channel(c + 1);
            let at_tau = self.ops.t_at(Weight::Q1, v, &[tau])[0];
            let t1v = self.ops.t_on_grid(Weight::Q1, v);
            for (slot, val) in w.channel_mut(c).iter_mut().zip(&t1v) {
                *slot = *val - at_tau + w0[c];
            }
            if with_trace {
                let tr = self.ops.t_on_trace(Weight::Q1, v);
                w_trace.extend(tr.iter().map(|val| *val - at_tau + w0[c]));
                t1v_trace.extend(tr);
            }
        }
        let (z_trace, t2u_trace) = if with_trace {
            let tr = self.ops.t_on_trace(Weight::Q2, y.channel(0));
            (
                tr.iter().zip(&self.phi_trace).map(|(a, b)| a + b).collect(),
                tr,
            )
        } else {
            (Vec::new(), Vec::new())
        };
        Assembled {
            z,
            w,
            z_trace,
            w_trace,
            t2u_trace,
            t1v_trace,
        }
    }

    /// `τ′ = Ψ(z⁰ − T₂u(τ), z⁰)`.
    pub fn update_tau(&self, u: &[Complex64], tau: Complex64, z0: Complex64) -> Result<Complex64> {
        let t2u = self.ops.t_at(Weight::Q2, u, &[tau])[0];
        self.map.psi(z0 - t2u, z0)
    }

    fn check_target(&self, z0: Complex64, w0: &[Complex64]) -> Result<()> {
        let depth = self.map.triangle().depth(z0);
        if depth.is_nan() || depth <= 0.0 {
            return Err(invalid(format!("z0 = {z0} must lie in the open triangle")));
        }
        if w0.len() != self.dim() - 1 {
            return Err(invalid(format!(
                "w0 has {} components, the structure needs {}",
                w0.len(),
                self.dim() - 1
            )));
        }
        if w0.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(invalid("w0 must be finite"));
        }
        Ok(())
    }

    /// One application of the map at the state `(z, w, τ)`.
    fn step(
        &self,
        state: &State,
        z0: Complex64,
        w0: &[Complex64],
        inner_tol: f64,
        stats: &mut SolveStats,
    ) -> Result<Step> {
        let inner = self.solve_inner_to(&state.z, &state.w, inner_tol)?;
        stats.outer_iterations += 1;
        stats.inner_iterations_total += inner.iterations;
        stats.inner_iterations_last = inner.iterations;
        stats.contraction_ratio_last = inner.contraction_ratio;
        stats.s_emp_1 = stats.s_emp_1.max(inner.s_ratio_1);
        stats.s_emp_2 = stats.s_emp_2.max(inner.s_ratio_2);
        stats.s_emp = stats
            .s_emp
            .max(inner.s_ratio)
            .max(inner.s_ratio_1)
            .max(inner.s_ratio_2);
        stats.active_cells = inner.active_cells;
        let a_s = self.field.norm_bound() * stats.s_emp;
        if a_s >= 1.0 {
            return Err(Error::ContractionFailure {
                ratio: a_s,
                steps: inner.iterations,
            });
        }

        let asm = self.assemble_disc(&inner.y, state.tau, w0, false);
        let mut tau = self.update_tau(inner.y.channel(0), state.tau, z0)?;
        if tau.norm() > 1.0 {
            tau /= tau.norm();
        }
        let sup = asm
            .z
            .iter()
            .map(|v| v.norm())
            .chain(asm.w.values().iter().map(|v| v.norm()))
            .fold(0.0, f64::max);
        if !sup.is_finite() || sup > self.params.guard {
            return Err(Error::Divergence {
                sup_norm: sup,
                guard: self.params.guard,
            });
        }
        let change = asm
            .z
            .iter()
            .zip(&state.z)
            .map(|(a, b)| (a - b).norm())
            .chain(
                asm.w
                    .values()
                    .iter()
                    .zip(state.w.values())
                    .map(|(a, b)| (a - b).norm()),
            )
            .fold((tau - state.tau).norm(), f64::max);
        stats.last_change = change;
        info!(
            "outer {}: change {change:.3e}, inner steps {}, |τ| {:.6}, s_emp {:.4}",
            stats.outer_iterations,
            inner.iterations,
            state.tau.norm(),
            stats.s_emp
        );
        Ok(Step {
            next: State {
                z: asm.z,
                w: asm.w,
                tau,
            },
            inner,
            change,
        })
    }

    /// Damped fixed-point iteration from the `A ≡ 0` solution `(Φ, w⁰, Φ⁻¹(z⁰))`.
    ///
    /// Once a step changes the state by at most `outer_tol`, up to
    /// `polish_iters` undamped steps follow (with the inner tolerance capped by
    /// `polish_tol`), so that the reported disc and the densities it was built
    /// from agree to well below `outer_tol`. The returned solution is the
    /// iterate with the smallest change and carries filled diagnostics. When
    /// the iteration limit is reached, the error carries that iterate instead.
    pub fn solve(&self, z0: Complex64, w0: &[Complex64]) -> Result<DiscSolution> {
        self.check_target(z0, w0)?;
        let grid = self.grid().clone();
        let m = self.dim() - 1;
        let theta = self.params.theta;

        let mut w = GridFunction::zeros(grid, m);
        for c in 0..m {
            w.channel_mut(c).fill(w0[c]);
        }
        let mut state = State {
            z: self.phi_grid.clone(),
            w,
            tau: self.map.phi_inverse(z0)?,
        };
        let mut stats = SolveStats {
            a_measured: self.a_measured,
            a_declared: self.field.norm_bound(),
            phi_prime_norm_p: self.phi_prime_norm,
            ..SolveStats::default()
        };
        let mut best: Option<(f64, InnerSolution, Complex64)> = None;

        while stats.outer_iterations < self.params.outer_max_iters {
            let step = self.step(&state, z0, w0, self.params.inner_tol, &mut stats)?;
            let converged = step.change <= self.params.outer_tol;
            if best.as_ref().is_none_or(|(c, _, _)| step.change < *c) {
                best = Some((step.change, step.inner.clone(), state.tau));
            }
            if converged {
                stats.converged = true;
                let inner_tol = self.params.inner_tol.min(self.params.polish_tol);
                let mut prev = step.change;
                state = step.next;
                for _ in 0..self.params.polish_iters {
                    if prev <= self.params.polish_tol {
                        break;
                    }
                    let polish = self.step(&state, z0, w0, inner_tol, &mut stats)?;
                    let improved = polish.change < prev;
                    if improved {
                        best = Some((polish.change, polish.inner, state.tau));
                    }
                    prev = polish.change;
                    state = polish.next;
                    if !improved {
                        break;
                    }
                }
                let (change, inner, tau) = best.expect("a step was recorded");
                stats.last_change = change;
                return self.finish(inner, tau, z0, w0, stats);
            }
            let next = step.next;
            for (a, b) in state.z.iter_mut().zip(&next.z) {
                *a = *a * (1.0 - theta) + b * theta;
            }
            for (a, b) in state.w.values_mut().iter_mut().zip(next.w.values()) {
                *a = *a * (1.0 - theta) + b * theta;
            }
            state.tau = state.tau * (1.0 - theta) + next.tau * theta;
            if state.tau.norm() > 1.0 {
                state.tau /= state.tau.norm();
            }
        }

        let iterations = stats.outer_iterations;
        let (last_change, inner, tau) = best.expect("at least one outer iteration ran");
        stats.last_change = last_change;
        let solution = self.finish(inner, tau, z0, w0, stats)?;
        Err(Error::NonConvergence {
            iterations,
            last_change,
            best: Box::new(solution),
        })
    }

    fn finish(
        &self,
        inner: InnerSolution,
        tau: Complex64,
        z0: Complex64,
        w0: &[Complex64],
        mut stats: SolveStats,
    ) -> Result<DiscSolution> {
        let grid = self.grid().clone();
        let n = self.dim();
        let asm = self.assemble_disc(&inner.y, tau, w0, true);

        let u = inner.y.channel(0);
        let t2u_corners = self.ops.t_at(Weight::Q2, u, &CORNERS);
        let z_corners = [0, 1, 2].map(|k| t2u_corners[k] + self.map.phi(CORNERS[k]));
        let z_at_tau = self.ops.t_at(Weight::Q2, u, &[tau])[0] + self.map.phi(tau);
        let mut w_corners = Vec::with_capacity(3 * (n - 1));
        let mut w_at_tau = Vec::with_capacity(n - 1);
        for c in 0..n - 1 {
            let v = inner.y.channel(c + 1);
            // the same evaluation as the constant subtracted in `assemble_disc`, so this is exactly w⁰
            let at_tau = self.ops.t_at(Weight::Q1, v, &[tau])[0];
            let value = self.ops.t_at(Weight::Q1, v, &[tau])[0];
            w_at_tau.push(value - at_tau + w0[c]);
            w_corners.extend(
                self.ops
                    .t_at(Weight::Q1, v, &CORNERS)
                    .iter()
                    .map(|x| x - at_tau + w0[c]),
            );
        }

        let mut z_zeta = inner.sy.clone();
        for (a, b) in z_zeta.channel_mut(0).iter_mut().zip(&self.phi_prime_grid) {
            *a += b;
        }
        stats.y_norm_p = lp_norm(&inner.y, self.params.p)?;
        let a = self.field.norm_bound();
        stats.a_priori_bound = if a * stats.s_emp < 1.0 {
            a * self.phi_prime_norm / (1.0 - a * stats.s_emp)
        } else {
            f64::INFINITY
        };

        let mut solution = DiscSolution {
            grid,
            trace: self.ops.trace().clone(),
            z0,
            w0: w0.to_vec(),
            tau,
            y: inner.y,
            z_zeta,
            phi_prime: self.phi_prime_grid.clone(),
            z: asm.z,
            w: asm.w,
            z_trace: asm.z_trace,
            w_trace: asm.w_trace,
            t2u_trace: asm.t2u_trace,
            t1v_trace: asm.t1v_trace,
            z_corners,
            w_corners,
            z_at_tau,
            w_at_tau,
            stats,
            diagnostics: None,
        };
        solution.diagnostics = Some(diagnose(&solution, self.field, &self.map, self.params.p)?);
        Ok(solution)
    }
}

/// One-shot solve on an `n × n` grid with `m` boundary samples.
pub fn solve_disc(
    field: &dyn StructureField,
    z0: Complex64,
    w0: &[Complex64],
    n: usize,
    m: usize,
    params: SolverParams,
) -> Result<DiscSolution> {
    DiscSolver::new(field, n, m, params)?.solve(z0, w0)
}
