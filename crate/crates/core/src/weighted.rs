//! Weighted Cauchy-Green operators `T_1`, `T_2` and their derivatives `S_1`, `S_2`.
//!
//! For a weight `Q`,
//!
//! ```text
//! T_Q f(ζ) = Q(ζ) ( T(f/Q)(ζ) + ζ^{-1} conj(T(f/Q)(1/conj ζ)) )
//! S_Q f(ζ) = ∂_ζ T_Q f(ζ)            (principal value)
//! ```
//!
//! with `Q_1 = ζ - 1` and `Q_2 = R`, the quartic-root weight vanishing at the
//! prevertices `1, -1, i`. On the unit circle the bracket is `conj(ζ)^{1/2}`
//! times a real number, so `T_1 f` is imaginary there and `T_2 f` is a real
//! multiple of `X = R / sqrt(ζ)`. Both operators are real-linear only.

use std::f64::consts::{FRAC_1_PI, PI, TAU};
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::cauchy::{
    cell_integral_inv, cell_integral_inv_sq, reflected_integral, reflected_integral_dz,
};
use crate::error::{invalid, Result};
use crate::grid::{Arc3, BoundaryTrace, DiscGrid, GridFunction};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// The two weights of the construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Weight {
    /// `Q(ζ) = ζ - 1`; boundary values of `T_1 f` are purely imaginary.
    Q1,
    /// `Q(ζ) = R(ζ)`; boundary values of `T_2 f` lie on the lines through 0 parallel to the sides of the triangle.
    Q2,
}

impl Weight {
    pub fn from_index(j: usize) -> Result<Self> {
        match j {
            1 => Ok(Weight::Q1),
            2 => Ok(Weight::Q2),
            _ => Err(invalid(format!(
                "weighted operators exist for j = 1, 2 only (got {j})"
            ))),
        }
    }

    pub fn index(self) -> usize {
        match self {
            Weight::Q1 => 1,
            Weight::Q2 => 2,
        }
    }

    /// Marked boundary points with the orders of vanishing of the weight.
    pub fn marked_points(self) -> &'static [(Complex64, f64)] {
        const Q1_MARKS: [(Complex64, f64); 1] = [(ONE, 1.0)];
        const Q2_MARKS: [(Complex64, f64); 3] = [
            (ONE, 0.25),
            (Complex64 { re: -1.0, im: 0.0 }, 0.25),
            (I, 0.5),
        ];
        match self {
            Weight::Q1 => &Q1_MARKS,
            Weight::Q2 => &Q2_MARKS,
        }
    }

    pub fn value(self, zeta: Complex64) -> Complex64 {
        match self {
            Weight::Q1 => zeta - 1.0,
            Weight::Q2 => r_unchecked(zeta),
        }
    }

    /// `Q'(ζ)`; infinite at the marked points of `Q2`.
    pub fn derivative(self, zeta: Complex64) -> Complex64 {
        match self {
            Weight::Q1 => ONE,
            Weight::Q2 => {
                let r = r_unchecked(zeta);
                r * ((zeta - 1.0).inv() * 0.25 + (zeta + 1.0).inv() * 0.25 + (zeta - I).inv() * 0.5)
            }
        }
    }
}

fn r_unchecked(zeta: Complex64) -> Complex64 {
    let phase = Complex64::from_polar(1.0, 0.75 * PI);
    let log = (ONE - zeta).ln() * 0.25 + (ONE + zeta).ln() * 0.25 + (ONE + I * zeta).ln() * 0.5;
    if !log.re.is_finite() {
        return ZERO;
    }
    phase * log.exp()
}

/// `R(ζ) = e^{3πi/4} (ζ-1)^{1/4} (ζ+1)^{1/4} (ζ-i)^{1/2}` on the closed disc,
/// on the branch continuous there with `R(0) = e^{3πi/4}`.
///
/// Each factor is taken as `(1 - conj(ζ_k) ζ)^α` with the principal power, which
/// puts its cut on the ray leaving the disc radially at `ζ_k`.
pub fn weight_r(zeta: Complex64) -> Result<Complex64> {
    if zeta.norm() > 1.0 + 1e-12 {
        return Err(invalid(format!(
            "R is only defined on the closed disc (got {zeta})"
        )));
    }
    Ok(r_unchecked(zeta))
}

/// `sqrt(ζ)` with the cut along the positive real axis, so that `sqrt(-1) = i`.
pub fn sqrt_cut_positive(zeta: Complex64) -> Complex64 {
    let mut theta = zeta.im.atan2(zeta.re);
    if theta < 0.0 {
        theta += TAU;
    }
    Complex64::from_polar(zeta.norm().sqrt(), 0.5 * theta)
}

/// `X(ζ) = R(ζ) / sqrt(ζ)` on the unit circle.
pub fn weight_x(zeta: Complex64) -> Result<Complex64> {
    if (zeta.norm() - 1.0).abs() > 1e-9 {
        return Err(invalid(format!(
            "X is evaluated on the unit circle only (got {zeta})"
        )));
    }
    if Weight::Q2
        .marked_points()
        .iter()
        .any(|(p, _)| (zeta - p).norm() < 1e-12)
    {
        return Err(invalid(format!(
            "X is not defined at the marked point {zeta}"
        )));
    }
    Ok(r_unchecked(zeta) / sqrt_cut_positive(zeta))
}

/// Kernel sums `Σ g I1`, `Σ conj(g) R1` and, optionally, `Σ g I2`, `Σ conj(g) R2` at one point.
#[derive(Debug, Clone, Copy, Default)]
struct KernelSums {
    i1: Complex64,
    r1: Complex64,
    i2: Complex64,
    r2: Complex64,
}

impl KernelSums {
    fn transform(&self, w: Weight, zeta: Complex64) -> Complex64 {
        w.value(zeta) * (self.i1 + self.r1) * (-FRAC_1_PI)
    }

    fn derivative(&self, w: Weight, zeta: Complex64) -> Complex64 {
        (w.value(zeta) * (self.i2 + self.r2) + w.derivative(zeta) * (self.i1 + self.r1))
            * (-FRAC_1_PI)
    }
}

/// Nonzero entries of `f / Q` as `(cell, value)` in increasing cell order.
fn quotient_sources(grid: &DiscGrid, w: Weight, f: &[Complex64]) -> Vec<(usize, Complex64)> {
    f.iter()
        .enumerate()
        .filter(|(_, v)| **v != ZERO)
        .map(|(k, &v)| (k, v / w.value(grid.center(k))))
        .collect()
}

fn sums_at(
    grid: &DiscGrid,
    sources: &[(usize, Complex64)],
    zeta: Complex64,
    derivatives: bool,
) -> KernelSums {
    let h = grid.h();
    let mut s = KernelSums::default();
    for &(k, g) in sources {
        let t = grid.center(k);
        let gc = g.conj();
        s.i1 += g * cell_integral_inv(t, h, zeta);
        s.r1 += gc * reflected_integral(t, h, zeta);
        if derivatives {
            s.i2 += g * cell_integral_inv_sq(t, h, zeta);
            s.r2 += gc * reflected_integral_dz(t, h, zeta);
        }
    }
    s
}

/// `T_j f` at arbitrary points of the closed disc, per channel (channel-major output).
pub fn weighted_cg(j: usize, f: &GridFunction, eval: &[Complex64]) -> Result<Vec<Complex64>> {
    let w = Weight::from_index(j)?;
    if let Some(z) = eval.iter().find(|z| z.norm() > 1.0 + 1e-12) {
        return Err(invalid(format!(
            "weighted transforms are evaluated on the closed disc (got {z})"
        )));
    }
    let grid = f.grid();
    let mut out = Vec::with_capacity(eval.len() * f.channels());
    for c in 0..f.channels() {
        let sources = quotient_sources(grid, w, f.channel(c));
        let vals: Vec<Complex64> = eval
            .par_iter()
            .map(|&z| sums_at(grid, &sources, z, false).transform(w, z))
            .collect();
        out.extend(vals);
    }
    Ok(out)
}

/// `S_j f` at the grid cells.
pub fn weighted_beurling(j: usize, f: &GridFunction) -> Result<GridFunction> {
    let w = Weight::from_index(j)?;
    let grid = f.grid().clone();
    let mut out = GridFunction::zeros(grid.clone(), f.channels());
    for c in 0..f.channels() {
        let sources = quotient_sources(&grid, w, f.channel(c));
        let vals: Vec<Complex64> = grid
            .centers()
            .par_iter()
            .map(|&z| sums_at(&grid, &sources, z, true).derivative(w, z))
            .collect();
        out.channel_mut(c).copy_from_slice(&vals);
    }
    Ok(out)
}

/// Which boundary condition a trace is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// `Re g = 0`.
    T1,
    /// `Im((1+i) g) = 0` on γ1, `Im((1-i) g) = 0` on γ2, `Im g = 0` on γ3.
    T2,
}

/// Rotation that maps the admissible boundary line of each arc onto the real axis.
pub fn arc_rotation(arc: Arc3) -> Complex64 {
    match arc {
        Arc3::Gamma1 => Complex64::new(1.0, 1.0),
        Arc3::Gamma2 => Complex64::new(1.0, -1.0),
        Arc3::Gamma3 => ONE,
    }
}

/// Largest violation of the boundary condition over the trace (all channels),
/// normalized by `max(1, sup|g|)`. A trace without values gives 0.
pub fn boundary_violation(trace: &BoundaryTrace, kind: BoundaryKind) -> f64 {
    let mut sup: f64 = 0.0;
    let mut worst: f64 = 0.0;
    for c in 0..trace.channels() {
        let Some(values) = trace.channel(c) else {
            continue;
        };
        for (g, &arc) in values.iter().zip(trace.arcs()) {
            sup = sup.max(g.norm());
            let v = match kind {
                BoundaryKind::T1 => g.re.abs(),
                BoundaryKind::T2 => (arc_rotation(arc) * g).im.abs(),
            };
            worst = worst.max(v);
        }
    }
    worst / sup.max(1.0)
}

#[derive(Debug)]
struct Column {
    i1: Vec<Complex64>,
    r1: Vec<Complex64>,
    i2: Vec<Complex64>,
    r2: Vec<Complex64>,
}

/// Lazily cached kernel columns for repeated application of `T_j`, `S_j` on a
/// fixed grid and boundary trace.
///
/// A column holds the kernels of one source cell at every grid cell and every
/// trace point; it is built the first time a density is nonzero on that cell.
/// Results are identical to [`weighted_cg`] and [`weighted_beurling`].
#[derive(Debug)]
pub struct WeightedOperators {
    grid: Arc<DiscGrid>,
    trace: BoundaryTrace,
    grid_columns: Vec<OnceLock<Column>>,
    trace_columns: Vec<OnceLock<Column>>,
}

impl WeightedOperators {
    pub fn new(grid: Arc<DiscGrid>, trace: BoundaryTrace) -> Self {
        let cells = grid.len();
        Self {
            grid,
            trace,
            grid_columns: (0..cells).map(|_| OnceLock::new()).collect(),
            trace_columns: (0..cells).map(|_| OnceLock::new()).collect(),
        }
    }

    pub fn grid(&self) -> &Arc<DiscGrid> {
        &self.grid
    }

    pub fn trace(&self) -> &BoundaryTrace {
        &self.trace
    }

    /// Number of source columns built so far (grid rows).
    pub fn cached_columns(&self) -> usize {
        self.grid_columns
            .iter()
            .filter(|c| c.get().is_some())
            .count()
    }

    fn grid_column(&self, k: usize) -> &Column {
        self.grid_columns[k].get_or_init(|| {
            let h = self.grid.h();
            let t = self.grid.center(k);
            let pts = self.grid.centers();
            Column {
                i1: pts.iter().map(|&z| cell_integral_inv(t, h, z)).collect(),
                r1: pts.iter().map(|&z| reflected_integral(t, h, z)).collect(),
                i2: pts.iter().map(|&z| cell_integral_inv_sq(t, h, z)).collect(),
                r2: pts
                    .iter()
                    .map(|&z| reflected_integral_dz(t, h, z))
                    .collect(),
            }
        })
    }

    fn trace_column(&self, k: usize) -> &Column {
        self.trace_columns[k].get_or_init(|| {
            let h = self.grid.h();
            let t = self.grid.center(k);
            let pts = self.trace.points();
            Column {
                i1: pts.iter().map(|&z| cell_integral_inv(t, h, z)).collect(),
                r1: pts.iter().map(|&z| reflected_integral(t, h, z)).collect(),
                i2: Vec::new(),
                r2: Vec::new(),
            }
        })
    }

    fn warm(&self, sources: &[(usize, Complex64)], trace: bool) {
        sources.par_iter().for_each(|&(k, _)| {
            if trace {
                self.trace_column(k);
            } else {
                self.grid_column(k);
            }
        });
    }

    fn accumulate(
        &self,
        sources: &[(usize, Complex64)],
        rows: &[usize],
        trace: bool,
        derivatives: bool,
    ) -> Vec<KernelSums> {
        self.warm(sources, trace);
        rows.par_iter()
            .map(|&j| {
                let mut s = KernelSums::default();
                for &(k, g) in sources {
                    let col = if trace {
                        self.trace_column(k)
                    } else {
                        self.grid_column(k)
                    };
                    let gc = g.conj();
                    s.i1 += g * col.i1[j];
                    s.r1 += gc * col.r1[j];
                    if derivatives {
                        s.i2 += g * col.i2[j];
                        s.r2 += gc * col.r2[j];
                    }
                }
                s
            })
            .collect()
    }

    /// `T_j f` (one channel) at the grid cells.
    pub fn t_on_grid(&self, w: Weight, f: &[Complex64]) -> Vec<Complex64> {
        let rows: Vec<usize> = (0..self.grid.len()).collect();
        let sources = quotient_sources(&self.grid, w, f);
        self.accumulate(&sources, &rows, false, false)
            .iter()
            .zip(self.grid.centers())
            .map(|(s, &z)| s.transform(w, z))
            .collect()
    }

    /// `T_j f` (one channel) at the trace points.
    pub fn t_on_trace(&self, w: Weight, f: &[Complex64]) -> Vec<Complex64> {
        let rows: Vec<usize> = (0..self.trace.len()).collect();
        let sources = quotient_sources(&self.grid, w, f);
        self.accumulate(&sources, &rows, true, false)
            .iter()
            .zip(self.trace.points())
            .map(|(s, &z)| s.transform(w, z))
            .collect()
    }

    /// `S_j f` (one channel) at the listed grid cells.
    pub fn s_on_rows(&self, w: Weight, f: &[Complex64], rows: &[usize]) -> Vec<Complex64> {
        let sources = quotient_sources(&self.grid, w, f);
        self.accumulate(&sources, rows, false, true)
            .iter()
            .zip(rows)
            .map(|(s, &j)| s.derivative(w, self.grid.center(j)))
            .collect()
    }

    /// `S_j f` (one channel) at every grid cell.
    pub fn s_on_grid(&self, w: Weight, f: &[Complex64]) -> Vec<Complex64> {
        let rows: Vec<usize> = (0..self.grid.len()).collect();
        self.s_on_rows(w, f, &rows)
    }

    /// `T_j f` (one channel) at arbitrary points, without caching.
    pub fn t_at(&self, w: Weight, f: &[Complex64], points: &[Complex64]) -> Vec<Complex64> {
        let sources = quotient_sources(&self.grid, w, f);
        points
            .iter()
            .map(|&z| sums_at(&self.grid, &sources, z, false).transform(w, z))
            .collect()
    }
}
