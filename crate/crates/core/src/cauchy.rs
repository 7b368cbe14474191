//! Cauchy-Green transform `T` and Beurling transform `S` on the disc.
//!
//! For a piecewise-constant density the transforms are sums of exact cell
//! integrals
//!
//! ```text
//! I1(cell, z) = ∫_cell dA(t) / (t - z)
//! I2(cell, z) = p.v. ∫_cell dA(t) / (t - z)^2
//! ```
//!
//! so that `Tf(z) = -(1/pi) sum_k f_k I1(cell_k, z)` and
//! `Sf(z) = -(1/pi) sum_k f_k I2(cell_k, z)`. Near cells are integrated in
//! closed form by reducing the area integral to the cell boundary; far cells
//! use the multipole expansion of the square, whose only nonvanishing moments
//! are those of order divisible by four.

use std::f64::consts::FRAC_1_PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::grid::{DiscGrid, GridFunction};

/// Cells further than this many widths from the evaluation point use the multipole expansion.
const FAR_FIELD_CELLS: f64 = 3.0;

/// `∫_{[-1/2,1/2]^2} (x + iy)^4`.
pub const SQUARE_MOMENT_4: f64 = -1.0 / 60.0;
/// `∫_{[-1/2,1/2]^2} (x + iy)^8`.
pub const SQUARE_MOMENT_8: f64 = 1.0 / 720.0;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Default memory budget for dense operator matrices (bytes).
pub const DEFAULT_MATRIX_BUDGET: usize = 512 << 20;

/// Moves an evaluation point off a cell corner, where the kernels have no limit.
fn off_corner(center: Complex64, h: f64, z: Complex64) -> Complex64 {
    let rel = (z - center) / h;
    let on_corner = (rel.re.abs() - 0.5).abs() < 1e-13 && (rel.im.abs() - 0.5).abs() < 1e-13;
    if on_corner {
        z + Complex64::new(1e-12 * h, 1e-12 * h)
    } else {
        z
    }
}

fn corners(center: Complex64, h: f64, z: Complex64) -> [Complex64; 4] {
    let s = 0.5 * h;
    let c = center - z;
    [
        c + Complex64::new(-s, -s),
        c + Complex64::new(s, -s),
        c + Complex64::new(s, s),
        c + Complex64::new(-s, s),
    ]
}

/// Log of `b/a` along the straight segment from `a` to `b`; real part only when the
/// segment's line passes through the origin (principal value).
fn segment_log(a: Complex64, b: Complex64, collinear: bool) -> Complex64 {
    if collinear {
        Complex64::new(b.norm().ln() - a.norm().ln(), 0.0)
    } else {
        (b / a).ln()
    }
}

fn cross(a: Complex64, d: Complex64) -> f64 {
    a.re * d.im - a.im * d.re
}

/// Exact `∫_cell dA(t)/(t - z)` for the square cell of side `h`.
pub fn cell_integral_inv(center: Complex64, h: f64, z: Complex64) -> Complex64 {
    if z == center {
        return ZERO;
    }
    let d = center - z;
    if d.norm() >= FAR_FIELD_CELLS * h {
        let h2 = h * h;
        let inv = d.inv();
        let inv4 = inv.powi(4);
        let h4 = h2 * h2;
        return inv
            * h2
            * (1.0 + inv4 * (SQUARE_MOMENT_4 * h4) + inv4 * inv4 * (SQUARE_MOMENT_8 * h4 * h4));
    }
    cell_integral_inv_exact(center, h, z)
}

/// Closed-form boundary reduction of `I1`, valid for any position of `z`.
pub fn cell_integral_inv_exact(center: Complex64, h: f64, z: Complex64) -> Complex64 {
    let z = off_corner(center, h, z);
    let w = corners(center, h, z);
    let mut acc = ZERO;
    for e in 0..4 {
        let a = w[e];
        let b = w[(e + 1) % 4];
        let dd = b - a;
        let cr = cross(a, dd);
        if cr != 0.0 {
            acc += (b / a).ln() * cr / dd;
        }
    }
    acc
}

/// Exact principal value `p.v. ∫_cell dA(t)/(t - z)^2`.
pub fn cell_integral_inv_sq(center: Complex64, h: f64, z: Complex64) -> Complex64 {
    if z == center {
        return ZERO;
    }
    let d = center - z;
    if d.norm() >= FAR_FIELD_CELLS * h {
        let h2 = h * h;
        let inv = d.inv();
        let inv2 = inv * inv;
        let inv4 = inv2 * inv2;
        return inv2
            * h2
            * (1.0
                + inv4 * (5.0 * SQUARE_MOMENT_4 * h2 * h2)
                + inv4 * inv4 * (9.0 * SQUARE_MOMENT_8 * h2 * h2 * h2 * h2));
    }
    cell_integral_inv_sq_exact(center, h, z)
}

pub fn cell_integral_inv_sq_exact(center: Complex64, h: f64, z: Complex64) -> Complex64 {
    let z = off_corner(center, h, z);
    let w = corners(center, h, z);
    let mut acc = ZERO;
    let mut logs = ZERO;
    for e in 0..4 {
        let a = w[e];
        let b = w[(e + 1) % 4];
        let dd = b - a;
        let cr = cross(a, dd);
        if cr != 0.0 {
            acc += (a.inv() - b.inv()) * cr / dd;
        }
        logs += segment_log(a, b, cr == 0.0) * (dd.conj() / dd);
    }
    acc + logs / Complex64::new(0.0, 2.0)
}

/// Reflected kernel `∫_cell dA(t) / (z conj(t) - 1)`.
///
/// This is `z^{-1} conj(I1(cell, 1/conj(z)))`, regular at `z = 0`.
pub fn reflected_integral(center: Complex64, h: f64, z: Complex64) -> Complex64 {
    let e = z * center.conj() - 1.0;
    if e.norm() >= FAR_FIELD_CELLS * h * z.norm() {
        let h2 = h * h;
        let inv = e.inv();
        let z4 = z.powi(4);
        let inv4 = inv.powi(4);
        let q = z4 * inv4;
        return inv
            * h2
            * (1.0
                + q * (SQUARE_MOMENT_4 * h2 * h2)
                + q * q * (SQUARE_MOMENT_8 * h2 * h2 * h2 * h2));
    }
    let eta = z.conj().inv();
    cell_integral_inv_exact(center, h, eta).conj() / z
}

/// `d/dz` of [`reflected_integral`].
pub fn reflected_integral_dz(center: Complex64, h: f64, z: Complex64) -> Complex64 {
    let cb = center.conj();
    let e = z * cb - 1.0;
    if e.norm() >= FAR_FIELD_CELLS * h * z.norm() {
        let h2 = h * h;
        let h6 = h2 * h2 * h2;
        let h10 = h6 * h2 * h2;
        let inv = e.inv();
        let inv2 = inv * inv;
        let inv5 = inv2 * inv2 * inv;
        let inv9 = inv5 * inv2 * inv2;
        let z3 = z * z * z;
        let z4 = z3 * z;
        let z7 = z4 * z3;
        let z8 = z4 * z4;
        return -inv2 * cb * h2
            + (z3 * 4.0 * inv5 - z4 * cb * 5.0 * inv5 * inv) * (SQUARE_MOMENT_4 * h6)
            + (z7 * 8.0 * inv9 - z8 * cb * 9.0 * inv9 * inv) * (SQUARE_MOMENT_8 * h10);
    }
    let eta = z.conj().inv();
    let zi = z.inv();
    let i1 = cell_integral_inv_exact(center, h, eta).conj();
    let i2 = cell_integral_inv_sq_exact(center, h, eta).conj();
    -(i1 + i2 * zi) * zi * zi
}

/// Cauchy-Green transform `(Tf)(z) = -(1/pi) ∫_D f(t) dA(t)/(t - z)` of each channel at each point.
///
/// Output is channel-major: `out[c * eval.len() + j]`.
pub fn cauchy_green(f: &GridFunction, eval: &[Complex64]) -> Vec<Complex64> {
    let grid = f.grid();
    let h = grid.h();
    let centers = grid.centers();
    let mut out = Vec::with_capacity(eval.len() * f.channels());
    for c in 0..f.channels() {
        let vals = f.channel(c);
        let chunk: Vec<Complex64> = eval
            .par_iter()
            .map(|&z| {
                let mut acc = ZERO;
                for (k, &fk) in vals.iter().enumerate() {
                    if fk != ZERO {
                        let wgt = cell_integral_inv(centers[k], h, z) * (-FRAC_1_PI);
                        acc += wgt * fk;
                    }
                }
                acc
            })
            .collect();
        out.extend(chunk);
    }
    out
}

/// Beurling transform `(Sf)(t_j) = -(1/pi) p.v. ∫_D f(t) dA(t)/(t - t_j)^2` at the grid cells.
pub fn beurling(f: &GridFunction) -> GridFunction {
    let grid = f.grid().clone();
    let h = grid.h();
    let centers = grid.centers();
    let mut out = GridFunction::zeros(grid.clone(), f.channels());
    for c in 0..f.channels() {
        let vals = f.channel(c);
        let col: Vec<Complex64> = centers
            .par_iter()
            .map(|&z| {
                let mut acc = ZERO;
                for (k, &fk) in vals.iter().enumerate() {
                    if fk != ZERO {
                        let wgt = cell_integral_inv_sq(centers[k], h, z) * (-FRAC_1_PI);
                        acc += wgt * fk;
                    }
                }
                acc
            })
            .collect();
        out.channel_mut(c).copy_from_slice(&col);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    /// Cauchy-Green transform.
    T,
    /// Beurling transform.
    S,
}

/// Dense weights `W[j, k]` with `(Kf)(z_j) = sum_k W[j, k] f(t_k)`.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    kind: OperatorKind,
    rows: usize,
    cols: usize,
    weights: Vec<Complex64>,
}

impl OperatorMatrix {
    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn weight(&self, j: usize, k: usize) -> Complex64 {
        self.weights[j * self.cols + k]
    }

    pub fn weight_count(&self) -> usize {
        self.weights.len()
    }

    /// Applies the matrix to one channel, skipping zero entries exactly as the direct transforms do.
    pub fn apply(&self, f: &[Complex64]) -> Result<Vec<Complex64>> {
        if f.len() != self.cols {
            return Err(invalid(format!(
                "operator has {} columns, input has {} values",
                self.cols,
                f.len()
            )));
        }
        Ok(self
            .weights
            .par_chunks(self.cols)
            .map(|row| {
                let mut acc = ZERO;
                for (w, &fk) in row.iter().zip(f) {
                    if fk != ZERO {
                        acc += *w * fk;
                    }
                }
                acc
            })
            .collect())
    }
}

/// Precomputes the dense matrix of `T` or `S` from the grid cells to `eval`.
///
/// Fails with a resource error when the matrix would exceed `budget_bytes`.
pub fn build_operator_matrix(
    grid: &DiscGrid,
    eval: &[Complex64],
    kind: OperatorKind,
    budget_bytes: usize,
) -> Result<OperatorMatrix> {
    let rows = eval.len();
    let cols = grid.len();
    let bytes = rows
        .checked_mul(cols)
        .and_then(|c| c.checked_mul(std::mem::size_of::<Complex64>()))
        .unwrap_or(usize::MAX);
    if bytes > budget_bytes {
        return Err(Error::Resource(format!(
            "dense {kind:?} matrix needs {} MiB, budget is {} MiB; lower the grid size n",
            bytes >> 20,
            budget_bytes >> 20
        )));
    }
    let h = grid.h();
    let centers = grid.centers();
    let weights: Vec<Complex64> = eval
        .par_iter()
        .flat_map_iter(|&z| {
            centers.iter().map(move |&t| {
                let integral = match kind {
                    OperatorKind::T => cell_integral_inv(t, h, z),
                    OperatorKind::S => cell_integral_inv_sq(t, h, z),
                };
                integral * (-FRAC_1_PI)
            })
        })
        .collect();
    Ok(OperatorMatrix {
        kind,
        rows,
        cols,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Tensor Gauss-Legendre on a subdivided square; an oracle for smooth integrands.
    fn brute_cell(
        center: Complex64,
        h: f64,
        f: impl Fn(Complex64) -> Complex64,
        sub: usize,
    ) -> Complex64 {
        let nodes = [
            -0.906179845938664,
            -0.5384693101056831,
            0.0,
            0.5384693101056831,
            0.906179845938664,
        ];
        let wts = [
            0.2369268850561891,
            0.4786286704993665,
            0.5688888888888889,
            0.4786286704993665,
            0.2369268850561891,
        ];
        let s = h / sub as f64;
        let mut acc = ZERO;
        for a in 0..sub {
            for b in 0..sub {
                let c0 = center
                    + Complex64::new(
                        -0.5 * h + (a as f64 + 0.5) * s,
                        -0.5 * h + (b as f64 + 0.5) * s,
                    );
                for (xi, wx) in nodes.iter().zip(wts) {
                    for (yi, wy) in nodes.iter().zip(wts) {
                        let t = c0 + Complex64::new(0.5 * s * xi, 0.5 * s * yi);
                        acc += f(t) * (wx * wy * 0.25 * s * s);
                    }
                }
            }
        }
        acc
    }

    #[test]
    fn square_moments() {
        let c = Complex64::new(0.0, 0.0);
        let m4 = brute_cell(c, 1.0, |t| t.powi(4), 2);
        let m8 = brute_cell(c, 1.0, |t| t.powi(8), 4);
        assert!((m4.re - SQUARE_MOMENT_4).abs() < 1e-14 && m4.im.abs() < 1e-14);
        assert!((m8.re - SQUARE_MOMENT_8).abs() < 1e-14 && m8.im.abs() < 1e-14);
        let m2 = brute_cell(c, 1.0, |t| t * t, 2);
        assert!(m2.norm() < 1e-14);
    }

    #[test]
    fn exact_kernels_match_quadrature_away_from_cell() {
        let center = Complex64::new(0.1, -0.2);
        let h = 0.05;
        for z in [
            Complex64::new(0.2, -0.2),
            Complex64::new(0.1, -0.1),
            Complex64::new(0.16, -0.13),
        ] {
            let q1 = brute_cell(center, h, |t| (t - z).inv(), 8);
            let q2 = brute_cell(center, h, |t| (t - z).powi(-2), 8);
            assert!((cell_integral_inv_exact(center, h, z) - q1).norm() < 1e-9 * q1.norm());
            assert!((cell_integral_inv_sq_exact(center, h, z) - q2).norm() < 1e-7 * q2.norm());
        }
    }

    #[test]
    fn far_field_agrees_with_exact_at_switch() {
        let center = Complex64::new(0.3, 0.4);
        let h = 1.0 / 32.0;
        for dir in 0..12 {
            let z = center + Complex64::from_polar(FAR_FIELD_CELLS * h * 1.0001, dir as f64 * 0.5);
            let e1 = cell_integral_inv_exact(center, h, z);
            let e2 = cell_integral_inv_sq_exact(center, h, z);
            assert!((cell_integral_inv(center, h, z) - e1).norm() < 1e-8 * e1.norm());
            assert!((cell_integral_inv_sq(center, h, z) - e2).norm() < 1e-7 * e2.norm());
        }
    }

    #[test]
    fn self_cell_is_zero_and_symmetric() {
        let c = Complex64::new(0.25, 0.125);
        let h = 0.0625;
        assert_eq!(cell_integral_inv(c, h, c), ZERO);
        assert_eq!(cell_integral_inv_sq(c, h, c), ZERO);
        // the closed form evaluated a hair off center is close to the symmetric value
        let near = c + Complex64::new(1e-9, 0.0);
        assert!(cell_integral_inv_exact(c, h, near).norm() < 1e-7);
        assert!(cell_integral_inv_sq_exact(c, h, near).norm() < 1e-6);
    }

    #[test]
    fn reflected_far_and_near_agree() {
        let center = Complex64::new(0.6, 0.7);
        let h = 1.0 / 32.0;
        for r in [0.3, 0.7, 0.9] {
            let z = Complex64::from_polar(r, 0.8);
            let near = cell_integral_inv_exact(center, h, z.conj().inv()).conj() / z;
            assert!((reflected_integral(center, h, z) - near).norm() < 1e-9 * near.norm());
        }
        assert!((reflected_integral(center, h, ZERO) + h * h).norm() < 1e-15);
    }

    #[test]
    fn reflected_derivative_by_finite_difference() {
        let center = Complex64::new(0.55, 0.75);
        let h = 1.0 / 32.0;
        for z in [
            Complex64::new(0.1, 0.2),
            Complex64::new(0.5, 0.7),
            Complex64::new(0.57, 0.78),
        ] {
            let d = 1e-6;
            let fd = (reflected_integral(center, h, z + d) - reflected_integral(center, h, z - d))
                / (2.0 * d);
            let an = reflected_integral_dz(center, h, z);
            assert!(
                (fd - an).norm() < 1e-6 * an.norm().max(1e-3),
                "{z}: {fd} vs {an}"
            );
        }
    }

    #[test]
    fn zero_density_gives_zero() {
        let grid = std::sync::Arc::new(DiscGrid::new(16).unwrap());
        let f = GridFunction::zeros(grid.clone(), 1);
        assert!(
            cauchy_green(&f, &[Complex64::new(0.1, 0.2), Complex64::new(3.0, 0.0)])
                .iter()
                .all(|v| *v == ZERO)
        );
        assert!(beurling(&f).values().iter().all(|v| *v == ZERO));
    }

    #[test]
    fn matrix_budget_enforced() {
        let grid = DiscGrid::new(32).unwrap();
        let err = build_operator_matrix(&grid, grid.centers(), OperatorKind::T, 1024).unwrap_err();
        assert!(matches!(err, Error::Resource(_)));
    }
}
