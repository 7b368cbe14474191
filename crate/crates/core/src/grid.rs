//! Uniform Cartesian discretization of the unit disc.
//!
//! Functions are piecewise constant on square cells of side `h = 2/n`. A cell
//! belongs to the grid iff its center lies strictly inside the unit circle.
//! Cells are ordered row-major: rows run bottom to top, columns left to right.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{invalid, Result};

#[derive(Debug, Clone)]
pub struct DiscGrid {
    n: usize,
    h: f64,
    centers: Vec<Complex64>,
    lattice: Vec<(usize, usize)>,
    lookup: Vec<Option<usize>>,
}

impl DiscGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(invalid(format!(
                "grid needs an even number of cells per axis, at least 8 (got {n})"
            )));
        }
        let h = 2.0 / n as f64;
        let mut centers = Vec::new();
        let mut lattice = Vec::new();
        let mut lookup = vec![None; n * n];
        for row in 0..n {
            let y = -1.0 + (row as f64 + 0.5) * h;
            for col in 0..n {
                let x = -1.0 + (col as f64 + 0.5) * h;
                if x * x + y * y < 1.0 {
                    lookup[row * n + col] = Some(centers.len());
                    centers.push(Complex64::new(x, y));
                    lattice.push((col, row));
                }
            }
        }
        Ok(Self {
            n,
            h,
            centers,
            lattice,
            lookup,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[Complex64] {
        &self.centers
    }

    pub fn center(&self, k: usize) -> Complex64 {
        self.centers[k]
    }

    pub fn total_area(&self) -> f64 {
        self.len() as f64 * self.cell_area()
    }

    /// `(column, row)` lattice position of cell `k`.
    pub fn lattice_position(&self, k: usize) -> (usize, usize) {
        self.lattice[k]
    }

    /// Cell index at a lattice position, if that cell is part of the grid.
    pub fn cell_at(&self, col: isize, row: isize) -> Option<usize> {
        let n = self.n as isize;
        if col < 0 || row < 0 || col >= n || row >= n {
            return None;
        }
        self.lookup[(row * n + col) as usize]
    }

    /// Cells whose whole square lies inside the disc of the given radius.
    pub fn interior_cells(&self, radius: f64) -> Vec<usize> {
        let reach = self.h * std::f64::consts::FRAC_1_SQRT_2;
        (0..self.len())
            .filter(|&k| self.centers[k].norm() + reach < radius)
            .collect()
    }
}

/// Complex (or C^m valued) piecewise-constant function on a [`DiscGrid`].
///
/// Values are stored channel by channel: channel `c` occupies
/// `values[c * cells .. (c + 1) * cells]`.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Arc<DiscGrid>,
    channels: usize,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn zeros(grid: Arc<DiscGrid>, channels: usize) -> Self {
        let len = grid.len() * channels;
        Self {
            grid,
            channels,
            values: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    pub fn from_values(
        grid: Arc<DiscGrid>,
        channels: usize,
        values: Vec<Complex64>,
    ) -> Result<Self> {
        if channels == 0 {
            return Err(invalid("grid function needs at least one channel"));
        }
        if values.len() != grid.len() * channels {
            return Err(invalid(format!(
                "expected {} values, got {}",
                grid.len() * channels,
                values.len()
            )));
        }
        if values
            .iter()
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(invalid("grid function values must be finite"));
        }
        Ok(Self {
            grid,
            channels,
            values,
        })
    }

    /// Single-channel function sampled at cell centers.
    pub fn from_fn(grid: Arc<DiscGrid>, f: impl Fn(Complex64) -> Complex64) -> Self {
        let values = grid.centers().iter().map(|&t| f(t)).collect();
        Self {
            grid,
            channels: 1,
            values,
        }
    }

    pub fn grid(&self) -> &Arc<DiscGrid> {
        &self.grid
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn channel(&self, c: usize) -> &[Complex64] {
        let len = self.grid.len();
        &self.values[c * len..(c + 1) * len]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [Complex64] {
        let len = self.grid.len();
        &mut self.values[c * len..(c + 1) * len]
    }

    /// Euclidean magnitude across channels at cell `k`.
    pub fn magnitude_at(&self, k: usize) -> f64 {
        (0..self.channels)
            .map(|c| self.channel(c)[k].norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        (0..self.grid.len())
            .map(|k| self.magnitude_at(k))
            .fold(0.0, f64::max)
    }

    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        lp_norm(self, p)
    }
}

/// Discrete `L^p(D)` norm `(sum_k |f(t_k)|^p h^2)^(1/p)`.
pub fn lp_norm(f: &GridFunction, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(invalid(format!("L^p norm needs p >= 1 (got {p})")));
    }
    let area = f.grid.cell_area();
    let sum: f64 = (0..f.grid.len()).map(|k| f.magnitude_at(k).powf(p)).sum();
    Ok((sum * area).powf(1.0 / p))
}

/// The three boundary arcs between the marked points `1`, `i`, `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum Arc3 {
    /// `0 < theta < pi/2`, mapped onto the side `[1, i]`.
    Gamma1,
    /// `pi/2 < theta < pi`, mapped onto the side `[i, -1]`.
    Gamma2,
    /// `pi < theta < 2 pi`, mapped onto the side `[-1, 1]`.
    Gamma3,
}

impl Arc3 {
    pub fn of_angle(theta: f64) -> Option<Self> {
        let t = theta.rem_euclid(TAU);
        if t > 0.0 && t < FRAC_PI_2 {
            Some(Arc3::Gamma1)
        } else if t > FRAC_PI_2 && t < PI {
            Some(Arc3::Gamma2)
        } else if t > PI {
            Some(Arc3::Gamma3)
        } else {
            None
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Arc3::Gamma1 => "gamma1",
            Arc3::Gamma2 => "gamma2",
            Arc3::Gamma3 => "gamma3",
        }
    }
}

/// Samples of the unit circle, offset half a step so that the marked points
/// `1`, `i`, `-1` are never sampled.
#[derive(Debug, Clone)]
pub struct BoundaryTrace {
    thetas: Vec<f64>,
    points: Vec<Complex64>,
    arcs: Vec<Arc3>,
    channels: usize,
    values: Option<Vec<Complex64>>,
}

impl BoundaryTrace {
    pub fn new(m: usize) -> Result<Self> {
        if m < 16 || !m.is_multiple_of(4) {
            return Err(invalid(format!(
                "boundary trace needs at least 16 samples, divisible by 4 (got {m})"
            )));
        }
        let thetas: Vec<f64> = (0..m).map(|j| TAU * (j as f64 + 0.5) / m as f64).collect();
        let points = thetas
            .iter()
            .map(|&t| Complex64::from_polar(1.0, t))
            .collect();
        let arcs = thetas
            .iter()
            .map(|&t| Arc3::of_angle(t).expect("half-step samples avoid the marked points"))
            .collect();
        Ok(Self {
            thetas,
            points,
            arcs,
            channels: 0,
            values: None,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn arcs(&self) -> &[Arc3] {
        &self.arcs
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Same sample positions carrying `channels` channels of values, stored channel by channel.
    pub fn with_values(&self, channels: usize, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != channels * self.len() {
            return Err(invalid(format!(
                "expected {} trace values, got {}",
                channels * self.len(),
                values.len()
            )));
        }
        Ok(Self {
            channels,
            values: Some(values),
            ..self.clone()
        })
    }

    pub fn values(&self) -> Option<&[Complex64]> {
        self.values.as_deref()
    }

    pub fn channel(&self, c: usize) -> Option<&[Complex64]> {
        let m = self.len();
        if c >= self.channels {
            return None;
        }
        self.values.as_ref().map(|v| &v[c * m..(c + 1) * m])
    }

    /// Arc endpoint following sample `j` when the next sample starts a new arc.
    pub fn corner_after(&self, j: usize) -> Option<Complex64> {
        let next = (j + 1) % self.len();
        if self.arcs[j] == self.arcs[next] {
            return None;
        }
        Some(match self.arcs[next] {
            Arc3::Gamma1 => Complex64::new(1.0, 0.0),
            Arc3::Gamma2 => Complex64::new(0.0, 1.0),
            Arc3::Gamma3 => Complex64::new(-1.0, 0.0),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(DiscGrid::new(7).is_err());
        assert!(DiscGrid::new(6).is_err());
        assert!(DiscGrid::new(9).is_err());
        assert!(BoundaryTrace::new(12).is_err());
        assert!(BoundaryTrace::new(18).is_err());
    }

    #[test]
    fn centers_inside_disc() {
        let g = DiscGrid::new(8).unwrap();
        assert!(g.centers().iter().all(|t| t.norm() < 1.0));
        // row-major ordering
        for w in g.centers().windows(2) {
            assert!(w[0].im < w[1].im || (w[0].im == w[1].im && w[0].re < w[1].re));
        }
    }

    #[test]
    fn area_by_enumeration() {
        // independent count of lattice points strictly inside the circle
        let n = 64usize;
        let mut count = 0usize;
        for i in 0..n {
            for j in 0..n {
                let x = 2 * i as i64 + 1 - n as i64;
                let y = 2 * j as i64 + 1 - n as i64;
                if x * x + y * y < (n * n) as i64 {
                    count += 1;
                }
            }
        }
        let g = DiscGrid::new(n).unwrap();
        assert_eq!(g.len(), count);
        let h = 2.0 / n as f64;
        assert!((count as f64 * h * h - PI).abs() / PI <= 0.05);
    }

    #[test]
    fn lp_norm_basics() {
        let g = Arc::new(DiscGrid::new(32).unwrap());
        let zero = GridFunction::zeros(g.clone(), 1);
        assert_eq!(lp_norm(&zero, 2.0).unwrap(), 0.0);
        let one = GridFunction::from_fn(g.clone(), |_| Complex64::new(1.0, 0.0));
        let l2 = lp_norm(&one, 2.0).unwrap();
        assert!((l2 - PI.sqrt()).abs() / PI.sqrt() < 0.03);
        let c = Complex64::new(0.3, -1.2);
        let fc = GridFunction::from_fn(g.clone(), |_| c);
        let p = 2.2;
        let expected = c.norm() * g.total_area().powf(1.0 / p);
        assert!((lp_norm(&fc, p).unwrap() - expected).abs() < 1e-12);
        assert!(lp_norm(&fc, 0.5).is_err());
    }

    #[test]
    fn multichannel_norm_uses_euclidean_magnitude() {
        let g = Arc::new(DiscGrid::new(16).unwrap());
        let len = g.len();
        let mut vals = vec![Complex64::new(3.0, 0.0); len];
        vals.extend(vec![Complex64::new(0.0, 4.0); len]);
        let f = GridFunction::from_values(g.clone(), 2, vals).unwrap();
        let expected = 5.0 * g.total_area().sqrt();
        assert!((lp_norm(&f, 2.0).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn trace_arcs() {
        let tr = BoundaryTrace::new(16).unwrap();
        let count = |a| tr.arcs().iter().filter(|&&x| x == a).count();
        assert_eq!(count(Arc3::Gamma1), 4);
        assert_eq!(count(Arc3::Gamma2), 4);
        assert_eq!(count(Arc3::Gamma3), 8);
        for p in tr.points() {
            for corner in [
                Complex64::new(1.0, 0.0),
                Complex64::i(),
                Complex64::new(-1.0, 0.0),
            ] {
                assert!((p - corner).norm() > 1e-3);
            }
        }
    }

    #[test]
    fn trace_labels_switch_at_quarter_and_half_turn() {
        let tr = BoundaryTrace::new(64).unwrap();
        for j in 0..tr.len() {
            let next = (j + 1) % tr.len();
            if tr.arcs()[j] != tr.arcs()[next] {
                let (a, b) = (tr.thetas()[j], tr.thetas()[next]);
                let switch = if b > a { 0.5 * (a + b) } else { 0.0 };
                assert!(
                    [0.0, FRAC_PI_2, PI]
                        .iter()
                        .any(|s| (s - switch).abs() < 1e-12),
                    "switch at {switch}"
                );
                assert!(tr.corner_after(j).is_some());
            }
        }
    }
}
