//! The triangle `Δ = {0 < Im z < 1 - |Re z|}` and its Schwarz-Christoffel map from the disc.
//!
//! `Φ'(ζ) = c (1-ζ)^{-3/4} (1+ζ)^{-3/4} (1+iζ)^{-1/2}` with principal powers;
//! since `Re(1 - conj(ζ_k) ζ) ≥ 0` on the closed disc, each factor is continuous
//! there with its cut on the ray leaving the disc radially at `ζ_k`. The
//! normalization `Φ(±1) = ±1`, `Φ(i) = i` fixes `c` (real, about 0.4535).

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::quadrature::integrate;

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Marked boundary points; they are both the triangle's vertices and their prevertices.
pub const MARKED_POINTS: [Complex64; 3] = [
    Complex64 { re: 1.0, im: 0.0 },
    Complex64 { re: 0.0, im: 1.0 },
    Complex64 { re: -1.0, im: 0.0 },
];

const QUAD_TOL: f64 = 1e-13;
const QUAD_PANELS: usize = 200;

/// The triangle with vertices `-1`, `1`, `i`.
#[derive(Debug, Clone, Copy, Default)]
pub struct TriangleGeometry;

/// Half-plane `normal · p <= offset` with a unit normal.
#[derive(Debug, Clone, Copy)]
pub struct Side {
    pub start: Complex64,
    pub end: Complex64,
    pub normal: Complex64,
    pub offset: f64,
}

impl Side {
    fn excess(&self, p: Complex64) -> f64 {
        self.normal.re * p.re + self.normal.im * p.im - self.offset
    }

    /// Unit direction from `start` to `end`.
    pub fn direction(&self) -> Complex64 {
        let d = self.end - self.start;
        d / d.norm()
    }

    pub fn distance(&self, p: Complex64) -> f64 {
        let d = self.end - self.start;
        let s = ((p - self.start) * d.conj()).re / d.norm_sqr();
        let q = self.start + d * s.clamp(0.0, 1.0);
        (p - q).norm()
    }
}

impl TriangleGeometry {
    pub fn vertices(&self) -> [Complex64; 3] {
        MARKED_POINTS
    }

    /// Sides in the order matching the arcs γ1, γ2, γ3: `[1, i]`, `[i, -1]`, `[-1, 1]`.
    pub fn sides(&self) -> [Side; 3] {
        [
            Side {
                start: ONE,
                end: I,
                normal: Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2),
                offset: FRAC_1_SQRT_2,
            },
            Side {
                start: I,
                end: -ONE,
                normal: Complex64::new(-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
                offset: FRAC_1_SQRT_2,
            },
            Side {
                start: -ONE,
                end: ONE,
                normal: Complex64::new(0.0, -1.0),
                offset: 0.0,
            },
        ]
    }

    /// Shoelace area of the vertex polygon.
    pub fn area(&self) -> f64 {
        let v = [ONE, I, -ONE];
        0.5 * (0..3)
            .map(|k| {
                let a = v[k];
                let b = v[(k + 1) % 3];
                a.re * b.im - a.im * b.re
            })
            .sum::<f64>()
    }

    pub fn contains(&self, z: Complex64, slack: f64) -> bool {
        self.sides().iter().all(|s| s.excess(z) <= slack)
    }

    /// Distance from `z` to the closed triangle (zero inside).
    pub fn distance(&self, z: Complex64) -> f64 {
        if self.contains(z, 0.0) {
            0.0
        } else {
            self.boundary_distance(z)
        }
    }

    /// Distance from `z` to the boundary `bΔ`.
    pub fn boundary_distance(&self, z: Complex64) -> f64 {
        self.sides()
            .iter()
            .map(|s| s.distance(z))
            .fold(f64::INFINITY, f64::min)
    }

    /// Distance to the complement of `Δ`, zero outside.
    pub fn depth(&self, z: Complex64) -> f64 {
        self.sides()
            .iter()
            .map(|s| -s.excess(z))
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
    }

    /// The unique point where the segment from interior `z0` to exterior `z` crosses `bΔ`.
    pub fn exit_point(&self, z0: Complex64, z: Complex64) -> Complex64 {
        let d = z - z0;
        let mut s_exit = 1.0f64;
        for side in self.sides() {
            let rate = side.normal.re * d.re + side.normal.im * d.im;
            if rate > 0.0 {
                s_exit = s_exit.min(-side.excess(z0) / rate);
            }
        }
        z0 + d * s_exit
    }
}

fn sc_product(t: Complex64) -> Complex64 {
    ((ONE - t).ln() * -0.75 + (ONE + t).ln() * -0.75 + (ONE + I * t).ln() * -0.5).exp()
}

/// Integrand of `∫ (1-t)^{-3/4}(1+t)^{-3/4}(1+it)^{-1/2} dt` after `t = ∓(1 - s^4)`,
/// with the `s^{-3}` factor cancelled analytically. `tilt` is `-i` for the end at `-1`
/// and `i` for the end at `1`.
fn desingularized_end(s: f64, tilt: Complex64) -> Complex64 {
    let s4 = s.powi(4);
    let far = Complex64::new(2.0 - s4, 0.0).powf(-0.75);
    let side = (ONE + tilt - tilt * s4).powf(-0.5);
    far * side * 4.0
}

/// `Φ: D → Δ` with cached constant and Newton seeds.
#[derive(Debug, Clone)]
pub struct ConformalMap {
    constant: Complex64,
    phi_zero: Complex64,
    seeds: Vec<(Complex64, Complex64)>,
}

impl ConformalMap {
    pub fn new() -> Self {
        // ∫_{-1}^{0} and ∫_{0}^{1} of the bare product, each with s^4 substitution at its singular end
        let left = integrate(|s| desingularized_end(s, -I), 0.0, 1.0, 1e-14, QUAD_PANELS).0;
        let right = integrate(|s| desingularized_end(s, I), 0.0, 1.0, 1e-14, QUAD_PANELS).0;
        let constant = Complex64::new(2.0, 0.0) / (left + right);
        let phi_zero = -ONE + constant * left;
        let mut map = Self {
            constant,
            phi_zero,
            seeds: Vec::new(),
        };
        let radii = [0.0, 0.25, 0.5, 0.7, 0.82, 0.9, 0.95, 0.98, 0.995, 1.0];
        let mut seeds = Vec::new();
        for &r in &radii {
            let count = if r == 0.0 { 1 } else { 96 };
            for j in 0..count {
                let zeta = Complex64::from_polar(r, TAU * (j as f64 + 0.5) / count as f64);
                seeds.push((zeta, map.phi(zeta)));
            }
        }
        for v in MARKED_POINTS {
            seeds.push((v, v));
        }
        map.seeds = seeds;
        map
    }

    /// The Schwarz-Christoffel constant `c`.
    pub fn constant(&self) -> Complex64 {
        self.constant
    }

    pub fn triangle(&self) -> TriangleGeometry {
        TriangleGeometry
    }

    /// `Φ(ζ)` for `|ζ| <= 1`, by quadrature of `Φ'` along the radius from 0.
    pub fn phi(&self, zeta: Complex64) -> Complex64 {
        if zeta.norm() == 0.0 {
            return self.phi_zero;
        }
        // t = ζ (1 - q^4), q = 1 - σ, removes the endpoint singularity when ζ sits at a
        // vertex; the factor bases are expanded around ζ so they stay accurate as q → 0
        let (val, _) = integrate(
            |sigma| {
                let q = 1.0 - sigma;
                if q <= 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let q4 = q.powi(4);
                let b1 = (ONE - zeta) + zeta * q4;
                let b2 = (ONE + zeta) - zeta * q4;
                let b3 = (ONE + I * zeta) - I * zeta * q4;
                (b1.ln() * -0.75 + b2.ln() * -0.75 + b3.ln() * -0.5).exp() * (4.0 * q.powi(3))
            },
            0.0,
            1.0,
            QUAD_TOL,
            QUAD_PANELS,
        );
        self.phi_zero + self.constant * zeta * val
    }

    pub fn phi_prime(&self, zeta: Complex64) -> Result<Complex64> {
        if MARKED_POINTS.iter().any(|v| (zeta - *v).norm() < 1e-14) {
            return Err(Error::Numeric(format!(
                "Φ' has infinite magnitude at the marked point {zeta}"
            )));
        }
        Ok(self.constant * sc_product(zeta))
    }

    /// `Φ^{-1}(z)` for `z` in the closed triangle, by damped Newton iteration.
    pub fn phi_inverse(&self, z: Complex64) -> Result<Complex64> {
        let tri = TriangleGeometry;
        if !tri.contains(z, 1e-10) {
            return Err(invalid(format!("{z} lies outside the closed triangle")));
        }
        if let Some(v) = MARKED_POINTS.iter().find(|v| (z - **v).norm() < 1e-14) {
            return Ok(*v);
        }
        let seed = self
            .seeds
            .iter()
            .min_by(|a, b| (a.1 - z).norm().total_cmp(&(b.1 - z).norm()))
            .map(|s| s.0)
            .unwrap_or(Complex64::new(0.0, 0.0));
        if let Some(zeta) = self.newton(z, seed, 100) {
            return Ok(zeta);
        }
        // continuation along the segment from Φ(0)
        let mut zeta = Complex64::new(0.0, 0.0);
        let steps = 32;
        for k in 1..=steps {
            let target = self.phi_zero + (z - self.phi_zero) * (k as f64 / steps as f64);
            zeta = self
                .newton(target, zeta, 100)
                .ok_or_else(|| Error::Numeric(format!("inverse map did not converge for {z}")))?;
        }
        Ok(zeta)
    }

    fn newton(&self, z: Complex64, seed: Complex64, max_steps: usize) -> Option<Complex64> {
        let clamp = |p: Complex64| {
            let r = p.norm();
            if r > 1.0 {
                let q = p / r;
                // p / r can overshoot the circle by an ulp
                if q.norm() > 1.0 {
                    q * (1.0 - f64::EPSILON)
                } else {
                    q
                }
            } else {
                p
            }
        };
        let mut zeta = clamp(seed);
        let mut res = self.phi(zeta) - z;
        for _ in 0..max_steps {
            if res.norm() <= 1e-13 {
                break;
            }
            let d = match self.phi_prime(zeta) {
                Ok(d) => d,
                Err(_) => {
                    zeta *= 1.0 - 1e-9;
                    res = self.phi(zeta) - z;
                    continue;
                }
            };
            let step = res / d;
            let mut lambda = 1.0;
            loop {
                let cand = clamp(zeta - step * lambda);
                let rc = self.phi(cand) - z;
                if rc.norm() < res.norm() || lambda < 1e-8 {
                    zeta = cand;
                    res = rc;
                    break;
                }
                lambda *= 0.5;
            }
        }
        (res.norm() <= 1e-8).then_some(zeta)
    }

    /// Retraction `Ψ` of the plane onto the closed disc.
    ///
    /// Points of the closed triangle go through `Φ^{-1}`; other points are first
    /// replaced by the exit point of the segment `[z0, z]` from the triangle.
    pub fn psi(&self, z: Complex64, z0: Complex64) -> Result<Complex64> {
        let tri = TriangleGeometry;
        if tri.depth(z0) <= 0.0 {
            return Err(invalid(format!(
                "{z0} is not an interior point of the triangle"
            )));
        }
        if tri.contains(z, 0.0) {
            return self.phi_inverse(z);
        }
        self.phi_inverse(tri.exit_point(z0, z))
    }

    /// Winding number of the image of the circle `|ζ| = 1` about `center`, from `samples` points.
    pub fn boundary_winding(&self, samples: usize, center: Complex64) -> f64 {
        let pts: Vec<Complex64> = (0..samples)
            .map(|j| {
                self.phi(Complex64::from_polar(
                    1.0,
                    TAU * (j as f64 + 0.5) / samples as f64,
                ))
            })
            .collect();
        let mut total = 0.0;
        for j in 0..samples {
            let a = pts[j] - center;
            let b = pts[(j + 1) % samples] - center;
            total += (b / a).arg();
        }
        total / TAU
    }

    /// `∫_D |Φ'|^2 dA`, the Euclidean area of the image, by polar quadrature graded
    /// toward the circle and toward the three prevertices.
    pub fn dirichlet_energy(&self) -> f64 {
        // r = 1 - (1-ρ)^2 tames the (1-r)^{-1/2} growth of the angular integral
        let outer = integrate(
            |rho| {
                let q = 1.0 - rho;
                let r = 1.0 - q * q;
                let jac = 2.0 * q * r;
                Complex64::new(self.angular_energy(r) * jac, 0.0)
            },
            0.0,
            1.0,
            1e-9,
            200,
        );
        outer.0.re
    }

    fn angular_energy(&self, r: f64) -> f64 {
        let c2 = self.constant.norm_sqr();
        let arcs = [(0.0, 0.5 * PI), (0.5 * PI, PI), (PI, TAU)];
        let mut total = 0.0;
        for (a, b) in arcs {
            // θ graded toward both ends of the arc
            let (v, _) = integrate(
                |s| {
                    let g = s * s * (3.0 - 2.0 * s);
                    let theta = a + (b - a) * g;
                    let dg = 6.0 * s * (1.0 - s) * (b - a);
                    let zeta = Complex64::from_polar(r, theta);
                    Complex64::new(c2 * sc_product(zeta).norm_sqr() * dg, 0.0)
                },
                0.0,
                1.0,
                1e-10,
                200,
            );
            total += v.re;
        }
        total
    }
}

impl Default for ConformalMap {
    fn default() -> Self {
        Self::new()
    }
}
