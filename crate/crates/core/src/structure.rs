//! Almost complex structures in the complex-matrix form `Z_ζ̄ = A(Z) conj(Z_ζ)`.
//!
//! A real structure `J` on `R^{2n} = C^n` is described by the anti-linear
//! operator `(J_st + J)^{-1}(J_st - J)`, which acts as `v ↦ A conj(v)`. Real
//! vectors are laid out interleaved, `(x_1, y_1, ..., x_n, y_n)`, and `J_st`
//! is multiplication by `i`.

use std::f64::consts::PI;
use std::fmt::Debug;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::conformal::TriangleGeometry;
use crate::error::{invalid, Error, Result};

/// Default cap on the spectral norm of `A` accepted by the solver.
pub const DEFAULT_NORM_MARGIN: f64 = 0.8;

/// Width of the boundary layer of the triangle over which the builtin fields are cut off.
pub const EDGE_CUTOFF_WIDTH: f64 = 0.05;

/// A field `Z = (z, w) ↦ A(Z)` of complex `n × n` matrices.
///
/// Implementations must vanish when `z` lies outside the closed triangle and
/// when `w` lies outside the ball of radius [`w_radius`](Self::w_radius).
pub trait StructureField: Debug + Send + Sync {
    /// Complex dimension `n`; `w` has `n - 1` components.
    fn dim(&self) -> usize;

    fn eval(&self, z: Complex64, w: &[Complex64]) -> DMatrix<Complex64>;

    /// Declared bound `a` on the spectral norm.
    fn norm_bound(&self) -> f64;

    /// `A` vanishes for `|w| > w_radius`.
    fn w_radius(&self) -> f64;

    /// Points where the norm is expected to peak; included in every probe set.
    fn probe_hints(&self) -> Vec<(Complex64, Vec<Complex64>)> {
        Vec::new()
    }

    fn name(&self) -> &str {
        "custom"
    }
}

/// Largest singular value.
pub fn spectral_norm(a: &DMatrix<Complex64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().iter().copied().fold(0.0, f64::max)
}

/// `C^∞` step: 0 for `x ≤ 0`, 1 for `x ≥ 1`.
pub fn smooth_step(x: f64) -> f64 {
    fn e(x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            (-1.0 / x).exp()
        }
    }
    let a = e(x);
    let b = e(1.0 - x);
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

/// Parameters shared by the builtin bump fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpParams {
    pub amplitude: f64,
    pub z_center: Complex64,
    /// Center in the `w` variables; missing entries are 0.
    #[serde(default)]
    pub w_center: Vec<Complex64>,
    pub radius: f64,
}

impl Default for BumpParams {
    fn default() -> Self {
        Self {
            amplitude: 0.5,
            z_center: Complex64::new(0.0, 0.5),
            w_center: Vec::new(),
            radius: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinKind {
    Zero,
    DiagBump,
    CoupledBump,
}

impl BuiltinKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "zero" => Ok(Self::Zero),
            "diag_bump" => Ok(Self::DiagBump),
            "coupled_bump" => Ok(Self::CoupledBump),
            other => Err(invalid(format!(
                "unknown structure field '{other}' (expected zero, diag_bump or coupled_bump)"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::DiagBump => "diag_bump",
            Self::CoupledBump => "coupled_bump",
        }
    }
}

/// The builtin cutoff-shaped fields.
///
/// `A(Z) = a₀ χ(Z) κ(z) M`, where `χ` is 1 on the ball of radius `ρ/2` about
/// the center and 0 outside radius `ρ`, `κ` vanishes outside the triangle and
/// within [`EDGE_CUTOFF_WIDTH`] of its boundary, and `M` is the identity
/// (`diag_bump`) or the unitary DFT matrix (`coupled_bump`).
#[derive(Debug, Clone)]
pub struct BuiltinField {
    kind: BuiltinKind,
    dim: usize,
    params: BumpParams,
    w_center: Vec<Complex64>,
    mixing: DMatrix<Complex64>,
    triangle: TriangleGeometry,
}

impl BuiltinField {
    pub fn kind(&self) -> BuiltinKind {
        self.kind
    }

    pub fn params(&self) -> &BumpParams {
        &self.params
    }

    /// Scalar profile `χ κ` at `Z`.
    pub fn profile(&self, z: Complex64, w: &[Complex64]) -> f64 {
        let depth = self.triangle.depth(z);
        if depth <= 0.0 {
            return 0.0;
        }
        let mut dist2 = (z - self.params.z_center).norm_sqr();
        for (k, c) in self.w_center.iter().enumerate() {
            dist2 += (w.get(k).copied().unwrap_or_default() - c).norm_sqr();
        }
        let s = dist2 / (self.params.radius * self.params.radius);
        if s >= 1.0 {
            return 0.0;
        }
        let chi = smooth_step((1.0 - s) / 0.75);
        chi * smooth_step(depth / EDGE_CUTOFF_WIDTH)
    }
}

/// The unitary DFT matrix `F_{jk} = e^{-2πi jk/n} / sqrt(n)`.
pub fn dft_matrix(n: usize) -> DMatrix<Complex64> {
    let scale = 1.0 / (n as f64).sqrt();
    DMatrix::from_fn(n, n, |j, k| {
        Complex64::from_polar(scale, -2.0 * PI * (j * k) as f64 / n as f64)
    })
}

/// Build a builtin field of complex dimension `dim`.
pub fn builtin_field(kind: BuiltinKind, dim: usize, params: &BumpParams) -> Result<BuiltinField> {
    if dim == 0 {
        return Err(invalid("structure dimension must be at least 1"));
    }
    let a0 = params.amplitude;
    if !(0.0..1.0).contains(&a0) {
        return Err(invalid(format!("amplitude must lie in [0, 1) (got {a0})")));
    }
    if kind != BuiltinKind::Zero && !(params.radius > 0.0 && params.radius.is_finite()) {
        return Err(invalid(format!(
            "bump radius must be positive (got {})",
            params.radius
        )));
    }
    if params.w_center.len() > dim - 1 {
        return Err(invalid(format!(
            "w_center has {} entries but w has only {} components",
            params.w_center.len(),
            dim - 1
        )));
    }
    let mut w_center = params.w_center.clone();
    w_center.resize(dim - 1, Complex64::default());
    let mixing = match kind {
        BuiltinKind::CoupledBump => dft_matrix(dim),
        _ => DMatrix::identity(dim, dim),
    };
    Ok(BuiltinField {
        kind,
        dim,
        params: params.clone(),
        w_center,
        mixing,
        triangle: TriangleGeometry,
    })
}

impl StructureField for BuiltinField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, z: Complex64, w: &[Complex64]) -> DMatrix<Complex64> {
        if self.kind == BuiltinKind::Zero || self.params.amplitude == 0.0 {
            return DMatrix::zeros(self.dim, self.dim);
        }
        let s = self.params.amplitude * self.profile(z, w);
        if s == 0.0 {
            return DMatrix::zeros(self.dim, self.dim);
        }
        self.mixing.map(|m| m * s)
    }

    fn norm_bound(&self) -> f64 {
        match self.kind {
            BuiltinKind::Zero => 0.0,
            _ => self.params.amplitude,
        }
    }

    fn w_radius(&self) -> f64 {
        match self.kind {
            BuiltinKind::Zero => 0.0,
            _ => {
                self.w_center
                    .iter()
                    .map(|c| c.norm_sqr())
                    .sum::<f64>()
                    .sqrt()
                    + self.params.radius
            }
        }
    }

    fn probe_hints(&self) -> Vec<(Complex64, Vec<Complex64>)> {
        vec![(self.params.z_center, self.w_center.clone())]
    }

    fn name(&self) -> &str {
        self.kind.as_str()
    }
}

/// Sample points `Z = (z, w)` for validating a structure field.
#[derive(Debug, Clone, Default)]
pub struct ProbeSet {
    pub points: Vec<(Complex64, Vec<Complex64>)>,
}

impl ProbeSet {
    /// For each `z`, the hint points plus `per_point` random `w` in the ball of
    /// radius `1.25 · w_radius` (so that the support bound is exercised), and a
    /// ring of `z` points outside the triangle.
    pub fn standard(
        field: &dyn StructureField,
        zs: &[Complex64],
        per_point: usize,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = field.dim().saturating_sub(1);
        let r = 1.25 * field.w_radius();
        let mut points = field.probe_hints();
        let outside = (0..32).map(|k| {
            Complex64::from_polar(1.6, 2.0 * PI * k as f64 / 32.0) + Complex64::new(0.0, 0.3)
        });
        for z in zs.iter().copied().chain(outside) {
            points.push((z, vec![Complex64::default(); m]));
            for _ in 0..per_point {
                let w = random_ball(&mut rng, m, r);
                points.push((z, w));
            }
        }
        for (z, w) in field.probe_hints() {
            for _ in 0..per_point {
                let dz = random_ball(&mut rng, 1, 0.05)[0];
                let dw = random_ball(&mut rng, m, 0.05);
                let w2 = w.iter().zip(&dw).map(|(a, b)| a + b).collect();
                points.push((z + dz, w2));
            }
        }
        Self { points }
    }
}

fn random_ball(rng: &mut impl Rng, m: usize, r: f64) -> Vec<Complex64> {
    if m == 0 {
        return Vec::new();
    }
    let v: Vec<f64> = (0..2 * m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    let radius = r * rng.gen::<f64>().powf(1.0 / (2 * m) as f64);
    v.chunks(2)
        .map(|c| Complex64::new(c[0], c[1]) * (radius / norm))
        .collect()
}

/// Maximum spectral norm over the probe set.
///
/// Fails with an invalid-structure error if the norm reaches `1 - 10⁻⁶`, if
/// `A` is nonzero at a probe point outside the support, or if the matrix has
/// the wrong shape.
pub fn validate_structure(field: &dyn StructureField, probe: &ProbeSet) -> Result<f64> {
    let triangle = TriangleGeometry;
    let n = field.dim();
    let w_radius = field.w_radius();
    let mut sup: f64 = 0.0;
    for (z, w) in &probe.points {
        let a = field.eval(*z, w);
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::InvalidStructure(format!(
                "A has shape {}×{}, expected {n}×{n}",
                a.nrows(),
                a.ncols()
            )));
        }
        let norm = spectral_norm(&a);
        if !norm.is_finite() {
            return Err(Error::InvalidStructure(format!(
                "A({z}, {w:?}) is not finite"
            )));
        }
        let w_norm = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let outside = !triangle.contains(*z, 0.0) || w_norm > w_radius * (1.0 + 1e-12);
        if outside && norm > 0.0 {
            return Err(Error::InvalidStructure(format!(
                "A does not vanish at z = {z}, |w| = {w_norm:.3e} outside the support"
            )));
        }
        sup = sup.max(norm);
    }
    if sup >= 1.0 - 1e-6 {
        return Err(Error::InvalidStructure(format!(
            "sup ‖A‖₂ = {sup} is not below 1"
        )));
    }
    Ok(sup)
}

/// Largest change `‖A(Z + δ) - A(Z)‖₂` over the probe set for random shifts of size `eps`.
/// Diagnostic only.
pub fn continuity_modulus(
    field: &dyn StructureField,
    probe: &ProbeSet,
    eps: f64,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for (z, w) in &probe.points {
        let dz = random_ball(&mut rng, 1, eps)[0];
        let dw = random_ball(&mut rng, w.len(), eps);
        let w2: Vec<Complex64> = w.iter().zip(&dw).map(|(a, b)| a + b).collect();
        let diff = field.eval(*z + dz, &w2) - field.eval(*z, w);
        worst = worst.max(spectral_norm(&diff));
    }
    worst
}

/// The standard structure `J_st` on `R^{2n}` in the interleaved layout.
pub fn j_standard(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(2 * k, 2 * k + 1)] = -1.0;
        j[(2 * k + 1, 2 * k)] = 1.0;
    }
    j
}

/// The real `2n × 2n` matrix of `v ↦ A conj(v)`.
pub fn antilinear_to_real(a: &DMatrix<Complex64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut b = DMatrix::zeros(2 * n, 2 * n);
    for r in 0..n {
        for c in 0..n {
            let z = a[(r, c)];
            // A conj(x + iy) = (Re z x + Im z y) + i (Im z x - Re z y)
            b[(2 * r, 2 * c)] = z.re;
            b[(2 * r, 2 * c + 1)] = z.im;
            b[(2 * r + 1, 2 * c)] = z.im;
            b[(2 * r + 1, 2 * c + 1)] = -z.re;
        }
    }
    b
}

/// A real structure field `Z ↦ J(Z)`.
pub trait RealJField {
    fn dim(&self) -> usize;
    fn eval(&self, z: Complex64, w: &[Complex64]) -> DMatrix<f64>;
}

/// Checks `J² = -I` and taming by the standard form at one point.
pub fn check_j(j: &DMatrix<f64>) -> Result<()> {
    let m = j.nrows();
    if !m.is_multiple_of(2) || j.ncols() != m || m == 0 {
        return Err(Error::InconsistentStructure(format!(
            "J must be a nonempty even square matrix (got {}×{})",
            m,
            j.ncols()
        )));
    }
    let sq = j * j + DMatrix::<f64>::identity(m, m);
    let defect = sq.abs().max();
    if defect > 1e-10 {
        return Err(Error::InconsistentStructure(format!(
            "‖J² + I‖ = {defect:.3e}"
        )));
    }
    // ω(u, Ju) = uᵀ (-J_st) J u; positive definite iff its symmetric part is.
    let q = -(j_standard(m / 2) * j);
    let sym = (&q + q.transpose()) * 0.5;
    let min_eig = sym
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min_eig <= 0.0 {
        return Err(Error::InconsistentStructure(format!(
            "J is not tamed (min eigenvalue {min_eig:.3e})"
        )));
    }
    Ok(())
}

/// `A` from a tamed `J`: the complex matrix of `(J_st + J)^{-1}(J_st - J)`.
pub fn a_from_j_matrix(j: &DMatrix<f64>) -> Result<DMatrix<Complex64>> {
    check_j(j)?;
    let n = j.nrows() / 2;
    let jst = j_standard(n);
    let sum = &jst + j;
    let lu = sum.lu();
    let b = lu
        .solve(&(&jst - j))
        .ok_or_else(|| Error::InconsistentStructure("J_st + J is singular".into()))?;
    let anti = (&b * &jst + &jst * &b).abs().max();
    if anti > 1e-8 {
        return Err(Error::InconsistentStructure(format!(
            "operator is not anti-linear (defect {anti:.3e})"
        )));
    }
    let mut a = DMatrix::zeros(n, n);
    for c in 0..n {
        let mut e = DVector::zeros(2 * n);
        e[2 * c] = 1.0;
        let col = &b * e;
        for r in 0..n {
            a[(r, c)] = Complex64::new(col[2 * r], col[2 * r + 1]);
        }
    }
    Ok(a)
}

/// `A` at `Z` for a real structure field.
pub fn a_from_j(
    field: &dyn RealJField,
    z: Complex64,
    w: &[Complex64],
) -> Result<DMatrix<Complex64>> {
    a_from_j_matrix(&field.eval(z, w))
}

/// The structure `J = J_st (I - B)(I + B)^{-1}` with `B` the real form of `v ↦ A conj(v)`.
///
/// Requires `‖A‖₂ < 1`, which makes `J` tamed.
pub fn j_from_a(a: &DMatrix<Complex64>) -> Result<DMatrix<f64>> {
    let norm = spectral_norm(a);
    if norm >= 1.0 {
        return Err(invalid(format!("‖A‖₂ = {norm} must be below 1")));
    }
    let n = a.nrows();
    let b = antilinear_to_real(a);
    let id = DMatrix::<f64>::identity(2 * n, 2 * n);
    let inv = (&id + &b)
        .try_inverse()
        .ok_or_else(|| Error::Numeric("I + B is singular".into()))?;
    Ok(j_standard(n) * (&id - &b) * inv)
}
