//! Run configuration, read from TOML.

use std::path::{Path, PathBuf};

use jdisc::conformal::TriangleGeometry;
use jdisc::solver::SolverParams;
use jdisc::structure::{builtin_field, BuiltinField, BuiltinKind, BumpParams};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seed for randomized fixtures of the verification battery.
    pub seed: u64,
    /// Worker threads; unset uses the rayon default (`RAYON_NUM_THREADS` or the core count).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub grid: GridConfig,
    pub boundary: BoundaryConfig,
    pub solver: SolverParams,
    pub structure: StructureConfig,
    pub target: TargetConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundaryConfig {
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StructureConfig {
    pub name: String,
    /// Complex dimension `n` of the target space.
    pub dimension: usize,
    pub amplitude: f64,
    /// `[re, im]`.
    pub z_center: Complex64,
    /// One `[re, im]` pair per `w` component; missing components are 0.
    pub w_center: Vec<Complex64>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetConfig {
    pub z0: Complex64,
    /// Missing components are 0.
    pub w0: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub emit_disc_samples: bool,
    pub emit_diagnostics: bool,
    pub emit_plot_data: bool,
    /// Wall-clock timings in the diagnostics file; the only non-reproducible output.
    pub emit_timings: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            threads: None,
            grid: GridConfig::default(),
            boundary: BoundaryConfig::default(),
            solver: SolverParams::default(),
            structure: StructureConfig::default(),
            target: TargetConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: 64 }
    }
}

impl Default for BoundaryConfig {
    fn default() -> Self {
        Self { m: 256 }
    }
}

impl Default for StructureConfig {
    fn default() -> Self {
        let bump = BumpParams::default();
        Self {
            name: "diag_bump".into(),
            dimension: 2,
            amplitude: bump.amplitude,
            z_center: bump.z_center,
            w_center: Vec::new(),
            radius: bump.radius,
        }
    }
}

impl Default for TargetConfig {
    fn default() -> Self {
        Self {
            z0: Complex64::new(0.0, 0.5),
            w0: Vec::new(),
        }
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            emit_disc_samples: true,
            emit_diagnostics: true,
            emit_plot_data: true,
            emit_timings: true,
        }
    }
}

#[derive(Debug)]
pub enum ConfigError {
    Io(std::io::Error),
    Invalid(String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Io(e) => write!(f, "cannot read config: {e}"),
            ConfigError::Invalid(msg) => write!(f, "invalid config: {msg}"),
        }
    }
}

impl RunConfig {
    /// Reads and validates a config file. A relative output directory is
    /// resolved against the config file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(ConfigError::Io)?;
        let mut config: RunConfig =
            toml::from_str(&text).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if config.output.dir.is_relative() {
            if let Some(parent) = path.parent() {
                config.output.dir = parent.join(&config.output.dir);
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.grid.n < 8 || !self.grid.n.is_multiple_of(2) {
            return bad(format!(
                "grid.n must be even and at least 8 (got {})",
                self.grid.n
            ));
        }
        if self.boundary.m < 16 || !self.boundary.m.is_multiple_of(4) {
            return bad(format!(
                "boundary.m must be a multiple of 4, at least 16 (got {})",
                self.boundary.m
            ));
        }
        if self.threads == Some(0) {
            return bad("threads must be positive".into());
        }
        self.solver
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.structure.dimension == 0 {
            return bad("structure.dimension must be at least 1".into());
        }
        if TriangleGeometry.depth(self.target.z0) <= 0.0 {
            return bad(format!(
                "target.z0 = {} must lie in the open triangle",
                self.target.z0
            ));
        }
        if self.target.w0.len() > self.structure.dimension - 1 {
            return bad(format!(
                "target.w0 has {} components, the dimension allows {}",
                self.target.w0.len(),
                self.structure.dimension - 1
            ));
        }
        self.field().map(|_| ())
    }

    pub fn field(&self) -> Result<BuiltinField, ConfigError> {
        let kind = BuiltinKind::parse(&self.structure.name)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let params = BumpParams {
            amplitude: self.structure.amplitude,
            z_center: self.structure.z_center,
            w_center: self.structure.w_center.clone(),
            radius: self.structure.radius,
        };
        builtin_field(kind, self.structure.dimension, &params)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// `w⁰` padded with zeros to `dimension − 1` components.
    pub fn w0(&self) -> Vec<Complex64> {
        let mut w0 = self.target.w0.clone();
        w0.resize(self.structure.dimension - 1, Complex64::default());
        w0
    }
}
