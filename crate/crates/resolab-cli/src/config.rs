//! Experiment configuration, read from TOML.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use resolab::determinants::DetConfig;
use resolab::freefield::SpectralRegion;
use resolab::nystrom::NystromConfig;
use resolab::potentials::Potential;
use resolab::resonances::{SearchConfig, Window};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Zero {},
    Box { a: f64, depth: f64 },
    MollifiedBox { a: f64, depth: f64, width: f64 },
    GaussianBump { a: f64, depth: f64 },
    Table { xs: Vec<f64>, vs: Vec<f64> },
}

impl PotentialSpec {
    pub fn build(&self) -> resolab::Result<Potential> {
        match self {
            Self::Zero {} => Ok(Potential::zero()),
            Self::Box { a, depth } => Potential::box_potential(*a, *depth),
            Self::MollifiedBox { a, depth, width } => Potential::mollified_box(*a, *depth, *width),
            Self::GaussianBump { a, depth } => Potential::gaussian_bump(*a, *depth),
            Self::Table { xs, vs } => Potential::table(xs.clone(), vs.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegionSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub theta0: f64,
    pub eps: f64,
}

impl Default for RegionSpec {
    fn default() -> Self {
        Self { r_min: 0.25, r_max: 6.0, theta0: 3.0 * PI / 8.0, eps: 0.3 }
    }
}

impl RegionSpec {
    pub fn build(&self) -> resolab::Result<SpectralRegion> {
        SpectralRegion::new(self.r_min, self.r_max, self.theta0, self.eps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    pub n_min: usize,
    pub levels: usize,
    pub kappa_step: f64,
    pub n_max: usize,
    pub edge_points: usize,
    pub zero_tol: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        let n = NystromConfig::default();
        Self { n_min: n.n_min, levels: n.levels, kappa_step: n.kappa_step, n_max: n.n_max, edge_points: 12, zero_tol: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetSection {
    /// Evaluation points as `[re, im]` pairs.
    pub points: Vec<[f64; 2]>,
}

impl Default for DetSection {
    fn default() -> Self {
        Self { points: vec![[1.0, 0.2], [2.0, -0.5], [3.0, -1.0]] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SsfSection {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub n_lambda: usize,
    pub eps: f64,
}

impl Default for SsfSection {
    fn default() -> Self {
        Self { lambda_lo: 0.6, lambda_hi: 4.0, n_lambda: 200, eps: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZetaSection {
    pub points: Vec<[f64; 2]>,
    pub grid_step: f64,
    pub t_max: f64,
    pub n_t: usize,
    pub j_count: usize,
}

impl Default for ZetaSection {
    fn default() -> Self {
        Self { points: vec![[-1.0, 0.5], [-1.5, 1.0]], grid_step: 0.01, t_max: 0.05, n_t: 40, j_count: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistortSection {
    pub thetas: [f64; 2],
    pub r1: f64,
    pub t_inf: f64,
    pub eps1: f64,
    pub box_length: f64,
    pub n_grid: usize,
    pub margin: f64,
}

impl Default for DistortSection {
    fn default() -> Self {
        Self { thetas: [0.6, 0.75], r1: 1.05, t_inf: 2.1, eps1: 1.5, box_length: 8.4, n_grid: 1600, margin: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CounterexampleSection {
    pub n_random: usize,
    pub pw_h_coarse: f64,
    pub pw_h_fine: f64,
    pub pw_grid: usize,
}

impl Default for CounterexampleSection {
    fn default() -> Self {
        Self { n_random: 50, pw_h_coarse: 0.4, pw_h_fine: 0.05, pw_grid: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowSpec {
    pub r_lo: f64,
    pub r_hi: f64,
    pub arg_lo: f64,
    pub arg_hi: f64,
    pub grid_n: usize,
    /// Exponential weight for the `p = 3` sup.
    pub delta: f64,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self { r_lo: 1.0, r_hi: 4.0, arg_lo: -0.5 * PI, arg_hi: 0.0, grid_n: 20, delta: 0.0 }
    }
}

impl WindowSpec {
    pub fn window(&self) -> Window {
        Window { r_lo: self.r_lo, r_hi: self.r_hi, arg_lo: self.arg_lo, arg_hi: self.arg_hi }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_h_list")]
    pub h_list: Vec<f64>,
    #[serde(default = "default_p_orders")]
    pub p_orders: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    pub potential: PotentialSpec,
    #[serde(default)]
    pub region: RegionSpec,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub det: DetSection,
    #[serde(default)]
    pub ssf: SsfSection,
    #[serde(default)]
    pub zeta: ZetaSection,
    #[serde(default)]
    pub distort: DistortSection,
    #[serde(default)]
    pub counterexample: CounterexampleSection,
    #[serde(default)]
    pub window: WindowSpec,
}

fn default_h_list() -> Vec<f64> {
    vec![1.0]
}

fn default_p_orders() -> Vec<usize> {
    vec![1]
}

#[derive(Debug)]
pub enum ConfigError {
    Io(String),
    Parse(String),
    Invalid(String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Io(m) => write!(f, "cannot read config: {m}"),
            Self::Parse(m) => write!(f, "config parse error: {m}"),
            Self::Invalid(m) => write!(f, "invalid config: {m}"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            ConfigError::Parse(m) => ConfigError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable in TOML")
    }

    /// SHA-256 of the canonical TOML form.
    pub fn sha256(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.h_list.is_empty() || self.h_list.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return bad(format!("h_list must be non-empty and positive, got {:?}", self.h_list));
        }
        if self.p_orders.is_empty() || self.p_orders.iter().any(|&p| !(1..=4).contains(&p)) {
            return bad(format!("p_orders must lie in 1..=4, got {:?}", self.p_orders));
        }
        if let Err(e) = self.potential.build() {
            return bad(format!("potential: {e}"));
        }
        if let Err(e) = self.region.build() {
            return bad(format!("region: {e}"));
        }
        let n = &self.numerics;
        if n.n_min < 8 || n.levels < 1 || n.n_max < n.n_min || !(n.kappa_step > 0.0) || n.edge_points < 4 || !(n.zero_tol >= 0.0) {
            return bad(format!("numerics out of range: {n:?}"));
        }
        let s = &self.ssf;
        if !(s.lambda_hi > s.lambda_lo) || s.n_lambda < 2 {
            return bad("ssf needs lambda_lo < lambda_hi and n_lambda >= 2".into());
        }
        let w = &self.window;
        if !(w.r_hi > w.r_lo && w.r_lo > 0.0 && w.arg_hi > w.arg_lo) || w.grid_n < 2 {
            return bad(format!("window out of range: {w:?}"));
        }
        if self.zeta.n_t < 4 || self.zeta.j_count < 1 {
            return bad("zeta needs n_t >= 4 and j_count >= 1".into());
        }
        Ok(())
    }

    pub fn det_config(&self, region: &SpectralRegion) -> DetConfig {
        let n = &self.numerics;
        DetConfig {
            nystrom: NystromConfig { n_min: n.n_min, levels: n.levels, kappa_step: n.kappa_step, n_max: n.n_max },
            zero_tol: n.zero_tol,
            ..DetConfig::for_region(region)
        }
    }

    pub fn search_config(&self, region: &SpectralRegion) -> SearchConfig {
        SearchConfig { edge_points: self.numerics.edge_points, ..SearchConfig::new(self.det_config(region)) }
    }
}

pub fn points(v: &[[f64; 2]]) -> Vec<Complex64> {
    v.iter().map(|p| Complex64::new(p[0], p[1])).collect()
}
