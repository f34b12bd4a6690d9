//! Experiment configuration: TOML with fail-closed parsing.

use std::path::{Path, PathBuf};

use ascl_core::constitutive::MultiplierSymbol;
use ascl_core::dynamics::{step_count, ForcingSpec, ModelParams};
use ascl_core::profiles::{cosine_mode, random_smooth_where};
use ascl_core::snapshot::load_snapshot;
use ascl_core::{Grid, SpectralField};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

pub const ENV_OUTPUT_DIR: &str = "ASCL_OUTPUT_DIR";
pub const ENV_THREADS: &str = "ASCL_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Equation {
    Sqg,
    Mg,
}

impl Equation {
    pub fn dim(self) -> usize {
        match self {
            Equation::Sqg => 2,
            Equation::Mg => 3,
        }
    }
}

fn default_true() -> bool {
    true
}

fn default_nu() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub equation: Equation,
    #[serde(default = "default_nu")]
    pub nu: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub gamma: f64,
    #[serde(default = "default_true")]
    pub nonlinear: bool,
}

impl ModelConfig {
    pub fn params(&self) -> Result<ModelParams> {
        let symbol = match self.equation {
            Equation::Sqg => MultiplierSymbol::Sqg,
            Equation::Mg => MultiplierSymbol::mg(self.nu)?,
        };
        let p = ModelParams::new(self.lambda, self.kappa, self.gamma, symbol)?;
        Ok(if self.nonlinear { p } else { p.linear() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
}

fn default_slope() -> f64 {
    3.0
}

/// A field: a named analytic profile or a stored snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProfileConfig {
    Zero,
    /// `amplitude cos(mode . x)`; without a mode, `cos x1` in 2D and
    /// `cos x1 cos x3` in 3D.
    Cosine {
        amplitude: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mode: Option<Vec<i64>>,
    },
    RandomSmooth {
        seed: u64,
        l2: f64,
        #[serde(default = "default_slope")]
        slope: f64,
    },
    Snapshot {
        path: PathBuf,
    },
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig::Cosine {
            amplitude: 1.0,
            mode: None,
        }
    }
}

impl ProfileConfig {
    /// Builds the field; fields on MG grids avoid the `k3 = 0` plane.
    pub fn build(&self, grid: Grid, equation: Equation, base_dir: &Path) -> Result<SpectralField> {
        let plane = equation == Equation::Mg;
        Ok(match self {
            ProfileConfig::Zero => SpectralField::zeros(grid),
            ProfileConfig::Cosine { amplitude, mode } => match (mode, grid.dim()) {
                (Some(k), _) => cosine_mode(grid, k, *amplitude)?,
                (None, 2) => cosine_mode(grid, &[1, 0], *amplitude)?,
                (None, _) => {
                    // cos x1 cos x3 = (cos(x1 + x3) + cos(x1 - x3)) / 2
                    let a = cosine_mode(grid, &[1, 0, 1], 0.5 * amplitude)?;
                    a.add_scaled(1.0, &cosine_mode(grid, &[1, 0, -1], 0.5 * amplitude)?)?
                }
            },
            ProfileConfig::RandomSmooth { seed, l2, slope } => {
                random_smooth_where(grid, *seed, *l2, *slope, |k| !plane || k[2] != 0)?
            }
            ProfileConfig::Snapshot { path } => {
                let f = load_snapshot(&base_dir.join(path))?;
                if f.grid() != grid {
                    return Err(HarnessError::Config(format!(
                        "snapshot {} is on {:?}, expected {:?}",
                        path.display(),
                        f.grid(),
                        grid
                    )));
                }
                f
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_end: f64,
    pub dt: f64,
    pub stride: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Kappa,
    Lambda,
}

fn default_s_list() -> Vec<f64> {
    vec![0.0, 1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepAxis,
    /// Positive and strictly decreasing.
    pub values: Vec<f64>,
    #[serde(default = "default_s_list")]
    pub s_list: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttractorConfig {
    #[serde(default = "AttractorConfig::default_count")]
    pub trajectories: usize,
    #[serde(default = "AttractorConfig::default_count")]
    pub samples_per_trajectory: usize,
    #[serde(default = "AttractorConfig::default_spinup")]
    pub t_spinup: f64,
    #[serde(default = "AttractorConfig::default_gap")]
    pub t_gap: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "AttractorConfig::default_radius")]
    pub radius: f64,
    /// Universal constant in the dimension threshold.
    #[serde(default = "AttractorConfig::default_radius")]
    pub c: f64,
    /// Attractor bound used by the dimension threshold; the report omits the
    /// threshold without it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_bound: Option<f64>,
}

impl AttractorConfig {
    fn default_count() -> usize {
        8
    }
    fn default_spinup() -> f64 {
        100.0
    }
    fn default_gap() -> f64 {
        10.0
    }
    fn default_radius() -> f64 {
        1.0
    }
}

impl Default for AttractorConfig {
    fn default() -> Self {
        AttractorConfig {
            trajectories: 8,
            samples_per_trajectory: 8,
            t_spinup: 100.0,
            t_gap: 10.0,
            seed: 0,
            radius: 1.0,
            c: 1.0,
            m_bound: None,
        }
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from("ascl-out")
}

fn default_threads() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_threads")]
    pub threads: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: default_dir(),
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub forcing: ProfileConfig,
    pub initial: ProfileConfig,
    pub time: TimeConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attractor: Option<AttractorConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always serializable")
    }

    /// Applies `ASCL_OUTPUT_DIR` and `ASCL_THREADS`.
    pub fn apply_env(&mut self) -> Result<()> {
        self.apply_overrides(std::env::var(ENV_OUTPUT_DIR).ok(), std::env::var(ENV_THREADS).ok())
    }

    pub fn apply_overrides(&mut self, dir: Option<String>, threads: Option<String>) -> Result<()> {
        if let Some(d) = dir {
            self.output.dir = PathBuf::from(d);
        }
        if let Some(t) = threads {
            self.output.threads = t
                .trim()
                .parse()
                .map_err(|_| HarnessError::Config(format!("{ENV_THREADS} must be a positive integer, got {t:?}")))?;
        }
        if self.output.threads == 0 {
            return Err(HarnessError::Config("threads must be at least 1".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical serialization, excluding the output section
    /// so that where and how fast a run executes does not change its identity.
    pub fn fingerprint(&self) -> String {
        let mut c = self.clone();
        c.output = OutputConfig::default();
        hex::encode(Sha256::digest(c.to_toml().as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        self.model.params()?;
        Grid::new(self.model.equation.dim(), self.grid.n)?;
        if !(self.time.dt > 0.0) || self.time.stride == 0 {
            return bad("time.dt must be positive and time.stride at least 1".into());
        }
        step_count(self.time.t_end, self.time.dt)?;
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return bad("sweep.values is empty".into());
            }
            if s.values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return bad(format!("sweep values must be positive, got {:?}", s.values));
            }
            if s.values.windows(2).any(|w| w[1] >= w[0]) {
                return bad(format!("sweep values must be strictly decreasing, got {:?}", s.values));
            }
            if s.s_list.iter().any(|v| !(*v >= 0.0)) {
                return bad(format!("sweep.s_list must be nonnegative, got {:?}", s.s_list));
            }
        }
        if let Some(a) = &self.attractor {
            if a.trajectories == 0 || a.samples_per_trajectory == 0 || !(a.radius > 0.0) || !(a.c > 0.0) {
                return bad("attractor counts, radius and c must be positive".into());
            }
            step_count(a.t_spinup, self.time.dt)?;
            step_count(a.t_gap, self.time.dt)?;
        }
        if let ProfileConfig::Cosine { mode: Some(k), .. } = &self.forcing {
            if k.len() != self.model.equation.dim() {
                return bad(format!("forcing mode {k:?} has the wrong dimension"));
            }
        }
        Ok(())
    }

    pub fn build(&self, base_dir: &Path) -> Result<Experiment> {
        self.validate()?;
        let params = self.model.params()?;
        let grid = Grid::new(self.model.equation.dim(), self.grid.n)?;
        let forcing = ForcingSpec::new(self.forcing.build(grid, self.model.equation, base_dir)?, &params.symbol)?;
        let theta0 = self.initial.build(grid, self.model.equation, base_dir)?;
        Ok(Experiment {
            grid,
            params,
            forcing,
            theta0,
            dt: self.time.dt,
            t_end: self.time.t_end,
            stride: self.time.stride,
            fingerprint: self.fingerprint(),
        })
    }
}

/// A configuration resolved into solver inputs.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub grid: Grid,
    pub params: ModelParams,
    pub forcing: ForcingSpec,
    pub theta0: SpectralField,
    pub dt: f64,
    pub t_end: f64,
    pub stride: u64,
    pub fingerprint: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[model]
equation = "sqg"
lambda = 0.5
kappa = 0.1
gamma = 1.0

[grid]
n = 16

[initial]
profile = "random-smooth"
seed = 3
l2 = 1.0

[time]
t_end = 1.0
dt = 0.01
stride = 10

[sweep]
parameter = "kappa"
values = [0.2, 0.1]
"#;

    #[test]
    fn round_trips_losslessly() {
        let c = ExperimentConfig::from_toml(BASE).unwrap();
        let again = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.fingerprint(), again.fingerprint());
        assert_eq!(c.forcing, ProfileConfig::default());
        assert_eq!(c.sweep.as_ref().unwrap().s_list, vec![0.0, 1.0]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let extra = BASE.replace("n = 16", "n = 16\nshape = 2");
        assert!(matches!(ExperimentConfig::from_toml(&extra), Err(HarnessError::Config(_))));
        let tagged = BASE.replace("l2 = 1.0", "l2 = 1.0\namplitude = 2.0");
        assert!(ExperimentConfig::from_toml(&tagged).is_err());
    }

    #[test]
    fn sweep_values_must_be_positive_and_decreasing() {
        for v in ["[0.1, 0.2]", "[0.2, 0.0]", "[]", "[0.1, 0.1]"] {
            let t = BASE.replace("[0.2, 0.1]", v);
            assert!(ExperimentConfig::from_toml(&t).is_err(), "{v}");
        }
    }

    #[test]
    fn fingerprint_ignores_output() {
        let mut c = ExperimentConfig::from_toml(BASE).unwrap();
        let f = c.fingerprint();
        c.apply_overrides(Some("/tmp/elsewhere".into()), Some("8".into())).unwrap();
        assert_eq!(c.output.threads, 8);
        assert_eq!(c.fingerprint(), f);
        c.model.kappa = 0.05;
        assert_ne!(c.fingerprint(), f);
        assert!(c.apply_overrides(None, Some("zero".into())).is_err());
    }

    #[test]
    fn builds_mg_fields_off_the_plane() {
        let t = BASE
            .replace("\"sqg\"", "\"mg\"")
            .replace("gamma = 1.0", "gamma = 2.0")
            .replace("n = 16", "n = 8");
        let e = ExperimentConfig::from_toml(&t).unwrap().build(Path::new(".")).unwrap();
        assert_eq!(e.grid.dim(), 3);
        for i in 0..e.grid.len() {
            if e.grid.k_at(i)[2] == 0 {
                assert_eq!(e.theta0.coeffs()[i].norm(), 0.0);
                assert_eq!(e.forcing.field().coeffs()[i].norm(), 0.0);
            }
        }
        assert!((e.theta0.norm_l2() - 1.0).abs() < 1e-12);
    }
}
