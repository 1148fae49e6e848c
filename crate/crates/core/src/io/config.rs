//! JSON run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::IoError;
use crate::constants::ModelParams;
use crate::dynamics::{Scheme, SolverConfig};
use crate::torus::{random_trig, Field, TorusGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub grid: GridSection,
    pub solver: SolverSection,
    pub initial_data: InitialData,
    #[serde(default)]
    pub outputs: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub d: usize,
    pub alpha: f64,
    pub chi: f64,
    pub r: f64,
    /// Omitted: the default slack of [`ModelParams::with_default_eps`].
    #[serde(default)]
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub d: usize,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default)]
    pub dt: Option<f64>,
    pub t_end: f64,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default = "default_true")]
    pub dealias: bool,
    #[serde(default = "default_neg_tol")]
    pub neg_tol_rel: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    /// `amplitude`
    Constant,
    /// `1 + amplitude sum_i cos(modes x_i)`
    PerturbedOne,
    /// `amplitude (1 + prod_i cos(modes x_i))`
    CosineBump,
    /// `0.1 + w^2` with `w` a seeded trigonometric polynomial of degree
    /// `modes` and coefficients up to `amplitude`
    RandomTrig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    pub kind: InitialKind,
    #[serde(default = "default_one")]
    pub amplitude: f64,
    #[serde(default = "default_modes")]
    pub modes: i64,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub trajectory_csv_path: Option<PathBuf>,
    #[serde(default)]
    pub certificates_ndjson_path: Option<PathBuf>,
    #[serde(default)]
    pub checkpoint_path: Option<PathBuf>,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            trajectory_csv_path: None,
            certificates_ndjson_path: None,
            checkpoint_path: None,
            record_every: 1,
        }
    }
}

fn default_scheme() -> Scheme {
    Scheme::Imex2
}

fn default_true() -> bool {
    true
}

fn default_neg_tol() -> f64 {
    1e-10
}

fn default_one() -> f64 {
    1.0
}

fn default_modes() -> i64 {
    1
}

fn default_record_every() -> usize {
    1
}

impl InitialData {
    pub fn sample(&self, grid: TorusGrid) -> Result<Field, IoError> {
        let (a, m) = (self.amplitude, self.modes as f64);
        let d = grid.d();
        Ok(match self.kind {
            InitialKind::Constant => Field::constant(grid, a),
            InitialKind::PerturbedOne => {
                grid.sample(|x| 1.0 + a * (0..d).map(|i| (m * x[i]).cos()).sum::<f64>())
            }
            InitialKind::CosineBump => {
                grid.sample(|x| a * (1.0 + (0..d).map(|i| (m * x[i]).cos()).product::<f64>()))
            }
            InitialKind::RandomTrig => {
                let seed = self
                    .seed
                    .ok_or_else(|| IoError::Config("random_trig initial data needs a seed".into()))?;
                random_trig(grid, self.modes, 6, a, seed).map(|w| 0.1 + w * w)
            }
        })
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, IoError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        let text = std::fs::read_to_string(path).map_err(|e| IoError::at(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), IoError> {
        if self.grid.d != self.model.d {
            return Err(IoError::Config(format!(
                "grid.d = {} differs from model.d = {}",
                self.grid.d, self.model.d
            )));
        }
        if self.initial_data.kind == InitialKind::RandomTrig && self.initial_data.seed.is_none() {
            return Err(IoError::Config("random_trig initial data needs a seed".into()));
        }
        if self.initial_data.modes < 0 {
            return Err(IoError::Config("initial_data.modes must be nonnegative".into()));
        }
        self.solver_config()?.validate()?;
        Ok(())
    }

    /// Model parameters and whether the slack keeps the problem
    /// supercritical (always `true` when `eps` is given).
    pub fn params(&self) -> Result<(ModelParams, bool), IoError> {
        let m = self.model;
        Ok(match m.eps {
            Some(eps) => (ModelParams::new(m.d, m.alpha, m.chi, m.r, eps)?, true),
            None => ModelParams::with_default_eps(m.d, m.alpha, m.chi, m.r)?,
        })
    }

    pub fn grid(&self) -> Result<TorusGrid, IoError> {
        Ok(TorusGrid::new(self.grid.d, self.grid.n)?)
    }

    pub fn solver_config(&self) -> Result<SolverConfig, IoError> {
        let mut cfg = SolverConfig::new(self.grid()?, self.params()?.0, self.solver.t_end);
        cfg.dt = self.solver.dt;
        cfg.scheme = self.solver.scheme;
        cfg.dealias = self.solver.dealias;
        cfg.neg_tol_rel = self.solver.neg_tol_rel;
        cfg.record_every = self.outputs.record_every;
        Ok(cfg)
    }

    pub fn initial_field(&self) -> Result<Field, IoError> {
        self.initial_data.sample(self.grid()?)
    }

    /// First 16 hex digits of the SHA-256 of everything but the outputs.
    pub fn digest(&self) -> String {
        let key = serde_json::json!({
            "model": self.model,
            "grid": self.grid,
            "solver": self.solver,
            "initial_data": self.initial_data,
            "record_every": self.outputs.record_every,
        });
        digest_of(&key)
    }
}

/// First 16 hex digits of the SHA-256 of a JSON value's compact encoding.
pub fn digest_of(value: &serde_json::Value) -> String {
    let bytes = serde_json::to_vec(value).expect("JSON values serialize");
    let hash = Sha256::digest(&bytes);
    hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
}
