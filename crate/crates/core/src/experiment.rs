//! JSON experiment files: schema, validation and construction of the
//! runtime objects they describe.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bounds::{BoundInputs, Horizon};
use crate::conditions::{estimate_local_constants, LocalConstants};
use crate::error::Error;
use crate::landscape::{make_landscape, Landscape, LandscapeSpec};
use crate::minima::NeighborhoodSpec;
use crate::montecarlo::ExperimentConfig;
use crate::sgd::{NoiseModel, Schedule, SgdConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub landscape: LandscapeSpec,
    pub neighborhood: NeighborhoodSection,
    pub schedule: Schedule,
    pub noise: NoiseSpec,
    pub sgd: SgdSection,
    pub bounds: BoundsSection,
    pub montecarlo: MonteCarloSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeighborhoodSection {
    pub radius: f64,
    /// Random points per condition check.
    #[serde(default = "default_condition_samples")]
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    Gaussian { sigma: f64 },
    ScaledGaussian { sigma: f64, scale: f64 },
}

impl NoiseSpec {
    pub fn model(&self) -> NoiseModel {
        match *self {
            NoiseSpec::Gaussian { sigma } => NoiseModel::Gaussian { sigma },
            NoiseSpec::ScaledGaussian { sigma, scale } => NoiseModel::ScaledGaussian { sigma, scale },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SgdSection {
    pub batch_size: usize,
    pub horizon: usize,
    pub x1: Vec<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    /// Lipschitz constant on `N_r`; estimated from samples when absent.
    #[serde(default)]
    pub lipschitz: Option<f64>,
    /// Single-sample noise second moment on `N_r`; taken from the noise model when absent.
    #[serde(default)]
    pub sigma_r: Option<f64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_constant_samples")]
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSection {
    pub trials: usize,
    pub epsilon_grid: Vec<f64>,
    pub rate_horizons: Vec<usize>,
    pub rate_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
    #[serde(default = "default_true")]
    pub trajectory_csv: bool,
}

fn default_condition_samples() -> usize {
    2000
}
fn default_delta() -> f64 {
    0.1
}
fn default_constant_samples() -> usize {
    400
}
fn default_true() -> bool {
    true
}

/// Schema or semantic problem in a configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub message: String,
    /// 1-based position, when the problem is tied to a place in the file.
    pub line: Option<usize>,
    pub column: Option<usize>,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "line {l}, column {c}: {}", self.message),
            _ => f.write_str(&self.message),
        }
    }
}

impl From<serde_json::Error> for ConfigError {
    fn from(e: serde_json::Error) -> Self {
        // serde_json appends " at line L column C"; keep the bare message
        let text = e.to_string();
        let message = match text.rfind(" at line ") {
            Some(i) => text[..i].to_string(),
            None => text,
        };
        let known = e.line() > 0;
        ConfigError {
            message,
            line: known.then(|| e.line()),
            column: known.then(|| e.column()),
        }
    }
}

impl From<Error> for ConfigError {
    fn from(e: Error) -> Self {
        ConfigError {
            message: e.to_string(),
            line: None,
            column: None,
        }
    }
}

/// Hex SHA-256 of the raw configuration bytes.
pub fn config_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub fn parse_experiment(text: &str) -> Result<ExperimentFile, ConfigError> {
    let file: ExperimentFile = serde_json::from_str(text)?;
    file.validate()?;
    Ok(file)
}

pub fn read_experiment(path: &Path) -> std::io::Result<String> {
    std::fs::read_to_string(path)
}

/// Everything an experiment needs, built and validated.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub landscape: Landscape,
    pub spec: NeighborhoodSpec,
    pub sgd: SgdConfig,
}

impl ExperimentFile {
    /// Semantic checks that do not run any computation.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: String| Err(ConfigError { message: m, line: None, column: None });
        let LandscapeSpec::PowerBasin { dimension, .. } = &self.landscape;
        if self.sgd.x1.len() != *dimension {
            return fail(format!(
                "sgd.x1 has {} coordinates but landscape.dimension is {dimension}",
                self.sgd.x1.len()
            ));
        }
        if !(self.neighborhood.radius > 0.0 && self.neighborhood.radius.is_finite()) {
            return fail("neighborhood.radius must be positive".into());
        }
        if self.neighborhood.samples == 0 {
            return fail("neighborhood.samples must be at least 1".into());
        }
        self.schedule.validate()?;
        self.noise.model().validate()?;
        if self.sgd.batch_size == 0 || self.sgd.horizon == 0 {
            return fail("sgd.batch_size and sgd.horizon must be at least 1".into());
        }
        if self.montecarlo.trials < crate::montecarlo::MIN_TRIALS || self.montecarlo.rate_trials < crate::montecarlo::MIN_TRIALS {
            return fail(format!(
                "montecarlo.trials and montecarlo.rate_trials must be at least {}",
                crate::montecarlo::MIN_TRIALS
            ));
        }
        if self.montecarlo.epsilon_grid.is_empty() || self.montecarlo.epsilon_grid.iter().any(|e| !(*e > 0.0)) {
            return fail("montecarlo.epsilon_grid must be a non-empty list of positive numbers".into());
        }
        if self.montecarlo.rate_horizons.len() < 4 {
            return fail("montecarlo.rate_horizons needs at least four horizons".into());
        }
        if !(self.bounds.delta > 0.0) || self.bounds.samples < 2 {
            return fail("bounds.delta must be positive and bounds.samples at least 2".into());
        }
        Ok(())
    }

    /// Builds the landscape (with its gradient self-check) and the SGD configuration.
    pub fn prepare(&self, seed_override: Option<u64>) -> Result<Prepared, ConfigError> {
        let spec = match &self.landscape {
            LandscapeSpec::PowerBasin {
                dimension,
                degree,
                scale,
                minima,
                validity_radius,
            } => LandscapeSpec::PowerBasin {
                dimension: *dimension,
                degree: *degree,
                scale: *scale,
                minima: minima.clone(),
                validity_radius: Some(validity_radius.unwrap_or(10.0 * self.neighborhood.radius)),
            },
        };
        let landscape = make_landscape(&spec)?;
        let nspec = NeighborhoodSpec::new(self.neighborhood.radius, landscape.minima().clone())?;
        let sgd = SgdConfig {
            landscape: landscape.clone(),
            spec: nspec.clone(),
            schedule: self.schedule,
            noise: self.noise.model(),
            batch_size: self.sgd.batch_size,
            horizon: self.sgd.horizon,
            x1: self.sgd.x1.clone(),
            seed: seed_override.unwrap_or(self.sgd.seed),
        };
        sgd.validate()?;
        Ok(Prepared {
            landscape,
            spec: nspec,
            sgd,
        })
    }

    /// Bound inputs for a prepared experiment; estimates the local constants
    /// when the file does not pin them.
    pub fn bound_inputs(&self, p: &Prepared) -> Result<(BoundInputs, Option<LocalConstants>), ConfigError> {
        let constants = match self.bounds.lipschitz {
            Some(_) => None,
            None => Some(estimate_local_constants(
                &p.landscape,
                &p.spec,
                self.bounds.delta,
                self.bounds.samples,
                p.sgd.seed,
            )?),
        };
        let lipschitz = self
            .bounds
            .lipschitz
            .unwrap_or_else(|| constants.as_ref().map_or(0.0, |c| c.lipschitz_for_bounds()));
        let sigma_r = match self.bounds.sigma_r {
            Some(s) => s,
            None => p.sgd.noise.sigma_r(&p.landscape, &p.spec, self.bounds.samples, p.sgd.seed)?,
        };
        let inputs = BoundInputs {
            dist1: p.landscape.distance(&p.sgd.x1),
            r: p.spec.radius,
            lipschitz,
            sigma_r,
            batch_size: p.sgd.batch_size,
            schedule: p.sgd.schedule,
            horizon: Horizon::Finite(p.sgd.horizon),
        };
        inputs.validate()?;
        Ok((inputs, constants))
    }

    pub fn experiment_config(&self, p: &Prepared, inputs: BoundInputs, hash: &str) -> ExperimentConfig {
        ExperimentConfig {
            sgd: p.sgd.clone(),
            trials: self.montecarlo.trials,
            epsilon_grid: self.montecarlo.epsilon_grid.clone(),
            bound_inputs: inputs,
            config_hash: hash.to_string(),
        }
    }
}
