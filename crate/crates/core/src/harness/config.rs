use std::path::PathBuf;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::{Field, TorusGrid};
use crate::model::{DiffusionLaw, FluxLaw, ModelSpec};
use crate::noise::{standard_normal, NoiseFamily, NoiseModel};
use crate::solver::{DiffusionScheme, FluxScheme, SolverConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    /// `k` in `B(ξ) = ξ^k / k`; absent switches the flux off.
    #[serde(default)]
    pub flux_exponent: Option<u32>,
    /// `m` in `A(ξ) = |ξ|^{m-1}`; absent switches the diffusion off.
    #[serde(default)]
    pub diffusion_exponent: Option<f64>,
    #[serde(default)]
    pub viscosity: f64,
    #[serde(default)]
    pub truncation: f64,
}

impl ModelBlock {
    pub fn build(&self) -> Result<ModelSpec<f64>> {
        let mut spec = ModelSpec::inert().with_viscosity(self.viscosity).with_truncation(self.truncation);
        if let Some(k) = self.flux_exponent {
            spec = spec.with_flux(FluxLaw::Power { exponent: k });
        }
        if let Some(m) = self.diffusion_exponent {
            spec = spec.with_diffusion(DiffusionLaw::Power { exponent: m });
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseBlock {
    pub family: NoiseFamily,
    /// `α_k`, one per mode; empty means no noise.
    #[serde(default)]
    pub alpha: Vec<f64>,
}

impl NoiseBlock {
    pub fn deterministic() -> Self {
        Self { family: NoiseFamily::Additive, alpha: Vec::new() }
    }

    pub fn build(&self) -> Result<NoiseModel<f64>> {
        if self.alpha.is_empty() {
            Ok(NoiseModel::deterministic())
        } else {
            NoiseModel::new(self.family, self.alpha.clone())
        }
    }
}

fn default_dim() -> usize {
    1
}

fn default_cfl_fraction() -> f64 {
    0.8
}

fn default_value_range() -> [f64; 2] {
    [-1.5, 1.5]
}

fn default_record_every() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub points: usize,
    pub t_end: f64,
    /// Fixed step; when absent the largest admissible `t_end / n` is used.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Fraction of the admissible step taken when `dt` is absent.
    #[serde(default = "default_cfl_fraction")]
    pub cfl_fraction: f64,
    /// Value range the admissible step is computed for.
    #[serde(default = "default_value_range")]
    pub value_range: [f64; 2],
    #[serde(default = "default_diffusion_scheme")]
    pub diffusion_scheme: DiffusionScheme,
    #[serde(default = "default_flux_scheme")]
    pub flux_scheme: FluxScheme,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

fn default_diffusion_scheme() -> DiffusionScheme {
    DiffusionScheme::Explicit
}

fn default_flux_scheme() -> FluxScheme {
    FluxScheme::EngquistOsher
}

impl SolverBlock {
    pub fn line(points: usize, t_end: f64) -> Self {
        Self {
            dim: 1,
            points,
            t_end,
            dt: None,
            cfl_fraction: default_cfl_fraction(),
            value_range: default_value_range(),
            diffusion_scheme: default_diffusion_scheme(),
            flux_scheme: default_flux_scheme(),
            record_every: 1,
        }
    }

    pub fn grid(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.dim, self.points)
    }

    pub fn build(&self, model: ModelSpec<f64>, noise: NoiseModel<f64>) -> Result<SolverConfig<f64>> {
        let mut c = SolverConfig::new(model, noise, self.grid()?, 1.0, self.t_end);
        c.diffusion_scheme = self.diffusion_scheme;
        c.flux_scheme = self.flux_scheme;
        c.record_every = self.record_every;
        c.dt = match self.dt {
            Some(dt) => dt,
            None => c.fitted_dt(self.value_range[0], self.value_range[1], self.cfl_fraction),
        };
        c.validate()?;
        Ok(c)
    }
}

/// Initial data; the second coordinate is ignored in two dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialDatum {
    Constant { value: f64 },
    /// `amplitude · cos(frequency · x)`.
    Cosine { amplitude: f64, frequency: f64 },
    /// `amplitude · sin(x + shift) + offset`.
    Sine { amplitude: f64, shift: f64, offset: f64 },
    /// `left` on `[0, π)`, `right` on `[π, 2π)`.
    Step { left: f64, right: f64 },
    /// Independent `N(0, amplitude²)` values per grid point, clipped to `[-clip, clip]`.
    WhiteNoise { amplitude: f64, clip: f64 },
}

impl InitialDatum {
    pub fn sample(&self, grid: TorusGrid, seed: u64) -> Field<f64> {
        match *self {
            Self::Constant { value } => Field::constant(grid, value),
            Self::Cosine { amplitude, frequency } => Field::from_fn(grid, |x: [f64; 2]| amplitude * (frequency * x[0]).cos()),
            Self::Sine { amplitude, shift, offset } => {
                Field::from_fn(grid, |x: [f64; 2]| amplitude * (x[0] + shift).sin() + offset)
            }
            Self::Step { left, right } => {
                Field::from_fn(grid, |x: [f64; 2]| if x[0] < std::f64::consts::PI { left } else { right })
            }
            Self::WhiteNoise { amplitude, clip } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                // Wiener increments use the low streams
                rng.set_stream(u64::MAX);
                let values = (0..grid.len()).map(|_| (amplitude * standard_normal(&mut rng)).clamp(-clip, clip)).collect();
                Field::new(grid, values).expect("length matches grid")
            }
        }
    }
}

/// Configuration file contents; absent entries take the experiment's canonical values.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: Option<String>,
    #[serde(default)]
    pub members: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub model: Option<ModelBlock>,
    #[serde(default)]
    pub noise: Option<NoiseBlock>,
    #[serde(default)]
    pub solver: Option<SolverBlock>,
    #[serde(default)]
    pub initial: Option<Vec<InitialDatum>>,
    #[serde(default)]
    pub fit: Option<FitBlock>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid configuration: {e}")))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Grids of the exponent fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitBlock {
    pub j_list: Vec<usize>,
    pub delta_list: Vec<f64>,
    /// Support of the localization `η`.
    pub window: [f64; 2],
}

impl FitBlock {
    /// Grids resolving the scaling regime of each law.
    pub fn default_for(model: &ModelBlock) -> Self {
        if model.diffusion_exponent.is_some() {
            Self { j_list: vec![32, 64, 128, 256], delta_list: vec![8.0, 16.0, 32.0, 64.0], window: [-1.0, 1.0] }
        } else {
            Self { j_list: vec![2, 4, 8, 16], delta_list: vec![0.05, 0.1, 0.2, 0.4], window: [-1.0, 1.0] }
        }
    }
}

/// Fully specified configuration; its JSON form is what the config hash covers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub experiment: String,
    pub members: usize,
    pub seed: u64,
    pub model: ModelBlock,
    pub noise: NoiseBlock,
    pub solver: SolverBlock,
    pub initial: Vec<InitialDatum>,
    pub fit: Option<FitBlock>,
}

impl ResolvedConfig {
    pub fn overlay(mut self, file: &ExperimentConfig) -> Result<Self> {
        if let Some(name) = &file.experiment {
            if *name != self.experiment {
                return Err(Error::Config(format!("configuration is for `{name}`, not `{}`", self.experiment)));
            }
        }
        if let Some(m) = file.members {
            self.members = m;
        }
        if let Some(s) = file.seed {
            self.seed = s;
        }
        if let Some(b) = &file.model {
            self.model = b.clone();
        }
        if let Some(b) = &file.noise {
            self.noise = b.clone();
        }
        if let Some(b) = &file.solver {
            self.solver = b.clone();
        }
        if let Some(b) = &file.initial {
            self.initial = b.clone();
        }
        if file.fit.is_some() {
            self.fit = file.fit.clone();
        }
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.members == 0 {
            return Err(Error::Config("members must be at least 1".into()));
        }
        self.model.build()?;
        self.noise.build()?;
        self.solver.grid()?;
        if self.initial.is_empty() {
            return Err(Error::Config("at least one initial datum is required".into()));
        }
        Ok(())
    }

    /// `seed + i` for member `i`.
    pub fn member_seeds(&self) -> Vec<u64> {
        (0..self.members as u64).map(|i| self.seed.wrapping_add(i)).collect()
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("configuration serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn solver_config(&self) -> Result<SolverConfig<f64>> {
        self.solver.build(self.model.build()?, self.noise.build()?)
    }

    pub fn datum(&self, index: usize, seed: u64) -> Result<Field<f64>> {
        let d = self
            .initial
            .get(index)
            .ok_or_else(|| Error::Config(format!("experiment `{}` needs initial datum #{index}", self.experiment)))?;
        Ok(d.sample(self.solver.grid()?, seed))
    }
}
