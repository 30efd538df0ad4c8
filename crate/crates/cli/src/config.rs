//! Experiment configuration, read from and written to TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use trapwalk_core::mcmc::{BurnIn, ChainSchedule, InitialPath};
use trapwalk_core::{ModelParams, MoveMix, ScalingConstants, TrulyOpenConfig};

use crate::error::{io_err, CliError, CliResult};

/// `d`, `p` and the master seed; horizons come from the grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub d: usize,
    pub p: f64,
    pub seed: u64,
}

impl ModelConfig {
    pub fn params(&self, n: usize) -> CliResult<ModelParams> {
        Ok(ModelParams::new(self.d, self.p, n, self.seed)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "preset")]
pub enum MixChoice {
    /// The library default mix.
    Default,
    /// Weighted towards long segment shuffles and endpoint regrowth, with
    /// window lengths tied to the optimal radius `R` (`R^2` steps).
    Scaling,
    Custom { mix: MoveMix },
}

impl MixChoice {
    pub fn resolve(&self, d: usize, p: f64, n: usize) -> CliResult<MoveMix> {
        Ok(match self {
            MixChoice::Default => MoveMix::default(),
            MixChoice::Custom { mix } => *mix,
            MixChoice::Scaling => {
                let r = ScalingConstants::new(d, p)?.optimal_radius(n as f64);
                let len = (r * r).max(1.0);
                MoveMix {
                    segment_regrow: 0.05,
                    endpoint_regrow: 0.15,
                    local_wiggle: 0.2,
                    segment_shuffle: 0.6,
                    segment_mean: Some(2.0),
                    endpoint_mean: Some(len),
                    shuffle_mean: Some(len),
                    segment_cap: None,
                    wiggle_max: 4,
                }
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InitChoice {
    Straight,
    /// Reflected walk in the ball of the optimal radius.
    ConfinedOptimal,
    Confined { radius: f64 },
}

impl InitChoice {
    pub fn resolve(&self, d: usize, p: f64, n: usize) -> CliResult<InitialPath> {
        Ok(match *self {
            InitChoice::Straight => InitialPath::Straight,
            InitChoice::Confined { radius } => InitialPath::Confined { radius },
            InitChoice::ConfinedOptimal => {
                InitialPath::Confined { radius: ScalingConstants::new(d, p)?.optimal_radius(n as f64).max(1.0) }
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub n_grid: Vec<usize>,
    pub chains: usize,
    pub sweeps: u64,
    pub burn_in: BurnIn,
    pub thin: u64,
    pub mix: MixChoice,
    pub init: InitChoice,
    /// Inner and outer crossing radii as fractions of `ρ_N`.
    pub crossings: (f64, f64),
    /// Radii, as fractions of `ρ_N`, at which ball-covering deficits are measured.
    pub covering_fractions: Vec<f64>,
    /// When set, obstacles are drawn given the final path of each chain
    /// and the truly-open cluster is measured.
    pub truly_open: Option<TrulyOpenConfig>,
    pub output_dir: PathBuf,
    pub emit_plots: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: ModelConfig { d: 2, p: 0.5, seed: 1 },
            n_grid: vec![10_000, 40_000, 160_000],
            chains: 2,
            sweeps: 2000,
            burn_in: BurnIn::Auto { pilot_sweeps: 500 },
            thin: 20,
            mix: MixChoice::Scaling,
            init: InitChoice::ConfinedOptimal,
            crossings: (0.5, 0.75),
            covering_fractions: vec![0.7, 0.8, 0.9],
            truly_open: None,
            output_dir: PathBuf::from("out"),
            emit_plots: true,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        self.model.params(1)?;
        if self.n_grid.is_empty() || self.n_grid.contains(&0) {
            return bad(format!("n_grid entries must be positive, got {:?}", self.n_grid));
        }
        if self.chains < 2 {
            return bad(format!("at least 2 chains are needed for cross-chain errors, got {}", self.chains));
        }
        if self.sweeps == 0 || self.thin == 0 || self.thin > self.sweeps {
            return bad(format!("need 0 < thin <= sweeps, got thin={} sweeps={}", self.thin, self.sweeps));
        }
        let (a, b) = self.crossings;
        if !(a >= 0.0 && a < b) {
            return bad(format!("crossing fractions must satisfy 0 <= inner < outer, got ({a}, {b})"));
        }
        if self.covering_fractions.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
            return bad(format!("covering fractions must be positive, got {:?}", self.covering_fractions));
        }
        for &n in &self.n_grid {
            self.mix.resolve(self.model.d, self.model.p, n)?.validate()?;
        }
        Ok(())
    }

    pub fn schedule(&self, n: usize) -> CliResult<ChainSchedule> {
        Ok(ChainSchedule {
            mix: self.mix.resolve(self.model.d, self.model.p, n)?,
            sweeps: self.sweeps,
            burn_in: self.burn_in,
            thin: self.thin,
            init: self.init.resolve(self.model.d, self.model.p, n)?,
        })
    }

    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> CliResult<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let text = cfg.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn rejects_single_chain_and_bad_grid() {
        let mut cfg = ExperimentConfig { chains: 1, ..Default::default() };
        assert!(cfg.validate().is_err());
        cfg.chains = 2;
        cfg.n_grid = vec![10, 0];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn scaling_mix_tracks_radius() {
        let mix = MixChoice::Scaling.resolve(2, 0.5, 10_000).unwrap();
        let r = ScalingConstants::new(2, 0.5).unwrap().optimal_radius(1e4);
        assert!((mix.shuffle_mean.unwrap() - r * r).abs() < 1e-9);
    }
}
