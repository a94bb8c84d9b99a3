//! JSON experiment configuration, named multiplier profiles and command-line
//! overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diagnostics::SuiteSettings;
use crate::distributions::WellBehavedDistribution;
use crate::error::{Error, Result};
use crate::learner::{LearnerConfig, Multipliers, NoiseRegime, Schedule};
use crate::oracles::{BandSampler, NoiseModel};

/// Named multiplier presets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// Every hidden constant set to 1 (c_S = 4).
    #[default]
    PaperConstants,
    /// Calibrated so a 10-dimensional run finishes in seconds and meets its
    /// accuracy target.
    Desk,
}

/// Query multiplier of the desk profile: the smallest power of two for which
/// 45 of 50 single epochs from distance 4r reach r, at the step multiplier
/// below. `examples/calibrate_desk.rs` reproduces the search.
pub const DESK_QUERIES: f64 = 1.0 / 32.0;
/// Step multiplier of the desk profile. Doubling it halves the queries an
/// epoch needs up to 128; beyond that the steps overshoot and the need rises.
pub const DESK_STEP: f64 = 128.0;

impl Profile {
    pub fn multipliers(self) -> Multipliers {
        match self {
            Profile::PaperConstants => Multipliers::default(),
            Profile::Desk => Multipliers {
                queries: DESK_QUERIES,
                step: DESK_STEP,
                ..Multipliers::default()
            },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Profile::PaperConstants => "paper-constants",
            Profile::Desk => "desk",
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Profile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-constants" => Ok(Profile::PaperConstants),
            "desk" => Ok(Profile::Desk),
            other => Err(Error::Config(format!(
                "unknown profile {other:?}; expected paper-constants or desk"
            ))),
        }
    }
}

/// Which schedule to build for the configured noise generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeKind {
    Massart,
    /// Plain Tsybakov, with A derived from a geometric generator.
    Tsybakov,
    GeometricTsybakov,
}

/// What the experiment is for; informational, the subcommand decides.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    #[default]
    Run,
    Sweep,
    Verify,
}

/// The single parameter a sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Massart η; fitted against 1/(1 − 2η).
    Eta,
    /// Target ε; fitted against 1/ε.
    Epsilon,
    /// Tsybakov α; fitted against the exponent (2 − 2α)/(2α − 1) for plain
    /// Tsybakov schedules and (2 − 2α)/α for geometric ones, semi-log.
    Alpha,
    /// Geometric Tsybakov B; fitted against 1/B.
    B,
    /// Dimension; fitted against d, or linearly against ln d when sparse.
    Dim,
    /// Sparsity; fitted against s.
    Sparsity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    /// Only build schedules; no learner runs.
    #[serde(default)]
    pub dry_run: bool,
}

/// Everything an experiment needs. `seed` is mandatory: there is no
/// wall-clock seeding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dist: WellBehavedDistribution,
    pub noise: NoiseModel,
    pub epsilon: f64,
    pub delta: f64,
    #[serde(default)]
    pub sparsity: Option<usize>,
    /// Schedule regime; defaults to the one the noise generator certifies.
    #[serde(default)]
    pub regime: Option<RegimeKind>,
    #[serde(default)]
    pub profile: Profile,
    /// Explicit multipliers; when present they replace the profile's.
    #[serde(default)]
    pub multipliers: Option<Multipliers>,
    #[serde(default = "one")]
    pub replicates: usize,
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub mode: RunMode,
    #[serde(default)]
    pub sampler: BandSampler,
    /// Write one JSON object per epoch and replicate.
    #[serde(default)]
    pub trace: bool,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub verify: SuiteSettings,
    /// Draws for Monte Carlo excess error when no closed form exists.
    #[serde(default = "default_excess_samples")]
    pub excess_samples: u64,
}

fn one() -> usize {
    1
}

fn default_excess_samples() -> u64 {
    200_000
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub profile: Option<Profile>,
    pub replicates: Option<usize>,
    pub trace: bool,
}

impl ExperimentConfig {
    /// A minimal config: Massart noise with the given seed and profile.
    pub fn new(dist: WellBehavedDistribution, noise: NoiseModel, epsilon: f64, delta: f64, seed: u64) -> Self {
        Self {
            dist,
            noise,
            epsilon,
            delta,
            sparsity: None,
            regime: None,
            profile: Profile::default(),
            multipliers: None,
            replicates: 1,
            seed,
            out: None,
            mode: RunMode::Run,
            sampler: BandSampler::default(),
            trace: false,
            sweep: None,
            verify: SuiteSettings::default(),
            excess_samples: default_excess_samples(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(out) = &o.out {
            self.out = Some(out.clone());
        }
        if let Some(profile) = o.profile {
            self.profile = profile;
            self.multipliers = None;
        }
        if let Some(r) = o.replicates {
            self.replicates = r;
        }
        self.trace |= o.trace;
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(Error::Config("sweep grid is empty".into()));
            }
        }
        self.noise.validate()
    }

    pub fn multipliers(&self) -> Multipliers {
        self.multipliers.unwrap_or_else(|| self.profile.multipliers())
    }

    /// The schedule regime for the configured noise.
    pub fn noise_regime(&self) -> Result<NoiseRegime> {
        let kind = self.regime.unwrap_or(match self.noise {
            NoiseModel::GeometricTsybakov { .. } => RegimeKind::GeometricTsybakov,
            _ => RegimeKind::Massart,
        });
        match (kind, self.noise) {
            (RegimeKind::Massart, n) => n
                .massart_bound()
                .map(|eta| NoiseRegime::Massart { eta })
                .ok_or_else(|| Error::Config("a Massart schedule needs Massart noise".into())),
            (RegimeKind::Tsybakov, NoiseModel::GeometricTsybakov { b, alpha }) => {
                NoiseRegime::tsybakov_for_geometric(b, alpha, &self.dist)
            }
            (RegimeKind::GeometricTsybakov, NoiseModel::GeometricTsybakov { b, alpha }) => {
                Ok(NoiseRegime::GeometricTsybakov { b, alpha })
            }
            (kind, _) => Err(Error::Config(format!(
                "regime {kind:?} needs a geometric Tsybakov noise generator"
            ))),
        }
    }

    pub fn learner(&self) -> Result<LearnerConfig> {
        Ok(LearnerConfig {
            dist: self.dist.clone(),
            noise: self.noise,
            epsilon: self.epsilon,
            delta: self.delta,
            sparsity: self.sparsity,
            multipliers: self.multipliers(),
            regime: Some(self.noise_regime()?),
        })
    }

    pub fn schedule(&self) -> Result<Schedule> {
        self.learner()?.schedule()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "dist": {"family": "isotropic_gaussian", "dim": 10},
        "noise": {"kind": "massart_constant", "eta": 0.2},
        "epsilon": 0.1,
        "delta": 0.05,
        "seed": 7
    }"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.replicates, 1);
        assert_eq!(c.profile, Profile::PaperConstants);
        assert_eq!(c.multipliers(), Multipliers::default());
        assert_eq!(c.noise_regime().unwrap(), NoiseRegime::Massart { eta: 0.2 });
        let round = ExperimentConfig::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(round, c);
    }

    #[test]
    fn seed_is_mandatory() {
        let text = MINIMAL.replace(",\n        \"seed\": 7", "");
        assert!(matches!(ExperimentConfig::from_json(&text), Err(Error::Config(_))));
    }

    #[test]
    fn overrides_take_precedence() {
        let mut c = ExperimentConfig::from_json(MINIMAL).unwrap();
        c.multipliers = Some(Multipliers { queries: 3.0, ..Multipliers::default() });
        c.apply(&Overrides {
            seed: Some(11),
            profile: Some(Profile::Desk),
            replicates: Some(4),
            trace: true,
            ..Overrides::default()
        })
        .unwrap();
        assert_eq!((c.seed, c.replicates, c.trace), (11, 4, true));
        assert_eq!(c.multipliers(), Profile::Desk.multipliers());
        assert!(c.apply(&Overrides { replicates: Some(0), ..Overrides::default() }).is_err());
    }

    #[test]
    fn profiles_round_trip_by_name() {
        for p in [Profile::PaperConstants, Profile::Desk] {
            assert_eq!(p.name().parse::<Profile>().unwrap(), p);
        }
        assert!("fast".parse::<Profile>().is_err());
    }

    #[test]
    fn empty_sweep_grid_is_rejected() {
        let text = MINIMAL.replace("\"seed\": 7", "\"seed\": 7, \"sweep\": {\"axis\": \"eta\", \"values\": []}");
        assert!(ExperimentConfig::from_json(&text).is_err());
    }

    #[test]
    fn tsybakov_regime_needs_geometric_noise() {
        let mut c = ExperimentConfig::from_json(MINIMAL).unwrap();
        c.regime = Some(RegimeKind::Tsybakov);
        assert!(c.noise_regime().is_err());
        c.noise = NoiseModel::GeometricTsybakov { b: 1.0, alpha: 0.75 };
        assert!(matches!(c.noise_regime().unwrap(), NoiseRegime::Tsybakov { alpha, .. } if alpha == 0.75));
    }
}
