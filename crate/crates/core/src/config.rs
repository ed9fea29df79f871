//! TOML/JSON configuration: environment specs and replicated-run settings.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::env::{
    load_csv, make_bump_instance, make_piecewise, make_trig, Assignment, BumpParams,
    EnvironmentModel, HalfWidthMode, NoiseModel, PiecewiseSpec, TrigParams, PUBLISHED_AMPLITUDE,
    PUBLISHED_FREQUENCY, PUBLISHED_PHASE,
};
use crate::error::{Error, Result};

pub use crate::policies::PolicySpec;

fn published_amplitude() -> f64 {
    PUBLISHED_AMPLITUDE
}
fn published_frequency() -> f64 {
    PUBLISHED_FREQUENCY
}
fn published_phase() -> f64 {
    PUBLISHED_PHASE
}

/// Trigonometric generator; omitted shape parameters default to the
/// published experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigSpec {
    #[serde(alias = "A", default = "published_amplitude")]
    pub amplitude: f64,
    #[serde(alias = "nu", default = "published_frequency")]
    pub frequency: f64,
    #[serde(alias = "phi", default = "published_phase")]
    pub phase: f64,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_horizon: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub beta: f64,
    pub lambda: f64,
    #[serde(rename = "K")]
    pub arms: usize,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub assignment: Assignment,
    #[serde(default)]
    pub width: HalfWidthMode,
}

/// Which generator builds the means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    Trig(TrigSpec),
    Bump(BumpSpec),
    Piecewise(PiecewiseSpec),
    Csv { path: PathBuf },
}

/// A generator plus its reward noise: `{kind, params..., noise}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    #[serde(flatten)]
    pub generator: Generator,
    #[serde(default)]
    pub noise: NoiseModel,
}

impl EnvSpec {
    /// Horizon fixed by this environment config, if any.
    pub fn horizon(&self) -> Option<usize> {
        match &self.generator {
            Generator::Trig(s) => s.horizon,
            Generator::Bump(s) => s.horizon,
            Generator::Piecewise(p) => Some(p.horizon()),
            Generator::Csv { .. } => None,
        }
    }

    /// Fill in a horizon for generators that take one. Errors when the config
    /// fixes a different horizon.
    pub fn with_horizon(mut self, horizon: usize) -> Result<Self> {
        match &mut self.generator {
            Generator::Trig(s) => s.horizon = Some(horizon),
            Generator::Bump(s) => s.horizon = Some(horizon),
            Generator::Piecewise(p) if p.horizon() != horizon => {
                return Err(Error::invalid(format!(
                    "piecewise segments sum to {} rounds but T = {horizon}",
                    p.horizon()
                )))
            }
            _ => {}
        }
        Ok(self)
    }

    /// Resolve relative CSV paths against `base`.
    pub fn rebase(&mut self, base: &Path) {
        if let Generator::Csv { path } = &mut self.generator {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }

    pub fn build(&self) -> Result<EnvironmentModel> {
        let need_t = || Error::invalid("environment needs a horizon `T`");
        match &self.generator {
            Generator::Trig(s) => {
                let p = TrigParams {
                    amplitude: s.amplitude,
                    frequency: s.frequency,
                    phase: s.phase,
                    horizon: s.horizon.ok_or_else(need_t)?,
                    reference_horizon: s.reference_horizon,
                };
                make_trig(p, self.noise)
            }
            Generator::Bump(s) => {
                let p = BumpParams {
                    beta: s.beta,
                    lambda: s.lambda,
                    arms: s.arms,
                    horizon: s.horizon.ok_or_else(need_t)?,
                    assignment: s.assignment.clone(),
                    width: s.width,
                };
                make_bump_instance(p, self.noise)
            }
            Generator::Piecewise(p) => make_piecewise(p.clone(), self.noise),
            Generator::Csv { path } => load_csv(path, self.noise),
        }
    }

    /// Parse a TOML (or, by extension, JSON) file holding a bare environment config.
    /// Relative CSV paths resolve against the file's directory.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut spec: Self = parse_file(path)?;
        if let Some(dir) = path.parent() {
            spec.rebase(dir);
        }
        Ok(spec)
    }
}

/// Number of log-spaced checkpoints used when none are given.
pub const DEFAULT_CHECKPOINTS: usize = 200;

/// A replicated simulation: `{env, policy, T, R, masterSeed, checkpoints?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub env: EnvSpec,
    pub policy: PolicySpec,
    #[serde(rename = "T")]
    pub horizon: usize,
    #[serde(rename = "R", default = "one")]
    pub replications: usize,
    #[serde(rename = "masterSeed", alias = "master_seed", default)]
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<usize>>,
    /// Write every replication's policy events to `events.jsonl`.
    #[serde(default)]
    pub events: bool,
}

fn one() -> usize {
    1
}

impl RunConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg: Self = parse_file(path)?;
        if let Some(dir) = path.parent() {
            cfg.env.rebase(dir);
            if let PolicySpec::External { path } = &mut cfg.policy {
                if path.is_relative() {
                    *path = dir.join(&*path);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::invalid("T must be >= 1"));
        }
        if self.replications == 0 {
            return Err(Error::invalid("R must be >= 1"));
        }
        if let Some(c) = &self.checkpoints {
            if c.is_empty() {
                return Err(Error::invalid("checkpoint list is empty"));
            }
            if c.windows(2).any(|w| w[0] >= w[1]) || c[0] == 0 {
                return Err(Error::invalid(
                    "checkpoints must increase strictly from >= 1",
                ));
            }
            if *c.last().unwrap() != self.horizon {
                return Err(Error::invalid(format!(
                    "last checkpoint must equal T = {}",
                    self.horizon
                )));
            }
        }
        if let Some(t) = self.env.horizon() {
            if t != self.horizon {
                return Err(Error::invalid(format!(
                    "environment horizon {t} differs from run T = {}",
                    self.horizon
                )));
            }
        }
        Ok(())
    }

    /// The environment at the run horizon.
    pub fn build_env(&self) -> Result<EnvironmentModel> {
        let env = self.env.clone().with_horizon(self.horizon)?.build()?;
        if env.horizon() != self.horizon {
            return Err(Error::invalid(format!(
                "environment has {} rounds, run T = {}",
                env.horizon(),
                self.horizon
            )));
        }
        Ok(env)
    }

    /// Explicit checkpoints, or [`log_checkpoints`] over the horizon.
    pub fn resolved_checkpoints(&self) -> Vec<usize> {
        self.checkpoints
            .clone()
            .unwrap_or_else(|| log_checkpoints(self.horizon, DEFAULT_CHECKPOINTS))
    }

    /// Copy with every default written out.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        c.checkpoints = Some(self.resolved_checkpoints());
        if let Ok(env) = c.env.clone().with_horizon(self.horizon) {
            c.env = env;
        }
        c
    }
}

/// Up to `count` distinct rounds spaced evenly in `log t` over `[1, T]`, always ending at `T`.
pub fn log_checkpoints(horizon: usize, count: usize) -> Vec<usize> {
    let t = horizon as f64;
    let mut out: Vec<usize> = (0..count)
        .map(|i| {
            let f = if count == 1 {
                1.0
            } else {
                i as f64 / (count - 1) as f64
            };
            (t.powf(f).round() as usize).clamp(1, horizon)
        })
        .collect();
    out.push(horizon);
    out.sort_unstable();
    out.dedup();
    out
}

fn parse_file<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if path.extension().is_some_and(|e| e == "json") {
        Ok(serde_json::from_str(&text)?)
    } else {
        Ok(toml::from_str(&text)?)
    }
}
