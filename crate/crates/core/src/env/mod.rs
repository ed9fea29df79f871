//! Bandit environments: mean rewards, gaps and reward noise.

mod bump;
mod csv_io;
mod holder;
mod piecewise;
mod trig;

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bump::{
    bump_kernel, bump_kernel_derivatives, kernel_holder_constant, make_bump_instance, Assignment,
    BumpInstance, BumpParams, HalfWidthMode,
};
pub use csv_io::load_csv;
pub use holder::{
    holder_coefficient, verify_holder, verify_holder_on_grid, HolderReport, HolderWitness,
    DEFAULT_GRID,
};
pub use piecewise::{make_piecewise, PiecewiseSpec, Segment};
pub use trig::{make_trig, TrigParams, PUBLISHED_AMPLITUDE, PUBLISHED_FREQUENCY, PUBLISHED_PHASE};

/// Reward noise around the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    /// `Y ~ Bernoulli(mu)`; requires every mean in `[0, 1]`.
    #[default]
    Bernoulli,
    /// `Y = mu + N(0, variance)`, unclipped unless `clip` is set.
    Gaussian {
        variance: f64,
        #[serde(default)]
        clip: bool,
    },
    /// `Y = mu`.
    Deterministic,
}

impl NoiseModel {
    pub fn gaussian(variance: f64) -> Self {
        NoiseModel::Gaussian {
            variance,
            clip: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if let NoiseModel::Gaussian { variance, .. } = self {
            if !(variance.is_finite() && *variance >= 0.0) {
                return Err(Error::invalid(format!(
                    "gaussian variance must be finite and >= 0, got {variance}"
                )));
            }
        }
        Ok(())
    }

    #[inline]
    fn draw<R: Rng + ?Sized>(&self, mean: f64, rng: &mut R) -> f64 {
        match *self {
            NoiseModel::Bernoulli => {
                if rng.random::<f64>() < mean {
                    1.0
                } else {
                    0.0
                }
            }
            NoiseModel::Gaussian { variance, clip } => {
                let z: f64 = rng.sample(StandardNormal);
                let y = mean + variance.sqrt() * z;
                if clip {
                    y.clamp(0.0, 1.0)
                } else {
                    y
                }
            }
            NoiseModel::Deterministic => mean,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) enum MeanSource {
    Trig(trig::TrigShape),
    Bump(Arc<BumpInstance>),
    Piecewise(Arc<piecewise::Layout>),
    Dense,
}

/// Mean rewards of `K` arms over `T` rounds together with a noise model.
///
/// Immutable after construction and cheap to clone; analytic generators are
/// evaluated on demand and only [`EnvironmentModel::materialize`] allocates the
/// dense `K x T` table.
#[derive(Debug, Clone)]
pub struct EnvironmentModel {
    arms: usize,
    horizon: usize,
    source: MeanSource,
    noise: NoiseModel,
    dense: Option<Arc<[f64]>>,
}

impl EnvironmentModel {
    pub(crate) fn new(
        arms: usize,
        horizon: usize,
        source: MeanSource,
        noise: NoiseModel,
    ) -> Result<Self> {
        if arms == 0 {
            return Err(Error::invalid("environment needs at least one arm"));
        }
        if horizon == 0 {
            return Err(Error::invalid("horizon must be >= 1"));
        }
        noise.validate()?;
        let env = Self {
            arms,
            horizon,
            source,
            noise,
            dense: None,
        };
        env.check_noise_support()?;
        Ok(env)
    }

    /// Environment backed by a dense round-major table (`means[(t-1)*K + a]`).
    pub fn from_dense(
        arms: usize,
        horizon: usize,
        means: Vec<f64>,
        noise: NoiseModel,
    ) -> Result<Self> {
        if means.len() != arms * horizon {
            return Err(Error::LengthMismatch {
                expected: arms * horizon,
                found: means.len(),
            });
        }
        if let Some(i) = means.iter().position(|m| !m.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite mean at round {}, arm {}",
                i / arms + 1,
                i % arms + 1
            )));
        }
        if arms == 0 || horizon == 0 {
            return Err(Error::invalid("empty environment"));
        }
        noise.validate()?;
        let env = Self {
            arms,
            horizon,
            source: MeanSource::Dense,
            noise,
            dense: Some(means.into()),
        };
        env.check_noise_support()?;
        Ok(env)
    }

    fn check_noise_support(&self) -> Result<()> {
        if self.noise != NoiseModel::Bernoulli {
            return Ok(());
        }
        let mut row = vec![0.0; self.arms];
        for t in 1..=self.horizon {
            self.means_into(t, &mut row);
            if let Some(a) = row.iter().position(|m| !(0.0..=1.0).contains(m)) {
                return Err(Error::generator(format!(
                    "bernoulli noise needs means in [0,1]; mean {} at round {t}, arm {}",
                    row[a],
                    a + 1
                )));
            }
        }
        Ok(())
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    /// Same means under a different noise model.
    pub fn with_noise(mut self, noise: NoiseModel) -> Result<Self> {
        noise.validate()?;
        self.noise = noise;
        self.check_noise_support()?;
        Ok(self)
    }

    /// Evaluate every mean once and keep the dense table.
    pub fn materialize(mut self) -> Self {
        if self.dense.is_none() {
            let mut table = vec![0.0; self.arms * self.horizon];
            for (i, row) in table.chunks_exact_mut(self.arms).enumerate() {
                self.means_into(i + 1, row);
            }
            self.dense = Some(table.into());
        }
        self
    }

    pub fn is_materialized(&self) -> bool {
        self.dense.is_some()
    }

    pub fn bump(&self) -> Option<&BumpInstance> {
        match &self.source {
            MeanSource::Bump(b) => Some(b),
            _ => None,
        }
    }

    pub fn piecewise_spec(&self) -> Option<&PiecewiseSpec> {
        match &self.source {
            MeanSource::Piecewise(l) => Some(&l.spec),
            _ => None,
        }
    }

    pub(crate) fn check_round(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.horizon {
            return Err(Error::OutOfRange {
                what: "round",
                index: t,
                valid: format!("1..={}", self.horizon),
            });
        }
        Ok(())
    }

    pub(crate) fn check_arm(&self, a: usize) -> Result<()> {
        if a >= self.arms {
            return Err(Error::OutOfRange {
                what: "arm",
                index: a,
                valid: format!("0..{}", self.arms),
            });
        }
        Ok(())
    }

    /// Mean of arm `a` (0-based) at round `t` (1-based). Indices are not checked.
    #[inline]
    pub fn mean(&self, t: usize, a: usize) -> f64 {
        debug_assert!(t >= 1 && t <= self.horizon && a < self.arms);
        if let Some(d) = &self.dense {
            return d[(t - 1) * self.arms + a];
        }
        match &self.source {
            MeanSource::Trig(s) => s.mean(t, a),
            MeanSource::Bump(b) => b.mean(t, a),
            MeanSource::Piecewise(l) => l.mean(t, a),
            MeanSource::Dense => unreachable!("dense source without table"),
        }
    }

    /// Fill `out` with the means of all arms at round `t`.
    #[inline]
    pub fn means_into(&self, t: usize, out: &mut [f64]) {
        if let Some(d) = &self.dense {
            out.copy_from_slice(&d[(t - 1) * self.arms..t * self.arms]);
            return;
        }
        match &self.source {
            MeanSource::Piecewise(l) => l.means_into(t, out),
            _ => {
                for (a, m) in out.iter_mut().enumerate() {
                    *m = self.mean(t, a);
                }
            }
        }
    }

    /// Fill `out` with the gaps `max_a' mu_t(a') - mu_t(a)` at round `t`.
    #[inline]
    pub fn gaps_into(&self, t: usize, out: &mut [f64]) {
        self.means_into(t, out);
        let best = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for g in out.iter_mut() {
            *g = best - *g;
        }
    }

    /// Gap of arm `a` at round `t`.
    pub fn gap_at(&self, t: usize, a: usize) -> Result<f64> {
        self.check_round(t)?;
        self.check_arm(a)?;
        let mut row = vec![0.0; self.arms];
        self.gaps_into(t, &mut row);
        Ok(row[a])
    }

    /// Gap of arm `a` as a function of normalized time `x = t / T`.
    ///
    /// Analytic generators are evaluated between rounds; tabulated sources
    /// snap to the nearest round.
    pub fn gap_at_x(&self, x: f64, a: usize) -> f64 {
        match &self.source {
            MeanSource::Trig(s) => s.gap_at_x(x, a),
            MeanSource::Bump(b) => b.gap_at_x(x, a),
            _ => {
                let t = (x * self.horizon as f64)
                    .round()
                    .clamp(1.0, self.horizon as f64) as usize;
                let mut row = vec![0.0; self.arms];
                self.gaps_into(t, &mut row);
                row[a]
            }
        }
    }

    /// Draw `Y_t(a)`.
    pub fn sample_reward<R: Rng + ?Sized>(&self, t: usize, a: usize, rng: &mut R) -> Result<f64> {
        self.check_round(t)?;
        self.check_arm(a)?;
        let m = self.mean(t, a);
        if self.noise == NoiseModel::Bernoulli && !(0.0..=1.0).contains(&m) {
            return Err(Error::invalid(format!("bernoulli mean {m} outside [0,1]")));
        }
        Ok(self.noise.draw(m, rng))
    }

    /// Unchecked reward draw for the simulation hot loop.
    #[inline]
    pub(crate) fn draw<R: Rng + ?Sized>(&self, t: usize, a: usize, rng: &mut R) -> f64 {
        self.noise.draw(self.mean(t, a), rng)
    }

    /// Write the `t,arm,mean` CSV representation.
    pub fn write_csv(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        csv_io::write_csv(self, path.as_ref())
    }
}
