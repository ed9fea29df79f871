use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{EnvironmentModel, MeanSource, NoiseModel};
use crate::error::{Error, Result};

/// Amplitude used in the published two-arm trigonometric experiment.
pub const PUBLISHED_AMPLITUDE: f64 = 0.01444588223139156;
pub const PUBLISHED_FREQUENCY: f64 = 8.320088866618766;
pub const PUBLISHED_PHASE: f64 = 1.1478977247810018;

/// Two-arm trigonometric environment: `mu_1 = A`, `mu_2(t) = A - A sin(2 pi nu t / T + phi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrigParams {
    #[serde(alias = "A")]
    pub amplitude: f64,
    #[serde(alias = "nu")]
    pub frequency: f64,
    #[serde(alias = "phi")]
    pub phase: f64,
    #[serde(rename = "T")]
    pub horizon: usize,
    /// When set, the amplitude is rescaled by `sqrt(reference_horizon / T)`,
    /// which keeps the significant-shift structure of a run at
    /// `reference_horizon` while simulating only `T` rounds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_horizon: Option<usize>,
}

impl TrigParams {
    pub fn new(amplitude: f64, frequency: f64, phase: f64, horizon: usize) -> Self {
        Self {
            amplitude,
            frequency,
            phase,
            horizon,
            reference_horizon: None,
        }
    }

    /// The published experiment at horizon `T`.
    pub fn published(horizon: usize) -> Self {
        Self::new(
            PUBLISHED_AMPLITUDE,
            PUBLISHED_FREQUENCY,
            PUBLISHED_PHASE,
            horizon,
        )
    }

    /// The published experiment compressed from `T = 10^7` down to `horizon`.
    pub fn published_scaled(horizon: usize) -> Self {
        Self {
            reference_horizon: Some(10_000_000),
            ..Self::published(horizon)
        }
    }

    pub fn effective_amplitude(&self) -> f64 {
        match self.reference_horizon {
            Some(r) => self.amplitude * (r as f64 / self.horizon as f64).sqrt(),
            None => self.amplitude,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct TrigShape {
    amplitude: f64,
    frequency: f64,
    phase: f64,
    horizon: f64,
}

impl TrigShape {
    #[inline]
    fn angle(&self, x: f64) -> f64 {
        2.0 * PI * self.frequency * x + self.phase
    }

    #[inline]
    pub(crate) fn mean(&self, t: usize, a: usize) -> f64 {
        if a == 0 {
            self.amplitude
        } else {
            self.amplitude - self.amplitude * self.angle(t as f64 / self.horizon).sin()
        }
    }

    pub(crate) fn gap_at_x(&self, x: f64, a: usize) -> f64 {
        let s = self.amplitude * self.angle(x).sin();
        // mu_1 - mu_2 = A sin(.)
        if a == 0 {
            (-s).max(0.0)
        } else {
            s.max(0.0)
        }
    }
}

pub fn make_trig(params: TrigParams, noise: NoiseModel) -> Result<EnvironmentModel> {
    if params.horizon == 0 {
        return Err(Error::invalid("trig horizon must be >= 1"));
    }
    let finite = [params.amplitude, params.frequency, params.phase]
        .iter()
        .all(|v| v.is_finite());
    if !finite {
        return Err(Error::invalid("trig parameters must be finite"));
    }
    if params.reference_horizon == Some(0) {
        return Err(Error::invalid("reference_horizon must be >= 1"));
    }
    let shape = TrigShape {
        amplitude: params.effective_amplitude(),
        frequency: params.frequency,
        phase: params.phase,
        horizon: params.horizon as f64,
    };
    EnvironmentModel::new(2, params.horizon, MeanSource::Trig(shape), noise)
}
