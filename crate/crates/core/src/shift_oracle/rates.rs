use serde::{Deserialize, Serialize};

use super::ShiftProfile;
use crate::env::PiecewiseSpec;
use crate::error::{Error, Result};

/// Smoothness class and problem size for the closed-form rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    pub beta: f64,
    pub lambda: f64,
    #[serde(rename = "K")]
    pub arms: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
}

impl RateParams {
    pub fn new(beta: f64, lambda: f64, arms: usize, horizon: usize) -> Result<Self> {
        let p = Self {
            beta,
            lambda,
            arms,
            horizon,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid(format!(
                "beta must be finite and > 0, got {}",
                self.beta
            )));
        }
        if self.lambda.is_nan() || self.lambda <= 0.0 {
            return Err(Error::invalid(format!(
                "lambda must be > 0, got {}",
                self.lambda
            )));
        }
        if self.arms < 2 || self.horizon < 1 {
            return Err(Error::invalid("need K >= 2 and T >= 1"));
        }
        Ok(())
    }

    /// `T^((b+1)/(2b+1)) lambda^(1/(2b+1)) K^(b/(2b+1))`.
    pub fn smooth_term(&self) -> f64 {
        let d = 2.0 * self.beta + 1.0;
        let t = self.horizon as f64;
        t.powf((self.beta + 1.0) / d)
            * self.lambda.powf(1.0 / d)
            * (self.arms as f64).powf(self.beta / d)
    }
}

/// `sum_i sqrt(K (tau_{i+1} - tau_i))` over all phases including the last.
pub fn phase_rate(profile: &ShiftProfile) -> f64 {
    let k = profile.arms as f64;
    profile
        .phases()
        .iter()
        .map(|&(s, e)| (k * (e - s) as f64).sqrt())
        .sum()
}

/// `min(sqrt(KT) + T^((b+1)/(2b+1)) lambda^(1/(2b+1)) K^(b/(2b+1)), T)`.
pub fn minimax_rate(p: &RateParams) -> f64 {
    let t = p.horizon as f64;
    let raw = (p.arms as f64 * t).sqrt() + p.smooth_term();
    if raw.is_nan() {
        t
    } else {
        raw.min(t)
    }
}

/// Phase rate divided by `sqrt(b+1) (sqrt(KT) + smooth term)`.
pub fn upper_bound_ratio(profile: &ShiftProfile, p: &RateParams) -> f64 {
    let rhs = (p.beta + 1.0).sqrt() * ((p.arms as f64 * p.horizon as f64).sqrt() + p.smooth_term());
    phase_rate(profile) / rhs
}

/// `sum_l sum_{a: delta_l(a) > 0} ln(T) / delta_l(a)`.
pub fn restarting_oracle_rate(spec: &PiecewiseSpec, horizon: usize) -> f64 {
    let log_t = (horizon as f64).ln();
    spec.segments
        .iter()
        .flat_map(|s| s.gaps.iter())
        .filter(|g| **g > 0.0)
        .map(|g| log_t / g)
        .sum()
}
