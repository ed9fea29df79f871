//! Piecewise-stationary environments with prescribed per-segment gaps.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{EnvironmentModel, MeanSource, NoiseModel};
use crate::error::{Error, Result};

/// A stationary stretch of `length` rounds with per-arm gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub length: usize,
    pub gaps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseSpec {
    pub segments: Vec<Segment>,
    /// Mean of the best arm in every segment.
    #[serde(default = "default_baseline")]
    pub baseline: f64,
}

fn default_baseline() -> f64 {
    1.0
}

impl PiecewiseSpec {
    pub fn new(segments: Vec<Segment>, baseline: f64) -> Self {
        Self { segments, baseline }
    }

    /// `segments` stretches of `length` rounds where arm 0 has gap zero and
    /// every other arm has gap `gap`.
    pub fn uniform(segments: usize, length: usize, arms: usize, gap: f64, baseline: f64) -> Self {
        let mut gaps = vec![gap; arms];
        gaps[0] = 0.0;
        Self {
            segments: (0..segments)
                .map(|_| Segment {
                    length,
                    gaps: gaps.clone(),
                })
                .collect(),
            baseline,
        }
    }

    pub fn horizon(&self) -> usize {
        self.segments.iter().map(|s| s.length).sum()
    }

    pub fn arms(&self) -> usize {
        self.segments.first().map_or(0, |s| s.gaps.len())
    }

    /// First round of each segment.
    pub fn starts(&self) -> Vec<usize> {
        let mut t = 1;
        self.segments
            .iter()
            .map(|s| {
                let start = t;
                t += s.length;
                start
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let k = self.arms();
        if self.segments.is_empty() || k == 0 {
            return Err(Error::invalid(
                "piecewise spec needs at least one segment and one arm",
            ));
        }
        if !self.baseline.is_finite() {
            return Err(Error::invalid("piecewise baseline must be finite"));
        }
        for (i, seg) in self.segments.iter().enumerate() {
            if seg.length == 0 {
                return Err(Error::invalid(format!("segment {} has length 0", i + 1)));
            }
            if seg.gaps.len() != k {
                return Err(Error::invalid(format!(
                    "segment {} has {} gaps, expected {k}",
                    i + 1,
                    seg.gaps.len()
                )));
            }
            if seg.gaps.iter().any(|g| !g.is_finite() || *g < 0.0) {
                return Err(Error::invalid(format!(
                    "segment {} has a negative or non-finite gap",
                    i + 1
                )));
            }
            if !seg.gaps.contains(&0.0) {
                return Err(Error::invalid(format!(
                    "segment {} has no zero-gap arm",
                    i + 1
                )));
            }
            let worst = seg.gaps.iter().copied().fold(0.0, f64::max);
            if self.baseline > 1.0 || self.baseline - worst < 0.0 {
                return Err(Error::generator(format!(
                    "segment {}: means span [{}, {}], outside [0,1]",
                    i + 1,
                    self.baseline - worst,
                    self.baseline
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub(crate) spec: PiecewiseSpec,
    /// Last round of each segment.
    ends: Vec<usize>,
}

impl Layout {
    #[inline]
    fn segment(&self, t: usize) -> &Segment {
        let i = self.ends.partition_point(|&e| e < t);
        &self.spec.segments[i]
    }

    #[inline]
    pub(crate) fn mean(&self, t: usize, a: usize) -> f64 {
        self.spec.baseline - self.segment(t).gaps[a]
    }

    #[inline]
    pub(crate) fn means_into(&self, t: usize, out: &mut [f64]) {
        let seg = self.segment(t);
        for (m, g) in out.iter_mut().zip(&seg.gaps) {
            *m = self.spec.baseline - g;
        }
    }
}

pub fn make_piecewise(spec: PiecewiseSpec, noise: NoiseModel) -> Result<EnvironmentModel> {
    spec.validate()?;
    let ends = spec
        .segments
        .iter()
        .scan(0, |acc, s| {
            *acc += s.length;
            Some(*acc)
        })
        .collect();
    let arms = spec.arms();
    let horizon = spec.horizon();
    EnvironmentModel::new(
        arms,
        horizon,
        MeanSource::Piecewise(Arc::new(Layout { spec, ends })),
        noise,
    )
}
