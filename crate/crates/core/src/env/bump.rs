//! Concatenated bump-function environments: the hard instances behind the
//! minimax lower bound for Hölder-smooth gaps.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{EnvironmentModel, MeanSource, NoiseModel};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// `Phi(u) = exp(-1 / (1 - u^2))` on `|u| < 1`, zero elsewhere.
#[inline]
pub fn bump_kernel(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

/// `[Phi(u), Phi'(u), ..., Phi^(n)(u)]`, computed exactly through Taylor-jet
/// arithmetic on `exp(g)` with `g(u) = -1/(1-u^2)`.
pub fn bump_kernel_derivatives(u: f64, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    if u.abs() >= 1.0 {
        return out;
    }
    // q(u + e) = q0 + q1 e + q2 e^2
    let q0 = 1.0 - u * u;
    let q1 = -2.0 * u;
    let q2 = -1.0;
    let mut r = vec![0.0; n + 1];
    r[0] = 1.0 / q0;
    for k in 1..=n {
        let prev2 = if k >= 2 { r[k - 2] } else { 0.0 };
        r[k] = -(q1 * r[k - 1] + q2 * prev2) / q0;
    }
    let g: Vec<f64> = r.iter().map(|v| -v).collect();
    let mut e = vec![0.0; n + 1];
    e[0] = g[0].exp();
    if e[0] == 0.0 {
        return out;
    }
    for k in 1..=n {
        let s: f64 = (1..=k).map(|j| j as f64 * g[j] * e[k - j]).sum();
        e[k] = s / k as f64;
    }
    let mut fact = 1.0;
    for k in 0..=n {
        if k > 0 {
            fact *= k as f64;
        }
        out[k] = fact * e[k];
    }
    out
}

const HOLDER_GRID: usize = 1601;

/// Hölder constant of `Phi` for exponent `beta` on `[-1, 1]`:
/// `sup |Phi^(m)(v) - Phi^(m)(v')| / |v - v'|^(beta - m)` with `m = floor(beta)`.
///
/// Evaluated on a uniform grid of 1601 points and memoised per `beta`.
pub fn kernel_holder_constant(beta: f64) -> f64 {
    static CACHE: OnceLock<Mutex<HashMap<u64, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().unwrap().get(&beta.to_bits()) {
        return *v;
    }
    let m = beta.floor() as usize;
    let gamma = beta - m as f64;
    let step = 2.0 / (HOLDER_GRID - 1) as f64;
    let vals: Vec<f64> = (0..HOLDER_GRID)
        .map(|i| bump_kernel_derivatives(-1.0 + i as f64 * step, m)[m])
        .collect();
    let value = if gamma == 0.0 {
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        hi - lo
    } else {
        let mut best: f64 = 0.0;
        for i in 0..HOLDER_GRID {
            for j in i + 1..HOLDER_GRID {
                let d = ((j - i) as f64 * step).powf(gamma);
                best = best.max((vals[j] - vals[i]).abs() / d);
            }
        }
        best
    };
    cache.lock().unwrap().insert(beta.to_bits(), value);
    value
}

/// Support of each bump relative to its segment of width `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HalfWidthMode {
    /// Centre `(i - 1/2) h`, half-width `h/2`: each bump vanishes with all its
    /// derivatives at the segment boundaries.
    #[default]
    #[serde(alias = "disjoint_width")]
    Disjoint,
    /// `Phi((x - c)/h)` with half-width `h`, truncated to its own segment.
    #[serde(alias = "paper_width")]
    Literal,
}

impl HalfWidthMode {
    /// Segment width divided by kernel half-width.
    fn ratio(self) -> f64 {
        match self {
            HalfWidthMode::Disjoint => 2.0,
            HalfWidthMode::Literal => 1.0,
        }
    }
}

/// How the best arm of each segment is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Assignment {
    /// I.i.d. uniform over the arms.
    Random { seed: u64 },
    /// Segment `i` (0-based) goes to arm `i mod K`.
    RoundRobin,
    /// Explicit 1-based arm per segment; length must equal the segment count.
    Explicit { arms: Vec<usize> },
}

impl Default for Assignment {
    fn default() -> Self {
        Assignment::Random { seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpParams {
    #[serde(alias = "β")]
    pub beta: f64,
    #[serde(alias = "λ")]
    pub lambda: f64,
    #[serde(rename = "K")]
    pub arms: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    #[serde(default)]
    pub assignment: Assignment,
    #[serde(default)]
    pub width: HalfWidthMode,
}

impl BumpParams {
    pub fn new(beta: f64, lambda: f64, arms: usize, horizon: usize) -> Self {
        Self {
            beta,
            lambda,
            arms,
            horizon,
            assignment: Assignment::default(),
            width: HalfWidthMode::default(),
        }
    }

    pub fn with_assignment(mut self, assignment: Assignment) -> Self {
        self.assignment = assignment;
        self
    }

    pub fn with_width(mut self, width: HalfWidthMode) -> Self {
        self.width = width;
        self
    }

    /// `min(2^-(2 beta + 1) (T/K)^beta, lambda)`.
    pub fn lambda_tilde(&self) -> f64 {
        let cap = 2f64.powf(-(2.0 * self.beta + 1.0))
            * (self.horizon as f64 / self.arms as f64).powf(self.beta);
        cap.min(self.lambda)
    }

    /// `ceil(T^(1/(2b+1)) K^(-1/(2b+1)) lambda_tilde^(2/(2b+1)))`.
    pub fn segment_count(&self) -> usize {
        let e = 1.0 / (2.0 * self.beta + 1.0);
        let raw = (self.horizon as f64).powf(e)
            * (self.arms as f64).powf(-e)
            * self.lambda_tilde().powf(2.0 * e);
        // Absorb pow() rounding right at integers.
        (raw * (1.0 - 1e-12)).ceil().max(1.0) as usize
    }
}

/// A constructed bump instance with its derived quantities.
#[derive(Debug, Clone)]
pub struct BumpInstance {
    pub params: BumpParams,
    lambda_tilde: f64,
    segments: usize,
    bandwidth: f64,
    segment_len: usize,
    effective_horizon: usize,
    amplitude: f64,
    kernel_scale: f64,
    middle_constant: f64,
    assignment: Vec<usize>,
}

impl BumpInstance {
    pub fn lambda_tilde(&self) -> f64 {
        self.lambda_tilde
    }
    /// Number of segments `M`.
    pub fn segments(&self) -> usize {
        self.segments
    }
    /// `h = 1/M`.
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }
    pub fn segment_len(&self) -> usize {
        self.segment_len
    }
    /// `T0 = M floor(T/M)`, the simulated horizon.
    pub fn effective_horizon(&self) -> usize {
        self.effective_horizon
    }
    /// Peak deviation of a mean from 1/2.
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }
    /// Divisor applied to `Phi` so the concatenated gap is `(beta, lambda_tilde)`-Hölder.
    pub fn kernel_scale(&self) -> f64 {
        self.kernel_scale
    }
    /// `c` such that every non-best gap over the middle half of its segment is
    /// at least `c * lambda_tilde * h^beta`.
    pub fn middle_constant(&self) -> f64 {
        self.middle_constant
    }
    /// 0-based best arm per segment.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// 0-based segment containing round `t`.
    #[inline]
    pub fn segment_of(&self, t: usize) -> usize {
        (t - 1) / self.segment_len
    }

    /// Rounds of segment `i` (0-based) whose normalized time lies in the middle half.
    pub fn middle_rounds(&self, i: usize) -> std::ops::RangeInclusive<usize> {
        let centre = (i as f64 + 0.5) * self.bandwidth;
        let t0 = self.effective_horizon as f64;
        let lo = ((centre - self.bandwidth / 4.0) * t0).ceil() as usize;
        let hi = ((centre + self.bandwidth / 4.0) * t0).floor() as usize;
        lo.max(i * self.segment_len + 1)..=hi.min((i + 1) * self.segment_len)
    }

    #[inline]
    fn shape(&self, x: f64, i: usize) -> f64 {
        let centre = (i as f64 + 0.5) * self.bandwidth;
        let half = self.bandwidth / self.params.width.ratio();
        bump_kernel((x - centre) / half)
    }

    #[inline]
    pub(crate) fn mean(&self, t: usize, a: usize) -> f64 {
        let i = self.segment_of(t);
        let x = t as f64 / self.effective_horizon as f64;
        let dev = self.amplitude * self.shape(x, i);
        if self.assignment[i] == a {
            0.5 + dev
        } else {
            0.5 - dev
        }
    }

    pub(crate) fn gap_at_x(&self, x: f64, a: usize) -> f64 {
        let i = ((x * self.segments as f64).ceil() as isize - 1)
            .clamp(0, self.segments as isize - 1) as usize;
        if self.assignment[i] == a {
            0.0
        } else {
            2.0 * self.amplitude * self.shape(x, i)
        }
    }
}

pub fn make_bump_instance(params: BumpParams, noise: NoiseModel) -> Result<EnvironmentModel> {
    let BumpParams {
        beta,
        lambda,
        arms,
        horizon,
        ..
    } = params;
    if !(beta.is_finite() && beta > 0.0 && lambda.is_finite() && lambda > 0.0) {
        return Err(Error::invalid(format!(
            "bump needs finite beta > 0 and lambda > 0, got beta={beta}, lambda={lambda}"
        )));
    }
    if arms < 2 {
        return Err(Error::invalid("bump instance needs K >= 2"));
    }
    if horizon == 0 {
        return Err(Error::invalid("bump horizon must be >= 1"));
    }
    let lambda_tilde = params.lambda_tilde();
    let segments = params.segment_count();
    if segments > horizon {
        return Err(Error::generator(format!(
            "M = {segments} segments exceed the horizon T = {horizon}"
        )));
    }
    if segments > horizon.div_ceil(4) {
        return Err(Error::generator(format!(
            "M = {segments} exceeds ceil(T/4) = {}; parameters fall in a trivial regime",
            horizon.div_ceil(4)
        )));
    }
    let bandwidth = 1.0 / segments as f64;
    let segment_len = horizon / segments;
    let effective_horizon = segments * segment_len;

    let ratio = params.width.ratio();
    // Bumps in different segments meet at a zero of every derivative, which
    // costs a factor 2^(1-gamma) on cross-segment pairs when gamma > 0.
    let gamma = beta - beta.floor();
    let cross = if gamma > 0.0 {
        2f64.powf(1.0 - gamma)
    } else {
        1.0
    };
    let kernel_scale = (cross * ratio.powf(beta) * kernel_holder_constant(beta)).max(1.0);
    let amplitude = lambda_tilde * bandwidth.powf(beta) / 2.0 / kernel_scale;
    if amplitude > 0.5 {
        return Err(Error::generator(format!(
            "bump amplitude {amplitude} exceeds 1/2"
        )));
    }
    // Middle half of a segment is |x - c| <= h/4, i.e. |v| <= ratio/4.
    let middle_constant = bump_kernel(ratio / 4.0) / kernel_scale;

    let assignment = match &params.assignment {
        Assignment::Random { seed } => {
            let mut rng = stream_rng(*seed, 0xB0B);
            (0..segments).map(|_| rng.random_range(0..arms)).collect()
        }
        Assignment::RoundRobin => (0..segments).map(|i| i % arms).collect(),
        Assignment::Explicit { arms: list } => {
            if list.len() != segments {
                return Err(Error::invalid(format!(
                    "assignment has {} entries, instance has M = {segments} segments",
                    list.len()
                )));
            }
            list.iter()
                .map(|&a| {
                    if a == 0 || a > arms {
                        Err(Error::invalid(format!(
                            "assignment arm {a} not in 1..={arms}"
                        )))
                    } else {
                        Ok(a - 1)
                    }
                })
                .collect::<Result<Vec<_>>>()?
        }
    };

    let instance = BumpInstance {
        params,
        lambda_tilde,
        segments,
        bandwidth,
        segment_len,
        effective_horizon,
        amplitude,
        kernel_scale,
        middle_constant,
        assignment,
    };
    EnvironmentModel::new(
        arms,
        effective_horizon,
        MeanSource::Bump(Arc::new(instance)),
        noise,
    )
}
