use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{GapPrefix, ScanMode, SKIP_MARGIN};
use crate::env::EnvironmentModel;
use crate::error::{Error, Result};

/// Significant shift rounds `tau_0 = 1 < tau_1 < ... < tau_L <= T`.
///
/// The sentinel `T + 1` is implicit; see [`ShiftProfile::boundaries`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftProfile {
    pub shifts: Vec<usize>,
    #[serde(rename = "T")]
    pub horizon: usize,
    #[serde(rename = "K")]
    pub arms: usize,
}

impl ShiftProfile {
    pub fn new(shifts: Vec<usize>, horizon: usize, arms: usize) -> Result<Self> {
        if shifts.first() != Some(&1) {
            return Err(Error::invalid("a shift profile starts at round 1"));
        }
        if shifts.windows(2).any(|w| w[0] >= w[1]) || *shifts.last().unwrap() > horizon {
            return Err(Error::invalid(format!(
                "shift rounds must increase strictly within 1..={horizon}"
            )));
        }
        Ok(Self {
            shifts,
            horizon,
            arms,
        })
    }

    /// Single phase covering the whole horizon.
    pub fn stationary(horizon: usize, arms: usize) -> Self {
        Self {
            shifts: vec![1],
            horizon,
            arms,
        }
    }

    /// Number of significant shifts.
    pub fn count(&self) -> usize {
        self.shifts.len() - 1
    }

    /// Shift rounds followed by the sentinel `T + 1`.
    pub fn boundaries(&self) -> Vec<usize> {
        let mut b = self.shifts.clone();
        b.push(self.horizon + 1);
        b
    }

    /// `(tau_i, tau_{i+1})` for every phase, the last one ending at the sentinel.
    pub fn phases(&self) -> Vec<(usize, usize)> {
        self.boundaries().windows(2).map(|w| (w[0], w[1])).collect()
    }
}

/// `sum_{t=s1}^{s2} delta_t(a) >= sqrt(K (s2 - s1 + 1))`.
pub fn has_significant_regret(
    env: &EnvironmentModel,
    a: usize,
    s1: usize,
    s2: usize,
) -> Result<bool> {
    env.check_arm(a)?;
    env.check_round(s1)?;
    env.check_round(s2)?;
    if s1 > s2 {
        return Err(Error::invalid(format!("empty interval [{s1}, {s2}]")));
    }
    let mut row = vec![0.0; env.arms()];
    let mut sum = 0.0;
    for t in s1..=s2 {
        env.gaps_into(t, &mut row);
        sum += row[a];
    }
    Ok(sum >= (env.arms() as f64 * (s2 - s1 + 1) as f64).sqrt())
}

pub fn significant_shifts(env: &EnvironmentModel, mode: ScanMode) -> ShiftProfile {
    significant_shifts_from_prefix(&GapPrefix::new(env), mode)
}

pub fn significant_shifts_from_prefix(prefix: &GapPrefix, mode: ScanMode) -> ShiftProfile {
    let k = prefix.arms();
    let mut shifts = vec![1];
    let mut start = 1;
    loop {
        let flags: Vec<Option<usize>> = (0..k)
            .into_par_iter()
            .map(|a| match mode {
                ScanMode::Exact => first_flag_exact(prefix, a, start),
                ScanMode::Dyadic => first_flag_dyadic(prefix, a, start),
            })
            .collect();
        match flags.into_iter().collect::<Option<Vec<_>>>() {
            Some(times) => {
                start = times.into_iter().max().unwrap();
                shifts.push(start);
            }
            None => break,
        }
    }
    ShiftProfile {
        shifts,
        horizon: prefix.horizon(),
        arms: k,
    }
}

/// Earliest `s2` with some `s1` in `[start, s2)` such that arm `a` has
/// significant regret on `[s1, s2]`.
///
/// For a fixed `s2`, walks `q = s1 - 1` upward. Gaps are nonnegative, so the
/// window sum only shrinks as `q` grows and a window of length `n'` can only
/// flag if `n' <= sum^2 / K`; everything shorter than that is skipped.
fn first_flag_exact(prefix: &GapPrefix, a: usize, start: usize) -> Option<usize> {
    let kf = prefix.arms() as f64;
    for s2 in start + 1..=prefix.horizon() {
        let top = prefix.at(a, s2);
        let mut q = start - 1;
        while q + 2 <= s2 {
            let n = (s2 - q) as f64;
            let sum = top - prefix.at(a, q);
            if sum >= (kf * n).sqrt() {
                return Some(s2);
            }
            let reach = (sum * sum / kf * (1.0 + SKIP_MARGIN)).floor();
            if reach < 2.0 {
                break;
            }
            let next = s2.saturating_sub(reach as usize);
            q = next.max(q + 1);
        }
    }
    None
}

fn first_flag_dyadic(prefix: &GapPrefix, a: usize, start: usize) -> Option<usize> {
    let kf = prefix.arms() as f64;
    for s2 in start + 1..=prefix.horizon() {
        let top = prefix.at(a, s2);
        let span = s2 - start + 1;
        let mut n = 2;
        while n <= span {
            if top - prefix.at(a, s2 - n) >= (kf * n as f64).sqrt() {
                return Some(s2);
            }
            n *= 2;
        }
    }
    None
}

/// Check the structural facts every profile must satisfy on an environment
/// whose gaps lie in `[0, 1]`: each finite phase lasts at least `K` rounds,
/// and every arm has a round in `[tau_i, tau_{i+1}]` with gap at least
/// `sqrt(K / (tau_{i+1} - tau_i + 1))`.
pub fn verify_profile(
    env: &EnvironmentModel,
    profile: &ShiftProfile,
) -> std::result::Result<(), String> {
    let k = env.arms();
    let t_max = env.horizon();
    let mut row = vec![0.0; k];
    for (start, next) in profile.phases() {
        if next == t_max + 1 {
            continue;
        }
        if next - start < k {
            return Err(format!("phase [{start}, {next}) is shorter than K = {k}"));
        }
        let need = (k as f64 / (next - start + 1) as f64).sqrt();
        let mut best = vec![0.0f64; k];
        for t in start..=next {
            env.gaps_into(t, &mut row);
            for a in 0..k {
                best[a] = best[a].max(row[a]);
            }
        }
        if let Some(a) = (0..k).find(|&a| best[a] < need * (1.0 - 1e-12)) {
            return Err(format!(
                "arm {} never reaches gap {need} in [{start}, {next}] (max {})",
                a + 1,
                best[a]
            ));
        }
    }
    Ok(())
}
