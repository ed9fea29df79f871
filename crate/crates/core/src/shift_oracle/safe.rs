use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ArmsetRun, ScanMode};
use crate::env::{holder_coefficient, EnvironmentModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafeArmReport {
    /// 0-based arms whose worst ratio is at most 1.
    #[serde(with = "crate::arms::one_based_vec")]
    pub safe_arms: Vec<usize>,
    /// Largest ratio over all arms and intervals.
    pub worst_violation: f64,
    /// Worst ratio per arm.
    pub ratios: Vec<f64>,
}

/// For every arm, the supremum over intervals of
/// `(sum delta/|G|) / (c3 sqrt(sum ln T/|G|))`; an arm is safe when it never
/// exceeds 1. `trajectory` defaults to `G_t = [K]`; only the set sizes enter.
pub fn safe_arm_check(
    env: &EnvironmentModel,
    trajectory: Option<&[ArmsetRun]>,
    c3: f64,
    mode: ScanMode,
) -> Result<SafeArmReport> {
    if !(c3 > 0.0 && c3.is_finite()) {
        return Err(Error::invalid(format!(
            "C3 must be finite and > 0, got {c3}"
        )));
    }
    let k = env.arms();
    let t_max = env.horizon();
    let sizes = match trajectory {
        None => vec![k as f64; t_max + 1],
        Some(runs) => set_sizes(runs, k, t_max)?,
    };
    let log_t = (t_max as f64).ln();
    let mut v = vec![0.0; t_max + 1];
    for t in 1..=t_max {
        v[t] = v[t - 1] + log_t / sizes[t];
    }
    let mut gaps = vec![vec![0.0; t_max + 1]; k];
    let mut row = vec![0.0; k];
    for t in 1..=t_max {
        env.gaps_into(t, &mut row);
        for a in 0..k {
            gaps[a][t] = gaps[a][t - 1] + row[a] / sizes[t];
        }
    }
    let ratios: Vec<f64> = gaps
        .par_iter()
        .map(|w| worst_ratio(w, &v, c3, mode))
        .collect();
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    Ok(SafeArmReport {
        safe_arms: (0..k).filter(|&a| ratios[a] <= 1.0).collect(),
        worst_violation: worst,
        ratios,
    })
}

fn set_sizes(runs: &[ArmsetRun], k: usize, t_max: usize) -> Result<Vec<f64>> {
    if runs.first().map(|r| r.from) != Some(1) {
        return Err(Error::invalid("arm-set trajectory must start at round 1"));
    }
    let mut sizes = vec![0.0; t_max + 1];
    for (i, r) in runs.iter().enumerate() {
        if r.set.is_empty() || r.set.iter().any(|&a| a >= k) {
            return Err(Error::invalid(format!(
                "bad arm set starting at round {}",
                r.from
            )));
        }
        if i > 0
            && (r.from <= runs[i - 1].from || !r.set.iter().all(|a| runs[i - 1].set.contains(a)))
        {
            return Err(Error::invalid(
                "arm-set trajectory must shrink over increasing rounds",
            ));
        }
        let end = runs.get(i + 1).map_or(t_max, |n| (n.from - 1).min(t_max));
        for s in sizes.iter_mut().take(end + 1).skip(r.from) {
            *s = r.set.len() as f64;
        }
    }
    Ok(sizes)
}

fn ratio(dw: f64, dv: f64, c3: f64) -> f64 {
    if dw <= 0.0 {
        0.0
    } else if dv <= 0.0 {
        f64::INFINITY
    } else {
        dw / (c3 * dv.sqrt())
    }
}

fn worst_ratio(w: &[f64], v: &[f64], c3: f64, mode: ScanMode) -> f64 {
    let t_max = w.len() - 1;
    let mut worst: f64 = 0.0;
    for t in 1..=t_max {
        match mode {
            ScanMode::Exact => {
                for q in 0..t {
                    worst = worst.max(ratio(w[t] - w[q], v[t] - v[q], c3));
                }
            }
            ScanMode::Dyadic => {
                let mut n = 1;
                while n <= t {
                    worst = worst.max(ratio(w[t] - w[t - n], v[t] - v[t - n], c3));
                    n *= 2;
                }
            }
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    CertifiedSafe,
    NotCertified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub verdict: Classification,
    /// `lambda_n` for `n = 0..=floor(beta)`.
    pub lambdas: Vec<f64>,
    /// `sqrt(K / T)`.
    pub threshold: f64,
}

/// `lambda_n = max_a max_x |f_a^(n)(x)|` for `n = 0..=floor(beta)`.
pub fn max_holder_coefficients(
    env: &EnvironmentModel,
    beta: f64,
    grid_size: usize,
) -> Result<Vec<f64>> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid(format!(
            "beta must be finite and > 0, got {beta}"
        )));
    }
    (0..=beta.floor() as usize)
        .map(|n| {
            (0..env.arms())
                .map(|a| holder_coefficient(env, a, n, grid_size))
                .try_fold(0.0f64, |m, c| c.map(|c| m.max(c)))
        })
        .collect()
}

/// Certified safe when every `lambda_n` is at most `sqrt(K/T)` (up to a
/// relative stencil tolerance of 1e-6); never claims the converse.
pub fn phase_transition_classify(
    env: &EnvironmentModel,
    beta: f64,
    grid_size: usize,
) -> Result<ClassifyReport> {
    let lambdas = max_holder_coefficients(env, beta, grid_size)?;
    let threshold = (env.arms() as f64 / env.horizon() as f64).sqrt();
    let max = lambdas.iter().copied().fold(0.0, f64::max);
    let verdict = if max <= threshold * (1.0 + 1e-6) {
        Classification::CertifiedSafe
    } else {
        Classification::NotCertified
    };
    Ok(ClassifyReport {
        verdict,
        lambdas,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{make_piecewise, make_trig, NoiseModel, PiecewiseSpec, Segment, TrigParams};

    #[test]
    fn zero_gap_arm_is_safe() {
        let spec = PiecewiseSpec::new(
            vec![Segment {
                length: 400,
                gaps: vec![0.0, 0.3, 0.9],
            }],
            1.0,
        );
        let env = make_piecewise(spec, NoiseModel::Bernoulli).unwrap();
        let r = safe_arm_check(&env, None, 1.0, ScanMode::Exact).unwrap();
        assert_eq!(r.ratios[0], 0.0);
        assert!(r.safe_arms.contains(&0));
        assert!(!r.safe_arms.contains(&2));
    }

    #[test]
    fn large_gaps_everywhere_leave_no_safe_arm() {
        // Alternate the best arm every round so every arm has gap 1 half the time.
        let t = 400;
        let segs = (0..t)
            .map(|i| Segment {
                length: 1,
                gaps: if i % 2 == 0 {
                    vec![0.0, 1.0]
                } else {
                    vec![1.0, 0.0]
                },
            })
            .collect();
        let env = make_piecewise(PiecewiseSpec::new(segs, 1.0), NoiseModel::Bernoulli).unwrap();
        // Whole horizon: (t/4) / sqrt(t ln t / 2) > 1 for t = 400.
        let r = safe_arm_check(&env, None, 1.0, ScanMode::Exact).unwrap();
        assert!(r.safe_arms.is_empty(), "{r:?}");
        let whole = (t as f64 / 4.0) / ((t as f64) * (t as f64).ln() / 2.0).sqrt();
        assert!(r.worst_violation >= whole - 1e-12);
    }

    #[test]
    fn trajectory_sizes_enter_the_weights() {
        let spec = PiecewiseSpec::new(
            vec![Segment {
                length: 10,
                gaps: vec![0.0, 0.5],
            }],
            1.0,
        );
        let env = make_piecewise(spec, NoiseModel::Bernoulli).unwrap();
        let runs = vec![
            ArmsetRun {
                from: 1,
                set: vec![0, 1],
            },
            ArmsetRun {
                from: 6,
                set: vec![0],
            },
        ];
        let a = safe_arm_check(&env, Some(&runs), 1.0, ScanMode::Exact).unwrap();
        let b = safe_arm_check(&env, None, 1.0, ScanMode::Exact).unwrap();
        assert!(a.ratios[1] > b.ratios[1]);
        let bad = vec![
            ArmsetRun {
                from: 1,
                set: vec![0],
            },
            ArmsetRun {
                from: 3,
                set: vec![1],
            },
        ];
        assert!(safe_arm_check(&env, Some(&bad), 1.0, ScanMode::Exact).is_err());
    }

    #[test]
    fn classify_examples() {
        let spec = PiecewiseSpec::new(
            vec![Segment {
                length: 1000,
                gaps: vec![0.0, 0.0],
            }],
            0.5,
        );
        let flat = make_piecewise(spec, NoiseModel::Bernoulli).unwrap();
        let r = phase_transition_classify(&flat, 1.0, 1000).unwrap();
        assert_eq!(r.verdict, Classification::CertifiedSafe);
        assert_eq!(r.lambdas, vec![0.0, 0.0]);

        let trig = make_trig(TrigParams::new(0.3, 3.0, 0.2, 1000), NoiseModel::Bernoulli).unwrap();
        let r = phase_transition_classify(&trig, 1.0, 1000).unwrap();
        assert_eq!(r.verdict, Classification::NotCertified);
        assert!(r.lambdas[1] > 2.0 * std::f64::consts::PI * 3.0 * 0.3 * 0.9);

        // lambda_1 = 2 pi nu A must sit below sqrt(2/T).
        let t = 10_000;
        let amp = 0.5 * (2.0 / t as f64).sqrt() / (2.0 * std::f64::consts::PI * 1.0);
        let tiny = make_trig(TrigParams::new(amp, 1.0, 0.0, t), NoiseModel::Bernoulli).unwrap();
        let r = phase_transition_classify(&tiny, 1.0, 10_000).unwrap();
        assert_eq!(r.verdict, Classification::CertifiedSafe, "{r:?}");
    }
}
