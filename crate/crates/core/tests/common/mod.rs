//! Environment corpora and literal-definition reference scanners shared by
//! the integration tests.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sigshift_core::env::{
    make_bump_instance, make_piecewise, make_trig, BumpParams, PiecewiseSpec, Segment, TrigParams,
};
use sigshift_core::{EnvironmentModel, NoiseModel};

/// A dense environment together with its mean table (`means[t-1][a]`).
pub struct Dense {
    pub env: EnvironmentModel,
    pub means: Vec<Vec<f64>>,
}

impl Dense {
    pub fn arms(&self) -> usize {
        self.means[0].len()
    }

    pub fn horizon(&self) -> usize {
        self.means.len()
    }

    /// `max_a' mu_t(a') - mu_t(a)` straight from the table.
    pub fn gap(&self, t: usize, a: usize) -> f64 {
        let row = &self.means[t - 1];
        row.iter().cloned().fold(f64::MIN, f64::max) - row[a]
    }
}

/// Random environment with `T <= max_t` and `K <= max_k`: piecewise blocks of
/// random means, some of them drifting linearly.
pub fn random_dense(seed: u64, max_k: usize, max_t: usize) -> Dense {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.random_range(2..=max_k);
    let t_max = rng.random_range(20..=max_t);
    let mut means = Vec::with_capacity(t_max);
    while means.len() < t_max {
        let len = rng.random_range(1..=t_max / 2);
        let lo: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let drift = rng.random_bool(0.3);
        let hi: Vec<f64> = if drift {
            (0..k).map(|_| rng.random::<f64>()).collect()
        } else {
            lo.clone()
        };
        for i in 0..len.min(t_max - means.len()) {
            let x = i as f64 / len as f64;
            means.push(
                (0..k)
                    .map(|a| lo[a] + (hi[a] - lo[a]) * x)
                    .collect::<Vec<f64>>(),
            );
        }
    }
    let flat: Vec<f64> = means.iter().flatten().copied().collect();
    let env = EnvironmentModel::from_dense(k, t_max, flat, NoiseModel::Bernoulli).unwrap();
    Dense { env, means }
}

pub fn dense_of(env: &EnvironmentModel) -> Dense {
    let k = env.arms();
    let means = (1..=env.horizon())
        .map(|t| {
            let mut row = vec![0.0; k];
            env.means_into(t, &mut row);
            row
        })
        .collect();
    Dense {
        env: env.clone(),
        means,
    }
}

/// Literal sig-shift definition: `tau_{i+1}` is the first `tau > tau_i` such
/// that every arm has some `[s1, s2]` inside `[tau_i, tau]`, `s1 < s2`, with
/// `sum delta >= sqrt(K (s2 - s1 + 1))`. Every window sum is recomputed from
/// scratch.
pub fn brute_force_shifts(d: &Dense) -> Vec<usize> {
    let k = d.arms();
    let t_max = d.horizon();
    let mut shifts = vec![1];
    let mut start = 1;
    'phases: loop {
        let mut flagged = vec![false; k];
        for tau in start + 1..=t_max {
            for (a, flag) in flagged.iter_mut().enumerate() {
                if *flag {
                    continue;
                }
                // Windows ending before tau were examined at earlier tau.
                for s1 in start..tau {
                    let sum: f64 = (s1..=tau).map(|s| d.gap(s, a)).sum();
                    if sum >= ((k * (tau - s1 + 1)) as f64).sqrt() {
                        *flag = true;
                        break;
                    }
                }
            }
            if flagged.iter().all(|&f| f) {
                shifts.push(tau);
                start = tau;
                continue 'phases;
            }
        }
        return shifts;
    }
}

/// Literal greedy eviction: at round `t` an arm leaves if some `[s, t]` has
/// `sum delta_r(a)/|S_r| > c2 sqrt(sum ln T/|S_r|)`, with `|S_t|` taken after
/// the evictions already made at `t`. Returns `evicted_at` (`T + 1` = never).
pub fn brute_force_evictions(d: &Dense, c2: f64) -> Vec<usize> {
    let k = d.arms();
    let t_max = d.horizon();
    let log_t = (t_max as f64).ln();
    let mut out = vec![t_max + 1; k];
    let mut size = vec![0usize; t_max + 1];
    for t in 1..=t_max {
        loop {
            let alive: Vec<usize> = (0..k).filter(|&a| out[a] > t_max).collect();
            if alive.is_empty() {
                return out;
            }
            size[t] = alive.len();
            let bad: Vec<usize> = alive
                .into_iter()
                .filter(|&a| {
                    (1..=t).any(|s| {
                        let w: f64 = (s..=t).map(|r| d.gap(r, a) / size[r] as f64).sum();
                        let v: f64 = (s..=t).map(|r| log_t / size[r] as f64).sum();
                        w > c2 * v.sqrt()
                    })
                })
                .collect();
            if bad.is_empty() {
                break;
            }
            for a in bad {
                out[a] = t;
            }
        }
    }
    out
}

/// Piecewise environment whose arm 1 has zero gap in every segment.
pub fn random_safe_piecewise(seed: u64, t_max: usize) -> (PiecewiseSpec, EnvironmentModel) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.random_range(2..=5);
    let n_seg = rng.random_range(1..=6);
    let mut cuts: Vec<usize> = (0..n_seg - 1).map(|_| rng.random_range(1..t_max)).collect();
    cuts.sort_unstable();
    cuts.dedup();
    let mut bounds = vec![0];
    bounds.extend(cuts);
    bounds.push(t_max);
    let segments = bounds
        .windows(2)
        .map(|w| Segment {
            length: w[1] - w[0],
            gaps: (0..k)
                .map(|a| {
                    if a == 0 || rng.random_bool(0.2) {
                        0.0
                    } else {
                        rng.random_range(0.05..0.9)
                    }
                })
                .collect(),
        })
        .collect();
    let spec = PiecewiseSpec::new(segments, 0.95);
    let env = make_piecewise(spec.clone(), NoiseModel::Bernoulli).unwrap();
    (spec, env)
}

/// Generated environments with `T <= 2000` used for cross-mode and invariant
/// checks.
pub fn generated_corpus() -> Vec<(String, EnvironmentModel)> {
    let mut out = Vec::new();
    for &t in &[200usize, 500, 1000, 2000] {
        for &(amp, nu, phi) in &[(0.4, 3.0, 0.3), (0.25, 8.3, 1.15), (0.5, 1.0, 0.0)] {
            let p = TrigParams::new(amp, nu, phi, t);
            out.push((
                format!("trig-{amp}-{nu}-{t}"),
                make_trig(p, NoiseModel::Bernoulli).unwrap(),
            ));
        }
    }
    for &(beta, lambda, k, t) in &[
        (0.5, 1.0, 2, 2000),
        (1.0, 10.0, 2, 2000),
        (2.0, 100.0, 4, 2000),
        (1.0, 1.0, 3, 1000),
    ] {
        if let Ok(env) =
            make_bump_instance(BumpParams::new(beta, lambda, k, t), NoiseModel::Bernoulli)
        {
            out.push((format!("bump-{beta}-{lambda}-{k}-{t}"), env));
        }
    }
    for seed in 0..8 {
        let (_, env) = random_safe_piecewise(seed, 1500);
        out.push((format!("piecewise-{seed}"), env));
    }
    let flip = PiecewiseSpec::new(
        vec![
            Segment {
                length: 300,
                gaps: vec![0.0, 0.6, 0.3],
            },
            Segment {
                length: 300,
                gaps: vec![0.6, 0.0, 0.3],
            },
            Segment {
                length: 300,
                gaps: vec![0.3, 0.6, 0.0],
            },
        ],
        0.8,
    );
    out.push((
        "flip3".into(),
        make_piecewise(flip, NoiseModel::Bernoulli).unwrap(),
    ));
    out
}
