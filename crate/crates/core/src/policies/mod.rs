//! Bandit policies: META, randomized successive elimination, a uniform
//! baseline and a restart-at-known-shifts oracle.
//!
//! Every policy draws arm choices and reward noise from separate streams
//! derived from one seed, so a run is a pure function of
//! `(environment, configuration, seed)`.

mod meta;
mod se;
mod trace;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::EnvironmentModel;
use crate::rng::stream_rng;

pub use meta::{replay_lengths, replay_probability, run_meta, MetaConfig, MAX_META_ARMS};
pub use se::{run_oracle_restart, run_se_safe, SeConfig};
pub use trace::{PolicyTrace, Scope, TraceEvent};

const PLAY_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;
const REPLAY_STREAM: u64 = 3;

pub(crate) fn play_rng(seed: u64) -> ChaCha8Rng {
    stream_rng(seed, PLAY_STREAM)
}

pub(crate) fn noise_rng(seed: u64) -> ChaCha8Rng {
    stream_rng(seed, NOISE_STREAM)
}

/// `|A_t| (Y 1{pi_t = a'} - Y 1{pi_t = a})`.
pub fn estimate_iw(
    active_size: usize,
    chosen: usize,
    reward: f64,
    a_prime: usize,
    a: usize,
) -> f64 {
    if a_prime == a {
        return 0.0;
    }
    let w = active_size as f64 * reward;
    if chosen == a_prime {
        w
    } else if chosen == a {
        -w
    } else {
        0.0
    }
}

/// `C2 (sqrt(K ln T n) + K ln T)` for a window of `n` rounds.
#[inline]
pub fn meta_threshold(c2: f64, arms: usize, horizon: usize, n: usize) -> f64 {
    let kl = arms as f64 * (horizon as f64).ln();
    c2 * ((kl * n as f64).sqrt() + kl)
}

/// Whether arm `a` is evicted on a window of `n` rounds, given the window
/// sums `sums[a'] = sum |A_s| Y_s 1{pi_s = a'}` of the importance-weighted
/// rewards: `max_{a'} (sums[a'] - sums[a])` must exceed [`meta_threshold`].
pub fn eviction_check_meta(sums: &[f64], a: usize, n: usize, c2: f64, horizon: usize) -> bool {
    let best = sums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    best - sums[a] > meta_threshold(c2, sums.len(), horizon, n)
}

/// Uniformly random arm every round.
pub fn run_random(env: &EnvironmentModel, seed: u64) -> PolicyTrace {
    let mut play = play_rng(seed);
    let mut noise = noise_rng(seed);
    let k = env.arms();
    let mut trace = PolicyTrace::with_capacity(env.horizon());
    for t in 1..=env.horizon() {
        let a = play.random_range(0..k);
        let y = env.draw(t, a, &mut noise);
        trace.record(a, y);
    }
    trace
}

/// Named policy with its parameters, as addressed from configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum PolicySpec {
    Meta(MetaConfig),
    Se(SeConfig),
    Rand,
    OracleRestart(SeConfig),
    /// Pulls replayed from a `round,arm,reward` file.
    External {
        path: std::path::PathBuf,
    },
}

impl PolicySpec {
    pub fn name(&self) -> &'static str {
        match self {
            PolicySpec::Meta(_) => "meta",
            PolicySpec::Se(_) => "se",
            PolicySpec::Rand => "rand",
            PolicySpec::OracleRestart(_) => "oracle-restart",
            PolicySpec::External { .. } => "external",
        }
    }

    /// Policy with default parameters for a registry name.
    pub fn from_name(name: &str) -> crate::error::Result<Self> {
        match name {
            "meta" => Ok(PolicySpec::Meta(MetaConfig::default())),
            "se" => Ok(PolicySpec::Se(SeConfig::default())),
            "rand" => Ok(PolicySpec::Rand),
            "oracle-restart" => Ok(PolicySpec::OracleRestart(SeConfig::default())),
            other => Err(crate::error::Error::UnknownPolicy(other.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{make_piecewise, NoiseModel, PiecewiseSpec, Segment};
    use rand::SeedableRng;

    #[test]
    fn estimate_examples() {
        assert_eq!(estimate_iw(4, 2, 1.0, 0, 1), 0.0);
        assert_eq!(estimate_iw(4, 0, 1.0, 0, 1), 4.0);
        assert_eq!(estimate_iw(4, 1, 0.5, 0, 1), -2.0);
        assert_eq!(estimate_iw(4, 1, 0.5, 1, 1), 0.0);
    }

    #[test]
    fn estimate_is_unbiased_under_uniform_play() {
        // Means 0.8, 0.3, 0.5 with Bernoulli rewards; delta(a'=0, a=1) = 0.5.
        let means = [0.8, 0.3, 0.5];
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 100_000;
        let mut s = 0.0;
        let mut s2 = 0.0;
        for _ in 0..n {
            let arm = rng.random_range(0..3);
            let y = if rng.random::<f64>() < means[arm] {
                1.0
            } else {
                0.0
            };
            let d = estimate_iw(3, arm, y, 0, 1);
            s += d;
            s2 += d * d;
        }
        let mean = s / n as f64;
        let sd = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * sd, "{mean} +- {sd}");
    }

    #[test]
    fn meta_check_examples() {
        let t = 1000;
        let thr = meta_threshold(1.0, 2, t, 1);
        assert_eq!(thr, (2.0 * (t as f64).ln()).sqrt() + 2.0 * (t as f64).ln());
        assert!(!eviction_check_meta(&[0.0, 0.0], 1, 1, 1.0, t));
        assert!(eviction_check_meta(&[thr + 1e-9, 0.0], 1, 1, 1.0, t));
        assert!(!eviction_check_meta(&[thr, 0.0], 1, 1, 1.0, t));
        assert!(!eviction_check_meta(&[thr + 1.0, 0.0], 0, 1, 1.0, t));
    }

    #[test]
    fn random_single_arm_and_determinism() {
        let spec = PiecewiseSpec::new(
            vec![Segment {
                length: 50,
                gaps: vec![0.0],
            }],
            0.5,
        );
        let env = make_piecewise(spec, NoiseModel::Bernoulli).unwrap();
        let tr = run_random(&env, 3);
        assert!(tr.pulls.iter().all(|&a| a == 0));
        assert!(tr.events.is_empty());
        let spec = PiecewiseSpec::new(
            vec![Segment {
                length: 500,
                gaps: vec![0.0, 0.4, 0.1],
            }],
            0.5,
        );
        let env = make_piecewise(spec, NoiseModel::Bernoulli).unwrap();
        assert_eq!(run_random(&env, 9), run_random(&env, 9));
        assert_ne!(run_random(&env, 9).pulls, run_random(&env, 10).pulls);
    }

    #[test]
    fn policy_spec_names() {
        for n in ["meta", "se", "rand", "oracle-restart"] {
            assert_eq!(PolicySpec::from_name(n).unwrap().name(), n);
        }
        assert!(matches!(
            PolicySpec::from_name("ucb"),
            Err(crate::error::Error::UnknownPolicy(_))
        ));
        let p: PolicySpec = serde_json::from_str(r#"{"name":"meta","c2":0.5}"#).unwrap();
        assert_eq!(
            p,
            PolicySpec::Meta(MetaConfig {
                c2: 0.5,
                ..MetaConfig::default()
            })
        );
        let p: PolicySpec = serde_json::from_str(r#"{"name":"rand"}"#).unwrap();
        assert_eq!(p, PolicySpec::Rand);
    }
}
