//! META: episodes of nested randomized successive elimination with
//! randomly scheduled replays and importance-weighted eviction.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{meta_threshold, noise_rng, play_rng, PolicyTrace, Scope, TraceEvent, REPLAY_STREAM};
use crate::env::EnvironmentModel;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, KeyedUniform};

/// Arm sets are bitmasks.
pub const MAX_META_ARMS: usize = 64;

/// Exact window checks cost `O(t)` per round; above this horizon they are refused.
const EXACT_LIMIT: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetaConfig {
    /// Eviction constant.
    #[serde(alias = "C2")]
    pub c2: f64,
    /// Check only windows of length 1, 2, 4, ... instead of every window.
    pub dyadic_eviction: bool,
}

impl Default for MetaConfig {
    fn default() -> Self {
        Self {
            c2: 1.0,
            dyadic_eviction: true,
        }
    }
}

/// Replay durations `2, 4, ..., 2^ceil(log2 T)` (at least `[2]`).
pub fn replay_lengths(horizon: usize) -> Vec<usize> {
    let top = horizon.next_power_of_two().max(2);
    std::iter::successors(Some(2usize), |m| (*m < top).then_some(m * 2)).collect()
}

/// `min(1, 1/sqrt(m (s - episode_start)))`.
#[inline]
pub fn replay_probability(m: usize, s: usize, episode_start: usize) -> f64 {
    (1.0 / ((m * (s - episode_start)) as f64).sqrt()).min(1.0)
}

#[derive(Debug, Clone, Copy)]
struct Frame {
    start: usize,
    duration: usize,
    active: u64,
}

struct Episode {
    start: usize,
    global: u64,
    frames: Vec<Frame>,
}

impl Episode {
    fn new(start: usize, full: u64, horizon: usize) -> Self {
        Self {
            start,
            global: full,
            frames: vec![Frame {
                start,
                duration: horizon + 1 - start,
                active: full,
            }],
        }
    }
}

/// Run META for the whole horizon.
///
/// Each round the innermost base plays uniformly from its arm set and the
/// reward, weighted by that set's size, is added to a per-episode prefix.
/// Every window ending at the played round is then tested: windows starting
/// at or after the episode start evict from the global set, those starting at
/// or after a base's own start evict from that base. A base whose set empties
/// or whose duration has elapsed hands control back to its parent, which then
/// runs its own eviction step on the same round. The episode restarts when
/// the global set (or the ancestor's set) is empty. Finally, replay
/// indicators for the next round `t` are drawn lazily from a keyed generator
/// addressed by `(episode start, t, m)` and the longest firing replay is
/// pushed as a new base.
pub fn run_meta(env: &EnvironmentModel, config: &MetaConfig, seed: u64) -> Result<PolicyTrace> {
    let k = env.arms();
    let horizon = env.horizon();
    if k > MAX_META_ARMS {
        return Err(Error::invalid(format!(
            "META supports at most {MAX_META_ARMS} arms, got {k}"
        )));
    }
    if !(config.c2 > 0.0 && config.c2.is_finite()) {
        return Err(Error::invalid(format!(
            "C2 must be finite and > 0, got {}",
            config.c2
        )));
    }
    if !config.dyadic_eviction && horizon > EXACT_LIMIT {
        return Err(Error::invalid(format!(
            "exact META eviction is limited to T <= {EXACT_LIMIT}; use dyadic eviction"
        )));
    }
    let full: u64 = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
    let lengths = replay_lengths(horizon);
    let replay = KeyedUniform::new(derive_seed(seed, REPLAY_STREAM));
    let mut play = play_rng(seed);
    let mut noise = noise_rng(seed);
    let mut trace = PolicyTrace::with_capacity(horizon);

    // x[s*K + a] = sum over episode rounds u <= s of |A_u| Y_u 1{pi_u = a}.
    let mut x = vec![0.0; (horizon + 1) * k];
    let mut ep = Episode::new(1, full, horizon);
    let mut windows: Vec<(usize, u64)> = Vec::new();
    let mut sums = vec![0.0; k];

    let mut t = 1;
    while t <= horizon {
        let top = *ep.frames.last().unwrap();
        let size = top.active.count_ones() as usize;
        let arm = nth_set_bit(top.active, play.random_range(0..size));
        let y = env.draw(t, arm, &mut noise);
        trace.record(arm, y);
        let (prev, cur) = x.split_at_mut(t * k);
        cur[..k].copy_from_slice(&prev[(t - 1) * k..]);
        cur[arm] += size as f64 * y;

        let s = t;
        t += 1;
        if t > horizon {
            break;
        }

        // Eviction masks of every window [t0, s] with t0 >= episode start.
        windows.clear();
        let mut check = |t0: usize| {
            let n = s - t0 + 1;
            for a in 0..k {
                sums[a] = x[s * k + a] - x[(t0 - 1) * k + a];
            }
            let best = sums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let thr = meta_threshold(config.c2, k, horizon, n);
            let mut mask = 0u64;
            for (a, v) in sums.iter().enumerate() {
                if best - v > thr {
                    mask |= 1 << a;
                }
            }
            windows.push((t0, mask));
        };
        if config.dyadic_eviction {
            let mut n = 1;
            while n <= s + 1 - ep.start {
                check(s + 1 - n);
                n *= 2;
            }
        } else {
            for t0 in ep.start..=s {
                check(t0);
            }
        }

        let global_hit: u64 = windows.iter().fold(0, |m, w| m | w.1);
        let newly = ep.global & global_hit;
        push_evictions(&mut trace, t, newly, Scope::Global);
        ep.global &= !global_hit;
        if ep.global == 0 {
            trace.events.push(TraceEvent::EpisodeRestart { round: t });
            ep = Episode::new(t, full, horizon);
            continue;
        }

        let mut restarted = false;
        loop {
            let depth = ep.frames.len();
            let f = ep.frames.last_mut().unwrap();
            let local = windows
                .iter()
                .filter(|w| w.0 >= f.start)
                .fold(0, |m, w| m | w.1);
            push_evictions(&mut trace, t, f.active & local, Scope::Local);
            f.active &= !local;
            if f.active == 0 {
                if depth == 1 {
                    trace.events.push(TraceEvent::EpisodeRestart { round: t });
                    ep = Episode::new(t, full, horizon);
                    restarted = true;
                    break;
                }
                ep.frames.pop();
                continue;
            }
            if depth > 1 && t > f.start + f.duration {
                ep.frames.pop();
                continue;
            }
            break;
        }
        if restarted {
            continue;
        }

        // The longest replay scheduled for round t interrupts the active base.
        if let Some(m) = lengths.iter().rev().copied().find(|&m| {
            replay.uniform(ep.start as u64, t as u64, m as u64) < replay_probability(m, t, ep.start)
        }) {
            ep.frames.push(Frame {
                start: t,
                duration: m,
                active: full,
            });
            trace.events.push(TraceEvent::ReplayStart { round: t, m });
        }
    }
    Ok(trace)
}

fn push_evictions(trace: &mut PolicyTrace, round: usize, mut mask: u64, scope: Scope) {
    while mask != 0 {
        let arm = mask.trailing_zeros() as usize;
        trace
            .events
            .push(TraceEvent::Eviction { round, arm, scope });
        mask &= mask - 1;
    }
}

#[inline]
fn nth_set_bit(mut mask: u64, n: usize) -> usize {
    for _ in 0..n {
        mask &= mask - 1;
    }
    mask.trailing_zeros() as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{make_piecewise, NoiseModel, PiecewiseSpec, Segment};

    fn piecewise(segs: &[(usize, &[f64])], noise: NoiseModel) -> EnvironmentModel {
        let spec = PiecewiseSpec::new(
            segs.iter()
                .map(|(l, g)| Segment {
                    length: *l,
                    gaps: g.to_vec(),
                })
                .collect(),
            1.0,
        );
        make_piecewise(spec, noise).unwrap()
    }

    #[test]
    fn replay_grid() {
        assert_eq!(replay_lengths(1), vec![2]);
        assert_eq!(replay_lengths(8), vec![2, 4, 8]);
        assert_eq!(replay_lengths(9), vec![2, 4, 8, 16]);
        assert_eq!(replay_probability(2, 3, 1), 0.5);
        assert_eq!(replay_probability(2, 1, 0), 1.0f64.min(1.0 / 2f64.sqrt()));
    }

    #[test]
    fn nth_bit() {
        assert_eq!(nth_set_bit(0b1011, 0), 0);
        assert_eq!(nth_set_bit(0b1011, 1), 1);
        assert_eq!(nth_set_bit(0b1011, 2), 3);
    }

    #[test]
    fn single_arm_has_no_events() {
        let env = piecewise(&[(300, &[0.0])], NoiseModel::Bernoulli);
        let tr = run_meta(&env, &MetaConfig::default(), 1).unwrap();
        assert_eq!(tr.horizon(), 300);
        assert!(tr.pulls.iter().all(|&a| a == 0));
        assert!(tr
            .events
            .iter()
            .all(|e| matches!(e, TraceEvent::ReplayStart { .. })));
    }

    #[test]
    fn zero_gap_env_never_evicts() {
        // Rewards still carry selection noise through the |A| weighting; with
        // every mean at 1 that noise alone crosses the C2 = 1 threshold now
        // and then, so the flat level sits at 1/2.
        let spec = PiecewiseSpec::new(
            vec![Segment {
                length: 2000,
                gaps: vec![0.0; 3],
            }],
            0.5,
        );
        let env = make_piecewise(spec, NoiseModel::Deterministic).unwrap();
        for dyadic in [true, false] {
            let cfg = MetaConfig {
                c2: 1.0,
                dyadic_eviction: dyadic,
            };
            let tr = run_meta(&env, &cfg, 5).unwrap();
            assert!(tr
                .events
                .iter()
                .all(|e| matches!(e, TraceEvent::ReplayStart { .. })));
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let env = piecewise(
            &[(1500, &[0.0, 0.3]), (1500, &[0.3, 0.0])],
            NoiseModel::Bernoulli,
        );
        let a = run_meta(&env, &MetaConfig::default(), 11).unwrap();
        let b = run_meta(&env, &MetaConfig::default(), 11).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        let c = run_meta(&env, &MetaConfig::default(), 12).unwrap();
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn large_gap_arm_gets_evicted() {
        let env = piecewise(&[(5000, &[0.0, 1.0])], NoiseModel::Deterministic);
        let tr = run_meta(&env, &MetaConfig::default(), 2).unwrap();
        assert!(tr.events.iter().any(|e| matches!(
            e,
            TraceEvent::Eviction {
                arm: 1,
                scope: Scope::Global,
                ..
            }
        )));
        // The zero-gap arm survives globally on a safe environment.
        assert!(!tr.events.iter().any(|e| matches!(
            e,
            TraceEvent::Eviction {
                arm: 0,
                scope: Scope::Global,
                ..
            }
        )));
        assert!(!tr
            .events
            .iter()
            .any(|e| matches!(e, TraceEvent::EpisodeRestart { .. })));
    }

    #[test]
    fn exact_mode_is_refused_for_long_horizons() {
        let env = piecewise(&[(EXACT_LIMIT + 1, &[0.0, 0.1])], NoiseModel::Bernoulli);
        let cfg = MetaConfig {
            c2: 1.0,
            dyadic_eviction: false,
        };
        assert!(run_meta(&env, &cfg, 0).is_err());
    }
}
