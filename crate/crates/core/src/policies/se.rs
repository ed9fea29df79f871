//! Randomized successive elimination with unweighted relative-gap estimates.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{noise_rng, play_rng, PolicyTrace, Scope, TraceEvent};
use crate::env::EnvironmentModel;
use crate::error::{Error, Result};
use crate::shift_oracle::{ArmsetRun, EvictionTrace, ShiftProfile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeConfig {
    /// Eviction constant, must exceed 1.
    #[serde(alias = "C5")]
    pub c5: f64,
    /// Check only windows of length 1, 2, 4, ... ending at each round.
    pub dyadic: bool,
}

impl Default for SeConfig {
    fn default() -> Self {
        Self {
            c5: 2.0,
            dyadic: true,
        }
    }
}

impl SeConfig {
    fn validate(&self) -> Result<()> {
        if !(self.c5 > 1.0 && self.c5.is_finite()) {
            return Err(Error::invalid(format!(
                "C5 must be finite and > 1, got {}",
                self.c5
            )));
        }
        Ok(())
    }
}

struct Runner<'a> {
    env: &'a EnvironmentModel,
    cfg: &'a SeConfig,
    log_t: f64,
    play: ChaCha8Rng,
    noise: ChaCha8Rng,
}

struct Block {
    /// First round each arm is absent, `last + 1` if it survives.
    evicted_at: Vec<usize>,
    armsets: Vec<ArmsetRun>,
}

impl Runner<'_> {
    /// Fresh elimination over rounds `first..=last`.
    ///
    /// After round `s`, arm `a` is dropped when some checked window
    /// `[t0, s]` with `t0 >= first` has
    /// `max_{a'} sum (Y 1{pi = a'} - Y 1{pi = a}) >= c5 sqrt(sum ln T / |A|)`.
    /// All such arms leave together; a round that would drop every arm
    /// drops none.
    fn block(&mut self, first: usize, last: usize, trace: &mut PolicyTrace) -> Block {
        let k = self.env.arms();
        let len = last + 1 - first;
        let mut active = vec![true; k];
        let mut n_active = k;
        let mut y = vec![0.0; (len + 1) * k];
        let mut v = vec![0.0; len + 1];
        let mut evicted_at = vec![last + 1; k];
        let mut armsets = vec![ArmsetRun {
            from: first,
            set: (0..k).collect(),
        }];
        let mut flagged = vec![false; k];
        let mut sums = vec![0.0; k];

        for s in first..=last {
            let pick = self.play.random_range(0..n_active);
            let arm = (0..k).filter(|&a| active[a]).nth(pick).unwrap();
            let reward = self.env.draw(s, arm, &mut self.noise);
            trace.record(arm, reward);

            let i = s - first + 1;
            let (prev, cur) = y.split_at_mut(i * k);
            cur[..k].copy_from_slice(&prev[(i - 1) * k..]);
            cur[arm] += reward;
            v[i] = v[i - 1] + self.log_t / n_active as f64;

            flagged.iter_mut().for_each(|f| *f = false);
            let mut any = false;
            let mut check = |q: usize| {
                for a in 0..k {
                    sums[a] = y[i * k + a] - y[q * k + a];
                }
                let best = sums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let thr = self.cfg.c5 * (v[i] - v[q]).sqrt();
                for a in 0..k {
                    let lhs = best - sums[a];
                    if active[a] && lhs > 0.0 && lhs >= thr {
                        flagged[a] = true;
                        any = true;
                    }
                }
            };
            if self.cfg.dyadic {
                let mut n = 1;
                while n <= i {
                    check(i - n);
                    n *= 2;
                }
            } else {
                for q in 0..i {
                    check(q);
                }
            }
            if !any {
                continue;
            }
            let count = flagged.iter().filter(|f| **f).count();
            if count == n_active {
                continue;
            }
            for a in 0..k {
                if flagged[a] {
                    active[a] = false;
                    evicted_at[a] = s + 1;
                    trace.events.push(TraceEvent::Eviction {
                        round: s,
                        arm: a,
                        scope: Scope::Local,
                    });
                }
            }
            n_active -= count;
            if s < last {
                armsets.push(ArmsetRun {
                    from: s + 1,
                    set: (0..k).filter(|&a| active[a]).collect(),
                });
            }
        }
        Block {
            evicted_at,
            armsets,
        }
    }
}

fn runner<'a>(env: &'a EnvironmentModel, cfg: &'a SeConfig, seed: u64) -> Result<Runner<'a>> {
    cfg.validate()?;
    Ok(Runner {
        env,
        cfg,
        log_t: (env.horizon() as f64).ln(),
        play: play_rng(seed),
        noise: noise_rng(seed),
    })
}

/// One elimination pass over the whole horizon; returns the play trace and
/// the realized eviction schedule (an arm's time is the first round it is
/// no longer played).
pub fn run_se_safe(
    env: &EnvironmentModel,
    cfg: &SeConfig,
    seed: u64,
) -> Result<(PolicyTrace, EvictionTrace)> {
    let mut r = runner(env, cfg, seed)?;
    let mut trace = PolicyTrace::with_capacity(env.horizon());
    let b = r.block(1, env.horizon(), &mut trace);
    let evictions = EvictionTrace {
        evicted_at: b.evicted_at,
        armsets: b.armsets,
        c2: cfg.c5,
    };
    Ok((trace, evictions))
}

/// Elimination restarted with the full arm set at every significant shift.
/// Random streams continue across phases.
pub fn run_oracle_restart(
    env: &EnvironmentModel,
    profile: &ShiftProfile,
    cfg: &SeConfig,
    seed: u64,
) -> Result<PolicyTrace> {
    if profile.horizon != env.horizon() {
        return Err(Error::LengthMismatch {
            expected: env.horizon(),
            found: profile.horizon,
        });
    }
    if profile.arms != env.arms() {
        return Err(Error::invalid(format!(
            "shift profile has K = {}, environment has K = {}",
            profile.arms,
            env.arms()
        )));
    }
    let mut r = runner(env, cfg, seed)?;
    let mut trace = PolicyTrace::with_capacity(env.horizon());
    for (start, next) in profile.phases() {
        if start > 1 {
            trace
                .events
                .push(TraceEvent::EpisodeRestart { round: start });
        }
        r.block(start, next - 1, &mut trace);
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{make_piecewise, NoiseModel, PiecewiseSpec, Segment};

    fn two_arm(gap: f64, t: usize, noise: NoiseModel) -> EnvironmentModel {
        let spec = PiecewiseSpec::new(
            vec![Segment {
                length: t,
                gaps: vec![0.0, gap],
            }],
            1.0,
        );
        make_piecewise(spec, noise).unwrap()
    }

    #[test]
    fn zero_gaps_keep_every_arm() {
        let spec = PiecewiseSpec::new(
            vec![Segment {
                length: 3000,
                gaps: vec![0.0; 3],
            }],
            0.5,
        );
        let env = make_piecewise(spec, NoiseModel::Deterministic).unwrap();
        let (tr, ev) = run_se_safe(&env, &SeConfig::default(), 4).unwrap();
        assert!(tr.events.is_empty());
        assert_eq!(ev.times(), vec![3001; 3]);
        assert_eq!(ev.set_at(3000), &[0, 1, 2]);
    }

    /// Replays the realized pulls and finds the first round at which some
    /// dyadic window crosses the threshold.
    fn scripted_first_crossing(env: &EnvironmentModel, tr: &PolicyTrace, c5: f64) -> Option<usize> {
        let t_max = env.horizon();
        let log_t = (t_max as f64).ln();
        let mut y = vec![[0.0f64; 2]; t_max + 1];
        for s in 1..=t_max {
            y[s] = y[s - 1];
            y[s][tr.pulls[s - 1] as usize] += env.mean(s, tr.pulls[s - 1] as usize);
            let mut n = 1;
            while n <= s {
                let d0 = y[s][0] - y[s - n][0];
                let d1 = y[s][1] - y[s - n][1];
                let thr = c5 * (n as f64 * log_t / 2.0).sqrt();
                if d0 - d1 > 0.0 && d0 - d1 >= thr {
                    return Some(s);
                }
                n *= 2;
            }
        }
        None
    }

    #[test]
    fn deterministic_eviction_matches_scripted_replay() {
        let env = two_arm(0.5, 2000, NoiseModel::Deterministic);
        for seed in 0..5 {
            let (tr, ev) = run_se_safe(&env, &SeConfig::default(), seed).unwrap();
            let s = scripted_first_crossing(&env, &tr, 2.0).unwrap();
            assert_eq!(ev.evicted_at, vec![2001, s + 1], "seed {seed}");
            assert!(tr.pulls[s..].iter().all(|&a| a == 0));
            // Under perfect alternation the crossing (D/2) n >= c5 sqrt(n ln T / 2)
            // happens at n = 2 c5^2 ln T / (D/2)^2 / 2; random play lands near it.
            let n_star = 2.0 * 4.0 * (2000f64).ln() / 0.25 / 2.0;
            assert!((s as f64) < 4.0 * n_star, "{s} vs {n_star}");
        }
    }

    #[test]
    fn c5_must_exceed_one() {
        let env = two_arm(0.5, 10, NoiseModel::Bernoulli);
        assert!(run_se_safe(
            &env,
            &SeConfig {
                c5: 1.0,
                dyadic: true
            },
            0
        )
        .is_err());
    }

    #[test]
    fn oracle_restart_without_shifts_matches_se() {
        let env = two_arm(0.2, 3000, NoiseModel::Bernoulli);
        let p = ShiftProfile::stationary(3000, 2);
        let a = run_oracle_restart(&env, &p, &SeConfig::default(), 8).unwrap();
        let (b, _) = run_se_safe(&env, &SeConfig::default(), 8).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn oracle_restart_resets_once_per_shift() {
        let spec = PiecewiseSpec::new(
            vec![
                Segment {
                    length: 1000,
                    gaps: vec![0.0, 0.8],
                },
                Segment {
                    length: 1000,
                    gaps: vec![0.8, 0.0],
                },
            ],
            1.0,
        );
        let env = make_piecewise(spec, NoiseModel::Bernoulli).unwrap();
        let p = ShiftProfile::new(vec![1, 1003], 2000, 2).unwrap();
        let tr = run_oracle_restart(&env, &p, &SeConfig::default(), 1).unwrap();
        let restarts: Vec<_> = tr
            .events
            .iter()
            .filter(|e| matches!(e, TraceEvent::EpisodeRestart { .. }))
            .collect();
        assert_eq!(restarts, vec![&TraceEvent::EpisodeRestart { round: 1003 }]);
        assert_eq!(tr.horizon(), 2000);
        let bad = ShiftProfile::stationary(1999, 2);
        assert!(run_oracle_restart(&env, &bad, &SeConfig::default(), 1).is_err());
    }
}
