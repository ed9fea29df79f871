use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{ScanMode, SKIP_MARGIN};
use crate::env::EnvironmentModel;
use crate::error::{Error, Result};

/// The active arm set from round `from` until the next run starts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArmsetRun {
    pub from: usize,
    /// 0-based arms, ascending.
    pub set: Vec<usize>,
}

/// Greedy eviction schedule and the shrinking arm sets it induces.
#[derive(Debug, Clone, PartialEq)]
pub struct EvictionTrace {
    /// Eviction round of each arm (0-based index), `T + 1` if never evicted.
    pub evicted_at: Vec<usize>,
    /// Run-length encoding of `S_1 ⊇ S_2 ⊇ ... ⊇ S_T`.
    pub armsets: Vec<ArmsetRun>,
    pub c2: f64,
}

impl EvictionTrace {
    /// Trace of a horizon on which nothing is ever evicted.
    pub fn full(arms: usize, horizon: usize, c2: f64) -> Self {
        Self {
            evicted_at: vec![horizon + 1; arms],
            armsets: vec![ArmsetRun {
                from: 1,
                set: (0..arms).collect(),
            }],
            c2,
        }
    }

    pub fn arms(&self) -> usize {
        self.evicted_at.len()
    }

    /// Eviction times in nondecreasing order.
    pub fn times(&self) -> Vec<usize> {
        let mut t = self.evicted_at.clone();
        t.sort_unstable();
        t
    }

    /// `S_t`.
    pub fn set_at(&self, t: usize) -> &[usize] {
        let i = self.armsets.partition_point(|r| r.from <= t);
        &self.armsets[i.saturating_sub(1)].set
    }

    /// Arms never evicted.
    pub fn survivors(&self) -> Vec<usize> {
        let end = self.evicted_at.iter().copied().max().unwrap_or(0);
        (0..self.arms())
            .filter(|&a| self.evicted_at[a] == end)
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct ArmsetWire {
    from: usize,
    set: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct TraceWire {
    times: Vec<usize>,
    armsets: Vec<ArmsetWire>,
    c2: f64,
}

impl Serialize for EvictionTrace {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TraceWire {
            times: self.times(),
            armsets: self
                .armsets
                .iter()
                .map(|r| ArmsetWire {
                    from: r.from,
                    set: r.set.iter().map(|a| a + 1).collect(),
                })
                .collect(),
            c2: self.c2,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for EvictionTrace {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = TraceWire::deserialize(d)?;
        let first = w
            .armsets
            .first()
            .ok_or_else(|| D::Error::custom("empty armsets"))?;
        let arms = first.set.len();
        if w.times.len() != arms {
            return Err(D::Error::custom("times and initial arm set disagree on K"));
        }
        let never = w.times.iter().copied().max().unwrap_or(1);
        let mut evicted_at = vec![never; arms];
        let mut armsets = Vec::with_capacity(w.armsets.len());
        for r in &w.armsets {
            if r.set.iter().any(|&a| a == 0 || a > arms) {
                return Err(D::Error::custom(format!("arm outside 1..={arms}")));
            }
            armsets.push(ArmsetRun {
                from: r.from,
                set: r.set.iter().map(|a| a - 1).collect(),
            });
        }
        for pair in armsets.windows(2) {
            for &a in &pair[0].set {
                if !pair[1].set.contains(&a) {
                    evicted_at[a] = pair[1].from;
                }
            }
        }
        Ok(EvictionTrace {
            evicted_at,
            armsets,
            c2: w.c2,
        })
    }
}

/// Greedy eviction times under threshold `c2`.
///
/// Round `t` adds weight `1/|S|` to `W_a` (times `delta_t(a)`) and to `V`
/// (times `ln T`). An active arm is evicted at the first round ending a
/// window `[s, t]` with `W_a(t) - W_a(s-1) > c2 sqrt(V(t) - V(s-1))`. After
/// an eviction round `t` is reweighted with the smaller set and rechecked.
/// If every arm goes, the trace ends with an empty set and scanning stops.
pub fn eviction_times(env: &EnvironmentModel, c2: f64, mode: ScanMode) -> Result<EvictionTrace> {
    if !(c2 > 0.0 && c2.is_finite()) {
        return Err(Error::invalid(format!(
            "C2 must be finite and > 0, got {c2}"
        )));
    }
    let k = env.arms();
    let t_max = env.horizon();
    let log_t = (t_max as f64).ln();

    let mut w = vec![vec![0.0; t_max + 1]; k];
    let mut v = vec![0.0; t_max + 1];
    let mut active = vec![true; k];
    let mut n_active = k;
    let mut evicted_at = vec![t_max + 1; k];
    let mut armsets = vec![ArmsetRun {
        from: 1,
        set: (0..k).collect(),
    }];
    let mut row = vec![0.0; k];

    for t in 1..=t_max {
        env.gaps_into(t, &mut row);
        let mut changed = false;
        loop {
            let weight = 1.0 / n_active as f64;
            v[t] = v[t - 1] + log_t * weight;
            for a in 0..k {
                w[a][t] = w[a][t - 1] + row[a] * weight;
            }
            let violators: Vec<usize> = (0..k)
                .filter(|&a| active[a])
                .filter(|&a| match mode {
                    ScanMode::Exact => violates_exact(&w[a], &v, t, c2),
                    ScanMode::Dyadic => violates_dyadic(&w[a], &v, t, c2),
                })
                .collect();
            if violators.is_empty() {
                break;
            }
            for a in violators {
                active[a] = false;
                evicted_at[a] = t;
                n_active -= 1;
            }
            changed = true;
            if n_active == 0 {
                break;
            }
        }
        if changed {
            armsets.push(ArmsetRun {
                from: t,
                set: (0..k).filter(|&a| active[a]).collect(),
            });
        }
        if n_active == 0 {
            // Unsafe environment: nothing left to weight.
            break;
        }
    }
    Ok(EvictionTrace {
        evicted_at,
        armsets,
        c2,
    })
}

/// Windows `[q+1, t]` for every `q < t`. Both prefixes are nondecreasing, so
/// once `W(t) - W(q)` is known, only `q'` with
/// `V(q') > V(t) - ((W(t) - W(q)) / c2)^2` can still violate.
fn violates_exact(w: &[f64], v: &[f64], t: usize, c2: f64) -> bool {
    let (wt, vt) = (w[t], v[t]);
    let mut q = 0;
    while q < t {
        let dw = wt - w[q];
        if dw > c2 * (vt - v[q]).sqrt() {
            return true;
        }
        if dw <= 0.0 {
            return false;
        }
        let r = dw / c2;
        let floor = vt - r * r * (1.0 + SKIP_MARGIN);
        q = q + 1 + v[q + 1..t].partition_point(|&x| x <= floor);
    }
    false
}

fn violates_dyadic(w: &[f64], v: &[f64], t: usize, c2: f64) -> bool {
    let mut n = 1;
    while n <= t {
        let q = t - n;
        if w[t] - w[q] > c2 * (v[t] - v[q]).sqrt() {
            return true;
        }
        n *= 2;
    }
    false
}

/// `sum_t mean_{a in S_t} delta_t(a)`.
pub fn gap_dependent_rate(env: &EnvironmentModel, trace: &EvictionTrace) -> Result<f64> {
    if trace.arms() != env.arms() {
        return Err(Error::LengthMismatch {
            expected: env.arms(),
            found: trace.arms(),
        });
    }
    if trace.armsets.first().map(|r| r.from) != Some(1) {
        return Err(Error::invalid("eviction trace must start at round 1"));
    }
    let t_max = env.horizon();
    if let Some(r) = trace
        .armsets
        .iter()
        .find(|r| r.from > t_max || r.set.is_empty())
    {
        return Err(Error::invalid(format!(
            "arm-set run starting at {} is empty or past T = {t_max}",
            r.from
        )));
    }
    let mut row = vec![0.0; env.arms()];
    let mut total = 0.0;
    for (i, run) in trace.armsets.iter().enumerate() {
        let end = trace.armsets.get(i + 1).map_or(t_max, |n| n.from - 1);
        let size = run.set.len() as f64;
        for t in run.from..=end {
            env.gaps_into(t, &mut row);
            total += run.set.iter().map(|&a| row[a]).sum::<f64>() / size;
        }
    }
    Ok(total)
}
