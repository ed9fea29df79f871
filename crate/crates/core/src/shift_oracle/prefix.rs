use rayon::prelude::*;

use crate::env::EnvironmentModel;

/// Per-arm prefix sums of the gap matrix, `P_a(t) = sum_{s<=t} delta_s(a)`.
///
/// Stored round-major so the table fills in parallel chunks.
#[derive(Debug, Clone)]
pub struct GapPrefix {
    arms: usize,
    horizon: usize,
    sums: Vec<f64>,
}

const CHUNK: usize = 1 << 15;

impl GapPrefix {
    pub fn new(env: &EnvironmentModel) -> Self {
        let (k, t_max) = (env.arms(), env.horizon());
        let mut sums = vec![0.0; (t_max + 1) * k];
        sums[k..]
            .par_chunks_mut(CHUNK * k)
            .enumerate()
            .for_each(|(c, block)| {
                let first = c * CHUNK + 1;
                let mut acc = vec![0.0; k];
                let mut row = vec![0.0; k];
                for (i, out) in block.chunks_exact_mut(k).enumerate() {
                    env.gaps_into(first + i, &mut row);
                    for (s, r) in acc.iter_mut().zip(&row) {
                        *s += r;
                    }
                    out.copy_from_slice(&acc);
                }
            });
        // Carry each chunk's total into the next.
        let blocks = t_max.div_ceil(CHUNK);
        let mut offsets = vec![0.0; blocks * k];
        for c in 1..blocks {
            let last = c * CHUNK; // last round of chunk c-1
            for a in 0..k {
                offsets[c * k + a] = offsets[(c - 1) * k + a] + sums[last * k + a];
            }
        }
        sums[k..]
            .par_chunks_mut(CHUNK * k)
            .enumerate()
            .skip(1)
            .for_each(|(c, block)| {
                let off = &offsets[c * k..(c + 1) * k];
                for out in block.chunks_exact_mut(k) {
                    for a in 0..k {
                        out[a] += off[a];
                    }
                }
            });
        Self {
            arms: k,
            horizon: t_max,
            sums,
        }
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `P_a(t)` for `0 <= t <= T`.
    #[inline]
    pub fn at(&self, a: usize, t: usize) -> f64 {
        self.sums[t * self.arms + a]
    }

    /// `sum_{t=s1}^{s2} delta_t(a)`, with `1 <= s1 <= s2 + 1`.
    #[inline]
    pub fn window(&self, a: usize, s1: usize, s2: usize) -> f64 {
        self.at(a, s2) - self.at(a, s1 - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::NoiseModel;

    #[test]
    fn chunked_sums_match_a_sequential_pass() {
        let t = 3 * CHUNK + 17;
        let means: Vec<f64> = (0..t)
            .flat_map(|i| {
                let x = (i as f64 * 0.37).sin() * 0.5 + 0.5;
                [x, 1.0 - x, 0.5]
            })
            .collect();
        let env = EnvironmentModel::from_dense(3, t, means, NoiseModel::Deterministic).unwrap();
        let p = GapPrefix::new(&env);
        let mut acc = [0.0; 3];
        let mut row = [0.0; 3];
        for s in 1..=t {
            env.gaps_into(s, &mut row);
            for a in 0..3 {
                acc[a] += row[a];
                assert!(
                    (p.at(a, s) - acc[a]).abs() <= 1e-9 * (1.0 + acc[a]),
                    "t={s}"
                );
            }
        }
    }
}
