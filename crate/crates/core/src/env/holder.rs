//! Finite-difference Hölder diagnostics for gap functions in normalized time.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::EnvironmentModel;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Grid used by [`verify_holder`].
pub const DEFAULT_GRID: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderWitness {
    pub x: f64,
    pub x_prime: f64,
    /// 0-based here, 1-based when serialized.
    #[serde(with = "crate::arms::one_based")]
    pub arm: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub pass: bool,
    pub worst_ratio: f64,
    /// Pair attaining `worst_ratio`; absent when every gap is flat.
    pub witness: Option<HolderWitness>,
}

/// Order-`n` forward differences of `f_a(x) = delta_{xT}(a)` on the grid
/// `x_k = k * hs`, `hs = max(1/T, 1/grid)`. Returns `(locations, values)`
/// with each value placed at its stencil midpoint.
fn differences(
    env: &EnvironmentModel,
    a: usize,
    n: usize,
    grid: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let hs = (1.0 / env.horizon() as f64).max(1.0 / grid as f64);
    let points = (1.0 / hs).floor() as usize;
    if grid < n + 2 || points < n + 1 {
        return Err(Error::invalid(format!(
            "grid of {points} points is too small for an order-{n} stencil"
        )));
    }
    let f: Vec<f64> = (1..=points)
        .map(|k| env.gap_at_x(k as f64 * hs, a))
        .collect();
    let coef: Vec<f64> = (0..=n)
        .map(|j| {
            let sign = if (n - j).is_multiple_of(2) { 1.0 } else { -1.0 };
            sign * binomial(n, j)
        })
        .collect();
    let scale = hs.powi(n as i32);
    let count = points - n;
    let mut loc = Vec::with_capacity(count);
    let mut val = Vec::with_capacity(count);
    for k in 0..count {
        let s: f64 = coef.iter().enumerate().map(|(j, c)| c * f[k + j]).sum();
        loc.push((k + 1) as f64 * hs + n as f64 * hs / 2.0);
        val.push(s / scale);
    }
    Ok((loc, val))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `max_x |f_a^(n)(x)|` estimated by order-`n` finite differences.
pub fn holder_coefficient(
    env: &EnvironmentModel,
    a: usize,
    n: usize,
    grid_size: usize,
) -> Result<f64> {
    env.check_arm(a)?;
    let (_, d) = differences(env, a, n, grid_size)?;
    Ok(d.iter().fold(0.0, |m, v| m.max(v.abs())))
}

/// Check `|f^(m)(x) - f^(m)(x')| <= lambda |x - x'|^(beta - m)` for every arm,
/// `m = floor(beta)`, on the default grid.
pub fn verify_holder(
    env: &EnvironmentModel,
    beta: f64,
    lambda: f64,
    sample_pairs: usize,
    tol: f64,
) -> Result<HolderReport> {
    verify_holder_on_grid(env, beta, lambda, sample_pairs, tol, DEFAULT_GRID, 0)
}

/// [`verify_holder`] with an explicit grid size and sampling seed.
///
/// Integer `beta` compares the full range of the order-`m` difference
/// against `lambda`. Otherwise every adjacent pair, every pair at a dyadic
/// lag, both extremes against all points, and `sample_pairs` random pairs are
/// examined.
pub fn verify_holder_on_grid(
    env: &EnvironmentModel,
    beta: f64,
    lambda: f64,
    sample_pairs: usize,
    tol: f64,
    grid_size: usize,
    seed: u64,
) -> Result<HolderReport> {
    if !(beta > 0.0 && beta.is_finite() && lambda > 0.0 && lambda.is_finite() && tol >= 0.0) {
        return Err(Error::invalid(format!(
            "need beta > 0, lambda > 0, tol >= 0; got {beta}, {lambda}, {tol}"
        )));
    }
    let m = beta.floor() as usize;
    let gamma = beta - m as f64;
    let mut worst = 0.0;
    let mut witness = None;
    let mut rng = stream_rng(seed, 0x401D);

    for a in 0..env.arms() {
        let (x, d) = differences(env, a, m, grid_size)?;
        let n = d.len();
        let (imax, imin) = extremes(&d);
        let mut consider = |i: usize, j: usize| {
            if i == j {
                return;
            }
            let num = (d[i] - d[j]).abs();
            let r = if gamma == 0.0 {
                num / lambda
            } else {
                num / (lambda * (x[i] - x[j]).abs().powf(gamma))
            };
            if r > worst {
                worst = r;
                witness = Some(HolderWitness {
                    x: x[i].min(x[j]),
                    x_prime: x[i].max(x[j]),
                    arm: a,
                });
            }
        };
        if gamma == 0.0 {
            consider(imax, imin);
            continue;
        }
        for j in 0..n {
            consider(imax, j);
            consider(imin, j);
        }
        let mut lag = 1;
        while lag < n {
            for i in 0..n - lag {
                consider(i, i + lag);
            }
            lag *= 2;
        }
        for _ in 0..sample_pairs {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            consider(i, j);
        }
    }
    Ok(HolderReport {
        pass: worst <= 1.0 + tol,
        worst_ratio: worst,
        witness,
    })
}

fn extremes(d: &[f64]) -> (usize, usize) {
    let mut imax = 0;
    let mut imin = 0;
    for (i, v) in d.iter().enumerate() {
        if *v > d[imax] {
            imax = i;
        }
        if *v < d[imin] {
            imin = i;
        }
    }
    (imax, imin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{
        make_bump_instance, make_piecewise, make_trig, Assignment, BumpParams, NoiseModel,
        PiecewiseSpec, Segment, TrigParams,
    };

    fn linear(c: f64, t: usize) -> EnvironmentModel {
        // Arm 1 gap equals c * t / T.
        let means: Vec<f64> = (1..=t)
            .flat_map(|s| [1.0, 1.0 - c * s as f64 / t as f64])
            .collect();
        EnvironmentModel::from_dense(2, t, means, NoiseModel::Deterministic).unwrap()
    }

    #[test]
    fn stationary_env_has_flat_derivatives() {
        let spec = PiecewiseSpec::new(
            vec![Segment {
                length: 500,
                gaps: vec![0.0, 0.2],
            }],
            0.9,
        );
        let env = make_piecewise(spec, NoiseModel::Bernoulli).unwrap();
        assert_eq!(holder_coefficient(&env, 1, 1, 1000).unwrap(), 0.0);
        let r = verify_holder(&env, 0.7, 1e-3, 100, 0.0).unwrap();
        assert!(r.pass);
        assert_eq!(r.worst_ratio, 0.0);
        assert!(r.witness.is_none());
    }

    #[test]
    fn linear_gap_slope_is_recovered() {
        let env = linear(0.4, 2000);
        let c = holder_coefficient(&env, 1, 1, 2000).unwrap();
        assert!((c - 0.4).abs() < 1e-9, "{c}");
    }

    #[test]
    fn trig_first_derivative_peak() {
        let p = TrigParams::new(0.3, 2.0, 0.5, 1_000_000);
        let env = make_trig(p, NoiseModel::Bernoulli).unwrap();
        let expect = 2.0 * std::f64::consts::PI * 2.0 * 0.3;
        let c = (0..2)
            .map(|a| holder_coefficient(&env, a, 1, 10_000).unwrap())
            .fold(0.0, f64::max);
        assert!((c - expect).abs() / expect < 1e-3, "{c} vs {expect}");
    }

    #[test]
    fn stencil_needs_room() {
        let env = linear(0.1, 10);
        assert!(holder_coefficient(&env, 1, 3, 4).is_err());
    }

    #[test]
    fn step_gap_fails_with_straddling_witness() {
        let t = 1000;
        let spec = PiecewiseSpec::new(
            vec![
                Segment {
                    length: t / 2,
                    gaps: vec![0.0, 0.0],
                },
                Segment {
                    length: t / 2,
                    gaps: vec![0.0, 0.5],
                },
            ],
            1.0,
        );
        let env = make_piecewise(spec, NoiseModel::Bernoulli).unwrap();
        let r = verify_holder(&env, 1.0 + 1e-9, 0.4 * t as f64, 50, 0.0).unwrap();
        assert!(!r.pass, "{r:?}");
        let w = r.witness.unwrap();
        assert_eq!(w.arm, 1);
        assert!(w.x <= 0.501 && w.x_prime >= 0.5, "{w:?}");
    }

    #[test]
    fn bump_instances_pass_with_factor_two() {
        for &beta in &[0.5, 1.0, 1.5, 2.0] {
            let p = BumpParams::new(beta, 3.0, 2, 20_000).with_assignment(Assignment::RoundRobin);
            let env = make_bump_instance(p, NoiseModel::Bernoulli).unwrap();
            let r = verify_holder(&env, beta, 2.0 * 3.0, 500, 0.0).unwrap();
            assert!(r.pass, "beta={beta}: {r:?}");
        }
    }
}
