//! Shared fixtures for the benchmarks.

use sigshift_core::env::{
    make_bump_instance, make_piecewise, make_trig, BumpParams, PiecewiseSpec, TrigParams,
};
use sigshift_core::{EnvironmentModel, NoiseModel};

/// The published trigonometric experiment compressed to `horizon` rounds.
pub fn trig(horizon: usize) -> EnvironmentModel {
    make_trig(
        TrigParams::published_scaled(horizon),
        NoiseModel::gaussian(0.001),
    )
    .expect("trig fixture")
}

/// A `(1, 1)`-Hölder bump instance over `K` arms.
pub fn bump(arms: usize, horizon: usize) -> EnvironmentModel {
    make_bump_instance(
        BumpParams::new(1.0, 1.0, arms, horizon),
        NoiseModel::Bernoulli,
    )
    .expect("bump fixture")
}

/// Four equal segments over `K` arms with arm 1 always best.
pub fn piecewise(arms: usize, horizon: usize) -> EnvironmentModel {
    let spec = PiecewiseSpec::uniform(4, horizon / 4, arms, 0.3, 0.9);
    make_piecewise(spec, NoiseModel::Bernoulli).expect("piecewise fixture")
}
