//! Simulation and analysis toolkit for smooth non-stationary multi-armed bandits.
//!
//! The crate is organised around four layers:
//!
//! - [`env`]: bandit environments (trigonometric, bump-function and
//!   piecewise-stationary generators, CSV loading) plus numerical Hölder
//!   verification of their gap functions.
//! - [`shift_oracle`]: ground-truth quantities computed from a fully known gap
//!   matrix: significant shifts, eviction times, safe-arm certificates and the
//!   closed-form regret rates.
//! - [`policies`]: the META meta-elimination learner, randomized successive
//!   elimination, a uniform baseline and a shift-oracle restart policy.
//! - [`harness`]: replicated simulation driver, exact dynamic regret and
//!   export of plot-ready curves.
//!
//! Conventions: rounds are 1-based (`1..=T`, with `T + 1` used as the
//! "never" sentinel); arms are 0-based inside the library and 1-based in
//! every file format.

mod arms;
pub mod config;
pub mod env;
pub mod error;
pub mod harness;
pub mod policies;
pub mod rng;
pub mod shift_oracle;

pub use config::{EnvSpec, PolicySpec, RunConfig};
pub use env::{EnvironmentModel, NoiseModel};
pub use error::{Error, Result};
pub use harness::{run_many, RegretAggregate};
pub use policies::{PolicyTrace, TraceEvent};
pub use shift_oracle::{EvictionTrace, RateParams, ScanMode, ShiftProfile};
