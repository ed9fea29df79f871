//! Replicated simulation: exact dynamic regret, aggregation over seeds and
//! plot-ready export.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{PolicySpec, RunConfig};
use crate::env::EnvironmentModel;
use crate::error::{Error, Result};
use crate::policies::{
    run_meta, run_oracle_restart, run_random, run_se_safe, PolicyTrace, TraceEvent,
};
use crate::rng::replication_seed;
use crate::shift_oracle::{minimax_rate, significant_shifts, RateParams, ScanMode, ShiftProfile};

/// Mean and sample standard deviation of cumulative regret at each checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretAggregate {
    pub checkpoints: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    #[serde(rename = "R")]
    pub replications: usize,
}

/// `sum_{s<=t} delta_s(pi_s)` for every `t`.
pub fn dynamic_regret(trace: &PolicyTrace, env: &EnvironmentModel) -> Result<Vec<f64>> {
    if trace.horizon() != env.horizon() {
        return Err(Error::LengthMismatch {
            expected: env.horizon(),
            found: trace.horizon(),
        });
    }
    let k = env.arms();
    if let Some(a) = trace.pulls.iter().find(|&&a| a as usize >= k) {
        return Err(Error::OutOfRange {
            what: "arm",
            index: *a as usize,
            valid: format!("0..{k}"),
        });
    }
    let mut row = vec![0.0; k];
    let mut acc = 0.0;
    Ok(trace
        .pulls
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            env.gaps_into(i + 1, &mut row);
            acc += row[a as usize];
            acc
        })
        .collect())
}

/// Regret at each checkpoint without keeping the full curve.
fn regret_at(
    trace: &PolicyTrace,
    env: &EnvironmentModel,
    checkpoints: &[usize],
) -> Result<Vec<f64>> {
    let curve = dynamic_regret(trace, env)?;
    Ok(checkpoints.iter().map(|&c| curve[c - 1]).collect())
}

/// Everything a finished [`run_many`] produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub aggregate: RegretAggregate,
    /// Policy events per replication, in replication order.
    pub events: Vec<Vec<TraceEvent>>,
    /// Shift profile computed for the oracle-restart policy.
    pub profile: Option<ShiftProfile>,
}

/// Run every replication of `config` on the current rayon pool.
pub fn run_many(config: &RunConfig) -> Result<RegretAggregate> {
    run_many_detailed(config).map(|o| o.aggregate)
}

/// [`run_many`] on a dedicated pool of `workers` threads. Output does not
/// depend on `workers`.
pub fn run_many_with_workers(config: &RunConfig, workers: usize) -> Result<RunOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_many_detailed(config))
}

/// Replication `r` runs with seed [`replication_seed`]`(masterSeed, r)`;
/// results are folded in replication order.
pub fn run_many_detailed(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let env = config.build_env()?;
    let checkpoints = config.resolved_checkpoints();
    let profile = match &config.policy {
        PolicySpec::OracleRestart(_) => Some(significant_shifts(&env, ScanMode::Exact)),
        _ => None,
    };
    let external = match &config.policy {
        PolicySpec::External { path } => Some(PolicyTrace::read_csv(path, env.arms())?),
        _ => None,
    };

    let runs: Vec<Result<(Vec<f64>, Vec<TraceEvent>)>> = (0..config.replications)
        .into_par_iter()
        .map(|r| {
            let seed = replication_seed(config.master_seed, r as u64);
            let trace = match &config.policy {
                PolicySpec::Meta(c) => run_meta(&env, c, seed)?,
                PolicySpec::Se(c) => run_se_safe(&env, c, seed)?.0,
                PolicySpec::Rand => run_random(&env, seed),
                PolicySpec::OracleRestart(c) => {
                    run_oracle_restart(&env, profile.as_ref().unwrap(), c, seed)?
                }
                PolicySpec::External { .. } => external.clone().unwrap(),
            };
            let curve = regret_at(&trace, &env, &checkpoints)?;
            let events = if config.events {
                trace.events
            } else {
                Vec::new()
            };
            Ok((curve, events))
        })
        .collect();

    let mut curves = Vec::with_capacity(runs.len());
    let mut events = Vec::with_capacity(runs.len());
    for (r, run) in runs.into_iter().enumerate() {
        let (c, e) = run.map_err(|e| Error::Replication {
            index: r,
            source: Box::new(e),
        })?;
        curves.push(c);
        events.push(e);
    }
    Ok(RunOutput {
        aggregate: aggregate(checkpoints, &curves),
        events,
        profile,
    })
}

/// Pointwise mean and sample standard deviation (`n - 1`; zero when `n = 1`).
/// Values are centred on the first curve, so identical curves give exactly
/// their common value and zero spread.
pub fn aggregate(checkpoints: Vec<usize>, curves: &[Vec<f64>]) -> RegretAggregate {
    let n = curves.len();
    let mut mean = vec![0.0; checkpoints.len()];
    let mut std = vec![0.0; checkpoints.len()];
    for i in 0..checkpoints.len() {
        let pivot = curves[0][i];
        let dm = curves.iter().map(|c| c[i] - pivot).sum::<f64>() / n as f64;
        mean[i] = pivot + dm;
        if n > 1 {
            let ss: f64 = curves.iter().map(|c| (c[i] - pivot - dm).powi(2)).sum();
            std[i] = (ss / (n - 1) as f64).sqrt();
        }
    }
    RegretAggregate {
        checkpoints,
        mean,
        std,
        replications: n,
    }
}

/// A named reference curve sampled at checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCurve {
    pub label: String,
    pub values: Vec<f64>,
}

/// The minimax rate with `T` replaced by `t` for each `(beta, lambda)`, and
/// `sqrt((L + 1) K t)`. Every curve is 0 at `t = 0`.
pub fn reference_curves(
    arms: usize,
    checkpoints: &[usize],
    shifts: usize,
    classes: &[(f64, f64)],
) -> Vec<ReferenceCurve> {
    let mut out: Vec<ReferenceCurve> = classes
        .iter()
        .map(|&(beta, lambda)| ReferenceCurve {
            label: format!("minimax_beta{beta}_lambda{lambda}"),
            values: checkpoints
                .iter()
                .map(|&t| {
                    if t == 0 {
                        0.0
                    } else {
                        minimax_rate(&RateParams {
                            beta,
                            lambda,
                            arms,
                            horizon: t,
                        })
                    }
                })
                .collect(),
        })
        .collect();
    out.push(ReferenceCurve {
        label: format!("sqrt_{}Kt", shifts + 1),
        values: checkpoints
            .iter()
            .map(|&t| ((shifts + 1) as f64 * arms as f64 * t as f64).sqrt())
            .collect(),
    });
    out
}

/// `checkpoint,mean,std` with shortest round-trip float formatting.
pub fn export_csv(agg: &RegretAggregate, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "checkpoint,mean,std").map_err(io)?;
    for i in 0..agg.checkpoints.len() {
        writeln!(w, "{},{},{}", agg.checkpoints[i], agg.mean[i], agg.std[i]).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Inverse of [`export_csv`]; `R` is not stored in the file and comes back as 0.
pub fn load_aggregate_csv(path: impl AsRef<Path>) -> Result<RegretAggregate> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut agg = RegretAggregate {
        checkpoints: vec![],
        mean: vec![],
        std: vec![],
        replications: 0,
    };
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let row = i + 1;
        if i == 0 {
            if line != "checkpoint,mean,std" {
                return Err(Error::Parse {
                    row,
                    message: "expected header `checkpoint,mean,std`".into(),
                });
            }
            continue;
        }
        let bad = |m: String| Error::Parse { row, message: m };
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 3 {
            return Err(bad(format!("expected 3 cells, found {}", cells.len())));
        }
        agg.checkpoints
            .push(cells[0].parse().map_err(|e| bad(format!("{e}")))?);
        agg.mean
            .push(cells[1].parse().map_err(|e| bad(format!("{e}")))?);
        agg.std
            .push(cells[2].parse().map_err(|e| bad(format!("{e}")))?);
    }
    Ok(agg)
}

/// Reference curves next to their checkpoints: `checkpoint,<label>,...`.
pub fn export_reference_csv(
    checkpoints: &[usize],
    curves: &[ReferenceCurve],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    write!(w, "checkpoint").map_err(io)?;
    for c in curves {
        write!(w, ",{}", c.label).map_err(io)?;
    }
    writeln!(w).map_err(io)?;
    for (i, t) in checkpoints.iter().enumerate() {
        write!(w, "{t}").map_err(io)?;
        for c in curves {
            write!(w, ",{}", c.values[i]).map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Pretty JSON with a trailing newline.
pub fn export_json<T: Serialize + ?Sized>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// One JSON object per event, tagged with its replication index.
pub fn export_events_jsonl(events: &[Vec<TraceEvent>], path: impl AsRef<Path>) -> Result<()> {
    #[derive(Serialize)]
    struct Line<'a> {
        replication: usize,
        #[serde(flatten)]
        event: &'a TraceEvent,
    }
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    for (r, evs) in events.iter().enumerate() {
        for e in evs {
            serde_json::to_writer(
                &mut w,
                &Line {
                    replication: r,
                    event: e,
                },
            )?;
            writeln!(w).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}
