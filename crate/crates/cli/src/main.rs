//! `sigshift`: environments, shift oracles, rates and replicated runs from
//! the command line.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use sigshift_core::config::Generator;
use sigshift_core::env::{verify_holder_on_grid, DEFAULT_GRID};
use sigshift_core::harness::{
    export_csv, export_events_jsonl, export_json, export_reference_csv, reference_curves,
    run_many_with_workers,
};
use sigshift_core::shift_oracle::{
    eviction_times, gap_dependent_rate, minimax_rate, phase_rate, phase_transition_classify,
    restarting_oracle_rate, significant_shifts, upper_bound_ratio,
};
use sigshift_core::{EnvSpec, EnvironmentModel, Error, RateParams, RunConfig, ScanMode};

#[derive(Parser)]
#[command(
    name = "sigshift",
    version,
    about = "Smooth non-stationary bandit toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct EnvArgs {
    /// Environment config (TOML/JSON `{kind, ..., noise}`) or a `t,arm,mean` CSV file.
    #[arg(long)]
    env: PathBuf,
    /// Horizon for generators whose config leaves `T` out.
    #[arg(long = "T")]
    horizon: Option<usize>,
}

#[derive(clap::Args, Clone)]
struct OutArg {
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a replicated experiment and write aggregate.csv, config.echo.json
    /// and (optionally) events.jsonl and reference.csv into `--out`.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long, default_value = "run")]
        out: PathBuf,
        /// Override the config's masterSeed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = "SIGSHIFT_WORKERS")]
        workers: Option<usize>,
        /// Scan mode for the shift count behind the reference curves.
        #[arg(long, default_value = "dyadic")]
        mode: ScanMode,
        /// Extra minimax reference curve for class `beta,lambda` (repeatable).
        #[arg(long = "class", value_parser = parse_class)]
        classes: Vec<(f64, f64)>,
        /// Skip the shift scan and reference.csv.
        #[arg(long)]
        no_reference: bool,
    },
    /// Significant shifts of an environment as JSON.
    Shifts {
        #[command(flatten)]
        env: EnvArgs,
        #[arg(long, default_value = "exact")]
        mode: ScanMode,
        #[command(flatten)]
        out: OutArg,
    },
    /// Closed-form rates; with `--env`, also the phase rate of its shifts.
    Rates {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long = "K", required_unless_present = "env")]
        arms: Option<usize>,
        #[arg(long = "T")]
        horizon: Option<usize>,
        #[arg(long)]
        env: Option<PathBuf>,
        #[arg(long, default_value = "exact")]
        mode: ScanMode,
        #[command(flatten)]
        out: OutArg,
    },
    /// Materialize an environment to `t,arm,mean` CSV.
    GenEnv {
        #[command(flatten)]
        env: EnvArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Finite-difference Hölder check of every gap function.
    VerifyHolder {
        #[command(flatten)]
        env: EnvArgs,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 0.0)]
        tol: f64,
        /// Random pairs checked on top of the structured ones.
        #[arg(long, default_value_t = 10_000)]
        pairs: usize,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Safe-environment certificate from numerical Hölder coefficients.
    Classify {
        #[command(flatten)]
        env: EnvArgs,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Greedy eviction times as JSON.
    Evict {
        #[command(flatten)]
        env: EnvArgs,
        #[arg(long = "C2", alias = "c2", default_value_t = 1.0)]
        c2: f64,
        #[arg(long, default_value = "exact")]
        mode: ScanMode,
        #[command(flatten)]
        out: OutArg,
    },
}

fn parse_class(s: &str) -> Result<(f64, f64), String> {
    let (b, l) = s.split_once(',').ok_or("expected `beta,lambda`")?;
    let beta: f64 = b.trim().parse().map_err(|e| format!("beta: {e}"))?;
    let lambda: f64 = l.trim().parse().map_err(|e| format!("lambda: {e}"))?;
    Ok((beta, lambda))
}

/// Failure with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

/// 2 for invalid configuration, 3 for generator rejections, 1 otherwise.
fn exit_code(e: &Error) -> u8 {
    if e.is_generator_rejection() {
        return 3;
    }
    match e {
        Error::Replication { source, .. } => exit_code(source),
        Error::InvalidParameter(_)
        | Error::OutOfRange { .. }
        | Error::LengthMismatch { .. }
        | Error::Parse { .. }
        | Error::UnknownPolicy(_)
        | Error::Json(_)
        | Error::Toml(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Simulate {
            config,
            out,
            seed,
            workers,
            mode,
            classes,
            no_reference,
        } => simulate(&config, &out, seed, workers, mode, &classes, no_reference),
        Command::Shifts { env, mode, out } => {
            let spec = load_env(&env)?;
            echo("shifts", json!({ "env": spec, "mode": mode }));
            let env = spec.build()?;
            emit(&significant_shifts(&env, mode), &out)
        }
        Command::Rates {
            beta,
            lambda,
            arms,
            horizon,
            env,
            mode,
            out,
        } => rates(beta, lambda, arms, horizon, env, mode, &out),
        Command::GenEnv { env, out } => {
            let spec = load_env(&env)?;
            echo("gen-env", json!({ "env": spec, "out": out }));
            spec.build()?.write_csv(&out)?;
            Ok(())
        }
        Command::VerifyHolder {
            env,
            beta,
            lambda,
            tol,
            pairs,
            grid,
            seed,
            out,
        } => {
            let spec = load_env(&env)?;
            echo(
                "verify-holder",
                json!({ "env": spec, "beta": beta, "lambda": lambda, "tol": tol,
                        "pairs": pairs, "grid": grid, "seed": seed }),
            );
            let env = spec.build()?;
            emit(
                &verify_holder_on_grid(&env, beta, lambda, pairs, tol, grid, seed)?,
                &out,
            )
        }
        Command::Classify {
            env,
            beta,
            grid,
            out,
        } => {
            let spec = load_env(&env)?;
            echo(
                "classify",
                json!({ "env": spec, "beta": beta, "grid": grid }),
            );
            let env = spec.build()?;
            emit(&phase_transition_classify(&env, beta, grid)?, &out)
        }
        Command::Evict { env, c2, mode, out } => {
            let spec = load_env(&env)?;
            echo("evict", json!({ "env": spec, "C2": c2, "mode": mode }));
            let env = spec.build()?;
            let trace = eviction_times(&env, c2, mode)?;
            if let Ok(rate) = gap_dependent_rate(&env, &trace) {
                eprintln!("gap-dependent rate: {rate}");
            }
            emit(&trace, &out)
        }
    }
}

fn load_env(args: &EnvArgs) -> Result<EnvSpec, Failure> {
    let is_csv = args
        .env
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let spec = if is_csv {
        EnvSpec {
            generator: Generator::Csv {
                path: args.env.clone(),
            },
            noise: Default::default(),
        }
    } else {
        EnvSpec::from_path(&args.env)?
    };
    Ok(match args.horizon {
        Some(t) => spec.with_horizon(t)?,
        None => spec,
    })
}

/// Print the resolved invocation to stderr as one JSON line.
fn echo(command: &str, mut resolved: serde_json::Value) {
    resolved["command"] = json!(command);
    eprintln!("{resolved}");
}

fn emit<T: Serialize>(value: &T, out: &OutArg) -> Result<(), Failure> {
    match &out.out {
        Some(path) => export_json(value, path)?,
        None => {
            let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}").map_err(|e| Error::io("<stdout>", e))?;
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn rates(
    beta: f64,
    lambda: f64,
    arms: Option<usize>,
    horizon: Option<usize>,
    env: Option<PathBuf>,
    mode: ScanMode,
    out: &OutArg,
) -> Result<(), Failure> {
    let Some(path) = env else {
        let Some(horizon) = horizon else {
            return Err(Error::invalid("rates needs --T or --env").into());
        };
        let p = RateParams::new(beta, lambda, arms.unwrap_or(0), horizon)?;
        echo(
            "rates",
            json!({ "beta": beta, "lambda": lambda, "K": p.arms, "T": horizon }),
        );
        return emit(&json!({ "minimax": minimax_rate(&p) }), out);
    };
    let spec = load_env(&EnvArgs { env: path, horizon })?;
    echo(
        "rates",
        json!({ "env": spec, "beta": beta, "lambda": lambda, "mode": mode }),
    );
    let env = spec.build()?;
    if arms.is_some_and(|k| k != env.arms()) {
        return Err(Error::invalid(format!(
            "--K disagrees with the environment's K = {}",
            env.arms()
        ))
        .into());
    }
    let p = RateParams::new(beta, lambda, env.arms(), env.horizon())?;
    let profile = significant_shifts(&env, mode);
    let mut report = json!({
        "minimax": minimax_rate(&p),
        "K": env.arms(),
        "T": env.horizon(),
        "shifts": profile.count(),
        "phaseRate": phase_rate(&profile),
        "upperBoundRatio": upper_bound_ratio(&profile, &p),
    });
    if let Some(pw) = env.piecewise_spec() {
        report["restartingOracleRate"] = json!(restarting_oracle_rate(pw, env.horizon()));
    }
    emit(&report, out)
}

fn simulate(
    config: &Path,
    out: &Path,
    seed: Option<u64>,
    workers: Option<usize>,
    mode: ScanMode,
    classes: &[(f64, f64)],
    no_reference: bool,
) -> Result<(), Failure> {
    let mut cfg = RunConfig::from_path(config)?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    cfg.validate()?;
    let resolved = cfg.resolved();
    echo(
        "simulate",
        serde_json::to_value(&resolved).map_err(Error::from)?,
    );
    let workers = workers
        .filter(|&w| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));

    let output = run_many_with_workers(&resolved, workers)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    export_json(&resolved, out.join("config.echo.json"))?;
    export_csv(&output.aggregate, out.join("aggregate.csv"))?;
    if resolved.events {
        export_events_jsonl(&output.events, out.join("events.jsonl"))?;
    }
    if !no_reference {
        let env: EnvironmentModel = resolved.build_env()?;
        let profile = significant_shifts(&env, mode);
        let curves = reference_curves(
            env.arms(),
            &output.aggregate.checkpoints,
            profile.count(),
            classes,
        );
        export_reference_csv(
            &output.aggregate.checkpoints,
            &curves,
            out.join("reference.csv"),
        )?;
        export_json(&profile, out.join("profile.json"))?;
    }
    let last = output.aggregate.mean.len() - 1;
    eprintln!(
        "final regret: mean {} std {} (R = {})",
        output.aggregate.mean[last], output.aggregate.std[last], output.aggregate.replications
    );
    Ok(())
}
