//! `t,arm,mean` CSV import and export.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{EnvironmentModel, NoiseModel};
use crate::error::{Error, Result};

/// Load a dense environment from a `t,arm,mean` file (1-based rounds and arms).
///
/// Every `(t, arm)` pair for `t` in `1..=T` and `arm` in `1..=K` must appear
/// exactly once. Row numbers in errors are file line numbers.
pub fn load_csv(path: impl AsRef<Path>, noise: NoiseModel) -> Result<EnvironmentModel> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let header = rdr.headers().map_err(|e| Error::Parse {
        row: 1,
        message: e.to_string(),
    })?;
    if header.iter().collect::<Vec<_>>() != ["t", "arm", "mean"] {
        return Err(Error::Parse {
            row: 1,
            message: format!(
                "expected header `t,arm,mean`, found `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut cells: Vec<(usize, usize, f64, usize)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            row: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let row = rec.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize, name: &str| {
            rec.get(i)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| Error::Parse {
                    row,
                    message: format!("missing `{name}` field"),
                })
        };
        let t: usize = field(0, "t")?.parse().map_err(|e| Error::Parse {
            row,
            message: format!("bad round: {e}"),
        })?;
        let a: usize = field(1, "arm")?.parse().map_err(|e| Error::Parse {
            row,
            message: format!("bad arm: {e}"),
        })?;
        let m: f64 = field(2, "mean")?.parse().map_err(|e| Error::Parse {
            row,
            message: format!("bad mean: {e}"),
        })?;
        if t == 0 || a == 0 {
            return Err(Error::Parse {
                row,
                message: "rounds and arms are 1-based".into(),
            });
        }
        if !m.is_finite() {
            return Err(Error::Parse {
                row,
                message: format!("non-finite mean `{m}`"),
            });
        }
        cells.push((t, a, m, row));
    }
    if cells.is_empty() {
        return Err(Error::Parse {
            row: 2,
            message: "no data rows".into(),
        });
    }
    let horizon = cells.iter().map(|c| c.0).max().unwrap();
    let arms = cells.iter().map(|c| c.1).max().unwrap();

    let mut means = vec![f64::NAN; arms * horizon];
    let mut seen = vec![false; arms * horizon];
    let mut round_seen = vec![false; horizon];
    for &(t, a, m, row) in &cells {
        let i = (t - 1) * arms + (a - 1);
        if seen[i] {
            return Err(Error::Parse {
                row,
                message: format!("duplicate cell (t={t}, arm={a})"),
            });
        }
        seen[i] = true;
        round_seen[t - 1] = true;
        means[i] = m;
    }
    if let Some(t) = round_seen.iter().position(|s| !s) {
        return Err(Error::Parse {
            row: t * arms + 2,
            message: format!("non-contiguous rounds: round {} is absent", t + 1),
        });
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        let (t, a) = (i / arms + 1, i % arms + 1);
        return Err(Error::Parse {
            row: i + 2,
            message: format!("missing cell (t={t}, arm={a})"),
        });
    }
    EnvironmentModel::from_dense(arms, horizon, means, noise)
}

pub(super) fn write_csv(env: &EnvironmentModel, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "t,arm,mean").map_err(io)?;
    let mut row = vec![0.0; env.arms()];
    for t in 1..=env.horizon() {
        env.means_into(t, &mut row);
        for (a, m) in row.iter().enumerate() {
            writeln!(w, "{t},{},{m}", a + 1).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}
