use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where an eviction happened.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Local,
    Global,
}

/// Timestamped policy event. Arms are 0-based in memory and 1-based on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event")]
pub enum TraceEvent {
    ReplayStart {
        round: usize,
        m: usize,
    },
    Eviction {
        round: usize,
        #[serde(with = "crate::arms::one_based")]
        arm: usize,
        scope: Scope,
    },
    EpisodeRestart {
        round: usize,
    },
}

/// Pulled arm and observed reward for every round, plus events.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolicyTrace {
    /// 0-based arm pulled at round `t` is `pulls[t - 1]`.
    pub pulls: Vec<u32>,
    pub rewards: Vec<f64>,
    pub events: Vec<TraceEvent>,
}

impl PolicyTrace {
    pub fn with_capacity(horizon: usize) -> Self {
        Self {
            pulls: Vec::with_capacity(horizon),
            rewards: Vec::with_capacity(horizon),
            events: Vec::new(),
        }
    }

    pub fn horizon(&self) -> usize {
        self.pulls.len()
    }

    #[inline]
    pub(crate) fn record(&mut self, arm: usize, reward: f64) {
        self.pulls.push(arm as u32);
        self.rewards.push(reward);
    }

    /// 64-bit FNV-1a over pulls, reward bits and events.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for b in bytes {
                h ^= *b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01B3);
            }
        };
        for (a, y) in self.pulls.iter().zip(&self.rewards) {
            eat(&a.to_le_bytes());
            eat(&y.to_bits().to_le_bytes());
        }
        for e in &self.events {
            eat(serde_json::to_string(e).unwrap().as_bytes());
        }
        h
    }

    /// `round,arm,reward` with 1-based arms.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |e| Error::io(path, e);
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        writeln!(w, "round,arm,reward").map_err(io)?;
        for (i, (a, y)) in self.pulls.iter().zip(&self.rewards).enumerate() {
            writeln!(w, "{},{},{y}", i + 1, a + 1).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    /// Events as a JSON array.
    pub fn write_events(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer_pretty(BufWriter::new(f), &self.events)?;
        Ok(())
    }

    /// Read a `round,arm,reward` file; rounds must run `1, 2, ...` and arms
    /// must lie in `1..=arms`.
    pub fn read_csv(path: impl AsRef<Path>, arms: usize) -> Result<Self> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut trace = PolicyTrace::default();
        for (i, line) in BufReader::new(f).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let row = i + 1;
            if i == 0 {
                if line.trim() != "round,arm,reward" {
                    return Err(Error::Parse {
                        row,
                        message: "expected header `round,arm,reward`".into(),
                    });
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = |m: String| Error::Parse { row, message: m };
            if cells.len() != 3 {
                return Err(bad(format!("expected 3 cells, found {}", cells.len())));
            }
            let t: usize = cells[0]
                .parse()
                .map_err(|e| bad(format!("bad round: {e}")))?;
            let a: usize = cells[1].parse().map_err(|e| bad(format!("bad arm: {e}")))?;
            let y: f64 = cells[2]
                .parse()
                .map_err(|e| bad(format!("bad reward: {e}")))?;
            if t != trace.pulls.len() + 1 {
                return Err(bad(format!(
                    "expected round {}, found {t}",
                    trace.pulls.len() + 1
                )));
            }
            if a == 0 || a > arms {
                return Err(bad(format!("arm {a} not in 1..={arms}")));
            }
            trace.record(a - 1, y);
        }
        Ok(trace)
    }

    pub fn read_events(path: impl AsRef<Path>) -> Result<Vec<TraceEvent>> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_reader(BufReader::new(f))?)
    }
}
