//! Ancestral lineages reconstructed from a recorded history.
//!
//! A lineage of an individual alive at `T` maps every recording time
//! `t <= T` to the trait of its most recent ancestor alive at `t`. Values
//! exist only on the recording grid; nothing is interpolated.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{replicate_seed, run, Observable, RecordedHistory, SimConfig};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    /// Coordinates relative to the optimum.
    Moving,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Reversed,
}

impl std::fmt::Display for Frame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Frame::Moving => "moving",
            Frame::Fixed => "fixed",
        })
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Direction::Forward => "forward",
            Direction::Reversed => "reversed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineagePath {
    /// `0 = t_0 < ... < t_n = T`; for reversed paths this is reversed time `s`.
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub terminal_id: u32,
    pub frame: Frame,
    pub direction: Direction,
    /// Speed `sigma * c` of the optimum, used for frame conversion.
    pub frame_speed: f64,
}

impl LineagePath {
    pub fn horizon(&self) -> f64 {
        self.grid.last().copied().unwrap_or(0.0)
    }

    pub fn spacing(&self) -> Option<f64> {
        (self.grid.len() >= 2).then(|| self.grid[1] - self.grid[0])
    }

    /// Forward time corresponding to grid index `k`.
    fn forward_time(&self, k: usize) -> f64 {
        match self.direction {
            Direction::Forward => self.grid[k],
            Direction::Reversed => self.grid[self.grid.len() - 1 - k],
        }
    }

    /// Value at forward-time grid index `j`.
    pub fn value_at_forward_index(&self, j: usize) -> f64 {
        match self.direction {
            Direction::Forward => self.values[j],
            Direction::Reversed => self.values[self.values.len() - 1 - j],
        }
    }
}

/// Forward lineage of an individual alive at the horizon, on `[0, T]`.
pub fn reconstruct_lineage(history: &RecordedHistory, id: u32, frame: Frame) -> Result<LineagePath> {
    let last = history.config.n_records() - 1;
    lineage_until(history, id, last, frame)
}

/// Lineage of an individual alive at recording index `cut`, defined on
/// the full grid `[0, T]` and held at its time-`t_cut` value afterwards.
pub fn lineage_until(history: &RecordedHistory, id: u32, cut: usize, frame: Frame) -> Result<LineagePath> {
    let cfg = &history.config;
    let ind = history.get(id)?;
    let n = cfg.n_records();
    let cut_step = cut as u64 * cfg.record_stride();
    if cut >= n || cut_step > history.final_step || !ind.is_alive_at_step(cut_step) {
        return Err(Error::NotAlive {
            id,
            t: cfg.recording_time(cut.min(n - 1)),
        });
    }
    let mut values = vec![f64::NAN; n];
    let mut upper = cut + 1;
    let mut cur = Some(id);
    while let Some(i) = cur {
        let a = history.get(i)?;
        let lo = a.first_record.min(upper);
        for (j, slot) in values.iter_mut().enumerate().take(upper).skip(lo) {
            *slot = a
                .sample_at(j)
                .ok_or_else(|| Error::Malformed(format!("individual {i} has no sample at record {j}")))?;
        }
        upper = lo;
        cur = a.parent_id;
    }
    if upper != 0 {
        return Err(Error::Malformed(format!("lineage of {id} does not reach time 0")));
    }
    let held = values[cut];
    for v in values.iter_mut().skip(cut + 1) {
        *v = held;
    }
    let path = LineagePath {
        grid: cfg.recording_times(),
        values,
        terminal_id: id,
        frame: Frame::Moving,
        direction: Direction::Forward,
        frame_speed: cfg.params.frame_speed(),
    };
    Ok(frame_convert(&path, frame))
}

/// Uniformly random individual among those alive at the horizon.
pub fn sample_uniform_alive<R: Rng + ?Sized>(history: &RecordedHistory, rng: &mut R) -> Result<u32> {
    let alive = history.alive_at_end();
    if alive.is_empty() {
        return Err(Error::ExtinctAtT {
            extinction_time: history.extinction_time.unwrap_or(history.horizon()),
        });
    }
    Ok(alive[rng.random_range(0..alive.len())])
}

/// Time reversal `s -> value at T - s`.
pub fn reverse_path(path: &LineagePath) -> Result<LineagePath> {
    if path.direction == Direction::Reversed {
        return Err(Error::AlreadyReversed);
    }
    Ok(flip(path, Direction::Reversed))
}

/// Inverse of [`reverse_path`].
pub fn restore_forward(path: &LineagePath) -> Result<LineagePath> {
    if path.direction == Direction::Forward {
        return Err(Error::AlreadyForward);
    }
    Ok(flip(path, Direction::Forward))
}

// The recording grid is uniform and starts at 0, so the reflected grid
// `T - t_{n-k}` is the same set of points; only the values are reversed.
fn flip(path: &LineagePath, direction: Direction) -> LineagePath {
    let mut values = path.values.clone();
    values.reverse();
    LineagePath {
        grid: path.grid.clone(),
        values,
        terminal_id: path.terminal_id,
        frame: path.frame,
        direction,
        frame_speed: path.frame_speed,
    }
}

/// Converts between frames: `fixed = moving + sigma c t` in forward time.
pub fn frame_convert(path: &LineagePath, target: Frame) -> LineagePath {
    if path.frame == target {
        return path.clone();
    }
    let sign = match target {
        Frame::Fixed => 1.0,
        Frame::Moving => -1.0,
    };
    let values = path
        .values
        .iter()
        .enumerate()
        .map(|(k, v)| v + sign * path.frame_speed * path.forward_time(k))
        .collect();
    LineagePath {
        values,
        frame: target,
        ..path.clone()
    }
}

/// The historical measure at the horizon: one lineage per alive
/// individual, each weighted `1/K`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoricalMeasure {
    pub weight: f64,
    pub paths: Vec<LineagePath>,
}

impl HistoricalMeasure {
    pub fn total_mass(&self) -> f64 {
        self.weight * self.paths.len() as f64
    }

    /// Lineage values at forward recording index `j`, one per path.
    pub fn marginal(&self, j: usize) -> Vec<f64> {
        self.paths.iter().map(|p| p.value_at_forward_index(j)).collect()
    }

    /// Mass of the time-`t_j` marginal, `weight * #paths` for every `j`.
    pub fn marginal_mass(&self, j: usize) -> f64 {
        self.weight * self.marginal(j).len() as f64
    }

    /// Number of distinct ancestral values at recording index `j`.
    pub fn distinct_ancestors(&self, j: usize) -> usize {
        let mut v = self.marginal(j);
        v.sort_by(f64::total_cmp);
        v.dedup();
        v.len()
    }
}

pub fn historical_measure(history: &RecordedHistory) -> Result<HistoricalMeasure> {
    let alive = history.alive_at_end();
    if alive.is_empty() {
        return Err(Error::ExtinctAtT {
            extinction_time: history.extinction_time.unwrap_or(history.horizon()),
        });
    }
    let paths = alive
        .iter()
        .map(|&id| reconstruct_lineage(history, id, Frame::Moving))
        .collect::<Result<Vec<_>>>()?;
    Ok(HistoricalMeasure {
        weight: 1.0 / history.config.params.carrying_capacity as f64,
        paths,
    })
}

/// `sum over individuals alive at T of phi(lineage value at t_j)`, the
/// branching side of the many-to-one identity. Zero for extinct runs.
pub fn lineage_functional(history: &RecordedHistory, j: usize, observable: Observable) -> Result<f64> {
    history
        .alive_at_end()
        .iter()
        .map(|&id| {
            reconstruct_lineage(history, id, Frame::Moving).map(|p| observable.eval(p.value_at_forward_index(j)))
        })
        .sum()
}

/// One uniformly sampled lineage from each of many independent runs.
#[derive(Debug, Clone, PartialEq)]
pub struct LineageBatch {
    /// `(replicate index, forward lineage)` for every surviving run.
    pub paths: Vec<(usize, LineagePath)>,
    pub extinct_runs: usize,
    pub runs: usize,
}

/// Runs `n_runs` replicates of `config` (replicate `i` uses seed
/// `replicate_seed(config.seed, i)`) in parallel and samples one lineage
/// per surviving run. Results are ordered by replicate index.
pub fn sample_lineage_batch(config: &SimConfig, n_runs: usize, frame: Frame) -> Result<LineageBatch> {
    config.validate()?;
    let results: Vec<Result<Option<LineagePath>>> = (0..n_runs)
        .into_par_iter()
        .map(|i| {
            let cfg = config.clone().with_seed(replicate_seed(config.seed, i as u64));
            let history = run(&cfg)?;
            if history.is_extinct() {
                return Ok(None);
            }
            let id = sample_uniform_alive(&history, &mut rng::stream(cfg.seed, rng::SAMPLE_KEY))?;
            reconstruct_lineage(&history, id, frame).map(Some)
        })
        .collect();
    let mut paths = Vec::with_capacity(n_runs);
    let mut extinct_runs = 0;
    for (i, r) in results.into_iter().enumerate() {
        match r? {
            Some(p) => paths.push((i, p)),
            None => extinct_runs += 1,
        }
    }
    Ok(LineageBatch {
        paths,
        extinct_runs,
        runs: n_runs,
    })
}
