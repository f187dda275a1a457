//! CSV and JSON artifacts. Every float is written with 17 significant
//! digits so values round-trip bit-exactly; column order is fixed.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analytics::{mean_offspring, spine_marginal, stationary_profile, ModelParams};
use crate::config::ConfigFile;
use crate::engine::{Individual, RecordedHistory};
use crate::error::{Error, Result};
use crate::lineage::{Direction, Frame, LineagePath};
use crate::pde::PdeState;

pub const EVENTS_CSV: &str = "events.csv";
pub const TRAITS_CSV: &str = "traits.csv";
pub const MASS_CSV: &str = "mass.csv";
pub const LINEAGES_CSV: &str = "lineages.csv";
pub const MANIFEST_JSON: &str = "manifest.json";
pub const STATIONARY_CSV: &str = "stationary.csv";
pub const MEAN_OFFSPRING_CSV: &str = "mean_offspring.csv";
pub const PDE_CSV: &str = "pde.csv";
pub const SPINE_MARGINALS_CSV: &str = "spine_marginals.csv";
pub const SPINE_PATHS_CSV: &str = "spine_paths.csv";

pub const EVENTS_HEADER: [&str; 5] = ["id", "parent_id", "child_rank", "birth_time", "death_time"];
pub const TRAITS_HEADER: [&str; 3] = ["id", "t", "x_moving"];
pub const MASS_HEADER: [&str; 2] = ["t", "mass"];
pub const LINEAGES_HEADER: [&str; 5] = ["sample_id", "t", "value", "frame", "direction"];
pub const STATIONARY_HEADER: [&str; 2] = ["x", "density"];
pub const MEAN_OFFSPRING_HEADER: [&str; 3] = ["t", "x", "m"];
pub const PDE_HEADER: [&str; 3] = ["t", "x", "f"];
pub const SPINE_MARGINALS_HEADER: [&str; 3] = ["t", "mean", "variance"];
pub const SPINE_PATHS_HEADER: [&str; 3] = ["sample_id", "t", "value"];

pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_float(field: &str) -> Result<f64> {
    field
        .parse()
        .map_err(|_| Error::Malformed(format!("not a number: {field:?}")))
}

fn parse_int<T: std::str::FromStr>(field: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::Malformed(format!("not an integer: {field:?}")))
}

fn reader(path: &Path, header: &[&str]) -> Result<csv::Reader<File>> {
    let mut r = csv::Reader::from_path(path)?;
    let found: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if found != header {
        return Err(Error::Malformed(format!(
            "{}: expected columns {header:?}, found {found:?}",
            path.display()
        )));
    }
    Ok(r)
}

pub fn write_events<W: Write>(w: W, history: &RecordedHistory) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(EVENTS_HEADER)?;
    for ind in &history.individuals {
        out.write_record([
            ind.id.to_string(),
            ind.parent_id.map(|p| p.to_string()).unwrap_or_default(),
            ind.child_rank.to_string(),
            fmt_float(history.config.step_time(ind.birth_step)),
            ind.death_step
                .map(|d| fmt_float(history.config.step_time(d)))
                .unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_traits<W: Write>(w: W, history: &RecordedHistory) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRAITS_HEADER)?;
    for ind in &history.individuals {
        for (k, x) in ind.trait_samples.iter().enumerate() {
            out.write_record([
                ind.id.to_string(),
                fmt_float(history.config.recording_time(ind.first_record + k)),
                fmt_float(*x),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_mass<W: Write>(w: W, history: &RecordedHistory) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(MASS_HEADER)?;
    for (t, m) in history.recording_times().iter().zip(&history.mass_trajectory) {
        out.write_record([fmt_float(*t), fmt_float(*m)])?;
    }
    out.flush()?;
    Ok(())
}

/// One block of rows per path; `t` is forward time for forward paths and
/// reversed time for reversed ones.
pub fn write_lineages<W: Write>(w: W, paths: &[(usize, LineagePath)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(LINEAGES_HEADER)?;
    for (sample_id, p) in paths {
        let frame = p.frame.to_string();
        let direction = p.direction.to_string();
        for (t, v) in p.grid.iter().zip(&p.values) {
            out.write_record([
                sample_id.to_string(),
                fmt_float(*t),
                fmt_float(*v),
                frame.clone(),
                direction.clone(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_stationary<W: Write>(w: W, params: &ModelParams, xs: &[f64]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(STATIONARY_HEADER)?;
    for &x in xs {
        out.write_record([fmt_float(x), fmt_float(stationary_profile(params, x))])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_mean_offspring<W: Write>(w: W, params: &ModelParams, times: &[f64], xs: &[f64]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(MEAN_OFFSPRING_HEADER)?;
    for &t in times {
        for &x in xs {
            out.write_record([fmt_float(t), fmt_float(x), fmt_float(mean_offspring(params, t, x)?)])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_pde<W: Write>(w: W, snapshots: &[PdeState]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(PDE_HEADER)?;
    for s in snapshots {
        for (x, v) in s.grid.nodes().iter().zip(&s.values) {
            out.write_record([fmt_float(s.time), fmt_float(*x), fmt_float(*v)])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_spine_marginals<W: Write>(w: W, params: &ModelParams, horizon: f64, times: &[f64]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SPINE_MARGINALS_HEADER)?;
    for &t in times {
        let law = spine_marginal(params, horizon, t)?;
        out.write_record([fmt_float(t), fmt_float(law.mean), fmt_float(law.variance)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_spine_paths<W: Write>(w: W, grid: &[f64], paths: &[Vec<f64>]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SPINE_PATHS_HEADER)?;
    for (i, p) in paths.iter().enumerate() {
        for (t, v) in grid.iter().zip(p) {
            out.write_record([i.to_string(), fmt_float(*t), fmt_float(*v)])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Writes `name` inside `dir` with `f`, returning the file name.
pub fn write_file<F>(dir: &Path, name: &str, f: F) -> Result<String>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let mut w = BufWriter::new(File::create(dir.join(name))?);
    f(&mut w)?;
    w.flush()?;
    Ok(name.to_owned())
}

/// The three per-run files: events, traits, mass.
pub fn write_history(dir: &Path, history: &RecordedHistory) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    Ok(vec![
        write_file(dir, EVENTS_CSV, |w| write_events(w, history))?,
        write_file(dir, TRAITS_CSV, |w| write_traits(w, history))?,
        write_file(dir, MASS_CSV, |w| write_mass(w, history))?,
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub config: ConfigFile,
    pub seed: u64,
    pub outputs: Vec<String>,
    /// Wall-clock seconds per phase.
    pub timings: BTreeMap<String, f64>,
    #[serde(default)]
    pub extinction_time: Option<f64>,
    #[serde(default)]
    pub final_step: Option<u64>,
}

impl RunManifest {
    pub fn new(command: &str, config: ConfigFile) -> Self {
        Self {
            version: crate::VERSION.to_owned(),
            command: command.to_owned(),
            seed: config.seed,
            config,
            outputs: Vec::new(),
            timings: BTreeMap::new(),
            extinction_time: None,
            final_step: None,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_JSON);
        let mut w = BufWriter::new(File::create(&path)?);
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(path)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        Ok(serde_json::from_reader(File::open(dir.join(MANIFEST_JSON))?)?)
    }
}

/// Rebuilds a recorded history from a `simulate` output directory.
pub fn read_history(dir: &Path) -> Result<RecordedHistory> {
    let manifest = RunManifest::read(dir)?;
    let config = manifest.config.sim_config();
    config.validate()?;
    let h = config.step;
    let stride = config.record_stride();
    let to_step = |t: f64| (t / h).round() as u64;

    let mut individuals: Vec<Individual> = Vec::new();
    for (row, rec) in reader(&dir.join(EVENTS_CSV), &EVENTS_HEADER)?.records().enumerate() {
        let rec = rec?;
        let id: u32 = parse_int(&rec[0])?;
        if id as usize != row {
            return Err(Error::Malformed(format!("events.csv row {row} has id {id}")));
        }
        let birth_step = to_step(parse_float(&rec[3])?);
        individuals.push(Individual {
            id,
            parent_id: if rec[1].is_empty() { None } else { Some(parse_int(&rec[1])?) },
            child_rank: parse_int(&rec[2])?,
            birth_step,
            death_step: if rec[4].is_empty() {
                None
            } else {
                Some(to_step(parse_float(&rec[4])?))
            },
            first_record: birth_step.div_ceil(stride) as usize,
            trait_samples: Vec::new(),
        });
    }
    for rec in reader(&dir.join(TRAITS_CSV), &TRAITS_HEADER)?.records() {
        let rec = rec?;
        let id: u32 = parse_int(&rec[0])?;
        let ind = individuals.get_mut(id as usize).ok_or(Error::UnknownId(id))?;
        let j = (parse_float(&rec[1])? / config.recording_step).round() as usize;
        if j != ind.first_record + ind.trait_samples.len() {
            return Err(Error::Malformed(format!("traits.csv: sample of {id} out of order")));
        }
        ind.trait_samples.push(parse_float(&rec[2])?);
    }
    let mut mass_trajectory = Vec::new();
    for rec in reader(&dir.join(MASS_CSV), &MASS_HEADER)?.records() {
        mass_trajectory.push(parse_float(&rec?[1])?);
    }
    let history = RecordedHistory {
        final_step: manifest.final_step.unwrap_or_else(|| config.total_steps()),
        extinction_time: manifest.extinction_time,
        config,
        individuals,
        mass_trajectory,
    };
    history.check_consistency()?;
    Ok(history)
}

/// Reads `lineages.csv` back into paths, in file order.
pub fn read_lineages(path: &Path) -> Result<Vec<(usize, LineagePath)>> {
    let mut out: Vec<(usize, LineagePath)> = Vec::new();
    for rec in reader(path, &LINEAGES_HEADER)?.records() {
        let rec = rec?;
        let sample_id: usize = parse_int(&rec[0])?;
        let frame = match &rec[3] {
            "moving" => Frame::Moving,
            "fixed" => Frame::Fixed,
            other => return Err(Error::Malformed(format!("unknown frame {other:?}"))),
        };
        let direction = match &rec[4] {
            "forward" => Direction::Forward,
            "reversed" => Direction::Reversed,
            other => return Err(Error::Malformed(format!("unknown direction {other:?}"))),
        };
        let same = out
            .last()
            .is_some_and(|(id, p)| *id == sample_id && p.frame == frame && p.direction == direction);
        if !same {
            out.push((
                sample_id,
                LineagePath {
                    grid: Vec::new(),
                    values: Vec::new(),
                    terminal_id: 0,
                    frame,
                    direction,
                    frame_speed: 0.0,
                },
            ));
        }
        let p = &mut out.last_mut().expect("pushed above").1;
        p.grid.push(parse_float(&rec[1])?);
        p.values.push(parse_float(&rec[2])?);
    }
    if out.is_empty() {
        return Err(Error::Malformed(format!("{}: no lineage rows", path.display())));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02e23, 0.0] {
            assert_eq!(parse_float(&fmt_float(x)).unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(fmt_float(0.05), "5.0000000000000003e-2");
    }
}
