//! File-producing operations behind the command-line subcommands. Each
//! writes its outputs plus a `manifest.json` into an output directory.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::analytics::SpineSampler;
use crate::config::ConfigFile;
use crate::engine::run;
use crate::error::{invalid, Error, Result};
use crate::io::{self, RunManifest};
use crate::lineage::{reconstruct_lineage, reverse_path, sample_lineage_batch, sample_uniform_alive, Frame, LineagePath};
use crate::pde::{solve_moving_frame, stationary_on_grid, SolverOptions};
use crate::rng;

/// Runs the configured simulation and writes `events.csv`, `traits.csv`,
/// `mass.csv` and `manifest.json`.
pub fn simulate(config: &ConfigFile, out_dir: &Path) -> Result<RunManifest> {
    let sim = config.sim_config();
    sim.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let mut manifest = RunManifest::new("simulate", config.clone());
    let t0 = Instant::now();
    let history = run(&sim)?;
    manifest.timings.insert("run".into(), t0.elapsed().as_secs_f64());
    let t1 = Instant::now();
    manifest.outputs = io::write_history(out_dir, &history)?;
    manifest.timings.insert("write".into(), t1.elapsed().as_secs_f64());
    manifest.extinction_time = history.extinction_time;
    manifest.final_step = Some(history.final_step);
    manifest.outputs.push(io::MANIFEST_JSON.into());
    manifest.write(out_dir)?;
    Ok(manifest)
}

/// Each forward lineage followed by its time reversal.
fn with_reversals(paths: Vec<(usize, LineagePath)>) -> Result<Vec<(usize, LineagePath)>> {
    let mut rows = Vec::with_capacity(2 * paths.len());
    for (id, p) in paths {
        let r = reverse_path(&p)?;
        rows.push((id, p));
        rows.push((id, r));
    }
    Ok(rows)
}

/// Samples `n_samples` individuals uniformly (with replacement) among those
/// alive at the horizon of a `simulate` output and writes their lineages,
/// forward and reversed, to `lineages.csv`.
pub fn lineages_from_run(
    run_dir: &Path,
    out_dir: &Path,
    n_samples: usize,
    frame: Frame,
    seed: Option<u64>,
) -> Result<RunManifest> {
    if n_samples == 0 {
        return Err(invalid("n_samples", "must be >= 1"));
    }
    let run_manifest = RunManifest::read(run_dir)?;
    let history = io::read_history(run_dir)?;
    let seed = seed.unwrap_or(history.config.seed);
    let mut r = rng::stream(seed, rng::SAMPLE_KEY);
    let mut paths = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let id = sample_uniform_alive(&history, &mut r)?;
        paths.push((i, reconstruct_lineage(&history, id, frame)?));
    }
    std::fs::create_dir_all(out_dir)?;
    let mut manifest = RunManifest::new("lineages", run_manifest.config);
    manifest.seed = seed;
    manifest.outputs = vec![io::write_file(out_dir, io::LINEAGES_CSV, |w| {
        io::write_lineages(w, &with_reversals(paths)?)
    })?];
    write_sub_manifest(out_dir, run_dir, manifest)
}

/// Runs `replicates` independent copies of the configuration and writes
/// one uniformly sampled lineage per surviving run (`sample_id` is the
/// replicate index).
pub fn lineages_batch(config: &ConfigFile, replicates: usize, frame: Frame, out_dir: &Path) -> Result<RunManifest> {
    if replicates == 0 {
        return Err(invalid("replicates", "must be >= 1"));
    }
    let t0 = Instant::now();
    let batch = sample_lineage_batch(&config.sim_config(), replicates, frame)?;
    if batch.paths.is_empty() {
        return Err(Error::ExtinctAtT {
            extinction_time: config.horizon,
        });
    }
    std::fs::create_dir_all(out_dir)?;
    let mut manifest = RunManifest::new("lineages", config.clone());
    manifest.timings.insert("runs".into(), t0.elapsed().as_secs_f64());
    manifest.outputs = vec![io::write_file(out_dir, io::LINEAGES_CSV, |w| {
        io::write_lineages(w, &with_reversals(batch.paths)?)
    })?];
    manifest.outputs.push(io::MANIFEST_JSON.into());
    manifest.write(out_dir)?;
    Ok(manifest)
}

// The lineage manifest must not overwrite the run's own manifest.
fn write_sub_manifest(out_dir: &Path, run_dir: &Path, mut manifest: RunManifest) -> Result<RunManifest> {
    let same_dir = out_dir.canonicalize()? == run_dir.canonicalize()?;
    if same_dir {
        let path = out_dir.join("lineages_manifest.json");
        manifest.outputs.push("lineages_manifest.json".into());
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    } else {
        manifest.outputs.push(io::MANIFEST_JSON.into());
        manifest.write(out_dir)?;
    }
    Ok(manifest)
}

/// Closed-form spine exports on the recording grid: marginal curves,
/// `n_paths` exact sample paths and the stationary profile.
pub fn spine(config: &ConfigFile, n_paths: usize, out_dir: &Path) -> Result<RunManifest> {
    let sim = config.sim_config();
    sim.validate()?;
    let params = config.params;
    let horizon = config.horizon;
    let times = sim.recording_times();
    let sampler = SpineSampler::new(&params, horizon, &times)?;
    let paths: Vec<Vec<f64>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| sampler.sample(&mut rng::stream(config.seed, i)))
        .collect();
    let grid = config.grid_or_default();
    std::fs::create_dir_all(out_dir)?;
    let mut manifest = RunManifest::new("spine", config.clone());
    manifest.outputs = vec![
        io::write_file(out_dir, io::SPINE_MARGINALS_CSV, |w| {
            io::write_spine_marginals(w, &params, horizon, &times)
        })?,
        io::write_file(out_dir, io::SPINE_PATHS_CSV, |w| io::write_spine_paths(w, &times, &paths))?,
        io::write_file(out_dir, io::STATIONARY_CSV, |w| io::write_stationary(w, &params, &grid.nodes()))?,
        io::MANIFEST_JSON.into(),
    ];
    manifest.write(out_dir)?;
    Ok(manifest)
}

/// Finite-difference and closed-form grid exports: the stationary profile,
/// the moving-frame solution started from `init_scale` times it, and the
/// mean-offspring table, every `snapshot_interval` time units up to the
/// horizon.
pub fn pde(config: &ConfigFile, init_scale: f64, snapshot_interval: f64, out_dir: &Path) -> Result<RunManifest> {
    config.params.validate()?;
    if !(init_scale.is_finite() && init_scale >= 0.0) {
        return Err(invalid("init_scale", "must be finite and >= 0"));
    }
    let grid = config.grid_or_default();
    grid.validate()?;
    let every = (snapshot_interval / grid.dt).round() as usize;
    if every == 0 {
        return Err(invalid("snapshot_interval", "must be at least one time step"));
    }
    let params = config.params;
    let nodes = grid.nodes();
    let init: Vec<f64> = stationary_on_grid(&params, &grid)
        .into_iter()
        .map(|v| init_scale * v.max(0.0))
        .collect();
    let t0 = Instant::now();
    let opts = SolverOptions {
        snapshot_every: every,
        ..SolverOptions::default()
    };
    let snapshots = solve_moving_frame(&params, &init, config.horizon, &grid, &opts)?;
    let times: Vec<f64> = snapshots.iter().map(|s| s.time).collect();
    std::fs::create_dir_all(out_dir)?;
    let mut manifest = RunManifest::new("pde", config.clone());
    manifest.timings.insert("solve".into(), t0.elapsed().as_secs_f64());
    manifest.outputs = vec![
        io::write_file(out_dir, io::STATIONARY_CSV, |w| io::write_stationary(w, &params, &nodes))?,
        io::write_file(out_dir, io::PDE_CSV, |w| io::write_pde(w, &snapshots))?,
    ];
    if params.persists() {
        manifest.outputs.push(io::write_file(out_dir, io::MEAN_OFFSPRING_CSV, |w| {
            io::write_mean_offspring(w, &params, &times, &nodes)
        })?);
    }
    manifest.outputs.push(io::MANIFEST_JSON.into());
    manifest.write(out_dir)?;
    Ok(manifest)
}
