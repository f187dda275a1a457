//! The acceptance suite: every check the model implementation must pass,
//! with measured values and margins. Shared by the `validate` command and
//! the `acceptance` test target.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{
    mean_offspring, spine_covariance, spine_marginal, GaussianLaw, ModelParams, SpineSampler,
};
use crate::commands;
use crate::config::ConfigFile;
use crate::engine::{replicate_seed, run, FeynmanKac, InitialCondition, Mode, Observable, SimConfig};
use crate::error::{invalid, Error, Result};
use crate::lineage::{reverse_path, sample_lineage_batch, Frame, LineageBatch, LineagePath};
use crate::pde::{solve_mean_offspring, solve_moving_frame, stationary_on_grid, GridSpec, SolverOptions};
use crate::quadrature::integrate;
use crate::rng;
use crate::stats::{
    covariance_estimate, gaussian_fit, mass_summary, median, ou_regress, ou_regress_series, quasi_stationary_window,
    McEstimate, OuFit,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    /// Reduced sample sizes for a quick end-to-end check.
    Smoke,
    /// The sample sizes the criteria are stated for.
    Full,
}

impl FromStr for Budget {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smoke" => Ok(Budget::Smoke),
            "full" => Ok(Budget::Full),
            _ => Err(invalid("budget", format!("expected smoke or full, got {s:?}"))),
        }
    }
}

/// Deliberate corruption used to confirm that the suite can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Evaluate the stationary profile with a perturbed `sigma` in the
    /// mass-invariant check.
    Sigma,
}

impl FromStr for Fault {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigma" => Ok(Fault::Sigma),
            _ => Err(invalid("inject_fault", format!("unknown fault {s:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ValidateOptions {
    pub budget: Budget,
    pub seed: u64,
    pub fault: Option<Fault>,
    /// Directory for the files written by the determinism check.
    pub scratch_dir: PathBuf,
}

impl ValidateOptions {
    pub fn new(budget: Budget, scratch_dir: impl Into<PathBuf>) -> Self {
        Self {
            budget,
            seed: 20_240_601,
            fault: None,
            scratch_dir: scratch_dir.into(),
        }
    }

    fn size(&self, full: usize, smoke: usize) -> usize {
        match self.budget {
            Budget::Full => full,
            Budget::Smoke => smoke,
        }
    }

    fn seed_for(&self, criterion: u64) -> u64 {
        rng::derive_seed(self.seed, criterion)
    }
}

/// One measured quantity against its bounds. `margin` is the distance to
/// the nearest bound, negative when violated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub passed: bool,
    pub margin: f64,
}

impl Check {
    fn new(name: impl Into<String>, measured: f64, lower: Option<f64>, upper: Option<f64>) -> Self {
        let lo = lower.map_or(f64::INFINITY, |l| measured - l);
        let hi = upper.map_or(f64::INFINITY, |u| u - measured);
        let margin = lo.min(hi);
        Self {
            name: name.into(),
            measured,
            lower,
            upper,
            passed: measured.is_finite() && margin >= 0.0,
            margin,
        }
    }

    pub fn at_most(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self::new(name, measured, None, Some(limit))
    }

    pub fn at_least(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self::new(name, measured, Some(limit), None)
    }

    pub fn within(name: impl Into<String>, measured: f64, lower: f64, upper: f64) -> Self {
        Self::new(name, measured, Some(lower), Some(upper))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: String,
    pub title: String,
    pub passed: bool,
    pub elapsed_secs: f64,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    /// Set when the criterion could not be evaluated.
    pub error: Option<String>,
}

impl CriterionReport {
    /// `C3 PASS mass invariant (0.01s) worst margin 9.9e-5`
    pub fn summary_line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let worst = self
            .checks
            .iter()
            .min_by(|a, b| a.margin.total_cmp(&b.margin))
            .map(|c| format!("; tightest: {} = {:.4e} (margin {:.3e})", c.name, c.measured, c.margin))
            .unwrap_or_default();
        let err = self.error.as_deref().map(|e| format!("; error: {e}")).unwrap_or_default();
        format!("{} {} {} ({:.1}s){}{}", self.id, status, self.title, self.elapsed_secs, worst, err)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub budget: Budget,
    pub seed: u64,
    pub fault: Option<Fault>,
    pub passed: bool,
    pub elapsed_secs: f64,
    pub criteria: Vec<CriterionReport>,
}

struct Outcome {
    checks: Vec<Check>,
    notes: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            checks: Vec::new(),
            notes: Vec::new(),
        }
    }
}

fn fig1_params() -> ModelParams {
    ModelParams {
        sigma: 0.32,
        c: 1.0,
        carrying_capacity: 250,
    }
}

const LINEAGE_HORIZON: f64 = 20.0;
const MARGINAL_TIMES: [f64; 4] = [5.0, 10.0, 15.0, 19.0];
const MARGINAL_SLACK: f64 = 1.5;

pub const CRITERIA: [(&str, &str); 9] = [
    ("C1", "closed-form mean offspring vs finite-difference solution"),
    ("C2", "many-to-one: branching vs closed form vs Feynman-Kac"),
    ("C3", "mass invariant of the mean offspring against the stationary state"),
    ("C4", "stationary state is stationary for the moving-frame equation"),
    ("C5", "stationary mass in the interacting simulation"),
    ("C6", "spine marginals from sampled lineages"),
    ("C7", "reversed lineages are Ornstein-Uhlenbeck"),
    ("C8", "exact spine sampler moments"),
    ("C9", "identical seeds give byte-identical CSVs"),
];

/// Shared state so the lineage batch for the reference parameters is
/// simulated once for both lineage criteria.
#[derive(Default)]
struct Cache {
    reference_batch: Option<LineageBatch>,
}

fn reference_batch<'a>(opts: &ValidateOptions, cache: &'a mut Cache) -> Result<&'a LineageBatch> {
    if cache.reference_batch.is_none() {
        let cfg = SimConfig::new(fig1_params(), LINEAGE_HORIZON).with_seed(opts.seed_for(6));
        cache.reference_batch = Some(sample_lineage_batch(&cfg, opts.size(500, 100), Frame::Moving)?);
    }
    Ok(cache.reference_batch.as_ref().expect("filled above"))
}

/// Runs every criterion in order. `on_done` is called after each one.
pub fn run_all(opts: &ValidateOptions, mut on_done: impl FnMut(&CriterionReport)) -> Report {
    let start = Instant::now();
    let mut cache = Cache::default();
    let mut criteria = Vec::with_capacity(CRITERIA.len());
    for (k, (id, title)) in CRITERIA.iter().enumerate() {
        let t0 = Instant::now();
        let result = match k + 1 {
            1 => mean_offspring_vs_pde(opts),
            2 => many_to_one(opts),
            3 => mass_invariant(opts),
            4 => stationarity(opts),
            5 => stationary_mass(opts),
            6 => spine_marginals_from_lineages(opts, &mut cache),
            7 => reversed_ou(opts, &mut cache),
            8 => spine_sampler_moments(opts),
            _ => determinism(opts),
        };
        let elapsed_secs = t0.elapsed().as_secs_f64();
        let report = match result {
            Ok(mut out) => {
                match k + 1 {
                    1 => out.checks.push(Check::at_most("runtime_secs", elapsed_secs, 60.0)),
                    2 => out.checks.push(Check::at_most("runtime_secs", elapsed_secs, 300.0)),
                    6 => out.checks.push(Check::at_most("runtime_secs", elapsed_secs, 1200.0)),
                    _ => {}
                }
                CriterionReport {
                    id: id.to_string(),
                    title: title.to_string(),
                    passed: !out.checks.is_empty() && out.checks.iter().all(|c| c.passed),
                    elapsed_secs,
                    checks: out.checks,
                    notes: out.notes,
                    error: None,
                }
            }
            Err(e) => CriterionReport {
                id: id.to_string(),
                title: title.to_string(),
                passed: false,
                elapsed_secs,
                checks: Vec::new(),
                notes: Vec::new(),
                error: Some(e.to_string()),
            },
        };
        on_done(&report);
        criteria.push(report);
    }
    Report {
        version: crate::VERSION.to_owned(),
        budget: opts.budget,
        seed: opts.seed,
        fault: opts.fault,
        passed: criteria.iter().all(|c| c.passed),
        elapsed_secs: start.elapsed().as_secs_f64(),
        criteria,
    }
}

fn mean_offspring_vs_pde(_opts: &ValidateOptions) -> Result<Outcome> {
    let p = fig1_params();
    // the scheme is first order in time; dt = 1e-4 leaves ~1.5e-3 relative error at t = 2
    let grid = GridSpec {
        dt: 2.5e-5,
        ..GridSpec::default_for(&p)
    };
    let every = (0.1 / grid.dt).round() as usize;
    let snapshots = solve_mean_offspring(&p, 2.0, &grid, every)?;
    let nodes = grid.nodes();
    let mut worst: f64 = 0.0;
    for s in &snapshots {
        for (&x, &v) in nodes.iter().zip(&s.values) {
            if (-3.0..=1.0).contains(&x) {
                let exact = mean_offspring(&p, s.time, x)?;
                worst = worst.max((v - exact).abs() / exact);
            }
        }
    }
    let mut out = Outcome::new();
    out.checks.push(Check::at_most("max_relative_error", worst, 1e-3));
    out.notes.push(format!(
        "grid: L = {:.4}, {} cells, dt = {:e}; {} snapshots on t in [0, 2]",
        grid.half_width,
        grid.n_cells,
        grid.dt,
        snapshots.len()
    ));
    Ok(out)
}

fn many_to_one(opts: &ValidateOptions) -> Result<Outcome> {
    let p = fig1_params();
    let lambda = p.lambda();
    let (x0, horizon) = (-1.0, 1.0);
    let n_runs = opts.size(10_000, 2_000);
    let n_paths = opts.size(100_000, 20_000);
    let seed = opts.seed_for(2);
    let base = SimConfig::new(p, horizon)
        .with_mode(Mode::Frozen { lambda })
        .with_init(InitialCondition::PointMass { x0, n0: 1 });
    let counts: Vec<f64> = (0..n_runs as u64)
        .into_par_iter()
        .map(|i| {
            let h = run(&base.clone().with_seed(replicate_seed(seed, i)))?;
            Ok(h.alive_at_end().len() as f64)
        })
        .collect::<Result<_>>()?;
    let branching = McEstimate::from_samples(&counts)?;
    let exact = McEstimate {
        estimate: mean_offspring(&p, horizon, x0)?,
        std_error: 0.0,
        n: 0,
    };
    let fk = FeynmanKac::new(p, base.step, rng::derive_seed(seed, u64::MAX))?.estimate(
        x0,
        horizon,
        horizon,
        Observable::One,
        n_paths,
    )?;
    let mut out = Outcome::new();
    out.checks.push(Check::at_most("z_branching_vs_closed_form", branching.z_score(&exact), 3.0));
    out.checks.push(Check::at_most("z_branching_vs_feynman_kac", branching.z_score(&fk), 3.0));
    out.checks.push(Check::at_most("z_feynman_kac_vs_closed_form", fk.z_score(&exact), 3.0));
    out.notes.push(format!(
        "E[N_T]: branching {:.5} ± {:.5} ({n_runs} runs), closed form {:.5}, Feynman-Kac {:.5} ± {:.5} ({n_paths} paths)",
        branching.estimate, branching.std_error, exact.estimate, fk.estimate, fk.std_error
    ));
    Ok(out)
}

fn mass_invariant(opts: &ValidateOptions) -> Result<Outcome> {
    let p = fig1_params();
    let lambda = p.lambda();
    let profile_params = match opts.fault {
        Some(Fault::Sigma) => ModelParams {
            sigma: p.sigma * 1.05,
            ..p
        },
        None => p,
    };
    let stationary = GaussianLaw::new(-profile_params.c, profile_params.sigma)?;
    let sd = p.sigma.sqrt();
    let mut out = Outcome::new();
    for horizon in [0.5, 1.0, 4.0] {
        let f = |x: f64| mean_offspring(&p, horizon, x).unwrap_or(f64::NAN) * lambda * stationary.pdf(x);
        let q = integrate(f, -p.c - 20.0 * sd, -p.c + 20.0 * sd, 1e-13, 1e-12);
        out.checks.push(Check::at_most(format!("abs_error_T{horizon}"), (q.value - lambda).abs(), 1e-4));
    }
    if opts.fault.is_some() {
        out.notes.push("fault injected: stationary profile uses sigma * 1.05".into());
    }
    Ok(out)
}

fn stationarity(_opts: &ValidateOptions) -> Result<Outcome> {
    let p = fig1_params();
    let grid = GridSpec::default_for(&p);
    let f = stationary_on_grid(&p, &grid);
    let every = (0.1 / grid.dt).round() as usize;
    let max_l1 = |reverse_transport| -> Result<f64> {
        let opts = SolverOptions {
            reverse_transport,
            snapshot_every: every,
            ..SolverOptions::default()
        };
        let snaps = solve_moving_frame(&p, &f, 10.0, &grid, &opts)?;
        Ok(snaps.iter().map(|s| s.l1_distance(&f)).fold(0.0, f64::max))
    };
    let mut out = Outcome::new();
    out.checks.push(Check::at_most("max_l1_distance", max_l1(false)?, 1e-3));
    out.checks.push(Check::at_least("sign_swapped_max_l1_distance", max_l1(true)?, 1e-3));
    Ok(out)
}

fn stationary_mass(opts: &ValidateOptions) -> Result<Outcome> {
    let p = fig1_params();
    let lambda = p.lambda();
    let seed = opts.seed_for(5);
    let mut out = Outcome::new();

    let long = run(&SimConfig::new(p, 40.0).with_seed(seed))?;
    if long.is_extinct() {
        return Err(Error::ExtinctAtT {
            extinction_time: long.extinction_time.unwrap_or(0.0),
        });
    }
    let summary = mass_summary(&long, lambda, 10.0, 40.0)?;
    out.checks.push(Check::at_most(
        "relative_time_avg_deviation",
        summary.time_avg_deviation / lambda,
        0.1,
    ));
    out.notes.push(format!("time-averaged mass over [10, 40]: {:.4}", summary.time_average));

    let n_seeds = opts.size(20, 6);
    let deviation_median = |k: u32| -> Result<f64> {
        let params = ModelParams {
            carrying_capacity: k,
            ..p
        };
        let devs: Vec<f64> = (0..n_seeds as u64)
            .into_par_iter()
            .map(|i| {
                let h = run(&SimConfig::new(params, 20.0).with_seed(replicate_seed(seed ^ k as u64, i)))?;
                Ok(mass_summary(&h, lambda, 0.0, 20.0)?.max_deviation)
            })
            .collect::<Result<_>>()?;
        Ok(median(&devs))
    };
    let small = deviation_median(250)?;
    let large = deviation_median(2500)?;
    out.checks.push(Check::at_most("median_max_deviation_ratio_K2500_over_K250", large / small, 1.0));
    out.notes.push(format!(
        "median of max |mass - lambda| over t <= 20 ({n_seeds} seeds): K=250 {small:.4}, K=2500 {large:.4}"
    ));
    Ok(out)
}

fn batch_note(label: &str, batch: &LineageBatch) -> String {
    format!(
        "{label}: {} runs, {} extinct (discarded), {} lineages",
        batch.runs,
        batch.extinct_runs,
        batch.paths.len()
    )
}

fn spine_marginals_from_lineages(opts: &ValidateOptions, cache: &mut Cache) -> Result<Outcome> {
    let p = fig1_params();
    let batch = reference_batch(opts, cache)?;
    let mut out = Outcome::new();
    out.notes.push(batch_note("c = 1", batch));
    let rec = crate::engine::DEFAULT_RECORDING_STEP;
    let limit = 3.0 * MARGINAL_SLACK;
    for t in MARGINAL_TIMES {
        let j = (t / rec).round() as usize;
        let values: Vec<f64> = batch.paths.iter().map(|(_, l)| l.values[j]).collect();
        let fit = gaussian_fit(&values)?;
        let law = spine_marginal(&p, LINEAGE_HORIZON, t)?;
        out.checks.push(Check::at_most(
            format!("z_mean_t{t}"),
            (fit.mean - law.mean).abs() / fit.se_mean,
            limit,
        ));
        out.checks.push(Check::at_most(
            format!("z_variance_t{t}"),
            (fit.variance - law.variance).abs() / fit.se_variance,
            limit,
        ));
        out.notes.push(format!(
            "t = {t}: mean {:.4} (spine {:.4}), variance {:.4} (spine {:.4})",
            fit.mean, law.mean, fit.variance, law.variance
        ));
    }
    Ok(out)
}

fn reversed(batch: &LineageBatch) -> Result<Vec<LineagePath>> {
    batch.paths.iter().map(|(_, p)| reverse_path(p)).collect()
}

fn exact_ou_paths(sigma: f64, start: GaussianLaw, n_paths: usize, len: usize, delta: f64, seed: u64) -> Vec<Vec<f64>> {
    let rho = (-sigma * delta).exp();
    let sd = (0.5 * sigma * (1.0 - rho * rho)).sqrt();
    (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, i);
            let mut y = start.sample(&mut r);
            (0..len)
                .map(|_| {
                    let cur = y;
                    y = rho * y + sd * r.sample::<f64, _>(StandardNormal);
                    cur
                })
                .collect()
        })
        .collect()
}

fn fit_note(label: &str, fit: &OuFit) -> String {
    format!(
        "{label}: a = {:.4} ± {:.4}, sigma = {:.4} ± {:.4}, intercept = {:.4} ± {:.4}, {} increments",
        fit.mean_reversion_hat,
        fit.mean_reversion_se,
        fit.diffusion_hat,
        fit.diffusion_se,
        fit.intercept,
        fit.intercept_se,
        fit.n_increments
    )
}

fn reversed_ou(opts: &ValidateOptions, cache: &mut Cache) -> Result<Outcome> {
    let p = fig1_params();
    let sigma = p.sigma;
    let window = quasi_stationary_window(sigma, LINEAGE_HORIZON);
    let mut out = Outcome::new();

    let reference = reversed(reference_batch(opts, cache)?)?;
    let fit = ou_regress(&reference, Some(window))?;
    out.checks.push(Check::within(
        "mean_reversion_c1",
        fit.mean_reversion_hat,
        -1.3 * sigma,
        -0.7 * sigma,
    ));
    out.checks.push(Check::at_most(
        "intercept_over_se_c1",
        fit.intercept.abs() / fit.intercept_se,
        2.0,
    ));
    out.notes.push(fit_note("lineages c = 1", &fit));

    // exact OU data through the same regression
    let delta = crate::engine::DEFAULT_RECORDING_STEP;
    let len = (LINEAGE_HORIZON / delta).round() as usize + 1;
    let lo = (window.0 / delta).round() as usize;
    let hi = (window.1 / delta).round() as usize;
    let oracle: Vec<Vec<f64>> = exact_ou_paths(
        sigma,
        GaussianLaw::new(-p.c, sigma)?,
        opts.size(1000, 1000),
        len,
        delta,
        opts.seed_for(71),
    )
    .into_iter()
    .map(|path| path[lo..=hi].to_vec())
    .collect();
    let ofit = ou_regress_series(&oracle, delta)?;
    out.checks.push(Check::at_most(
        "oracle_z_mean_reversion",
        (ofit.mean_reversion_hat + sigma).abs() / ofit.mean_reversion_se,
        3.0,
    ));
    out.checks.push(Check::at_most(
        "oracle_z_diffusion",
        (ofit.diffusion_hat - sigma).abs() / ofit.diffusion_se,
        3.0,
    ));
    out.notes.push(fit_note("exact OU oracle", &ofit));

    let mut fits = vec![(1.0, fit)];
    for (k, c) in [0.3, 0.6].into_iter().enumerate() {
        let params = ModelParams { c, ..p };
        let cfg = SimConfig::new(params, LINEAGE_HORIZON).with_seed(opts.seed_for(72 + k as u64));
        let batch = sample_lineage_batch(&cfg, opts.size(500, 100), Frame::Moving)?;
        out.notes.push(batch_note(&format!("c = {c}"), &batch));
        let f = ou_regress(&reversed(&batch)?, Some(window))?;
        out.notes.push(fit_note(&format!("lineages c = {c}"), &f));
        fits.push((c, f));
    }
    fits.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (c, f) in &fits {
        out.checks.push(Check::at_most(format!("mean_reversion_c{c}"), f.mean_reversion_hat, 0.0));
    }
    for i in 0..fits.len() {
        for j in i + 1..fits.len() {
            let (a, b) = (&fits[i].1, &fits[j].1);
            let z = (a.mean_reversion_hat - b.mean_reversion_hat).abs() / a.mean_reversion_se.hypot(b.mean_reversion_se);
            out.checks.push(Check::at_most(format!("z_c{}_vs_c{}", fits[i].0, fits[j].0), z, 3.0));
        }
    }
    Ok(out)
}

fn spine_sampler_moments(opts: &ValidateOptions) -> Result<Outcome> {
    let p = fig1_params();
    let horizon = 10.0;
    let grid: Vec<f64> = (0..=5).map(|k| 2.0 * k as f64).collect();
    let sampler = SpineSampler::new(&p, horizon, &grid)?;
    let n = opts.size(100_000, 20_000);
    let seed = opts.seed_for(8);
    let paths: Vec<Vec<f64>> = (0..n as u64)
        .into_par_iter()
        .map(|i| sampler.sample(&mut rng::stream(seed, i)))
        .collect();
    let mut out = Outcome::new();
    let column = |k: usize| paths.iter().map(|v| v[k]).collect::<Vec<f64>>();
    for (k, &t) in grid.iter().enumerate() {
        let fit = gaussian_fit(&column(k))?;
        let law = spine_marginal(&p, horizon, t)?;
        out.checks.push(Check::at_most(
            format!("z_mean_t{t}"),
            (fit.mean - law.mean).abs() / fit.se_mean,
            3.0,
        ));
        out.checks.push(Check::at_most(
            format!("z_variance_t{t}"),
            (fit.variance - law.variance).abs() / fit.se_variance,
            3.0,
        ));
    }
    let (s, t) = (4.0, 6.0);
    let cov = covariance_estimate(&column(2), &column(3))?;
    let exact = spine_covariance(&p, horizon, s, t)?;
    out.checks.push(Check::at_most(
        "z_covariance_s4_t6",
        (cov.estimate - exact).abs() / cov.std_error,
        3.0,
    ));
    out.notes.push(format!(
        "{n} paths; Cov(Y_4, Y_6) = {:.5} (exact {exact:.5})",
        cov.estimate
    ));
    Ok(out)
}

fn determinism(opts: &ValidateOptions) -> Result<Outcome> {
    let p = fig1_params();
    let cfg = SimConfig::new(p, 2.0).with_seed(opts.seed_for(9));
    let config = ConfigFile::from_sim_config(&cfg, None);
    let mut produced = Vec::new();
    for name in ["a", "b"] {
        let dir = opts.scratch_dir.join("determinism").join(name);
        std::fs::create_dir_all(&dir)?;
        let mut files = commands::simulate(&config, &dir)?.outputs;
        files.extend(commands::lineages_from_run(&dir, &dir, 20, Frame::Fixed, None)?.outputs);
        produced.push((dir, files));
    }
    let (dir_a, files) = &produced[0];
    let dir_b = &produced[1].0;
    let mut differing = 0usize;
    let mut compared = 0usize;
    for f in files.iter().filter(|f| f.ends_with(".csv")) {
        compared += 1;
        if std::fs::read(dir_a.join(f))? != std::fs::read(dir_b.join(f))? {
            differing += 1;
        }
    }
    let mut out = Outcome::new();
    out.checks.push(Check::at_least("csv_files_compared", compared as f64, 4.0));
    out.checks.push(Check::at_most("differing_csv_files", differing as f64, 0.0));
    Ok(out)
}

/// Writes `report.json` into `dir`.
pub fn write_report(report: &Report, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join("report.json");
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    std::fs::write(&path, text)?;
    Ok(path)
}
