//! Individual-based simulation of the birth–death–diffusion population in
//! the moving frame.
//!
//! Each step of length `h` applies, in order:
//! 1. exact trait diffusion `x <- x + sigma (sqrt(h) xi - c h)`,
//! 2. deaths with probability `1 - exp(-h d)`, where
//!    `d = x^2/2 + (N - 1)/K` (interacting) or `x^2/2 + lambda` (frozen),
//!    using the post-move trait and the start-of-step population size,
//! 3. births with probability `1 - exp(-h)` among survivors; the child
//!    starts at the parent's current trait.
//!
//! The splitting has an O(h) bias in expectations.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{GaussianLaw, ModelParams};
use crate::error::{invalid, Error, Result};
use crate::rng::{self, Stream};
use crate::stats::McEstimate;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Mode {
    /// Competition `(N - 1)/K` from the current population.
    Interacting,
    /// Competition frozen at a constant; restores the branching property.
    Frozen { lambda: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    /// `round(lambda K)` individuals with iid traits from `N(-c, sigma)`.
    StationarySample,
    PointMass { x0: f64, n0: u32 },
    Explicit { traits: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: ModelParams,
    pub horizon: f64,
    pub step: f64,
    pub recording_step: f64,
    pub mode: Mode,
    pub init: InitialCondition,
    pub seed: u64,
}

pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_RECORDING_STEP: f64 = 0.05;

fn integer_ratio(num: f64, den: f64) -> Option<u64> {
    let r = num / den;
    let n = r.round();
    if n >= 1.0 && (r - n).abs() <= 1e-9 * n {
        Some(n as u64)
    } else {
        None
    }
}

impl SimConfig {
    /// Interacting dynamics from a stationary sample with the default steps.
    pub fn new(params: ModelParams, horizon: f64) -> Self {
        Self {
            params,
            horizon,
            step: DEFAULT_STEP,
            recording_step: DEFAULT_RECORDING_STEP,
            mode: Mode::Interacting,
            init: InitialCondition::StationarySample,
            seed: 0,
        }
    }

    pub fn with_step(mut self, step: f64, recording_step: f64) -> Self {
        self.step = step;
        self.recording_step = recording_step;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_init(mut self, init: InitialCondition) -> Self {
        self.init = init;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(invalid("step", "must be finite and > 0"));
        }
        if !(self.recording_step >= self.step) {
            return Err(invalid("recording_step", "must be >= step"));
        }
        if !(self.horizon.is_finite() && self.horizon >= self.recording_step) {
            return Err(invalid("horizon", "must be finite and >= recording_step"));
        }
        if integer_ratio(self.recording_step, self.step).is_none() {
            return Err(invalid("recording_step", "must be an integer multiple of step"));
        }
        if integer_ratio(self.horizon, self.recording_step).is_none() {
            return Err(invalid("horizon", "must be an integer multiple of recording_step"));
        }
        match &self.mode {
            Mode::Interacting => {}
            Mode::Frozen { lambda } => {
                if !(lambda.is_finite() && *lambda >= 0.0) {
                    return Err(invalid("mode.lambda", "must be finite and >= 0"));
                }
            }
        }
        match &self.init {
            InitialCondition::StationarySample => {
                if !self.params.persists() {
                    return Err(Error::NonPersistent {
                        load: self.params.load(),
                    });
                }
            }
            InitialCondition::PointMass { x0, n0 } => {
                if !x0.is_finite() {
                    return Err(invalid("init.x0", "must be finite"));
                }
                if *n0 == 0 {
                    return Err(invalid("init.n0", "must be >= 1"));
                }
            }
            InitialCondition::Explicit { traits } => {
                if traits.is_empty() {
                    return Err(invalid("init.traits", "must be non-empty"));
                }
                if traits.iter().any(|x| !x.is_finite()) {
                    return Err(invalid("init.traits", "must all be finite"));
                }
            }
        }
        Ok(())
    }

    /// Number of steps per recording interval.
    pub fn record_stride(&self) -> u64 {
        integer_ratio(self.recording_step, self.step).unwrap_or(1)
    }

    pub fn total_steps(&self) -> u64 {
        integer_ratio(self.horizon, self.recording_step).unwrap_or(0) * self.record_stride()
    }

    /// Number of recording-grid points, `0, Δ, ..., T`.
    pub fn n_records(&self) -> usize {
        (self.total_steps() / self.record_stride()) as usize + 1
    }

    pub fn recording_time(&self, index: usize) -> f64 {
        index as f64 * self.recording_step
    }

    pub fn recording_times(&self) -> Vec<f64> {
        (0..self.n_records()).map(|j| self.recording_time(j)).collect()
    }

    pub fn step_time(&self, step: u64) -> f64 {
        step as f64 * self.step
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub id: u32,
    pub parent_id: Option<u32>,
    /// Rank among siblings (1-based); for roots, the root index.
    pub child_rank: u32,
    pub birth_step: u64,
    pub death_step: Option<u64>,
    /// Recording-grid index of `trait_samples[0]`.
    pub first_record: usize,
    /// Moving-frame traits at grid times `birth <= t_j < death`.
    pub trait_samples: Vec<f64>,
}

impl Individual {
    pub fn is_alive_at_step(&self, step: u64) -> bool {
        self.birth_step <= step && self.death_step.map_or(true, |d| step < d)
    }

    /// Trait at recording index `j`, if the individual was sampled there.
    pub fn sample_at(&self, j: usize) -> Option<f64> {
        j.checked_sub(self.first_record)
            .and_then(|k| self.trait_samples.get(k).copied())
    }
}

#[derive(Debug, Clone)]
struct Alive {
    id: u32,
    x: f64,
    children: u32,
    rng: Stream,
}

#[derive(Debug, Clone)]
pub struct PopulationState {
    step_index: u64,
    alive: Vec<Alive>,
}

impl PopulationState {
    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    pub fn population_size(&self) -> usize {
        self.alive.len()
    }

    /// `(id, moving-frame trait)` of every alive individual.
    pub fn alive(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.alive.iter().map(|a| (a.id, a.x))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordedHistory {
    pub config: SimConfig,
    pub individuals: Vec<Individual>,
    /// `N_t / K` on the recording grid (zero after extinction).
    pub mass_trajectory: Vec<f64>,
    pub extinction_time: Option<f64>,
    /// Last simulated step (total steps unless extinct).
    pub final_step: u64,
}

impl RecordedHistory {
    pub fn get(&self, id: u32) -> Result<&Individual> {
        self.individuals.get(id as usize).ok_or(Error::UnknownId(id))
    }

    pub fn horizon(&self) -> f64 {
        self.config.horizon
    }

    pub fn recording_times(&self) -> Vec<f64> {
        self.config.recording_times()
    }

    pub fn birth_time(&self, id: u32) -> Result<f64> {
        Ok(self.config.step_time(self.get(id)?.birth_step))
    }

    pub fn death_time(&self, id: u32) -> Result<Option<f64>> {
        Ok(self.get(id)?.death_step.map(|s| self.config.step_time(s)))
    }

    pub fn is_extinct(&self) -> bool {
        self.extinction_time.is_some()
    }

    /// Ids alive at the horizon, in increasing order.
    pub fn alive_at_end(&self) -> Vec<u32> {
        if self.is_extinct() {
            return Vec::new();
        }
        self.individuals
            .iter()
            .filter(|i| i.death_step.is_none())
            .map(|i| i.id)
            .collect()
    }

    /// Ids alive at recording index `j`.
    pub fn alive_at_record(&self, j: usize) -> Vec<u32> {
        let step = j as u64 * self.config.record_stride();
        self.individuals
            .iter()
            .filter(|i| i.is_alive_at_step(step) && step <= self.final_step)
            .map(|i| i.id)
            .collect()
    }

    /// Ulam–Harris label, root index first.
    pub fn label(&self, id: u32) -> Result<Vec<u32>> {
        let mut label = Vec::new();
        let mut cur = Some(id);
        while let Some(i) = cur {
            let ind = self.get(i)?;
            label.push(ind.child_rank);
            cur = ind.parent_id;
        }
        label.reverse();
        Ok(label)
    }

    /// Population size on the recording grid rebuilt from birth and death
    /// steps alone.
    pub fn counts_from_events(&self) -> Vec<usize> {
        let stride = self.config.record_stride();
        let n = self.config.n_records();
        let mut delta = vec![0i64; n + 1];
        for ind in &self.individuals {
            let first = ind.birth_step.div_ceil(stride) as usize;
            let end = ind
                .death_step
                .map_or(n, |d| (d.div_ceil(stride) as usize).min(n));
            if first < end {
                delta[first] += 1;
                delta[end] -= 1;
            }
        }
        let mut acc = 0i64;
        delta[..n]
            .iter()
            .map(|d| {
                acc += d;
                acc as usize
            })
            .collect()
    }

    /// Checks parentage, sampling coverage and mass balance.
    pub fn check_consistency(&self) -> Result<()> {
        let stride = self.config.record_stride();
        let n = self.config.n_records();
        let last_record = (self.final_step / stride) as usize;
        for (k, ind) in self.individuals.iter().enumerate() {
            if ind.id as usize != k {
                return Err(Error::Malformed(format!("id {} stored at slot {k}", ind.id)));
            }
            if let Some(d) = ind.death_step {
                if d <= ind.birth_step {
                    return Err(Error::Malformed(format!("individual {k} dies before birth")));
                }
            }
            if let Some(p) = ind.parent_id {
                let parent = self.get(p)?;
                if p >= ind.id || !parent.is_alive_at_step(ind.birth_step) {
                    return Err(Error::Malformed(format!("parent {p} of {k} not alive at birth")));
                }
            }
            let first = ind.birth_step.div_ceil(stride) as usize;
            let end = ind
                .death_step
                .map_or(last_record + 1, |d| d.div_ceil(stride) as usize)
                .min(n);
            if ind.first_record != first || ind.trait_samples.len() != end.saturating_sub(first) {
                return Err(Error::Malformed(format!("individual {k} has wrong sample coverage")));
            }
        }
        let k = self.config.params.carrying_capacity as f64;
        for (j, (&count, &mass)) in self.counts_from_events().iter().zip(&self.mass_trajectory).enumerate() {
            if count as f64 / k != mass {
                return Err(Error::Malformed(format!("mass mismatch at record {j}")));
            }
        }
        Ok(())
    }
}

/// Builds the time-0 population and its history.
pub fn init_population(config: &SimConfig) -> Result<(PopulationState, RecordedHistory)> {
    config.validate()?;
    let p = &config.params;
    let traits: Vec<f64> = match &config.init {
        InitialCondition::StationarySample => {
            let n0 = (p.lambda() * p.carrying_capacity as f64).round() as usize;
            let law = GaussianLaw::new(-p.c, p.sigma)?;
            let mut r = rng::stream(config.seed, rng::INIT_KEY);
            (0..n0).map(|_| law.sample(&mut r)).collect()
        }
        InitialCondition::PointMass { x0, n0 } => vec![*x0; *n0 as usize],
        InitialCondition::Explicit { traits } => traits.clone(),
    };
    let mut individuals = Vec::with_capacity(traits.len() * 4);
    let mut alive = Vec::with_capacity(traits.len() * 2);
    for (i, &x) in traits.iter().enumerate() {
        let id = i as u32;
        individuals.push(Individual {
            id,
            parent_id: None,
            child_rank: id + 1,
            birth_step: 0,
            death_step: None,
            first_record: 0,
            trait_samples: vec![x],
        });
        alive.push(Alive {
            id,
            x,
            children: 0,
            rng: rng::stream(config.seed, id as u64),
        });
    }
    let mut mass_trajectory = Vec::with_capacity(config.n_records());
    mass_trajectory.push(alive.len() as f64 / p.carrying_capacity as f64);
    let mut history = RecordedHistory {
        config: config.clone(),
        individuals,
        mass_trajectory,
        extinction_time: None,
        final_step: 0,
    };
    if alive.is_empty() {
        mark_extinct(&mut history, 0);
    }
    Ok((
        PopulationState {
            step_index: 0,
            alive,
        },
        history,
    ))
}

fn mark_extinct(history: &mut RecordedHistory, step: u64) {
    history.extinction_time = Some(history.config.step_time(step));
    history.final_step = step;
    let n = history.config.n_records();
    history.mass_trajectory.resize(n, 0.0);
}

/// Advances the population by one step. Returns `false` once the run is
/// over (horizon reached or extinct) and nothing was done.
pub fn step(state: &mut PopulationState, history: &mut RecordedHistory) -> bool {
    let cfg = &history.config;
    if history.extinction_time.is_some() || state.step_index >= cfg.total_steps() {
        return false;
    }
    let p = cfg.params;
    let h = cfg.step;
    let stride = cfg.record_stride();
    let seed = cfg.seed;
    let k = p.carrying_capacity as f64;
    let diffusion = p.sigma * h.sqrt();
    let transport = -p.sigma * p.c * h;
    let n_before = state.alive.len();
    let competition = match cfg.mode {
        Mode::Interacting => (n_before as f64 - 1.0) / k,
        Mode::Frozen { lambda } => lambda,
    };
    let p_birth = -(-h).exp_m1();
    let next = state.step_index + 1;
    let first_record = next.div_ceil(stride) as usize;

    let mut newborns = Vec::new();
    let mut i = 0;
    while i < state.alive.len() {
        let a = &mut state.alive[i];
        let xi: f64 = a.rng.sample(StandardNormal);
        a.x += diffusion * xi + transport;
        let rate = 0.5 * a.x * a.x + competition;
        if a.rng.random::<f64>() < -(-h * rate).exp_m1() {
            history.individuals[a.id as usize].death_step = Some(next);
            state.alive.swap_remove(i);
            continue;
        }
        if a.rng.random::<f64>() < p_birth {
            a.children += 1;
            let id = history.individuals.len() as u32;
            history.individuals.push(Individual {
                id,
                parent_id: Some(a.id),
                child_rank: a.children,
                birth_step: next,
                death_step: None,
                first_record,
                trait_samples: Vec::new(),
            });
            newborns.push(Alive {
                id,
                x: a.x,
                children: 0,
                rng: rng::stream(seed, id as u64),
            });
        }
        i += 1;
    }
    state.alive.extend(newborns);
    state.step_index = next;
    history.final_step = next;

    if next % stride == 0 {
        for a in &state.alive {
            history.individuals[a.id as usize].trait_samples.push(a.x);
        }
        history.mass_trajectory.push(state.alive.len() as f64 / k);
    }
    if state.alive.is_empty() {
        mark_extinct(history, next);
    }
    true
}

/// Runs a configuration to its horizon (or to extinction).
pub fn run(config: &SimConfig) -> Result<RecordedHistory> {
    let (mut state, mut history) = init_population(config)?;
    while step(&mut state, &mut history) {}
    Ok(history)
}

/// Runs a configuration and also returns the final population state.
pub fn run_with_state(config: &SimConfig) -> Result<(PopulationState, RecordedHistory)> {
    let (mut state, mut history) = init_population(config)?;
    while step(&mut state, &mut history) {}
    Ok((state, history))
}

/// Seed of replicate `index` in a batch started from `base_seed`.
pub fn replicate_seed(base_seed: u64, index: u64) -> u64 {
    rng::derive_seed(base_seed, index)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    One,
    Trait,
    TraitSquared,
}

impl Observable {
    pub fn eval(self, y: f64) -> f64 {
        match self {
            Observable::One => 1.0,
            Observable::Trait => y,
            Observable::TraitSquared => y * y,
        }
    }
}

/// Monte-Carlo evaluation of the many-to-one (Feynman–Kac) representation
/// `E_x[exp(∫_0^T (1 - X_s^2/2 - lambda) ds) phi(X_t)]` with
/// `dX = sigma (dB - c dt)`.
#[derive(Debug, Clone, Copy)]
pub struct FeynmanKac {
    pub params: ModelParams,
    pub lambda: f64,
    pub step: f64,
    pub seed: u64,
}

impl FeynmanKac {
    pub fn new(params: ModelParams, step: f64, seed: u64) -> Result<Self> {
        params.validate()?;
        if !params.persists() {
            return Err(Error::NonPersistent { load: params.load() });
        }
        if !(step > 0.0) {
            return Err(invalid("step", "must be > 0"));
        }
        Ok(Self {
            params,
            lambda: params.lambda(),
            step,
            seed,
        })
    }

    fn steps_for(&self, t: f64, field: &'static str) -> Result<u64> {
        if t == 0.0 {
            return Ok(0);
        }
        integer_ratio(t, self.step).ok_or_else(|| invalid(field, "must be a multiple of step"))
    }

    pub fn estimate(&self, x: f64, horizon: f64, t: f64, observable: Observable, n_rep: usize) -> Result<McEstimate> {
        if !(0.0..=horizon).contains(&t) {
            return Err(Error::OutOfWindow { t, horizon });
        }
        if n_rep < 2 {
            return Err(Error::TooFewSamples { needed: 2, got: n_rep });
        }
        let n_steps = self.steps_for(horizon, "horizon")?;
        let obs_step = self.steps_for(t, "t")?;
        let h = self.step;
        let sd = self.params.sigma * h.sqrt();
        let drift = -self.params.sigma * self.params.c * h;
        let growth = |y: f64| 1.0 - 0.5 * y * y - self.lambda;
        let samples: Vec<f64> = (0..n_rep as u64)
            .into_par_iter()
            .map(|i| {
                let mut r = rng::stream(self.seed, i);
                let mut y = x;
                let mut observed = observable.eval(y);
                let mut prev = growth(y);
                let mut integral = 0.0;
                for k in 1..=n_steps {
                    let z: f64 = r.sample(StandardNormal);
                    y += sd * z + drift;
                    let cur = growth(y);
                    integral += 0.5 * h * (prev + cur);
                    prev = cur;
                    if k == obs_step {
                        observed = observable.eval(y);
                    }
                }
                integral.exp() * observed
            })
            .collect();
        McEstimate::from_samples(&samples)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn fig1() -> ModelParams {
        ModelParams::new(0.32, 1.0, 250).unwrap()
    }

    #[test]
    fn stationary_init_size_and_labels() {
        let cfg = SimConfig::new(fig1(), 1.0).with_seed(3);
        let (state, hist) = init_population(&cfg).unwrap();
        assert_eq!(state.population_size(), 85);
        assert_eq!(hist.mass_trajectory, vec![85.0 / 250.0]);
        for id in 0..85u32 {
            assert_eq!(hist.label(id).unwrap(), vec![id + 1]);
        }
    }

    #[test]
    fn point_mass_init() {
        let cfg = SimConfig::new(fig1(), 1.0).with_init(InitialCondition::PointMass { x0: 0.0, n0: 1 });
        let (state, hist) = init_population(&cfg).unwrap();
        assert_eq!(state.alive().collect::<Vec<_>>(), vec![(0, 0.0)]);
        assert_eq!(hist.label(0).unwrap(), vec![1]);
    }

    #[test]
    fn stationary_init_requires_persistence() {
        let p = ModelParams::new(0.32, 1.4, 250).unwrap();
        let cfg = SimConfig::new(p, 1.0);
        assert!(matches!(init_population(&cfg), Err(Error::NonPersistent { .. })));
    }

    #[test]
    fn config_validation() {
        let base = SimConfig::new(fig1(), 1.0);
        assert!(base.validate().is_ok());
        assert!(base.clone().with_step(1e-3, 0.0505).validate().is_err());
        assert!(base.clone().with_step(0.1, 0.05).validate().is_err());
        let mut odd = base.clone();
        odd.horizon = 1.01;
        assert!(odd.validate().is_err());
        assert!(base
            .clone()
            .with_init(InitialCondition::PointMass { x0: 0.0, n0: 0 })
            .validate()
            .is_err());
        assert!(base.with_mode(Mode::Frozen { lambda: -1.0 }).validate().is_err());
    }

    #[test]
    fn grid_counts() {
        let cfg = SimConfig::new(fig1(), 2.0);
        assert_eq!(cfg.record_stride(), 50);
        assert_eq!(cfg.total_steps(), 2000);
        assert_eq!(cfg.n_records(), 41);
    }

    #[test]
    fn run_is_deterministic() {
        let cfg = SimConfig::new(fig1(), 2.0).with_seed(11);
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a, b);
        let c = run(&cfg.clone().with_seed(12)).unwrap();
        assert_ne!(a.mass_trajectory, c.mass_trajectory);
    }

    #[test]
    fn history_is_consistent() {
        let cfg = SimConfig::new(fig1(), 3.0).with_seed(5);
        let hist = run(&cfg).unwrap();
        hist.check_consistency().unwrap();
        assert_eq!(hist.mass_trajectory.len(), cfg.n_records());
        let labels: HashSet<Vec<u32>> = hist.individuals.iter().map(|i| hist.label(i.id).unwrap()).collect();
        assert_eq!(labels.len(), hist.individuals.len());
        for ind in &hist.individuals {
            let label = hist.label(ind.id).unwrap();
            if let Some(p) = ind.parent_id {
                assert_eq!(&label[..label.len() - 1], hist.label(p).unwrap().as_slice());
                assert_eq!(*label.last().unwrap(), ind.child_rank);
            }
        }
        let n_end = hist.alive_at_end().len();
        assert_eq!(*hist.mass_trajectory.last().unwrap(), n_end as f64 / 250.0);
    }

    #[test]
    fn children_start_at_parent_trait() {
        let cfg = SimConfig::new(fig1(), 2.0).with_step(1e-3, 1e-3).with_seed(2);
        let hist = run(&cfg).unwrap();
        let mut checked = 0;
        for ind in hist.individuals.iter().filter(|i| i.parent_id.is_some()) {
            let parent = hist.get(ind.parent_id.unwrap()).unwrap();
            let j = ind.first_record;
            assert_eq!(ind.sample_at(j), parent.sample_at(j));
            checked += 1;
        }
        assert!(checked > 10);
    }

    #[test]
    fn extinction_halts_and_pads() {
        let p = ModelParams::new(0.32, 1.0, 1).unwrap();
        let cfg = SimConfig::new(p, 20.0).with_init(InitialCondition::PointMass { x0: 4.0, n0: 1 });
        let hist = run(&cfg).unwrap();
        let t = hist.extinction_time.expect("x0 = 4 dies almost surely by T = 20");
        assert!(t < 20.0);
        assert_eq!(hist.mass_trajectory.len(), cfg.n_records());
        assert_eq!(*hist.mass_trajectory.last().unwrap(), 0.0);
        assert!(hist.alive_at_end().is_empty());
        hist.check_consistency().unwrap();
    }

    #[test]
    fn frozen_constant_rate_growth() {
        // σ ≈ 0 at x = 0, c = 0: linear birth–death with E[N_t] = e^{(1-λ)t}
        let p = ModelParams::new(1e-12, 0.0, 1).unwrap();
        let lambda = 0.6;
        let n = 4000;
        let t = 1.0;
        let sizes: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let cfg = SimConfig::new(p, t)
                    .with_mode(Mode::Frozen { lambda })
                    .with_init(InitialCondition::PointMass { x0: 0.0, n0: 1 })
                    .with_seed(replicate_seed(99, i));
                run(&cfg).unwrap().alive_at_end().len() as f64
            })
            .collect();
        let est = McEstimate::from_samples(&sizes).unwrap();
        let expected = ((1.0 - lambda) * t).exp();
        assert!((est.estimate - expected).abs() < 3.0 * est.std_error, "{est:?} vs {expected}");
    }

    #[test]
    fn pure_birth_is_yule() {
        let p = ModelParams::new(1e-12, 0.0, 1).unwrap();
        let sizes: Vec<f64> = (0..4000)
            .into_par_iter()
            .map(|i| {
                let cfg = SimConfig::new(p, 1.0)
                    .with_mode(Mode::Frozen { lambda: 0.0 })
                    .with_init(InitialCondition::PointMass { x0: 0.0, n0: 1 })
                    .with_seed(replicate_seed(5, i));
                run(&cfg).unwrap().alive_at_end().len() as f64
            })
            .collect();
        let est = McEstimate::from_samples(&sizes).unwrap();
        assert!((est.estimate - 1f64.exp()).abs() < 3.0 * est.std_error, "{est:?}");
    }

    #[test]
    fn one_step_weight_is_second_order_accurate() {
        // survive-then-reproduce factor e^{-hd}(2 - e^{-h}) vs e^{h(1-d)}:
        // local error O(h^2), so halving h divides it by ~4
        let d = 0.8;
        let err = |h: f64| ((-h * d).exp() * (2.0 - (-h).exp()) - (h * (1.0 - d)).exp()).abs();
        for h in [4e-3, 2e-3] {
            let ratio = err(h) / err(h / 2.0);
            assert!((ratio - 4.0).abs() < 0.05, "{ratio}");
        }
    }

    #[test]
    fn feynman_kac_trivial_horizon() {
        let fk = FeynmanKac::new(fig1(), 1e-3, 1).unwrap();
        let est = fk.estimate(-0.7, 0.0, 0.0, Observable::Trait, 10).unwrap();
        assert!((est.estimate + 0.7).abs() < 1e-15);
        assert!(est.std_error < 1e-15);
    }

    #[test]
    fn feynman_kac_matches_mean_offspring() {
        let p = fig1();
        let fk = FeynmanKac::new(p, 1e-3, 7).unwrap();
        let est = fk.estimate(-1.0, 1.0, 1.0, Observable::One, 20_000).unwrap();
        let m = crate::analytics::mean_offspring(&p, 1.0, -1.0).unwrap();
        assert!((est.estimate - m).abs() < 3.0 * est.std_error, "{est:?} vs {m}");
    }

    #[test]
    fn feynman_kac_rejects_off_grid_times() {
        let fk = FeynmanKac::new(fig1(), 1e-3, 1).unwrap();
        assert!(fk.estimate(0.0, 1.0, 2.0, Observable::One, 10).is_err());
        assert!(fk.estimate(0.0, 1.0, 0.00015, Observable::One, 10).is_err());
    }
}
