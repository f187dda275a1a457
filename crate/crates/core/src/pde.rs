//! Finite-difference reference solvers on a truncated trait domain `[-L, L]`.
//!
//! Diffusion and transport are implicit (one tridiagonal solve per step),
//! the reaction term is explicit with the nonlocal mass lagged one step.
//! First order in time, second order in space with central transport.

use serde::{Deserialize, Serialize};

use crate::analytics::{mean_offspring, stationary_profile, ModelParams};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub half_width: f64,
    pub n_cells: usize,
    pub dt: f64,
}

impl GridSpec {
    pub fn new(half_width: f64, n_cells: usize, dt: f64) -> Result<Self> {
        let g = Self {
            half_width,
            n_cells,
            dt,
        };
        g.validate()?;
        Ok(g)
    }

    /// `L = c + 8 sqrt(sigma)`, 2048 cells, `dt = 1e-4`.
    pub fn default_for(params: &ModelParams) -> Self {
        Self {
            half_width: params.c + 8.0 * params.sigma.sqrt(),
            n_cells: 2048,
            dt: 1e-4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width.is_finite() && self.half_width > 0.0) {
            return Err(invalid("grid.half_width", "must be finite and > 0"));
        }
        if self.n_cells < 4 {
            return Err(invalid("grid.n_cells", "must be >= 4"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid("grid.dt", "must be finite and > 0"));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.n_cells as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..=self.n_cells).map(|i| -self.half_width + i as f64 * dx).collect()
    }

    /// Whether the domain reaches 8 standard deviations past the
    /// stationary bulk at `-c`.
    pub fn covers_stationary_bulk(&self, params: &ModelParams) -> bool {
        self.half_width >= params.c + 8.0 * params.sigma.sqrt() - 1e-12
    }

    pub fn with_cells(mut self, n_cells: usize) -> Self {
        self.n_cells = n_cells;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeState {
    pub grid: GridSpec,
    pub time: f64,
    /// Values at the `n_cells + 1` nodes, boundary included.
    pub values: Vec<f64>,
}

impl PdeState {
    /// Trapezoid integral over the grid.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.values, self.grid.dx())
    }

    pub fn l1_distance(&self, other: &[f64]) -> f64 {
        let diff: Vec<f64> = self.values.iter().zip(other).map(|(a, b)| (a - b).abs()).collect();
        trapezoid(&diff, self.grid.dx())
    }
}

fn trapezoid(values: &[f64], dx: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    dx * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassTerm {
    /// `1 - x^2/2 - ∫f`, the interacting equation.
    Nonlocal,
    /// `1 - x^2/2 - lambda`, the linearized (frozen-competition) equation.
    Frozen(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transport {
    Central,
    Upwind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub mass_term: MassTerm,
    pub transport: Transport,
    /// Flip the sign of the transport term. Only useful as a negative control.
    pub reverse_transport: bool,
    /// Emit a snapshot every this many steps (the final state is always emitted).
    pub snapshot_every: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            mass_term: MassTerm::Nonlocal,
            transport: Transport::Central,
            reverse_transport: false,
            snapshot_every: 1000,
        }
    }
}

/// Constant-coefficient tridiagonal system, factored once.
#[derive(Debug, Clone)]
struct Tridiagonal {
    lower: f64,
    upper: f64,
    c_prime: Vec<f64>,
    inv_denom: Vec<f64>,
}

impl Tridiagonal {
    fn new(lower: f64, diag: f64, upper: f64, n: usize) -> Self {
        let mut c_prime = vec![0.0; n];
        let mut inv_denom = vec![0.0; n];
        let mut prev = 0.0;
        for i in 0..n {
            let d = diag - lower * prev;
            inv_denom[i] = 1.0 / d;
            c_prime[i] = upper / d;
            prev = c_prime[i];
        }
        Self {
            lower,
            upper,
            c_prime,
            inv_denom,
        }
    }

    fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        let mut prev = 0.0;
        for i in 0..n {
            rhs[i] = (rhs[i] - self.lower * prev) * self.inv_denom[i];
            prev = rhs[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            rhs[i] -= self.c_prime[i] * rhs[i + 1];
        }
        let _ = self.upper;
    }
}

#[derive(Debug, Clone, Copy)]
enum Equation {
    Density(MassTerm),
    MeanOffspring { lambda: f64 },
}

/// Semi-implicit time stepper for either equation.
#[derive(Debug, Clone)]
pub struct Solver {
    params: ModelParams,
    grid: GridSpec,
    equation: Equation,
    nodes: Vec<f64>,
    matrix: Tridiagonal,
    a_lower: f64,
    a_upper: f64,
    state: PdeState,
    steps: u64,
    rhs: Vec<f64>,
}

impl Solver {
    fn new(params: ModelParams, grid: GridSpec, equation: Equation, opts: &SolverOptions, init: Vec<f64>) -> Result<Self> {
        params.validate()?;
        grid.validate()?;
        if init.len() != grid.n_cells + 1 {
            return Err(invalid("init", format!("expected {} values, got {}", grid.n_cells + 1, init.len())));
        }
        if init.iter().any(|v| !v.is_finite()) {
            return Err(invalid("init", "values must be finite"));
        }
        let diffusion = 0.5 * params.sigma * params.sigma;
        let mut velocity = match equation {
            Equation::Density(_) => params.sigma * params.c,
            Equation::MeanOffspring { .. } => -params.sigma * params.c,
        };
        if opts.reverse_transport {
            velocity = -velocity;
        }
        let dx = grid.dx();
        let d2 = diffusion / (dx * dx);
        let (a_lower, a_diag, a_upper) = match opts.transport {
            Transport::Central => (d2 - velocity / (2.0 * dx), -2.0 * d2, d2 + velocity / (2.0 * dx)),
            Transport::Upwind if velocity >= 0.0 => (d2, -2.0 * d2 - velocity / dx, d2 + velocity / dx),
            Transport::Upwind => (d2 - velocity / dx, -2.0 * d2 + velocity / dx, d2),
        };
        let dt = grid.dt;
        let matrix = Tridiagonal::new(-dt * a_lower, 1.0 - dt * a_diag, -dt * a_upper, grid.n_cells - 1);
        let state = PdeState {
            grid,
            time: 0.0,
            values: init,
        };
        let solver = Self {
            params,
            grid,
            equation,
            nodes: grid.nodes(),
            matrix,
            a_lower,
            a_upper,
            state,
            steps: 0,
            rhs: vec![0.0; grid.n_cells - 1],
        };
        solver.check_stability(solver.current_mass())?;
        Ok(solver)
    }

    /// Solver for the moving-frame density equation.
    pub fn moving_frame(params: ModelParams, grid: GridSpec, opts: &SolverOptions, init: Vec<f64>) -> Result<Self> {
        if init.iter().any(|&v| v < 0.0) {
            return Err(invalid("init", "density must be nonnegative"));
        }
        let mut init = init;
        let n = init.len();
        if n > 0 {
            init[0] = 0.0;
            init[n - 1] = 0.0;
        }
        Self::new(params, grid, Equation::Density(opts.mass_term), opts, init)
    }

    /// Solver for the mean-offspring equation started from `m_0 = 1`.
    pub fn mean_offspring(params: ModelParams, grid: GridSpec, opts: &SolverOptions) -> Result<Self> {
        if !params.persists() {
            return Err(Error::NonPersistent { load: params.load() });
        }
        let lambda = params.lambda();
        Self::new(
            params,
            grid,
            Equation::MeanOffspring { lambda },
            opts,
            vec![1.0; grid.n_cells + 1],
        )
    }

    pub fn state(&self) -> &PdeState {
        &self.state
    }

    pub fn into_state(self) -> PdeState {
        self.state
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    fn current_mass(&self) -> f64 {
        match self.equation {
            Equation::Density(MassTerm::Nonlocal) => self.state.integral(),
            Equation::Density(MassTerm::Frozen(l)) => l,
            Equation::MeanOffspring { lambda } => lambda,
        }
    }

    fn check_stability(&self, mass: f64) -> Result<()> {
        let l = self.grid.half_width;
        let max_rate = (1.0 - mass).abs().max((1.0 - 0.5 * l * l - mass).abs());
        if self.grid.dt * max_rate > 1.0 {
            return Err(Error::StabilityViolation {
                dt: self.grid.dt,
                max_rate,
            });
        }
        Ok(())
    }

    fn boundary(&self, time: f64) -> Result<(f64, f64)> {
        match self.equation {
            Equation::Density(_) => Ok((0.0, 0.0)),
            Equation::MeanOffspring { .. } => Ok((
                mean_offspring(&self.params, time, -self.grid.half_width)?,
                mean_offspring(&self.params, time, self.grid.half_width)?,
            )),
        }
    }

    pub fn step(&mut self) -> Result<()> {
        let dt = self.grid.dt;
        let mass = self.current_mass();
        self.check_stability(mass)?;
        let next_time = (self.steps + 1) as f64 * dt;
        let (left, right) = self.boundary(next_time)?;
        let n = self.grid.n_cells;
        let values = &self.state.values;
        for i in 1..n {
            let x = self.nodes[i];
            let rate = 1.0 - 0.5 * x * x - mass;
            self.rhs[i - 1] = values[i] * (1.0 + dt * rate);
        }
        self.rhs[0] += dt * self.a_lower * left;
        self.rhs[n - 2] += dt * self.a_upper * right;
        self.matrix.solve_in_place(&mut self.rhs);
        let values = &mut self.state.values;
        values[1..n].copy_from_slice(&self.rhs);
        values[0] = left;
        values[n] = right;
        self.steps += 1;
        self.state.time = next_time;
        if let Equation::Density(_) = self.equation {
            let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if let Some((i, &v)) = values
                .iter()
                .enumerate()
                .find(|(_, &v)| v < -1e-12 * scale.max(f64::MIN_POSITIVE))
            {
                return Err(Error::NegativeDensity { x: self.nodes[i], value: v });
            }
        }
        Ok(())
    }

    /// Advances to `horizon`, returning snapshots (initial, every
    /// `snapshot_every` steps, and final).
    pub fn solve(mut self, horizon: f64, snapshot_every: usize) -> Result<Vec<PdeState>> {
        let n_steps = (horizon / self.grid.dt).round() as u64;
        let every = snapshot_every.max(1) as u64;
        let mut out = vec![self.state.clone()];
        for k in 1..=n_steps {
            self.step()?;
            if k % every == 0 || k == n_steps {
                out.push(self.state.clone());
            }
        }
        Ok(out)
    }
}

/// Evolves the moving-frame density equation from `init` to `horizon`.
pub fn solve_moving_frame(
    params: &ModelParams,
    init: &[f64],
    horizon: f64,
    grid: &GridSpec,
    opts: &SolverOptions,
) -> Result<Vec<PdeState>> {
    Solver::moving_frame(*params, *grid, opts, init.to_vec())?.solve(horizon, opts.snapshot_every)
}

/// Evolves the mean-offspring equation from `m_0 = 1`, with Dirichlet data
/// from the closed form at `±L`.
pub fn solve_mean_offspring(
    params: &ModelParams,
    horizon: f64,
    grid: &GridSpec,
    snapshot_every: usize,
) -> Result<Vec<PdeState>> {
    Solver::mean_offspring(*params, *grid, &SolverOptions::default())?.solve(horizon, snapshot_every)
}

/// Stationary profile `lambda N(-c, sigma)` sampled on the grid nodes.
pub fn stationary_on_grid(params: &ModelParams, grid: &GridSpec) -> Vec<f64> {
    grid.nodes().iter().map(|&x| stationary_profile(params, x)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub l1: f64,
    pub linf: f64,
}

/// Discrete residual of the stationary equation
/// `(sigma^2/2) F'' + c sigma F' + (1 - x^2/2 - lambda) F` at interior nodes.
pub fn residual_stationary(params: &ModelParams, grid: &GridSpec) -> Residual {
    let f = stationary_on_grid(params, grid);
    let nodes = grid.nodes();
    let dx = grid.dx();
    let d = 0.5 * params.sigma * params.sigma;
    let v = params.sigma * params.c;
    let lambda = params.lambda();
    let mut l1 = 0.0;
    let mut linf: f64 = 0.0;
    for i in 1..grid.n_cells {
        let x = nodes[i];
        let r = d * (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (dx * dx)
            + v * (f[i + 1] - f[i - 1]) / (2.0 * dx)
            + (1.0 - 0.5 * x * x - lambda) * f[i];
        l1 += r.abs() * dx;
        linf = linf.max(r.abs());
    }
    Residual { l1, linf }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> ModelParams {
        ModelParams::new(0.32, 1.0, 250).unwrap()
    }

    #[test]
    fn default_grid() {
        let g = GridSpec::default_for(&fig1());
        assert!((g.half_width - (1.0 + 8.0 * 0.32f64.sqrt())).abs() < 1e-15);
        assert_eq!(g.nodes().len(), 2049);
        assert!(g.covers_stationary_bulk(&fig1()));
        assert!(GridSpec::new(1.0, 2, 1e-3).is_err());
    }

    #[test]
    fn tridiagonal_solve() {
        // [2 -1 0; -1 2 -1; 0 -1 2] x = [1, 0, 1] -> x = [1, 1, 1]
        let t = Tridiagonal::new(-1.0, 2.0, -1.0, 3);
        let mut b = vec![1.0, 0.0, 1.0];
        t.solve_in_place(&mut b);
        for v in b {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn residual_is_small_and_second_order() {
        let p = fig1();
        let g = GridSpec::default_for(&p);
        let r = residual_stationary(&p, &g);
        assert!(r.linf <= 1e-5, "{r:?}");
        let coarse = residual_stationary(&p, &g.with_cells(512));
        let fine = residual_stationary(&p, &g.with_cells(1024));
        let ratio = coarse.l1 / fine.l1;
        assert!((ratio - 4.0).abs() < 0.2, "{ratio}");
    }

    #[test]
    fn residual_for_non_persistent_params() {
        let p = ModelParams::new(0.32, 1.5, 10).unwrap();
        let r = residual_stationary(&p, &GridSpec::default_for(&p));
        assert!(r.l1.is_finite() && r.linf.is_finite());
    }

    #[test]
    fn zero_stays_zero() {
        let p = fig1();
        let g = GridSpec::default_for(&p).with_cells(256);
        let out = solve_moving_frame(&p, &vec![0.0; 257], 1.0, &g, &SolverOptions::default()).unwrap();
        assert!(out.last().unwrap().values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stability_violation_detected() {
        let p = fig1();
        let g = GridSpec::new(20.0, 256, 0.05).unwrap();
        let err = solve_moving_frame(&p, &vec![0.0; 257], 1.0, &g, &SolverOptions::default());
        assert!(matches!(err, Err(Error::StabilityViolation { .. })));
    }

    #[test]
    fn negative_initial_data_rejected() {
        let p = fig1();
        let g = GridSpec::default_for(&p).with_cells(16);
        let mut init = vec![0.0; 17];
        init[5] = -1.0;
        assert!(solve_moving_frame(&p, &init, 0.1, &g, &SolverOptions::default()).is_err());
    }

    #[test]
    fn mean_offspring_starts_at_one() {
        let p = fig1();
        let g = GridSpec::default_for(&p).with_cells(256);
        let out = solve_mean_offspring(&p, 0.01, &g, 10).unwrap();
        assert!(out[0].values.iter().all(|&v| v == 1.0));
        assert_eq!(out[0].time, 0.0);
    }

    fn mean_offspring_error(p: &ModelParams, grid: &GridSpec, horizon: f64) -> f64 {
        let out = solve_mean_offspring(p, horizon, grid, usize::MAX).unwrap();
        let last = out.last().unwrap();
        grid.nodes()
            .iter()
            .zip(&last.values)
            .filter(|(x, _)| (-3.0..=1.0).contains(*x))
            .map(|(&x, &v)| {
                let exact = mean_offspring(p, last.time, x).unwrap();
                (v - exact).abs() / exact
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn mean_offspring_converges_first_order_in_time() {
        let p = fig1();
        let g = GridSpec::default_for(&p);
        let coarse = mean_offspring_error(&p, &GridSpec { dt: 4e-4, ..g }, 1.0);
        let fine = mean_offspring_error(&p, &GridSpec { dt: 2e-4, ..g }, 1.0);
        let ratio = coarse / fine;
        assert!((ratio - 2.0).abs() < 0.2, "{coarse} {fine} {ratio}");
    }

    #[test]
    fn upwind_is_less_accurate_than_central() {
        let p = fig1();
        let g = GridSpec::default_for(&p).with_cells(512);
        let f = stationary_on_grid(&p, &g);
        let run = |transport| {
            let opts = SolverOptions {
                transport,
                snapshot_every: 10_000,
                ..SolverOptions::default()
            };
            let out = solve_moving_frame(&p, &f, 2.0, &g, &opts).unwrap();
            out.last().unwrap().l1_distance(&f)
        };
        assert!(run(Transport::Central) < run(Transport::Upwind));
    }
}
