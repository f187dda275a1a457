//! Closed-form quantities of the moving-optimum model.
//!
//! Traits are in the moving frame: the optimum sits at 0 and the stationary
//! bulk lags at `-c`. Note the convention: the trait variance of the
//! stationary profile is `sigma`, while the diffusion coefficient of an
//! individual trait is `sigma^2`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest exponent we are willing to exponentiate.
pub const MAX_EXPONENT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Mutational standard-deviation parameter.
    pub sigma: f64,
    /// Rescaled speed of the optimum (physical speed is `sigma * c`).
    pub c: f64,
    pub carrying_capacity: u32,
}

impl ModelParams {
    pub fn new(sigma: f64, c: f64, carrying_capacity: u32) -> Result<Self> {
        let p = Self {
            sigma,
            c,
            carrying_capacity,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(invalid("sigma", format!("must be finite and > 0, got {}", self.sigma)));
        }
        if !(self.c.is_finite() && self.c >= 0.0) {
            return Err(invalid("c", format!("must be finite and >= 0, got {}", self.c)));
        }
        if self.carrying_capacity == 0 {
            return Err(invalid("carrying_capacity", "must be >= 1"));
        }
        Ok(())
    }

    /// `c^2/2 + sigma/2`, the lag load plus the variance load.
    pub fn load(&self) -> f64 {
        0.5 * self.c * self.c + 0.5 * self.sigma
    }

    /// Stationary mass `1 - c^2/2 - sigma/2`. Not positive when the
    /// population cannot persist.
    pub fn lambda(&self) -> f64 {
        1.0 - self.load()
    }

    pub fn persists(&self) -> bool {
        self.load() < 1.0
    }

    /// Speed above which the population collapses, `(2 - sigma)^{1/2}`,
    /// or 0 when `sigma >= 2`.
    pub fn critical_speed(&self) -> f64 {
        if self.sigma < 2.0 {
            (2.0 - self.sigma).sqrt()
        } else {
            0.0
        }
    }

    /// Drift of the optimum in the fixed frame.
    pub fn frame_speed(&self) -> f64 {
        self.sigma * self.c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianLaw {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianLaw {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(invalid("mean", "must be finite"));
        }
        if !(variance.is_finite() && variance > 0.0) {
            return Err(invalid("variance", format!("must be finite and > 0, got {variance}")));
        }
        Ok(Self { mean, variance })
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        let z = x - self.mean;
        -0.5 * z * z / self.variance - 0.5 * (2.0 * PI * self.variance).ln()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        0.5 * statrs::function::erf::erfc(-(x - self.mean) / (2.0 * self.variance).sqrt())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.mean + self.std_dev() * z
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Persistence {
    pub persists: bool,
    pub critical_speed: f64,
}

pub fn check_persistence(params: &ModelParams) -> Persistence {
    Persistence {
        persists: params.persists(),
        critical_speed: params.critical_speed(),
    }
}

/// The positive steady state `F = mass * N(-c, sigma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryState {
    pub mass: f64,
    pub shape: GaussianLaw,
}

impl StationaryState {
    pub fn density(&self, x: f64) -> f64 {
        self.mass * self.shape.pdf(x)
    }

    pub fn ln_density(&self, x: f64) -> f64 {
        self.mass.ln() + self.shape.ln_pdf(x)
    }
}

pub fn stationary_state(params: &ModelParams) -> Result<StationaryState> {
    if !params.persists() {
        return Err(Error::NonPersistent { load: params.load() });
    }
    Ok(StationaryState {
        mass: params.lambda(),
        shape: GaussianLaw::new(-params.c, params.sigma)?,
    })
}

/// Profile `lambda * N(-c, sigma)` evaluated with whatever sign `lambda`
/// has; used for residual checks on non-persistent parameters.
pub fn stationary_profile(params: &ModelParams, x: f64) -> f64 {
    let z = x + params.c;
    params.lambda() / (2.0 * PI * params.sigma).sqrt() * (-z * z / (2.0 * params.sigma)).exp()
}

/// `log m_t(x)`.
///
/// The exponent `((x+c)^2 - (x+c e^{-σt})^2 (1+tanh σt)) / (2σ)` is
/// rearranged as `((u-v)(u+v) - tanh(σt) v^2) / (2σ)` with `u - v = c(1 - e^{-σt})`
/// so the two large squares never cancel numerically.
pub fn log_mean_offspring(params: &ModelParams, t: f64, x: f64) -> f64 {
    let s = params.sigma;
    let th = (s * t).tanh();
    let u = x + params.c;
    let gap = -params.c * (-s * t).exp_m1();
    let v = u - gap;
    let exponent = (gap * (u + v) - th * v * v) / (2.0 * s);
    0.5 * th.ln_1p() + exponent
}

/// Expected number of time-`t` descendants of one individual at trait `x`
/// in the frozen-competition branching process.
///
/// Exponents below `-MAX_EXPONENT` are clamped (the value change is below
/// 1e-300); exponents above it are an error.
pub fn mean_offspring(params: &ModelParams, t: f64, x: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(invalid("t", format!("must be >= 0, got {t}")));
    }
    let lm = log_mean_offspring(params, t, x);
    if lm > MAX_EXPONENT {
        return Err(Error::ExponentOverflow { exponent: lm });
    }
    Ok(lm.max(-MAX_EXPONENT).exp())
}

fn check_window(horizon: f64, t: f64) -> Result<()> {
    if !(0.0..=horizon).contains(&t) {
        return Err(Error::OutOfWindow { t, horizon });
    }
    Ok(())
}

/// Drift of the forward spine SDE at time `t` for horizon `horizon`. The
/// diffusion coefficient is always `sigma`.
pub fn spine_drift(params: &ModelParams, horizon: f64, t: f64, x: f64) -> Result<f64> {
    check_window(horizon, t)?;
    let s = params.sigma;
    let r = s * (horizon - t);
    Ok(-s * r.tanh() * x - s * params.c / r.cosh())
}

/// Law of the spine at time `t`, started from the size-biased law `m_T F / lambda`.
pub fn spine_marginal(params: &ModelParams, horizon: f64, t: f64) -> Result<GaussianLaw> {
    check_window(horizon, t)?;
    let s = params.sigma;
    let r = s * (horizon - t);
    GaussianLaw::new(-params.c * (-r).exp(), s / (1.0 + r.tanh()))
}

/// `d/dx log p(t, x)` for the spine marginal density.
pub fn spine_log_density_slope(params: &ModelParams, horizon: f64, t: f64, x: f64) -> Result<f64> {
    check_window(horizon, t)?;
    let s = params.sigma;
    let r = s * (horizon - t);
    Ok(-(x + params.c * (-r).exp()) * (1.0 + r.tanh()) / s)
}

/// `cosh(x) / cosh(y)` for `x, y >= 0` without overflow.
fn cosh_ratio(x: f64, y: f64) -> f64 {
    (x - y).exp() * (1.0 + (-2.0 * x).exp()) / (1.0 + (-2.0 * y).exp())
}

/// `Cov(Y_s, Y_t)` for the spine started from the size-biased law.
///
/// Written as `cosh(σ(T-t'))/cosh(σT) * (v0 cosh(σ(T-s'))/cosh(σT) + σ sinh(σ s'))`
/// with `s' <= t'`, which has no cancellation for large `σT`.
pub fn spine_covariance(params: &ModelParams, horizon: f64, s: f64, t: f64) -> Result<f64> {
    check_window(horizon, s)?;
    check_window(horizon, t)?;
    let sg = params.sigma;
    let big = sg * horizon;
    let var0 = sg / (1.0 + big.tanh());
    let (early, late) = (s.min(t), s.max(t));
    let a = sg * (horizon - early);
    let b = sg * (horizon - late);
    Ok(cosh_ratio(b, big) * (var0 * cosh_ratio(a, big) + sg * (sg * early).sinh()))
}

/// Drift of the time-reversed spine. Independent of `c` and of the horizon.
pub fn reversed_drift(params: &ModelParams, x: f64) -> f64 {
    -params.sigma * x
}

/// Exact sampler of spine paths on a fixed time grid, built from the
/// explicit Gaussian solution of the spine SDE.
#[derive(Debug, Clone)]
pub struct SpineSampler {
    initial: GaussianLaw,
    /// cosh(σ(T-t)) / cosh(σT)
    scale: Vec<f64>,
    /// deterministic part -c sinh(σt) / cosh(σT)
    shift: Vec<f64>,
    /// cosh(σ(T-t_k)) / cosh(σ(T-t_{k-1})), with t_{-1} = 0
    carry: Vec<f64>,
    /// std-dev of the fresh noise entering between grid points
    step_sd: Vec<f64>,
}

impl SpineSampler {
    pub fn new(params: &ModelParams, horizon: f64, grid: &[f64]) -> Result<Self> {
        params.validate()?;
        if grid.is_empty() {
            return Err(invalid("grid", "must be non-empty"));
        }
        for w in grid.windows(2) {
            if !(w[1] > w[0]) {
                return Err(invalid("grid", "must be strictly increasing"));
            }
        }
        for &t in grid {
            check_window(horizon, t)?;
        }
        let sg = params.sigma;
        let big = sg * horizon;
        let initial = spine_marginal(params, horizon, 0.0)?;
        let n = grid.len();
        let (mut scale, mut shift) = (Vec::with_capacity(n), Vec::with_capacity(n));
        let (mut carry, mut step_sd) = (Vec::with_capacity(n), Vec::with_capacity(n));
        let mut prev = (0.0, big);
        for &t in grid {
            let r = sg * (horizon - t);
            scale.push(cosh_ratio(r, big));
            shift.push(-params.c * ((-r).exp() - (-sg * t - big).exp()) / (1.0 + (-2.0 * big).exp()));
            let ratio = cosh_ratio(r, prev.1);
            carry.push(ratio);
            step_sd.push((sg * (sg * (t - prev.0)).sinh() * ratio).sqrt());
            prev = (t, r);
        }
        Ok(Self {
            initial,
            scale,
            shift,
            carry,
            step_sd,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let y0 = self.initial.sample(rng);
        let mut noise = 0.0;
        (0..self.scale.len())
            .map(|k| {
                let z: f64 = rng.sample(StandardNormal);
                noise = self.carry[k] * noise + self.step_sd[k] * z;
                self.scale[k] * y0 + self.shift[k] + noise
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;

    fn fig1() -> ModelParams {
        ModelParams::new(0.32, 1.0, 250).unwrap()
    }

    #[test]
    fn persistence_examples() {
        let p = check_persistence(&fig1());
        assert!(p.persists);
        let boundary = ModelParams::new(2.0, 0.0, 1).unwrap();
        assert!(!check_persistence(&boundary).persists);
        assert_eq!(boundary.critical_speed(), 0.0);
    }

    #[test]
    fn critical_speed_matches_bisection() {
        // root of c -> 1 - c^2/2 - sigma/2 by bisection, independent of the closed form
        let sigma = 0.32;
        let g = |c: f64| 1.0 - c * c / 2.0 - sigma / 2.0;
        let (mut lo, mut hi) = (0.0_f64, 2.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        assert!((fig1().critical_speed() - lo).abs() < 1e-12);
        assert!((lo - 1.296_148_139_681_572).abs() < 1e-12);
    }

    #[test]
    fn critical_speed_is_the_persistence_boundary() {
        for sigma in [0.05, 0.32, 1.0, 1.9] {
            let cs = ModelParams::new(sigma, 0.0, 1).unwrap().critical_speed();
            assert!(ModelParams::new(sigma, cs * 0.999, 1).unwrap().persists());
            assert!(!ModelParams::new(sigma, cs * 1.001, 1).unwrap().persists());
        }
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(ModelParams::new(0.0, 1.0, 10).is_err());
        assert!(ModelParams::new(0.3, -0.1, 10).is_err());
        assert!(ModelParams::new(0.3, 0.1, 0).is_err());
        assert!(GaussianLaw::new(0.0, 0.0).is_err());
    }

    #[test]
    fn stationary_state_values() {
        let p = fig1();
        let f = stationary_state(&p).unwrap();
        assert!((f.mass - 0.34).abs() < 1e-15);
        assert_eq!(f.shape.mean, -1.0);
        let peak = f.density(-1.0);
        assert!((peak - 0.34 / (2.0 * PI * 0.32).sqrt()).abs() < 1e-15);
        let width = 12.0 * p.sigma.sqrt();
        let q = integrate(|x| f.density(x), -1.0 - width, -1.0 + width, 1e-14, 0.0);
        assert!((q.value - 0.34).abs() < 1e-10, "{}", q.value);

        let dead = ModelParams::new(0.32, 1.3, 250).unwrap();
        assert!(matches!(stationary_state(&dead), Err(Error::NonPersistent { .. })));
    }

    #[test]
    fn mean_offspring_at_zero_is_one() {
        let p = fig1();
        for x in [-50.0, -3.0, -1.0, 0.0, 0.7, 50.0] {
            assert!((mean_offspring(&p, 0.0, x).unwrap() - 1.0).abs() < 1e-15);
        }
        assert!(mean_offspring(&p, -1.0, 0.0).is_err());
    }

    #[test]
    fn mean_offspring_reference_value() {
        // Crank-Nicolson integration of the m-equation from m_0 = 1
        // (dx = 4e-3, dt = 1e-3) gave 0.9815520; tests/pde_oracles.rs runs the
        // same comparison live against our own solver.
        let m = mean_offspring(&fig1(), 1.0, -1.0).unwrap();
        assert!((m - 0.981_552_0).abs() < 1e-5, "{m}");
    }

    #[test]
    fn mass_invariant_by_quadrature() {
        let p = fig1();
        let f = stationary_state(&p).unwrap();
        let w = 12.0 * p.sigma.sqrt();
        for t in [0.25, 0.5, 1.0, 4.0, 5.0] {
            let q = integrate(
                |x| (log_mean_offspring(&p, t, x) + f.ln_density(x)).exp(),
                -p.c - w,
                -p.c + w,
                1e-14,
                0.0,
            );
            assert!((q.value - f.mass).abs() < 1e-8, "t={t}: {}", q.value);
        }
    }

    #[test]
    fn mean_offspring_finite_over_wide_range() {
        let p = fig1();
        for t in [0.0, 0.01, 1.0, 10.0, 100.0] {
            for x in [-50.0, -10.0, 0.0, 10.0, 50.0] {
                let m = mean_offspring(&p, t, x).unwrap();
                assert!(m.is_finite() && m > 0.0, "t={t} x={x} m={m}");
            }
        }
        let err = mean_offspring(&p, 1.0, -1e7);
        assert!(matches!(err, Err(Error::ExponentOverflow { .. })) || err.unwrap().is_finite());
    }

    #[test]
    fn spine_drift_limits() {
        let p = fig1();
        for x in [-2.0, 0.0, 3.0] {
            assert!((spine_drift(&p, 5.0, 5.0, x).unwrap() + 0.32).abs() < 1e-15);
            let far = spine_drift(&p, 200.0, 0.0, x).unwrap();
            assert!((far + 0.32 * x).abs() < 1e-12);
        }
        assert!(matches!(spine_drift(&p, 5.0, 5.5, 0.0), Err(Error::OutOfWindow { .. })));
        assert!(spine_drift(&p, 5.0, -0.1, 0.0).is_err());
    }

    #[test]
    fn spine_drift_matches_log_derivative_of_m() {
        // b(t,x) = -σc + σ² ∂x log m_{T-t}(x), by central differences on log m
        let p = fig1();
        let (horizon, eps) = (10.0, 1e-5);
        let expected = -0.32 / 3.2_f64.cosh();
        for (t, x) in [(0.0, 0.0), (3.0, -1.5), (9.0, 0.8), (10.0, -0.2)] {
            let tau = horizon - t;
            let d = (log_mean_offspring(&p, tau, x + eps) - log_mean_offspring(&p, tau, x - eps)) / (2.0 * eps);
            let fd = -p.sigma * p.c + p.sigma * p.sigma * d;
            let b = spine_drift(&p, horizon, t, x).unwrap();
            assert!((b - fd).abs() < 1e-8, "t={t} x={x}: {b} vs {fd}");
        }
        assert!((spine_drift(&p, horizon, 0.0, 0.0).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn spine_marginal_endpoints() {
        let p = fig1();
        let t_big = 10.0;
        let start = spine_marginal(&p, t_big, 0.0).unwrap();
        assert!((start.mean + (-3.2_f64).exp()).abs() < 1e-15);
        assert!((start.variance - 0.32 / (1.0 + 3.2_f64.tanh())).abs() < 1e-15);
        let end = spine_marginal(&p, t_big, t_big).unwrap();
        assert_eq!(end.mean, -1.0);
        assert_eq!(end.variance, 0.32);
        let far = spine_marginal(&p, 500.0, 0.0).unwrap();
        assert!((far.variance - 0.16).abs() < 1e-12);
    }

    #[test]
    fn initial_spine_law_is_size_biased_stationary_law() {
        // Y0 ~ m_T F / λ: compare mean and variance by quadrature
        let p = fig1();
        let f = stationary_state(&p).unwrap();
        for horizon in [0.5, 2.0, 10.0] {
            let w = 14.0 * p.sigma.sqrt();
            let dens = |x: f64| (log_mean_offspring(&p, horizon, x) + f.ln_density(x)).exp() / f.mass;
            let m0 = integrate(dens, -1.0 - w, -1.0 + w, 1e-14, 0.0).value;
            let m1 = integrate(|x| x * dens(x), -1.0 - w, -1.0 + w, 1e-14, 0.0).value;
            let m2 = integrate(|x| x * x * dens(x), -1.0 - w, -1.0 + w, 1e-14, 0.0).value;
            let law = spine_marginal(&p, horizon, 0.0).unwrap();
            assert!((m0 - 1.0).abs() < 1e-10);
            assert!((m1 - law.mean).abs() < 1e-10);
            assert!((m2 - m1 * m1 - law.variance).abs() < 1e-10);
        }
    }

    #[test]
    fn spine_marginal_agrees_with_explicit_solution() {
        // mean/variance of a(t) Y0 + d(t) + σ cosh(σ(T-t)) ∫ dB/cosh(σ(T-s))
        for (sigma, c, horizon) in [(0.32, 1.0, 10.0), (0.1, 0.4, 3.0), (1.0, 0.2, 1.5)] {
            let p = ModelParams::new(sigma, c, 100).unwrap();
            let big = sigma * horizon;
            let y0_mean = -c * (-big).exp();
            let y0_var = sigma / (1.0 + big.tanh());
            for k in 0..=8 {
                let t = horizon * k as f64 / 8.0;
                let r = sigma * (horizon - t);
                let a = r.cosh() / big.cosh();
                let mean = a * y0_mean + c * r.cosh() * (r.tanh() - big.tanh());
                let var = a * a * y0_var + r.cosh().powi(2) * sigma * (big.tanh() - r.tanh());
                let law = spine_marginal(&p, horizon, t).unwrap();
                assert!((law.mean - mean).abs() < 1e-12, "{} vs {mean}", law.mean);
                assert!((law.variance - var).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn covariance_diagonal_is_marginal_variance() {
        let p = fig1();
        for t in [0.0, 1.0, 4.0, 9.5, 10.0] {
            let v = spine_marginal(&p, 10.0, t).unwrap().variance;
            let cv = spine_covariance(&p, 10.0, t, t).unwrap();
            assert!((v - cv).abs() < 1e-12);
        }
        let c0 = spine_covariance(&p, 10.0, 0.0, 0.0).unwrap();
        assert!((c0 - 0.32 / (1.0 + 3.2_f64.tanh())).abs() < 1e-15);
        let a = spine_covariance(&p, 10.0, 4.0, 6.0).unwrap();
        let b = spine_covariance(&p, 10.0, 6.0, 4.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn time_reversal_recovers_homogeneous_ou() {
        // b^r(t,x) = -b(T-t,x) + σ² ∂x log p(T-t,x)
        let p = fig1();
        let horizon = 10.0;
        for t in [0.1, 1.0, horizon / 2.0] {
            for x in [-2.0, 0.0, 2.0] {
                let b = spine_drift(&p, horizon, horizon - t, x).unwrap();
                let slope = spine_log_density_slope(&p, horizon, horizon - t, x).unwrap();
                let br = -b + p.sigma * p.sigma * slope;
                assert!((br - reversed_drift(&p, x)).abs() < 1e-10, "t={t} x={x}: {br}");
            }
        }
        assert_eq!(reversed_drift(&p, 0.0), 0.0);
        assert!((reversed_drift(&p, 1.0) + 0.32).abs() < 1e-15);
    }

    #[test]
    fn log_slope_matches_gaussian_density() {
        let p = fig1();
        let law = spine_marginal(&p, 10.0, 7.0).unwrap();
        let eps = 1e-6;
        for x in [-1.0, 0.3] {
            let fd = (law.ln_pdf(x + eps) - law.ln_pdf(x - eps)) / (2.0 * eps);
            let s = spine_log_density_slope(&p, 10.0, 7.0, x).unwrap();
            assert!((fd - s).abs() < 1e-7);
        }
    }

    #[test]
    fn sampler_moments_are_exact_even_for_long_horizons() {
        for (p, horizon) in [(fig1(), 10.0), (ModelParams::new(1.2, 0.0, 1).unwrap(), 18.0)] {
            let grid: Vec<f64> = (0..=12).map(|k| horizon * k as f64 / 12.0).collect();
            let sp = SpineSampler::new(&p, horizon, &grid).unwrap();
            let y0 = &sp.initial;
            let mut v = Vec::new();
            let mut acc = 0.0;
            for k in 0..grid.len() {
                acc = sp.carry[k] * sp.carry[k] * acc + sp.step_sd[k] * sp.step_sd[k];
                v.push(acc);
            }
            for j in 0..grid.len() {
                let m = spine_marginal(&p, horizon, grid[j]).unwrap();
                assert!((sp.scale[j] * y0.mean + sp.shift[j] - m.mean).abs() < 1e-12);
                let mut prod = 1.0;
                for k in j..grid.len() {
                    if k > j {
                        prod *= sp.carry[k];
                    }
                    let implied = sp.scale[j] * sp.scale[k] * y0.variance + prod * v[j];
                    let exact = spine_covariance(&p, horizon, grid[j], grid[k]).unwrap();
                    assert!((implied - exact).abs() < 1e-12 * exact.abs().max(1.0), "{j} {k}: {implied} vs {exact}");
                }
                assert!((spine_covariance(&p, horizon, grid[j], grid[j]).unwrap() - m.variance).abs() < 1e-12);
            }
        }
    }
}
