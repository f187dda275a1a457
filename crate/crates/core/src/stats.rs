//! Estimators and goodness-of-fit checks used to compare simulated
//! lineages with the analytic spine and reversed-OU laws.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::analytics::GaussianLaw;
use crate::engine::RecordedHistory;
use crate::error::{Error, Result};
use crate::lineage::{Direction, LineagePath};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub n: usize,
}

impl McEstimate {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let fit = gaussian_fit(samples)?;
        Ok(Self {
            estimate: fit.mean,
            std_error: fit.se_mean,
            n: fit.n,
        })
    }

    /// `|a - b| / sqrt(se_a^2 + se_b^2)`; infinite if both errors vanish and
    /// the estimates differ.
    pub fn z_score(&self, other: &McEstimate) -> f64 {
        let se = self.std_error.hypot(other.std_error);
        let d = (self.estimate - other.estimate).abs();
        if se == 0.0 {
            if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            d / se
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub se_mean: f64,
    pub se_variance: f64,
    pub n: usize,
}

impl GaussianFit {
    /// Fails for degenerate (zero-variance) data.
    pub fn law(&self) -> Result<GaussianLaw> {
        GaussianLaw::new(self.mean, self.variance)
    }
}

pub fn gaussian_fit(samples: &[f64]) -> Result<GaussianFit> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let variance = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (nf - 1.0);
    Ok(GaussianFit {
        mean,
        variance,
        se_mean: (variance / nf).sqrt(),
        se_variance: variance * (2.0 / (nf - 1.0)).sqrt(),
        n,
    })
}

/// Sample covariance of paired samples with its normal-theory standard
/// error `sqrt((var_a var_b + cov^2) / n)`.
pub fn covariance_estimate(a: &[f64], b: &[f64]) -> Result<McEstimate> {
    let n = a.len().min(b.len());
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let fa = gaussian_fit(&a[..n])?;
    let fb = gaussian_fit(&b[..n])?;
    let cov = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - fa.mean) * (y - fb.mean))
        .sum::<f64>()
        / (n as f64 - 1.0);
    Ok(McEstimate {
        estimate: cov,
        std_error: ((fa.variance * fb.variance + cov * cov) / n as f64).sqrt(),
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

pub const KS_MIN_SAMPLES: usize = 20;

/// Survival function of the Kolmogorov distribution, `P(K > x)`.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.18 {
        // Jacobi-theta form converges fast for small x.
        let mut cdf = 0.0;
        for k in 1..=100 {
            let j = (2 * k - 1) as f64;
            cdf += (-j * j * std::f64::consts::PI.powi(2) / (8.0 * x * x)).exp();
        }
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / x * cdf).clamp(0.0, 1.0)
    } else {
        let mut sum = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * x * x).exp();
            sum += if k % 2 == 1 { term } else { -term };
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

/// One-sample Kolmogorov–Smirnov test against a Gaussian law, with the
/// asymptotic p-value.
pub fn ks_gaussian(samples: &[f64], law: &GaussianLaw) -> Result<KsResult> {
    let n = samples.len();
    if n < KS_MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: KS_MIN_SAMPLES,
            got: n,
        });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let nf = n as f64;
    let statistic = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = law.cdf(x);
            (f - i as f64 / nf).max((i + 1) as f64 / nf - f)
        })
        .fold(0.0, f64::max);
    Ok(KsResult {
        statistic,
        p_value: kolmogorov_survival(nf.sqrt() * statistic),
    })
}

/// Pearson chi-square p-value for `counts` under a uniform distribution.
pub fn chi_square_uniform(counts: &[u64]) -> Result<f64> {
    if counts.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: counts.len(),
        });
    }
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let dist = ChiSquared::new((counts.len() - 1) as f64).map_err(|e| Error::Malformed(e.to_string()))?;
    Ok(1.0 - dist.cdf(stat))
}

/// Exact-discretization fit of `dY = a Y ds + sigma dW` from AR(1)
/// regression of `Y_{s+Δ}` on `Y_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuFit {
    pub mean_reversion_hat: f64,
    pub mean_reversion_se: f64,
    pub diffusion_hat: f64,
    pub diffusion_se: f64,
    pub rho_hat: f64,
    pub intercept: f64,
    pub intercept_se: f64,
    pub n_increments: usize,
}

pub const OU_MIN_INCREMENTS: usize = 100;

/// Fits pooled AR(1) pairs `(y_k, y_{k+1})` from every series. All series
/// are sampled with spacing `delta`.
pub fn ou_regress_series<S: AsRef<[f64]>>(series: &[S], delta: f64) -> Result<OuFit> {
    let pairs = || {
        series
            .iter()
            .flat_map(|s| s.as_ref().windows(2).map(|w| (w[0], w[1])))
    };
    let n = pairs().count();
    if n < OU_MIN_INCREMENTS {
        return Err(Error::TooFewSamples {
            needed: OU_MIN_INCREMENTS,
            got: n,
        });
    }
    let nf = n as f64;
    let (sx, sy) = pairs().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / nf, sy / nf);
    let (sxx, sxy) = pairs().fold((0.0, 0.0), |(a, b), (x, y)| {
        (a + (x - mx) * (x - mx), b + (x - mx) * (y - my))
    });
    let rho = sxy / sxx;
    let intercept = my - rho * mx;
    let ssr: f64 = pairs()
        .map(|(x, y)| {
            let e = y - intercept - rho * x;
            e * e
        })
        .sum();
    let resid_var = ssr / (nf - 2.0);
    let rho_se = (resid_var / sxx).sqrt();
    let intercept_se = (resid_var * (1.0 / nf + mx * mx / sxx)).sqrt();
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::NonContracting { rho });
    }
    let a = rho.ln() / delta;
    let a_se = rho_se / (rho * delta);
    let diffusion_sq = resid_var * 2.0 * a.abs() / (1.0 - rho * rho);
    let diffusion = diffusion_sq.sqrt();
    // delta method on ln σ̂ = (ln v + ln g(ρ))/2 with g(ρ) = 2|ln ρ| / (Δ(1-ρ²))
    let dlng = 1.0 / (rho * rho.ln()) + 2.0 * rho / (1.0 - rho * rho);
    let var_ln = 0.25 * (2.0 / (nf - 2.0) + dlng * dlng * rho_se * rho_se);
    Ok(OuFit {
        mean_reversion_hat: a,
        mean_reversion_se: a_se,
        diffusion_hat: diffusion,
        diffusion_se: diffusion * var_ln.sqrt(),
        rho_hat: rho,
        intercept,
        intercept_se,
        n_increments: n,
    })
}

/// Default regression window `[2/sigma, T - 2/sigma]`, trimming the
/// non-stationary regimes at both ends of a reversed lineage.
pub fn quasi_stationary_window(sigma: f64, horizon: f64) -> (f64, f64) {
    (2.0 / sigma, horizon - 2.0 / sigma)
}

/// AR(1) fit on reversed lineage paths restricted to `window` (in reversed
/// time `s`); `None` uses every grid point.
pub fn ou_regress(paths: &[LineagePath], window: Option<(f64, f64)>) -> Result<OuFit> {
    let first = paths.first().ok_or(Error::TooFewSamples {
        needed: OU_MIN_INCREMENTS,
        got: 0,
    })?;
    let delta = first.spacing().ok_or_else(|| Error::Malformed("path has fewer than 2 points".into()))?;
    let mut series = Vec::with_capacity(paths.len());
    for p in paths {
        if p.direction != Direction::Reversed {
            return Err(Error::Malformed("ou_regress expects reversed paths".into()));
        }
        match p.spacing() {
            Some(d) if (d - delta).abs() <= 1e-9 * delta => {}
            _ => return Err(Error::Malformed("paths do not share a grid spacing".into())),
        }
        let tol = 1e-9 * delta;
        let seg: Vec<f64> = p
            .grid
            .iter()
            .zip(&p.values)
            .filter(|(s, _)| window.map_or(true, |(lo, hi)| **s >= lo - tol && **s <= hi + tol))
            .map(|(_, v)| *v)
            .collect();
        series.push(seg);
    }
    ou_regress_series(&series, delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassSummary {
    /// `|mean over the window of <Z,1> - lambda|`.
    pub time_avg_deviation: f64,
    /// `max over the window of |<Z,1> - lambda|`.
    pub max_deviation: f64,
    pub time_average: f64,
}

/// Deviation of the recorded mass `N_t/K` from `lambda` over the grid
/// times in `[t_start, t_end]`.
pub fn mass_summary(history: &RecordedHistory, lambda: f64, t_start: f64, t_end: f64) -> Result<MassSummary> {
    let times = history.recording_times();
    let tol = 1e-9 * history.config.recording_step;
    let window: Vec<f64> = times
        .iter()
        .zip(&history.mass_trajectory)
        .filter(|(t, _)| **t >= t_start - tol && **t <= t_end + tol)
        .map(|(_, m)| *m)
        .collect();
    if window.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let avg = window.iter().sum::<f64>() / window.len() as f64;
    Ok(MassSummary {
        time_avg_deviation: (avg - lambda).abs(),
        max_deviation: window.iter().map(|m| (m - lambda).abs()).fold(0.0, f64::max),
        time_average: avg,
    })
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
