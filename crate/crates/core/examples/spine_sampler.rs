//! Exact spine paths against the closed-form marginals and covariance.

use movopt::analytics::{spine_covariance, spine_marginal, SpineSampler};
use movopt::rng;
use movopt::stats::{covariance_estimate, gaussian_fit};
use movopt::ModelParams;

fn main() -> movopt::Result<()> {
    let p = ModelParams::new(0.32, 1.0, 250)?;
    let horizon = 10.0;
    let grid: Vec<f64> = (0..=10).map(|k| k as f64).collect();
    let sampler = SpineSampler::new(&p, horizon, &grid)?;
    let mut r = rng::stream(3, 0);
    let paths: Vec<Vec<f64>> = (0..20_000).map(|_| sampler.sample(&mut r)).collect();

    println!("   t    mean (exact)        variance (exact)");
    for (k, &t) in grid.iter().enumerate() {
        let col: Vec<f64> = paths.iter().map(|p| p[k]).collect();
        let fit = gaussian_fit(&col)?;
        let law = spine_marginal(&p, horizon, t)?;
        println!(
            "{t:>4}  {:>8.4} ({:>7.4})   {:.4} ({:.4})",
            fit.mean, law.mean, fit.variance, law.variance
        );
    }
    let a: Vec<f64> = paths.iter().map(|p| p[4]).collect();
    let b: Vec<f64> = paths.iter().map(|p| p[6]).collect();
    let cov = covariance_estimate(&a, &b)?;
    println!(
        "Cov(Y_4, Y_6) = {:.4} ± {:.4}, exact {:.4}",
        cov.estimate,
        cov.std_error,
        spine_covariance(&p, horizon, 4.0, 6.0)?
    );
    Ok(())
}
