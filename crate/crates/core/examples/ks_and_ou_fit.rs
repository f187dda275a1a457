// Goodness of fit: KS against a Gaussian law, AR(1) fit of exact OU data.
use movopt::analytics::{spine_marginal, SpineSampler};
use movopt::rng;
use movopt::stats::{ks_gaussian, ou_regress_series};
use movopt::ModelParams;
use rand::Rng;
use rand_distr::StandardNormal;

fn main() -> movopt::Result<()> {
    let p = ModelParams::new(0.32, 1.0, 250)?;
    let sampler = SpineSampler::new(&p, 10.0, &[5.0])?;
    let mut r = rng::stream(1, 0);
    let ys: Vec<f64> = (0..5000).map(|_| sampler.sample(&mut r)[0]).collect();
    let law = spine_marginal(&p, 10.0, 5.0)?;
    println!("KS vs spine marginal at t = 5: {:?}", ks_gaussian(&ys, &law)?);
    let wrong = movopt::GaussianLaw::new(law.mean + 0.1, law.variance)?;
    println!("KS vs shifted law:             {:?}", ks_gaussian(&ys, &wrong)?);

    let (delta, sigma) = (0.05, p.sigma);
    let rho = (-sigma * delta).exp();
    let sd = (0.5 * sigma * (1.0 - rho * rho)).sqrt();
    let paths: Vec<Vec<f64>> = (0..300)
        .map(|i| {
            let mut r = rng::stream(2, i);
            let mut y = 0.0;
            (0..200)
                .map(|_| {
                    y = rho * y + sd * r.sample::<f64, _>(StandardNormal);
                    y
                })
                .collect()
        })
        .collect();
    let fit = ou_regress_series(&paths, delta)?;
    println!(
        "OU fit: a = {:.4} ± {:.4}, diffusion = {:.4} ± {:.4} (truth {}, {})",
        fit.mean_reversion_hat, fit.mean_reversion_se, fit.diffusion_hat, fit.diffusion_se, -sigma, sigma
    );
    Ok(())
}
