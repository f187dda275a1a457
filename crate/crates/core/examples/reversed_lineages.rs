//! Lineages of uniformly sampled survivors, reversed in time and fitted
//! with an Ornstein-Uhlenbeck model.

use movopt::engine::SimConfig;
use movopt::lineage::{reverse_path, sample_lineage_batch, Frame};
use movopt::stats::{ou_regress, quasi_stationary_window};
use movopt::ModelParams;

fn main() -> movopt::Result<()> {
    let p = ModelParams::new(0.32, 1.0, 250)?;
    let horizon = 20.0;
    let batch = sample_lineage_batch(&SimConfig::new(p, horizon).with_seed(4), 60, Frame::Moving)?;
    println!("{} runs, {} extinct", batch.runs, batch.extinct_runs);

    let reversed = batch
        .paths
        .iter()
        .map(|(_, l)| reverse_path(l))
        .collect::<movopt::Result<Vec<_>>>()?;
    let first = &reversed[0];
    println!("first reversed lineage, every 2 time units:");
    for (s, y) in first.grid.iter().zip(&first.values).step_by(40) {
        println!("  s = {s:>5.2}  y = {y:>7.4}");
    }

    let window = quasi_stationary_window(p.sigma, horizon);
    let fit = ou_regress(&reversed, Some(window))?;
    println!(
        "OU fit on s in [{:.2}, {:.2}]: a = {:.3} ± {:.3} (expected -sigma = {}), diffusion = {:.3} ± {:.3}",
        window.0, window.1, fit.mean_reversion_hat, fit.mean_reversion_se, -p.sigma, fit.diffusion_hat, fit.diffusion_se
    );
    Ok(())
}
