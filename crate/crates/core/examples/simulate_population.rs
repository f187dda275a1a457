//! Interacting individual-based run with the parameters of the lineage
//! figure, exported as CSV.

use movopt::engine::{run, SimConfig};
use movopt::io;
use movopt::stats::mass_summary;
use movopt::ModelParams;

fn main() -> movopt::Result<()> {
    let p = ModelParams::new(0.32, 1.0, 250)?;
    let cfg = SimConfig::new(p, 10.0).with_seed(1);
    let history = run(&cfg)?;
    history.check_consistency()?;

    for (t, m) in history.recording_times().iter().zip(&history.mass_trajectory).step_by(20) {
        println!("t = {t:>5.2}  N/K = {m:.3}");
    }
    let s = mass_summary(&history, p.lambda(), 2.0, 10.0)?;
    println!("time-averaged mass on [2, 10]: {:.3} (lambda = {:.3})", s.time_average, p.lambda());
    println!("{} individuals ever lived, {} alive at T", history.individuals.len(), history.alive_at_end().len());

    if let Some(&id) = history.alive_at_end().last() {
        println!("Ulam-Harris label of individual {id}: {:?}", history.label(id)?);
    }

    let dir = std::env::temp_dir().join("movopt_simulate_population");
    let files = io::write_history(&dir, &history)?;
    println!("wrote {files:?} to {}", dir.display());
    Ok(())
}
