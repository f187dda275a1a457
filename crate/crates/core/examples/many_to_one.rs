//! Many-to-one formula: the expected number of time-T descendants of one
//! individual in the frozen-competition process, three ways.

use movopt::analytics::mean_offspring;
use movopt::engine::{replicate_seed, run, FeynmanKac, InitialCondition, Mode, Observable, SimConfig};
use movopt::stats::McEstimate;
use movopt::ModelParams;

fn main() -> movopt::Result<()> {
    let p = ModelParams::new(0.32, 1.0, 250)?;
    let (x0, horizon) = (-1.0, 1.0);
    let base = SimConfig::new(p, horizon)
        .with_mode(Mode::Frozen { lambda: p.lambda() })
        .with_init(InitialCondition::PointMass { x0, n0: 1 });

    let counts: Vec<f64> = (0..4000)
        .map(|i| run(&base.clone().with_seed(replicate_seed(11, i))).map(|h| h.alive_at_end().len() as f64))
        .collect::<movopt::Result<_>>()?;
    let branching = McEstimate::from_samples(&counts)?;
    let fk = FeynmanKac::new(p, 1e-3, 5)?.estimate(x0, horizon, horizon, Observable::One, 20_000)?;
    let exact = mean_offspring(&p, horizon, x0)?;

    println!("E[N_T | x0 = {x0}], T = {horizon}");
    println!("  branching runs : {:.4} ± {:.4}", branching.estimate, branching.std_error);
    println!("  Feynman-Kac    : {:.4} ± {:.4}", fk.estimate, fk.std_error);
    println!("  closed form    : {exact:.4}");
    println!("  z(branching, FK) = {:.2}", branching.z_score(&fk));
    Ok(())
}
