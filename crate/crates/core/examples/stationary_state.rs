//! Closed-form stationary state, persistence and critical speed.

use movopt::analytics::{check_persistence, mean_offspring, stationary_state};
use movopt::ModelParams;

fn main() -> movopt::Result<()> {
    let p = ModelParams::new(0.32, 1.0, 250)?;
    let f = stationary_state(&p)?;
    println!("sigma = {}, c = {}", p.sigma, p.c);
    println!("lambda = {:.4}, mode at {}, variance {}", f.mass, f.shape.mean, f.shape.variance);
    println!("critical speed = {:.4}", p.critical_speed());

    for x in [-2.0, -1.5, -1.0, -0.5, 0.0] {
        println!("  F({x:>4}) = {:.5}   m_1({x:>4}) = {:.5}", f.density(x), mean_offspring(&p, 1.0, x)?);
    }

    for c in [1.0, 1.2, 1.3] {
        let q = ModelParams::new(0.32, c, 250)?;
        let verdict = check_persistence(&q);
        println!("c = {c}: {verdict:?}");
    }
    Ok(())
}
