//! Finite-difference reference: stationarity of F, relaxation of a
//! perturbed profile, and the mean-offspring equation.

use movopt::analytics::mean_offspring;
use movopt::pde::{residual_stationary, solve_mean_offspring, solve_moving_frame, stationary_on_grid, GridSpec, SolverOptions};
use movopt::ModelParams;

fn main() -> movopt::Result<()> {
    let p = ModelParams::new(0.32, 1.0, 250)?;
    let grid = GridSpec::default_for(&p).with_cells(1024);
    println!("stationary residual: {:?}", residual_stationary(&p, &grid));

    let f = stationary_on_grid(&p, &grid);
    let opts = SolverOptions {
        snapshot_every: 10_000,
        ..SolverOptions::default()
    };
    for s in solve_moving_frame(&p, &f, 3.0, &grid, &opts)? {
        println!("from F:    t = {:>4.1}  mass = {:.6}  L1 to F = {:.2e}", s.time, s.integral(), s.l1_distance(&f));
    }
    let bumped: Vec<f64> = f.iter().map(|v| 1.2 * v).collect();
    for s in solve_moving_frame(&p, &bumped, 20.0, &grid, &SolverOptions { snapshot_every: 50_000, ..opts })? {
        println!("from 1.2F: t = {:>4.1}  mass = {:.6}", s.time, s.integral());
    }

    let m = solve_mean_offspring(&p, 1.0, &grid, usize::MAX)?;
    let last = m.last().expect("at least the initial state");
    for (x, v) in grid.nodes().iter().zip(&last.values).filter(|(x, _)| (-2.01..=0.0).contains(*x)).step_by(90) {
        println!("m_1({x:>6.3}): grid {v:.6}, closed form {:.6}", mean_offspring(&p, 1.0, *x)?);
    }
    Ok(())
}
