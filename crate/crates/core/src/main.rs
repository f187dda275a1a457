use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use movopt::commands;
use movopt::config::ConfigFile;
use movopt::validate::{self, Budget, Fault, ValidateOptions};
use movopt::{Frame, Result};

const SCHEMAS: &str = "\
Output files (CSV with a header row, columns in this order; floats carry 17 significant digits):
  events.csv           id, parent_id, child_rank, birth_time, death_time   (empty parent_id: root; empty death_time: alive at T)
  traits.csv           id, t, x_moving                                     (moving-frame trait at each recording time)
  mass.csv             t, mass                                             (N_t / K on the recording grid)
  lineages.csv         sample_id, t, value, frame, direction               (frame: moving|fixed; direction: forward|reversed, reversed t is T - t)
  stationary.csv       x, density
  pde.csv              t, x, f
  mean_offspring.csv   t, x, m
  spine_marginals.csv  t, mean, variance
  spine_paths.csv      sample_id, t, value
  manifest.json        config echo, seed, version, outputs, timings
  report.json          per-criterion pass/fail with measured values and margins";

#[derive(Parser)]
#[command(name = "movopt", version, about = "Population under a moving optimum: simulate, export and validate", after_help = SCHEMAS)]
struct Cli {
    /// Worker threads (default: number of cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Output directory.
    #[arg(long, global = true, env = "MOVOPT_OUT_DIR", default_value = "out")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,

    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ConfigFile> {
        let mut cfg = ConfigFile::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FrameArg {
    Moving,
    Fixed,
}

impl From<FrameArg> for Frame {
    fn from(f: FrameArg) -> Self {
        match f {
            FrameArg::Moving => Frame::Moving,
            FrameArg::Fixed => Frame::Fixed,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BudgetArg {
    Smoke,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    Sigma,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation; writes events.csv, traits.csv, mass.csv, manifest.json.
    Simulate(ConfigArgs),

    /// Sample lineages from a finished run (--run-dir) or from a batch of
    /// fresh runs (--config with --replicates); writes lineages.csv.
    Lineages {
        /// Output directory of a previous `simulate`.
        #[arg(long, conflicts_with = "config")]
        run_dir: Option<PathBuf>,

        #[arg(long, requires = "replicates")]
        config: Option<PathBuf>,

        /// Independent runs, one sampled lineage each.
        #[arg(long)]
        replicates: Option<usize>,

        /// Lineages sampled (with replacement) from the run in --run-dir.
        #[arg(long, default_value_t = 1)]
        n_samples: usize,

        #[arg(long, value_enum, default_value = "moving")]
        frame: FrameArg,

        #[arg(long)]
        seed: Option<u64>,
    },

    /// Export spine marginal curves, exact spine paths and the stationary profile.
    Spine {
        #[command(flatten)]
        config: ConfigArgs,

        #[arg(long, default_value_t = 1000)]
        n_paths: usize,
    },

    /// Export the finite-difference solution, stationary profile and mean-offspring table.
    Pde {
        #[command(flatten)]
        config: ConfigArgs,

        /// Initial condition as a multiple of the stationary profile.
        #[arg(long, default_value_t = 1.0)]
        init_scale: f64,

        #[arg(long, default_value_t = 1.0)]
        snapshot_interval: f64,
    },

    /// Run the acceptance suite; writes report.json, exit code 0 iff every criterion passes.
    Validate {
        #[arg(long, value_enum, default_value = "full")]
        budget: BudgetArg,

        #[arg(long)]
        seed: Option<u64>,

        /// Corrupt one sub-check to confirm the suite can fail.
        #[arg(long, value_enum)]
        inject_fault: Option<FaultArg>,
    },
}

fn execute(cli: Cli) -> Result<bool> {
    let out = cli.out_dir;
    match cli.command {
        Command::Simulate(args) => {
            let m = commands::simulate(&args.load()?, &out)?;
            eprintln!("wrote {} files to {}", m.outputs.len(), out.display());
        }
        Command::Lineages {
            run_dir,
            config,
            replicates,
            n_samples,
            frame,
            seed,
        } => {
            let m = match (run_dir, config) {
                (Some(dir), None) => commands::lineages_from_run(&dir, &out, n_samples, frame.into(), seed)?,
                (None, Some(path)) => {
                    let args = ConfigArgs { config: path, seed };
                    commands::lineages_batch(&args.load()?, replicates.unwrap_or(1), frame.into(), &out)?
                }
                _ => {
                    return Err(movopt::Error::Malformed(
                        "lineages needs either --run-dir or --config with --replicates".into(),
                    ))
                }
            };
            eprintln!("wrote {} files to {}", m.outputs.len(), out.display());
        }
        Command::Spine { config, n_paths } => {
            let m = commands::spine(&config.load()?, n_paths, &out)?;
            eprintln!("wrote {} files to {}", m.outputs.len(), out.display());
        }
        Command::Pde {
            config,
            init_scale,
            snapshot_interval,
        } => {
            let m = commands::pde(&config.load()?, init_scale, snapshot_interval, &out)?;
            eprintln!("wrote {} files to {}", m.outputs.len(), out.display());
        }
        Command::Validate {
            budget,
            seed,
            inject_fault,
        } => {
            let budget = match budget {
                BudgetArg::Smoke => Budget::Smoke,
                BudgetArg::Full => Budget::Full,
            };
            let mut opts = ValidateOptions::new(budget, out.join("scratch"));
            if let Some(s) = seed {
                opts.seed = s;
            }
            opts.fault = inject_fault.map(|FaultArg::Sigma| Fault::Sigma);
            let report = validate::run_all(&opts, |c| println!("{}", c.summary_line()));
            let path = validate::write_report(&report, &out)?;
            println!(
                "{} ({:.1}s); report: {}",
                if report.passed { "all criteria passed" } else { "FAILED" },
                report.elapsed_secs,
                path.display()
            );
            return Ok(report.passed);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
