//! Population under a moving optimum: an exact individual-based
//! simulator with full genealogical records, closed-form references for
//! the stationary state, the mean-offspring function and the spine, a
//! finite-difference reference solver, and the statistics that tie them
//! together.

pub mod analytics;
pub mod commands;
pub mod config;
pub mod engine;
pub mod error;
pub mod io;
pub mod lineage;
pub mod pde;
pub mod quadrature;
pub mod rng;
pub mod stats;
pub mod validate;

pub use analytics::{GaussianLaw, ModelParams};
pub use config::ConfigFile;
pub use engine::{run, Mode, RecordedHistory, SimConfig};
pub use error::{Error, Result};
pub use lineage::{Direction, Frame, LineagePath};
pub use pde::GridSpec;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
