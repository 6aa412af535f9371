//! File formats, ensemble experiments and the `lss` command line for
//! adjoint least-squares shadowing. The numerics live in [`lss_core`].

pub mod cli;
pub mod config;
mod error;
pub mod experiments;
pub mod io;
pub mod plot;

pub use cli::run_cli;
pub use error::{Error, Result};
