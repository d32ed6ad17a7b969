//! File formats, batch simulation, analysis reports and the command-line
//! front end for `replisync-core`.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod logfile;
pub mod plot;
pub mod report;
pub mod table;
pub mod wire;

pub use error::CliError;
