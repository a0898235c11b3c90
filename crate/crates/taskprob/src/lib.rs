//! Files, parallel cross-validation and the command line on top of
//! `taskprob-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod output;
pub mod parallel;
pub mod pipeline;

pub use config::RunConfig;
pub use error::AppError;
