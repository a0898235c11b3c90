#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod crossval;
pub mod dataset;
pub mod error;
pub mod lp;
pub mod prob;
pub mod share;
pub mod synth;

pub use error::ModelError;
