pub mod checkpoint;
pub mod envs;
pub mod error;
pub mod gradcheck;
pub mod harness;
pub mod heterarchy;
pub mod hippocampus;
pub mod instincts;
pub mod modulation;
pub mod seed;
pub mod unit;

pub use error::{Error, Result};
