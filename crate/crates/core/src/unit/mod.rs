//! The universal building block: a next-vector predictor (AR) and a
//! `k`-input summarizer (AE), each trained online from its own error only.

pub mod audit;
mod ae;
mod ar;
mod map;
mod signal;

pub use ae::{AeConfig, AeInit, AeUnit, IDENTITY_NOISE, IDENTITY_SCALE};
pub use ar::{ArConfig, ArUnit};
pub use audit::UnitTag;
pub use map::{default_hidden, ForwardTrace, MapGradients, TrainableMap, INIT_SCALE};
pub use signal::SignalVector;
