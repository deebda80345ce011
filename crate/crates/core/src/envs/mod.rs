//! Deterministic, seeded desk-scale environments and prediction scoring.

mod accuracy;
mod action;
mod char_stream;
mod corpus;
mod saccade;
mod skinner;

pub use accuracy::{argmax_accuracy, rank_accuracy, DistractorPool, DISTRACTORS, POOL_CAPACITY};
pub use action::{Action, Button};
pub use char_stream::CharStreamEnv;
pub use corpus::synthetic_corpus;
pub use saccade::{FixationColor, SaccadeConfig, SaccadeEnv, SaccadeObservation, TaskMode};
pub use skinner::{SkinnerBoxEnv, SkinnerObservation};
