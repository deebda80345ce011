//! Cortical nodes wired into chains and merges, driven by a multi-rate clock.
//!
//! Every node owns an AR predictor and an AE summarizer. A node fires when it
//! receives an input: external data for leaves, a child's summary for inner
//! nodes, or the merged summaries of all its children for merge nodes. After
//! `k` firings its AE emits a summary to every parent. Each node's latest AR
//! prediction is published to its children, which read it as context from the
//! next tick on.

mod graph;
mod node;

pub use graph::{build_chain, tick_counts, ChainConfig, HeterarchyGraph, Inputs, LayerDims, NodeRecord, TickReport};
pub use node::{CorticalNode, MergeConfig, NodeConfig, NodeId, Role};
