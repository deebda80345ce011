use crate::error::Result;
use crate::seed;
use crate::unit::{AeConfig, AeInit, AeUnit, ArConfig, ArUnit, SignalVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct NodeId(pub usize);

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "node{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeConfig {
    /// Inputs per AE summary.
    pub k: usize,
    pub input_dim: usize,
    pub summary_dim: usize,
    /// AR window length; defaults to `k`.
    pub window_len: Option<usize>,
    pub ar_hidden: Option<usize>,
    pub ae_hidden: Option<usize>,
    /// Initialization of the node's AE and, for merge nodes, the merge AE.
    pub ae_init: AeInit,
    pub base_lr: f64,
}

impl NodeConfig {
    pub fn new(k: usize, input_dim: usize, summary_dim: usize, base_lr: f64) -> Self {
        NodeConfig {
            k,
            input_dim,
            summary_dim,
            window_len: None,
            ar_hidden: None,
            ae_hidden: None,
            ae_init: AeInit::Uniform,
            base_lr,
        }
    }
}

/// A merge node is configured like any node; its `input_dim` is the size the
/// children's concatenated summaries are compressed to.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeConfig {
    pub node: NodeConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Role {
    Leaf { channel: String },
    Inner { child: Option<NodeId> },
    Merge { children: Vec<NodeId>, merge_ae: AeUnit },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorticalNode {
    pub(crate) id: NodeId,
    pub(crate) cfg: NodeConfig,
    pub(crate) seed: u64,
    pub(crate) ar: ArUnit,
    pub(crate) ae: AeUnit,
    pub(crate) role: Role,
    pub(crate) parents: Vec<NodeId>,
    pub(crate) in_buffer: Vec<SignalVector>,
    pub(crate) feedback_in: SignalVector,
    pub(crate) last_prediction: SignalVector,
    pub(crate) fire_count: u64,
    pub(crate) emit_count: u64,
    pub(crate) feedback_enabled: bool,
}

impl CorticalNode {
    pub(crate) fn new(id: NodeId, cfg: NodeConfig, graph_seed: u64, role: Role) -> Result<Self> {
        let seed = seed::derive(graph_seed, &id.to_string());
        let ar = build_ar(&cfg, 0, seed)?;
        let ae = AeUnit::new(
            &AeConfig {
                k: cfg.k,
                input_dim: cfg.input_dim,
                summary_dim: cfg.summary_dim,
                hidden_dim: cfg.ae_hidden,
                base_lr: cfg.base_lr,
                init: cfg.ae_init,
            },
            &mut seed::stream(seed, "ae"),
        )?;
        Ok(CorticalNode {
            id,
            last_prediction: SignalVector::zeros(cfg.input_dim),
            cfg,
            seed,
            ar,
            ae,
            role,
            parents: Vec::new(),
            in_buffer: Vec::new(),
            feedback_in: SignalVector::zeros(0),
            fire_count: 0,
            emit_count: 0,
            feedback_enabled: true,
        })
    }

    pub(crate) fn merge_ae(cfg: &NodeConfig, merged_dim: usize, seed: u64) -> Result<AeUnit> {
        AeUnit::new(
            &AeConfig {
                k: 1,
                input_dim: merged_dim,
                summary_dim: cfg.input_dim,
                hidden_dim: cfg.ae_hidden,
                base_lr: cfg.base_lr,
                init: cfg.ae_init,
            },
            &mut seed::stream(seed, "merge"),
        )
    }

    /// Rebuilds the AR unit for a new context size. Only valid before the
    /// node has fired.
    pub(crate) fn resize_context(&mut self, context_dim: usize) -> Result<()> {
        self.ar = build_ar(&self.cfg, context_dim, self.seed)?;
        self.feedback_in = SignalVector::zeros(context_dim);
        Ok(())
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn config(&self) -> &NodeConfig {
        &self.cfg
    }

    pub fn ar(&self) -> &ArUnit {
        &self.ar
    }

    pub fn ae(&self) -> &AeUnit {
        &self.ae
    }

    pub fn role(&self) -> &Role {
        &self.role
    }

    pub fn parents(&self) -> &[NodeId] {
        &self.parents
    }

    pub fn in_buffer(&self) -> &[SignalVector] {
        &self.in_buffer
    }

    /// Context used at the most recent firing.
    pub fn feedback_in(&self) -> &SignalVector {
        &self.feedback_in
    }

    /// Prediction of this node's own next input, as published to children.
    pub fn last_prediction(&self) -> &SignalVector {
        &self.last_prediction
    }

    /// Number of inputs this node has processed.
    pub fn fire_count(&self) -> u64 {
        self.fire_count
    }

    /// Number of summaries this node has sent upward.
    pub fn emit_count(&self) -> u64 {
        self.emit_count
    }

    pub fn feedback_enabled(&self) -> bool {
        self.feedback_enabled
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.role, Role::Leaf { .. })
    }
}

fn build_ar(cfg: &NodeConfig, context_dim: usize, seed: u64) -> Result<ArUnit> {
    ArUnit::new(
        &ArConfig {
            window_len: cfg.window_len.unwrap_or(cfg.k),
            input_dim: cfg.input_dim,
            context_dim,
            hidden_dim: cfg.ar_hidden,
            base_lr: cfg.base_lr,
        },
        &mut seed::stream(seed, "ar"),
    )
}
