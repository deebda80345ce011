//! Character-level prediction with a k-ary chain; per-layer AR/AE losses and
//! accuracies logged on a fixed cadence.

use super::config::RunConfig;
use super::metrics::Metrics;
use super::modulator_config;
use crate::checkpoint::Checkpoint;
use crate::envs::{argmax_accuracy, rank_accuracy, synthetic_corpus, CharStreamEnv, DistractorPool, DISTRACTORS};
use crate::error::{Error, Result};
use crate::heterarchy::{build_chain, ChainConfig, HeterarchyGraph, Inputs, LayerDims, NodeRecord};
use crate::modulation::Modulator;
use crate::seed;
use crate::unit::SignalVector;

pub const DEFAULT_TICKS: u64 = 500_000;

/// Sums over the current log window, one per layer.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Window {
    ar_loss: (f64, u64),
    ae_loss: (f64, u64),
    ar_rank: (f64, u64),
    ae_rank: (f64, u64),
    argmax: (f64, u64),
}

impl Window {
    fn fields(&mut self) -> [(&'static str, &mut (f64, u64)); 5] {
        [
            ("ar_loss", &mut self.ar_loss),
            ("ae_loss", &mut self.ae_loss),
            ("ar_rank_acc", &mut self.ar_rank),
            ("ae_rank_acc", &mut self.ae_rank),
            ("argmax_acc", &mut self.argmax),
        ]
    }
}

fn add(acc: &mut (f64, u64), v: f64) {
    acc.0 += v;
    acc.1 += 1;
}

pub struct CharLm {
    env: CharStreamEnv,
    graph: HeterarchyGraph,
    modulator: Modulator,
    pools: Vec<DistractorPool>,
    rng: seed::Rng,
    windows: Vec<Window>,
    log_every: u64,
}

pub fn load_corpus(cfg: &RunConfig) -> Result<Vec<u8>> {
    let path = cfg.str("env", "corpus_path");
    if path.is_empty() {
        let len = cfg.usize("env", "corpus_len");
        if len == 0 {
            return Err(Error::Config("corpus_len must be positive".into()));
        }
        Ok(synthetic_corpus(cfg.int("env", "corpus_seed"), len))
    } else {
        std::fs::read(path).map_err(|e| Error::Io(format!("{path}: {e}")))
    }
}

fn hidden_list(cfg: &RunConfig, key: &str, layers: usize) -> Result<Vec<Option<usize>>> {
    let v = cfg.int_list("graph", key);
    match v.len() {
        0 => Ok(vec![None; layers]),
        n if n == layers => Ok(v.iter().map(|&h| Some(h as usize)).collect()),
        n => Err(Error::Config(format!("[graph] {key} lists {n} widths for {layers} layers"))),
    }
}

/// Chain configuration for a stream of `input_dim`-wide one-hots.
pub fn chain_config(cfg: &RunConfig, input_dim: usize) -> Result<ChainConfig> {
    let layers = cfg.usize("graph", "L");
    let k = cfg.usize("graph", "k");
    let dims = cfg.int_list("graph", "dims");
    if layers == 0 || k == 0 {
        return Err(Error::Config("L and k must be at least 1".into()));
    }
    if dims.len() != layers || dims.contains(&0) {
        return Err(Error::Config(format!(
            "[graph] dims needs {layers} positive widths, got {}",
            dims.len()
        )));
    }
    let mut below = input_dim;
    let layer_dims = dims
        .iter()
        .map(|&d| {
            let l = LayerDims {
                input_dim: below,
                summary_dim: d as usize,
            };
            below = d as usize;
            l
        })
        .collect();
    let mut chain = ChainConfig::new(k, layer_dims, cfg.real("graph", "base_lr"), seed::derive(cfg.seed(), "graph"));
    chain.window_len = match cfg.usize("graph", "window_len") {
        0 => None,
        w => Some(w),
    };
    chain.ar_hidden = hidden_list(cfg, "ar_hidden", layers)?;
    chain.ae_hidden = hidden_list(cfg, "ae_hidden", layers)?;
    Ok(chain)
}

impl CharLm {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        let env = CharStreamEnv::new(load_corpus(cfg)?)?;
        let graph = build_chain(&chain_config(cfg, env.dim())?)?;
        let layers = graph.len();
        let log_every = cfg.int("env", "log_every");
        if log_every == 0 {
            return Err(Error::Config("log_every must be positive".into()));
        }
        Ok(CharLm {
            env,
            graph,
            modulator: Modulator::new(modulator_config(cfg))?,
            pools: vec![DistractorPool::new(); layers],
            rng: seed::stream(cfg.seed(), "charlm/metrics"),
            windows: vec![Window::default(); layers],
            log_every,
        })
    }

    pub fn graph(&self) -> &HeterarchyGraph {
        &self.graph
    }

    pub fn env(&self) -> &CharStreamEnv {
        &self.env
    }

    pub fn tick(&self) -> u64 {
        self.graph.tick()
    }

    fn score(&mut self, layer: usize, rec: &NodeRecord) -> Result<()> {
        let w = &mut self.windows[layer];
        let pool = &mut self.pools[layer];
        let (Some(input), Some(pred), Some(loss)) = (&rec.input, &rec.prediction, rec.ar_loss) else {
            return Ok(());
        };
        add(&mut w.ar_loss, loss);
        if layer == 0 {
            add(&mut w.argmax, argmax_accuracy(pred, input) as f64);
        }
        if let Some(d) = pool.sample(DISTRACTORS, input, &mut self.rng) {
            add(&mut w.ar_rank, rank_accuracy(pred, input, &d)? as f64);
        }
        if let (Some(inputs), Some(recon), Some(ae_loss)) = (&rec.ae_inputs, &rec.reconstruction, rec.ae_loss) {
            add(&mut w.ae_loss, ae_loss);
            let mut hits = 0.0;
            let mut scored = 0;
            for (x, r) in inputs.iter().zip(recon) {
                if let Some(d) = pool.sample(DISTRACTORS, x, &mut self.rng) {
                    hits += rank_accuracy(r, x, &d)? as f64;
                    scored += 1;
                }
            }
            if scored > 0 {
                add(&mut w.ae_rank, hits / scored as f64);
            }
        }
        pool.push(input.clone());
        Ok(())
    }

    fn flush(&mut self, tick: u64, metrics: &mut Metrics) {
        for (l, w) in self.windows.iter_mut().enumerate() {
            let scope = format!("layer{}", l + 1);
            for (name, acc) in w.fields() {
                if acc.1 > 0 {
                    metrics.push(tick, scope.as_str(), name, acc.0 / acc.1 as f64);
                }
                *acc = (0.0, 0);
            }
        }
        metrics.push(tick, "modulator", "factor", self.modulator.factor());
    }

    /// Advances the run until `total` ticks have elapsed.
    pub fn run_until(&mut self, total: u64, metrics: &mut Metrics) -> Result<()> {
        let top = self.graph.len() - 1;
        while self.graph.tick() < total {
            let (x, _) = self.env.next_symbol();
            let mut inputs = Inputs::new();
            inputs.insert("input".into(), x);
            let report = self.graph.step(&inputs, self.modulator.factor())?;
            for l in 0..=top {
                self.score(l, &report.records[l])?;
            }
            self.modulator.step(0.0, report.records[top].ar_loss)?;
            let done = self.graph.tick();
            if done % self.log_every == 0 {
                self.flush(done, metrics);
            }
        }
        Ok(())
    }

    pub fn final_rows(&self, metrics: &mut Metrics) {
        let t = self.graph.tick();
        metrics.push(t, "env", "unigram_mode_rate", self.env.unigram_mode_rate());
        for (l, node) in self.graph.nodes().iter().enumerate() {
            let scope = format!("layer{}", l + 1);
            metrics.push(t, scope.as_str(), "fire_count", node.fire_count() as f64);
            metrics.push(t, scope.as_str(), "emit_count", node.emit_count() as f64);
        }
    }

    pub fn save(&self, ckpt: &mut Checkpoint) {
        self.graph.save_state(ckpt, "graph");
        ckpt.put_ints("env/cursor", vec![self.env.cursor() as u64]);
        ckpt.put_reals(
            "modulator",
            vec![self.modulator.trace.value, self.modulator.baseline.smoothed_err],
        );
        let pos = self.rng.get_word_pos();
        ckpt.put_ints("metrics/rng_word_pos", vec![(pos >> 64) as u64, pos as u64]);
        for (l, pool) in self.pools.iter().enumerate() {
            let items: Vec<&SignalVector> = pool.items().collect();
            ckpt.put_ints(&format!("pool{l}/len"), vec![items.len() as u64]);
            ckpt.put_reals(&format!("pool{l}/items"), SignalVector::concat(items).into_vec());
        }
        for (l, w) in self.windows.iter().enumerate() {
            let mut w = *w;
            let flat: Vec<f64> = w.fields().iter().flat_map(|(_, a)| [a.0, a.1 as f64]).collect();
            ckpt.put_reals(&format!("window{l}"), flat);
        }
    }

    pub fn load(&mut self, ckpt: &Checkpoint) -> Result<()> {
        self.graph.load_state(ckpt, "graph")?;
        self.env.set_cursor(ckpt.int("env/cursor")? as usize)?;
        match ckpt.reals("modulator")? {
            [v, e] => {
                self.modulator.trace.value = *v;
                self.modulator.baseline.smoothed_err = *e;
            }
            other => return Err(Error::dims("modulator state", 2, other.len())),
        }
        match ckpt.ints("metrics/rng_word_pos")? {
            [hi, lo] => self.rng.set_word_pos(((*hi as u128) << 64) | *lo as u128),
            other => return Err(Error::dims("rng position", 2, other.len())),
        }
        for l in 0..self.pools.len() {
            let dim = self.graph.nodes()[l].config().input_dim;
            let n = ckpt.int(&format!("pool{l}/len"))? as usize;
            let flat = ckpt.reals(&format!("pool{l}/items"))?;
            if flat.len() != n * dim {
                return Err(Error::dims("distractor pool", n * dim, flat.len()));
            }
            let mut pool = DistractorPool::new();
            for c in flat.chunks(dim) {
                pool.push(SignalVector::new(c.to_vec())?);
            }
            self.pools[l] = pool;
        }
        for l in 0..self.windows.len() {
            let flat = ckpt.reals(&format!("window{l}"))?;
            let mut w = Window::default();
            if flat.len() != 10 {
                return Err(Error::dims("log window", 10, flat.len()));
            }
            for (i, (_, acc)) in w.fields().into_iter().enumerate() {
                *acc = (flat[2 * i], flat[2 * i + 1] as u64);
            }
            self.windows[l] = w;
        }
        Ok(())
    }
}

/// Summary of one charlm run used by the convergence check.
#[derive(Debug, Clone, PartialEq)]
pub struct CharLmSummary {
    /// Per layer: (first-10% mean, last-10% mean) of AR rank accuracy.
    pub ar_rank: Vec<(f64, f64)>,
    pub ae_rank: Vec<(f64, f64)>,
    /// Layer-1 argmax accuracy (first, last).
    pub argmax: (f64, f64),
    pub unigram_mode_rate: f64,
}

/// Means of the first and last tenth of a series.
pub fn first_last_tenth(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let m = (n / 10).max(1).min(n);
    let mean = |s: &[f64]| if s.is_empty() { f64::NAN } else { s.iter().sum::<f64>() / s.len() as f64 };
    (mean(&values[..m]), mean(&values[n - m..]))
}

pub fn summarize(metrics: &Metrics, layers: usize, unigram_mode_rate: f64) -> CharLmSummary {
    let series = |scope: &str, metric: &str| {
        let v: Vec<f64> = metrics.series(scope, metric).into_iter().map(|(_, v)| v).collect();
        first_last_tenth(&v)
    };
    CharLmSummary {
        ar_rank: (1..=layers).map(|l| series(&format!("layer{l}"), "ar_rank_acc")).collect(),
        ae_rank: (1..=layers).map(|l| series(&format!("layer{l}"), "ae_rank_acc")).collect(),
        argmax: series("layer1", "argmax_acc"),
        unigram_mode_rate,
    }
}

/// Runs charlm to `ticks`, optionally resuming from a checkpoint.
pub fn run(cfg: &RunConfig, ticks: u64, resume: Option<&Checkpoint>) -> Result<(CharLm, Metrics)> {
    let mut lm = CharLm::new(cfg)?;
    if let Some(c) = resume {
        lm.load(c)?;
    }
    let mut metrics = Metrics::default();
    lm.run_until(ticks, &mut metrics)?;
    lm.final_rows(&mut metrics);
    Ok((lm, metrics))
}
