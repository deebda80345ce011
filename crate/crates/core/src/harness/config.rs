//! Line-oriented `key = value` run configuration with `[section]` headers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Int,
    Real,
    Bool,
    Str,
    /// Comma-separated non-negative integers; may be empty.
    IntList,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Int => "integer",
            Kind::Real => "real",
            Kind::Bool => "boolean",
            Kind::Str => "string",
            Kind::IntList => "integer list",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(u64),
    Real(f64),
    Bool(bool),
    Str(String),
    IntList(Vec<u64>),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Real(v) => write!(f, "{v:?}"),
            Value::Bool(v) => write!(f, "{v}"),
            Value::Str(v) => write!(f, "{v}"),
            Value::IntList(v) => {
                let parts: Vec<String> = v.iter().map(u64::to_string).collect();
                write!(f, "{}", parts.join(","))
            }
        }
    }
}

pub struct KeySpec {
    pub section: &'static str,
    pub key: &'static str,
    pub kind: Kind,
    pub default: &'static str,
    pub doc: &'static str,
}

macro_rules! keys {
    ($(($s:literal, $k:literal, $kind:ident, $d:literal, $doc:literal)),* $(,)?) => {
        &[$(KeySpec { section: $s, key: $k, kind: Kind::$kind, default: $d, doc: $doc }),*]
    };
}

/// Every accepted key with its default.
pub const KEYS: &[KeySpec] = keys![
    ("general", "seed", Int, "1", "root seed for every random stream"),
    ("general", "ticks", Int, "0", "run length; 0 picks the experiment's own default"),
    ("general", "out_dir", Str, "runs/out", "artifact directory (MHPM_OUT overrides the default)"),
    ("general", "resume", Str, "", "charlm checkpoint to resume from"),
    ("graph", "L", Int, "3", "chain depth"),
    ("graph", "k", Int, "4", "inputs per summary"),
    ("graph", "dims", IntList, "16,16,16", "summary width per layer, bottom first"),
    ("graph", "ar_hidden", IntList, "", "AR hidden width per layer; empty for 2*max(in,out)"),
    ("graph", "ae_hidden", IntList, "", "AE hidden width per layer; empty for 2*max(in,out)"),
    ("graph", "window_len", Int, "0", "AR window; 0 means k"),
    ("graph", "base_lr", Real, "0.02", "unmodulated learning rate"),
    ("modulation", "alpha", Real, "1.0", "trace-to-multiplier gain"),
    ("modulation", "tau", Real, "25.0", "trace decay constant in ticks"),
    ("modulation", "m_min", Real, "0.0", "lower multiplier clamp"),
    ("modulation", "m_max", Real, "5.0", "upper multiplier clamp"),
    ("modulation", "intrinsic_gain", Real, "0.1", "weight of prediction-improvement reward"),
    ("modulation", "err_smooth", Real, "0.05", "EMA factor of the error baseline"),
    ("env", "corpus_path", Str, "", "plain-text corpus; empty uses the synthetic generator"),
    ("env", "corpus_len", Int, "500000", "synthetic corpus length in bytes"),
    ("env", "corpus_seed", Int, "7", "synthetic corpus seed, shared across run seeds"),
    ("env", "log_every", Int, "100", "charlm logging cadence in ticks"),
    ("env", "mode", Str, "pro", "saccade task mode for single-mode runs"),
    ("env", "speed", Real, "0.01", "target speed per tick"),
    ("env", "r_fov", Real, "0.05", "foveation radius"),
    ("env", "noise_sigma", Real, "0.01", "retinal offset noise"),
    ("env", "max_step", Real, "0.1", "largest gaze move per axis"),
    ("env", "episode_len", Int, "60", "ticks per saccade episode"),
    ("env", "fixation_off", Int, "30", "tick at which fixation ends (overlap, gap)"),
    ("env", "gap_len", Int, "5", "blank ticks in the gap task"),
    ("env", "babble_ticks", Int, "20000", "motor-babbling phase length"),
    ("env", "track_ticks", Int, "20000", "fly-tracking phase length"),
    ("env", "explore_sigma", Real, "0.05", "exploration noise of learned gaze"),
    ("env", "policy_lr", Real, "0.1", "fly-tracking learner base rate"),
    ("env", "train_episodes", Int, "600", "arbitration training episodes"),
    ("env", "train_modes", Str, "all", "comma-separated task modes cycled in arbitration training"),
    ("env", "gaze_lr", Real, "0.03", "arbitration learned gaze base rate"),
    ("env", "eval_episodes", Int, "20", "held-out episodes per task mode"),
    ("env", "epsilon", Real, "0.5", "arbitrator exploration rate"),
    ("env", "arb_lr", Real, "0.1", "arbitrator base rate"),
    ("env", "M", Int, "30", "skinner trials"),
    ("env", "W", Int, "8", "episode half-window; also the inter-trial length"),
    ("env", "capacity", Int, "32", "stored episodes"),
    ("env", "salience", Real, "0.5", "salience threshold on |reward|"),
    ("env", "replay", Bool, "true", "enable replay between trials"),
    ("env", "replay_passes", Int, "20", "replay passes per trial"),
    ("env", "replay_boost", Real, "1.0", "replay learning-rate boost"),
    ("env", "press_lr", Real, "0.02", "button learner base rate"),
    ("env", "beta", Real, "10.0", "button policy inverse temperature"),
    ("env", "gc_instances", Int, "20", "gradcheck instances per unit kind"),
    ("env", "gc_max_dim", Int, "8", "gradcheck largest dimension"),
    ("env", "gc_step", Real, "1e-5", "finite-difference step"),
];

fn spec(section: &str, key: &str) -> Option<&'static KeySpec> {
    KEYS.iter().find(|s| s.section == section && s.key == key)
}

fn parse_value(kind: Kind, raw: &str) -> Option<Value> {
    match kind {
        Kind::Int => raw.parse().ok().map(Value::Int),
        Kind::Real => raw.parse::<f64>().ok().filter(|v| v.is_finite()).map(Value::Real),
        Kind::Bool => match raw {
            "true" => Some(Value::Bool(true)),
            "false" => Some(Value::Bool(false)),
            _ => None,
        },
        Kind::Str => Some(Value::Str(raw.to_string())),
        Kind::IntList => {
            if raw.is_empty() {
                return Some(Value::IntList(Vec::new()));
            }
            raw.split(',')
                .map(|p| p.trim().parse().ok())
                .collect::<Option<Vec<u64>>>()
                .map(Value::IntList)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<(String, String), Value>,
    explicit: BTreeSet<(String, String)>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let values = KEYS
            .iter()
            .map(|s| {
                let v = parse_value(s.kind, s.default).expect("defaults parse");
                ((s.section.to_string(), s.key.to_string()), v)
            })
            .collect();
        RunConfig {
            values,
            explicit: BTreeSet::new(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut section: Option<String> = None;
        for (i, line) in text.lines().enumerate() {
            let n = i + 1;
            let line = match line.find('#') {
                Some(p) => &line[..p],
                None => line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .ok_or_else(|| Error::Config(format!("line {n}: malformed section header")))?;
                if !KEYS.iter().any(|s| s.section == name) {
                    return Err(Error::Config(format!("line {n}: unknown section [{name}]")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, raw) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .filter(|(k, _)| !k.is_empty())
                .ok_or_else(|| Error::Config(format!("line {n}: expected `key = value`")))?;
            let sec = section
                .as_deref()
                .ok_or_else(|| Error::Config(format!("line {n}: key `{key}` outside any section")))?;
            cfg.set(sec, key, raw).map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("line {n}: {m}")),
                other => other,
            })?;
        }
        Ok(cfg)
    }

    /// Sets one key from its textual form, as a config line would.
    pub fn set(&mut self, section: &str, key: &str, raw: &str) -> Result<()> {
        let s = spec(section, key).ok_or_else(|| Error::Config(format!("unknown key `{key}` in [{section}]")))?;
        let v = parse_value(s.kind, raw)
            .ok_or_else(|| Error::Config(format!("key `{key}` expects {}, got `{raw}`", s.kind.name())))?;
        let id = (section.to_string(), key.to_string());
        self.values.insert(id.clone(), v);
        self.explicit.insert(id);
        Ok(())
    }

    pub fn is_explicit(&self, section: &str, key: &str) -> bool {
        self.explicit.contains(&(section.to_string(), key.to_string()))
    }

    fn get(&self, section: &str, key: &str) -> &Value {
        self.values
            .get(&(section.to_string(), key.to_string()))
            .unwrap_or_else(|| panic!("no key [{section}] {key}"))
    }

    pub fn int(&self, section: &str, key: &str) -> u64 {
        match self.get(section, key) {
            Value::Int(v) => *v,
            other => panic!("[{section}] {key} is not an integer: {other:?}"),
        }
    }

    pub fn usize(&self, section: &str, key: &str) -> usize {
        self.int(section, key) as usize
    }

    pub fn real(&self, section: &str, key: &str) -> f64 {
        match self.get(section, key) {
            Value::Real(v) => *v,
            other => panic!("[{section}] {key} is not a real: {other:?}"),
        }
    }

    pub fn bool(&self, section: &str, key: &str) -> bool {
        match self.get(section, key) {
            Value::Bool(v) => *v,
            other => panic!("[{section}] {key} is not a boolean: {other:?}"),
        }
    }

    pub fn str(&self, section: &str, key: &str) -> &str {
        match self.get(section, key) {
            Value::Str(v) => v,
            other => panic!("[{section}] {key} is not a string: {other:?}"),
        }
    }

    pub fn int_list(&self, section: &str, key: &str) -> &[u64] {
        match self.get(section, key) {
            Value::IntList(v) => v,
            other => panic!("[{section}] {key} is not an integer list: {other:?}"),
        }
    }

    pub fn seed(&self) -> u64 {
        self.int("general", "seed")
    }

    /// `[general] ticks`, or `default` when it is 0.
    pub fn ticks_or(&self, default: u64) -> u64 {
        match self.int("general", "ticks") {
            0 => default,
            t => t,
        }
    }

    /// Every effective key, defaults included, in a form [`Self::parse`]
    /// accepts.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let mut current = "";
        for s in KEYS {
            if s.section != current {
                if !current.is_empty() {
                    out.push('\n');
                }
                out.push_str(&format!("[{}]\n", s.section));
                current = s.section;
            }
            out.push_str(&format!("{} = {}\n", s.key, self.get(s.section, s.key)));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_gives_defaults() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c.seed(), 1);
        assert_eq!(c.int("graph", "k"), 4);
        assert_eq!(c.int("graph", "L"), 3);
        assert_eq!(c.real("modulation", "tau"), 25.0);
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn type_error_names_key() {
        let e = RunConfig::parse("[graph]\nk = x\n").unwrap_err().to_string();
        assert!(e.contains("`k`") && e.contains("integer") && e.contains("line 2"), "{e}");
    }

    #[test]
    fn later_duplicate_wins() {
        let c = RunConfig::parse("[graph]\nk = 2\nk = 5 # again\n").unwrap();
        assert_eq!(c.int("graph", "k"), 5);
        assert!(c.is_explicit("graph", "k"));
        assert!(!c.is_explicit("graph", "L"));
    }

    #[test]
    fn malformed_and_unknown() {
        let e = RunConfig::parse("# hi\n[general]\nseed 4\n").unwrap_err().to_string();
        assert!(e.contains("line 3"), "{e}");
        let e = RunConfig::parse("[general]\nsed = 4\n").unwrap_err().to_string();
        assert!(e.contains("`sed`"), "{e}");
        assert!(RunConfig::parse("seed = 4\n").is_err());
        assert!(RunConfig::parse("[nope]\n").is_err());
        assert!(RunConfig::parse("[general\n").is_err());
    }

    #[test]
    fn echo_round_trips() {
        let mut c = RunConfig::parse("[graph]\ndims = 8, 4\nbase_lr = 0.125\n[env]\nreplay = false\n").unwrap();
        c.set("general", "out_dir", "/tmp/x").unwrap();
        let back = RunConfig::parse(&c.echo()).unwrap();
        assert_eq!(back.echo(), c.echo());
        assert_eq!(back.int_list("graph", "dims"), &[8, 4]);
        assert!(!back.bool("env", "replay"));
        for s in KEYS {
            assert!(c.echo().contains(&format!("{} = ", s.key)));
        }
    }
}
