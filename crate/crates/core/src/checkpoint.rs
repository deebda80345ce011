//! Versioned text checkpoint: a header line, then one line per named flat
//! array, then `end`.
//!
//! ```text
//! mhpm-checkpoint 1
//! f64 node0/ar 3 0.1 -0.25 1e-7
//! u64 graph/tick 1 64
//! end
//! ```
//!
//! Reals use the shortest representation that parses back to the same bits.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub const HEADER: &str = "mhpm-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Entry {
    Reals(Vec<f64>),
    Ints(Vec<u64>),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    entries: Vec<(String, Entry)>,
}

impl Checkpoint {
    pub fn new() -> Self {
        Self::default()
    }

    fn put(&mut self, name: &str, entry: Entry) {
        assert!(
            !name.is_empty() && !name.contains(char::is_whitespace),
            "checkpoint names must be non-empty and whitespace-free"
        );
        match self.entries.iter_mut().find(|(n, _)| n == name) {
            Some(slot) => slot.1 = entry,
            None => self.entries.push((name.to_string(), entry)),
        }
    }

    pub fn put_reals(&mut self, name: &str, values: Vec<f64>) {
        self.put(name, Entry::Reals(values));
    }

    pub fn put_ints(&mut self, name: &str, values: Vec<u64>) {
        self.put(name, Entry::Ints(values));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.iter().any(|(n, _)| n == name)
    }

    pub fn reals(&self, name: &str) -> Result<&[f64]> {
        match self.entries.iter().find(|(n, _)| n == name) {
            Some((_, Entry::Reals(v))) => Ok(v),
            Some(_) => Err(Error::contract(format!("checkpoint entry {name} is not real-valued"))),
            None => Err(Error::contract(format!("checkpoint has no entry {name}"))),
        }
    }

    pub fn ints(&self, name: &str) -> Result<&[u64]> {
        match self.entries.iter().find(|(n, _)| n == name) {
            Some((_, Entry::Ints(v))) => Ok(v),
            Some(_) => Err(Error::contract(format!("checkpoint entry {name} is not integer-valued"))),
            None => Err(Error::contract(format!("checkpoint has no entry {name}"))),
        }
    }

    pub fn int(&self, name: &str) -> Result<u64> {
        match self.ints(name)? {
            [v] => Ok(*v),
            other => Err(Error::dims("checkpoint scalar", 1, other.len())),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{HEADER} {VERSION}\n");
        for (name, entry) in &self.entries {
            match entry {
                Entry::Reals(v) => {
                    let _ = write!(out, "f64 {name} {}", v.len());
                    for x in v {
                        let _ = write!(out, " {x:?}");
                    }
                }
                Entry::Ints(v) => {
                    let _ = write!(out, "u64 {name} {}", v.len());
                    for x in v {
                        let _ = write!(out, " {x}");
                    }
                }
            }
            out.push('\n');
        }
        out.push_str("end\n");
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::contract(format!("checkpoint line {line}: {msg}"));
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, l)) if l == format!("{HEADER} {VERSION}") => {}
            _ => return Err(bad(1, "missing or unsupported header")),
        }
        let mut ckpt = Checkpoint::new();
        for (no, line) in lines {
            if line == "end" {
                return Ok(ckpt);
            }
            let mut parts = line.split_ascii_whitespace();
            let kind = parts.next().ok_or_else(|| bad(no, "empty line"))?;
            let name = parts.next().ok_or_else(|| bad(no, "missing name"))?;
            let count: usize = parts
                .next()
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| bad(no, "missing count"))?;
            let values: Vec<&str> = parts.collect();
            if values.len() != count {
                return Err(bad(no, &format!("expected {count} values, found {}", values.len())));
            }
            match kind {
                "f64" => {
                    let v = values
                        .iter()
                        .map(|s| s.parse::<f64>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| bad(no, "bad real"))?;
                    ckpt.put_reals(name, v);
                }
                "u64" => {
                    let v = values
                        .iter()
                        .map(|s| s.parse::<u64>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| bad(no, "bad integer"))?;
                    ckpt.put_ints(name, v);
                }
                _ => return Err(bad(no, "unknown entry kind")),
            }
        }
        Err(Error::contract("checkpoint truncated: no end line"))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}
