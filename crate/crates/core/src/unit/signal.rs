use crate::error::{Error, Result};

/// Fixed-dimension real vector exchanged between units.
///
/// Values are always finite and the dimension never changes after creation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SignalVector(Vec<f64>);

impl SignalVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("signal vector"));
        }
        Ok(SignalVector(values))
    }

    pub fn zeros(dim: usize) -> Self {
        SignalVector(vec![0.0; dim])
    }

    pub fn one_hot(dim: usize, index: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[index] = 1.0;
        SignalVector(v)
    }

    /// Concatenates the parts in order.
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a SignalVector>) -> Self {
        let mut out = Vec::new();
        for p in parts {
            out.extend_from_slice(&p.0);
        }
        SignalVector(out)
    }

    /// Splits into `count` equal-length pieces. `dim` must be divisible by `count`.
    pub fn split(&self, count: usize) -> Vec<SignalVector> {
        let width = self.0.len() / count;
        self.0
            .chunks(width.max(1))
            .take(count)
            .map(|c| SignalVector(c.to_vec()))
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn distance_sq(&self, other: &SignalVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Index of the largest component; the first wins ties.
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &v) in self.0.iter().enumerate() {
            match best {
                Some((_, b)) if v <= b => {}
                _ => best = Some((i, v)),
            }
        }
        best.map(|(i, _)| i)
    }

    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        SignalVector(values)
    }
}

impl TryFrom<Vec<f64>> for SignalVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        SignalVector::new(values)
    }
}

impl AsRef<[f64]> for SignalVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}
