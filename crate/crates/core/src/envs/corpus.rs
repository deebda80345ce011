//! Seeded synthetic text: Markov chains over a generated vocabulary.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::seed;

const LETTERS: &[u8] = b"etaoinshrdlcumwfgypbvkjxqz";
const VOCAB: usize = 160;
const SUCCESSORS: usize = 3;

/// `len` bytes of lowercase pseudo-English. Word choice follows a bigram
/// chain with a Zipf fallback, and words end in a space, comma or period.
pub fn synthetic_corpus(seed: u64, len: usize) -> Vec<u8> {
    let mut rng = seed::stream(seed, "corpus");
    let letter_w: Vec<f64> = (0..LETTERS.len()).map(|i| 1.0 / (i as f64 + 2.0)).collect();
    let letters = WeightedIndex::new(&letter_w).expect("positive weights");
    let mut words: Vec<Vec<u8>> = Vec::with_capacity(VOCAB);
    while words.len() < VOCAB {
        let n = rng.gen_range(1..=7);
        let w: Vec<u8> = (0..n).map(|_| LETTERS[letters.sample(&mut rng)]).collect();
        if !words.contains(&w) {
            words.push(w);
        }
    }
    let zipf_w: Vec<f64> = (0..VOCAB).map(|i| 1.0 / (i as f64 + 1.0)).collect();
    let zipf = WeightedIndex::new(&zipf_w).expect("positive weights");
    let successors: Vec<[usize; SUCCESSORS]> = (0..VOCAB)
        .map(|_| std::array::from_fn(|_| zipf.sample(&mut rng)))
        .collect();

    let mut out = Vec::with_capacity(len + 8);
    let mut word = zipf.sample(&mut rng);
    while out.len() < len {
        out.extend_from_slice(&words[word]);
        let r: f64 = rng.gen();
        if r < 0.06 {
            out.extend_from_slice(b". ");
        } else if r < 0.10 {
            out.extend_from_slice(b", ");
        } else {
            out.push(b' ');
        }
        word = if rng.gen_bool(0.8) {
            successors[word][rng.gen_range(0..SUCCESSORS)]
        } else {
            zipf.sample(&mut rng)
        };
    }
    out.truncate(len);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_sized() {
        let a = synthetic_corpus(5, 10_000);
        assert_eq!(a.len(), 10_000);
        assert_eq!(a, synthetic_corpus(5, 10_000));
        assert_ne!(a, synthetic_corpus(6, 10_000));
        assert!(a.iter().all(|b| b.is_ascii_lowercase() || b" .,".contains(b)));
    }
}
