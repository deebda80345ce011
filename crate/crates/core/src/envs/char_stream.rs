use crate::error::{Error, Result};
use crate::unit::SignalVector;

/// Endless one-hot stream over a byte corpus. The alphabet is the sorted set
/// of distinct corpus bytes plus a trailing UNK slot.
#[derive(Debug, Clone, PartialEq)]
pub struct CharStreamEnv {
    corpus: Vec<u8>,
    alphabet: Vec<u8>,
    index: [Option<usize>; 256],
    cursor: usize,
}

impl CharStreamEnv {
    pub fn new(corpus: Vec<u8>) -> Result<Self> {
        let mut alphabet = corpus.clone();
        alphabet.sort_unstable();
        alphabet.dedup();
        Self::with_alphabet(corpus, alphabet)
    }

    /// Uses a fixed alphabet; corpus bytes outside it map to UNK.
    pub fn with_alphabet(corpus: Vec<u8>, alphabet: Vec<u8>) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::contract("corpus is empty"));
        }
        let mut index = [None; 256];
        for (i, &b) in alphabet.iter().enumerate() {
            if index[b as usize].is_some() {
                return Err(Error::contract(format!("alphabet repeats byte {b}")));
            }
            index[b as usize] = Some(i);
        }
        Ok(CharStreamEnv {
            corpus,
            alphabet,
            index,
            cursor: 0,
        })
    }

    /// Alphabet size plus one for UNK.
    pub fn dim(&self) -> usize {
        self.alphabet.len() + 1
    }

    pub fn alphabet(&self) -> &[u8] {
        &self.alphabet
    }

    pub fn unk_index(&self) -> usize {
        self.alphabet.len()
    }

    pub fn corpus_len(&self) -> usize {
        self.corpus.len()
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn set_cursor(&mut self, cursor: usize) -> Result<()> {
        if cursor >= self.corpus.len() {
            return Err(Error::contract(format!("cursor {cursor} beyond corpus of {}", self.corpus.len())));
        }
        self.cursor = cursor;
        Ok(())
    }

    pub fn symbol_index(&self, byte: u8) -> usize {
        self.index[byte as usize].unwrap_or(self.alphabet.len())
    }

    /// One-hot of the symbol under the cursor; the cursor then advances and
    /// wraps at the corpus end.
    pub fn next_symbol(&mut self) -> (SignalVector, u8) {
        let b = self.corpus[self.cursor];
        self.cursor = (self.cursor + 1) % self.corpus.len();
        (SignalVector::one_hot(self.dim(), self.symbol_index(b)), b)
    }

    /// Frequency of the most common symbol: the accuracy of always guessing it.
    pub fn unigram_mode_rate(&self) -> f64 {
        let mut counts = vec![0usize; self.dim()];
        for &b in &self.corpus {
            counts[self.symbol_index(b)] += 1;
        }
        *counts.iter().max().unwrap_or(&0) as f64 / self.corpus.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alternating_two_symbols() {
        let mut env = CharStreamEnv::new(b"ab".to_vec()).unwrap();
        assert_eq!(env.dim(), 3);
        let seq: Vec<u8> = (0..5).map(|_| env.next_symbol().1).collect();
        assert_eq!(seq, b"ababa");
        env.set_cursor(1).unwrap();
        assert_eq!(env.next_symbol().0, SignalVector::one_hot(3, 1));
        assert_eq!(env.next_symbol().0, SignalVector::one_hot(3, 0));
    }

    #[test]
    fn alphabet_is_sorted_distinct_plus_unk() {
        let env = CharStreamEnv::new(b"aab".to_vec()).unwrap();
        assert_eq!(env.alphabet(), b"ab");
        assert_eq!(env.dim(), 3);
        assert!((env.unigram_mode_rate() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn unknown_bytes_map_to_unk() {
        let mut env = CharStreamEnv::with_alphabet(b"axb".to_vec(), b"ab".to_vec()).unwrap();
        env.next_symbol();
        assert_eq!(env.next_symbol().0, SignalVector::one_hot(3, 2));
    }

    #[test]
    fn empty_corpus_rejected() {
        assert!(CharStreamEnv::new(Vec::new()).is_err());
    }

    #[test]
    fn cursor_visits_t_mod_c() {
        let mut env = CharStreamEnv::new(b"hello world".to_vec()).unwrap();
        for t in 0..40 {
            assert_eq!(env.cursor(), t % 11);
            env.next_symbol();
        }
    }
}
