//! Locally-constant potentials and their Birkhoff sums.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::sft::{enumerate_words, BlockCoding, Sft, Symbol, Word};

/// `φ(x)` depending only on `x_l … x_r`, stored as a table over the
/// admissible words of length `r - l + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    left: i64,
    right: i64,
    values: HashMap<Vec<Symbol>, f64>,
}

impl Potential {
    pub fn new(sft: &Sft, left: i64, right: i64, values: HashMap<Vec<Symbol>, f64>) -> Result<Self> {
        if left > 0 || right < 0 {
            return Err(Error::InvalidPotential(format!(
                "window [{left}, {right}] must contain 0"
            )));
        }
        let span = (right - left + 1) as usize;
        for (w, v) in &values {
            if w.len() != span {
                return Err(Error::InvalidPotential(format!(
                    "entry {} has length {}, window needs {span}",
                    sft.format_symbols(w),
                    w.len()
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidPotential(format!(
                    "value at {} is not finite",
                    sft.format_symbols(w)
                )));
            }
        }
        for w in enumerate_words(sft, span) {
            if !values.contains_key(&w) {
                return Err(Error::InvalidPotential(format!(
                    "missing value for admissible word {}",
                    sft.format_symbols(&w)
                )));
            }
        }
        Ok(Potential {
            left,
            right,
            values,
        })
    }

    /// Builds a potential from a closure over window words.
    pub fn from_fn(sft: &Sft, left: i64, right: i64, f: impl Fn(&[Symbol]) -> f64) -> Result<Self> {
        if left > 0 || right < 0 {
            return Err(Error::InvalidPotential(format!(
                "window [{left}, {right}] must contain 0"
            )));
        }
        let span = (right - left + 1) as usize;
        let values = enumerate_words(sft, span)
            .into_iter()
            .map(|w| {
                let v = f(&w);
                (w, v)
            })
            .collect();
        Self::new(sft, left, right, values)
    }

    pub fn constant(sft: &Sft, c: f64) -> Result<Self> {
        Self::from_fn(sft, 0, 0, |_| c)
    }

    /// The zero potential; its equilibrium state is the measure of maximal entropy.
    pub fn zero(sft: &Sft) -> Self {
        Self::constant(sft, 0.0).expect("zero potential is valid")
    }

    /// `φ(x) = log p_{x_0}`.
    pub fn bernoulli(sft: &Sft, probs: &[f64]) -> Result<Self> {
        if probs.len() != sft.alphabet_size() {
            return Err(Error::InvalidPotential(format!(
                "bernoulli needs {} weights, got {}",
                sft.alphabet_size(),
                probs.len()
            )));
        }
        if probs.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
            return Err(Error::InvalidPotential("bernoulli weights must be positive".into()));
        }
        Self::from_fn(sft, 0, 0, |w| probs[w[0]].ln())
    }

    pub fn window(&self) -> (i64, i64) {
        (self.left, self.right)
    }

    /// Number of coordinates the potential reads.
    pub fn span(&self) -> usize {
        (self.right - self.left + 1) as usize
    }

    /// Value on a window word (`x_l … x_r`).
    pub fn value(&self, window_word: &[Symbol]) -> Option<f64> {
        self.values.get(window_word).copied()
    }

    /// Value read from the first `span` symbols of a longer word, i.e. with the
    /// window shifted to start at coordinate 0.
    pub(crate) fn value_at_prefix(&self, word: &[Symbol]) -> f64 {
        self.values[&word[..self.span()]]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `S_n φ = Σ_{j<n} φ∘σ^j`, read off a word that determines all `n` terms.
    pub fn birkhoff_sum(&self, word: &Word, n: usize) -> Result<f64> {
        if n == 0 {
            return Ok(0.0);
        }
        let need_lo = self.left;
        let need_hi = n as i64 - 1 + self.right;
        if word.anchor() > need_lo || word.end() < need_hi {
            return Err(Error::WordTooShort {
                need_lo,
                need_hi,
                have_lo: word.anchor(),
                have_hi: word.end(),
            });
        }
        let span = self.span();
        let start = (need_lo - word.anchor()) as usize;
        let s = word.symbols();
        (0..n)
            .map(|j| {
                let w = &s[start + j..start + j + span];
                self.value(w)
                    .ok_or_else(|| Error::Inadmissible(format!("{w:?}")))
            })
            .sum()
    }

    /// Memory-1 version on the target of a block coding: block symbol `u`
    /// carries `φ` of its first `span` source symbols. The recoded Birkhoff sums
    /// agree with the original ones after shifting coordinates by `-l`.
    pub fn recode(&self, coding: &BlockCoding) -> Result<Potential> {
        if coding.block_length() < self.span() {
            return Err(Error::BlockTooShort {
                block: coding.block_length(),
                required: self.span(),
            });
        }
        let values = (0..coding.state_count())
            .map(|u| (vec![u], self.value_at_prefix(coding.block(u))))
            .collect();
        Ok(Potential {
            left: 0,
            right: 0,
            values,
        })
    }
}
