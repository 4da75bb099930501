//! Finite unions of cylinders over a common coordinate window.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::graph;
use crate::sft::{enumerate_words, Sft, Symbol, Word};

/// The set `{x : x_anchor … x_{anchor+len-1} ∈ words}`.
///
/// A depth-`m` set in the usual sense (a union of `(-m, m)`-cylinders) has
/// `anchor = -m` and `len = 2m + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CylinderSet {
    anchor: i64,
    len: usize,
    words: BTreeSet<Vec<Symbol>>,
}

impl CylinderSet {
    pub fn new(
        sft: &Sft,
        anchor: i64,
        len: usize,
        words: impl IntoIterator<Item = Vec<Symbol>>,
    ) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidSet("window length must be >= 1".into()));
        }
        let words: BTreeSet<Vec<Symbol>> = words.into_iter().collect();
        for w in &words {
            if w.len() != len {
                return Err(Error::InvalidSet(format!(
                    "word {} has length {}, window has {len}",
                    sft.format_symbols(w),
                    w.len()
                )));
            }
            if !sft.is_admissible(w) {
                return Err(Error::Inadmissible(sft.format_symbols(w)));
            }
        }
        Ok(CylinderSet { anchor, len, words })
    }

    /// Union of `(-m, m)`-cylinders given by words of length `2m + 1`.
    pub fn at_depth(sft: &Sft, m: usize, words: impl IntoIterator<Item = Vec<Symbol>>) -> Result<Self> {
        Self::new(sft, -(m as i64), 2 * m + 1, words)
    }

    /// Union of arbitrary anchored words, refined to their common window.
    pub fn from_words(sft: &Sft, words: &[Word]) -> Result<Self> {
        let Some(lo) = words.iter().map(Word::anchor).min() else {
            return Err(Error::InvalidSet("no words given".into()));
        };
        let hi = words.iter().map(Word::end).max().unwrap();
        let len = (hi - lo + 1) as usize;
        let mut out = CylinderSet {
            anchor: lo,
            len,
            words: BTreeSet::new(),
        };
        for w in words {
            let single = CylinderSet::new(sft, w.anchor(), w.len(), [w.symbols().to_vec()])?;
            out.words.extend(single.refine(sft, lo, len)?.words);
        }
        Ok(out)
    }

    /// Cylinder of a single word.
    pub fn cylinder(sft: &Sft, word: &Word) -> Result<Self> {
        Self::new(sft, word.anchor(), word.len(), [word.symbols().to_vec()])
    }

    pub fn empty(anchor: i64, len: usize) -> Self {
        CylinderSet {
            anchor,
            len: len.max(1),
            words: BTreeSet::new(),
        }
    }

    pub fn whole(sft: &Sft) -> Self {
        CylinderSet {
            anchor: 0,
            len: 1,
            words: (0..sft.alphabet_size()).map(|s| vec![s]).collect(),
        }
    }

    pub fn anchor(&self) -> i64 {
        self.anchor
    }

    pub fn len(&self) -> usize {
        self.len
    }

    /// Last coordinate of the window.
    pub fn end(&self) -> i64 {
        self.anchor + self.len as i64 - 1
    }

    /// Smallest `m` with the window inside `[-m, m]`.
    pub fn depth(&self) -> usize {
        self.anchor.unsigned_abs().max(self.end().unsigned_abs()) as usize
    }

    pub fn words(&self) -> impl Iterator<Item = &Vec<Symbol>> {
        self.words.iter()
    }

    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains_word(&self, window_word: &[Symbol]) -> bool {
        self.words.contains(window_word)
    }

    /// Membership of a point given by a word covering the window.
    pub fn contains(&self, word: &Word) -> Option<bool> {
        if word.anchor() > self.anchor || word.end() < self.end() {
            return None;
        }
        let off = (self.anchor - word.anchor()) as usize;
        Some(self.words.contains(&word.symbols()[off..off + self.len]))
    }

    /// Same point set expressed on the larger window `anchor..anchor+len`.
    pub fn refine(&self, sft: &Sft, anchor: i64, len: usize) -> Result<CylinderSet> {
        let end = anchor + len as i64 - 1;
        if anchor > self.anchor || end < self.end() {
            return Err(Error::InvalidSet(format!(
                "window {anchor}..={end} does not contain {}..={}",
                self.anchor,
                self.end()
            )));
        }
        let left = (self.anchor - anchor) as usize;
        let right = (end - self.end()) as usize;
        if left == 0 && right == 0 {
            return Ok(self.clone());
        }
        let pred = graph::predecessors(sft.successor_lists());
        let mut words = BTreeSet::new();
        for w in &self.words {
            for pre in extensions(&pred, w[0], left) {
                for post in extensions(sft.successor_lists(), *w.last().unwrap(), right) {
                    let mut full: Vec<Symbol> = pre.iter().rev().copied().collect();
                    full.extend_from_slice(w);
                    full.extend_from_slice(&post);
                    words.insert(full);
                }
            }
        }
        Ok(CylinderSet { anchor, len, words })
    }

    fn hull(&self, other: &CylinderSet) -> (i64, usize) {
        let lo = self.anchor.min(other.anchor);
        let hi = self.end().max(other.end());
        (lo, (hi - lo + 1) as usize)
    }

    fn aligned(&self, sft: &Sft, other: &CylinderSet) -> Result<(CylinderSet, CylinderSet)> {
        let (a, l) = self.hull(other);
        Ok((self.refine(sft, a, l)?, other.refine(sft, a, l)?))
    }

    pub fn union(&self, sft: &Sft, other: &CylinderSet) -> Result<CylinderSet> {
        let (mut a, b) = self.aligned(sft, other)?;
        a.words.extend(b.words);
        Ok(a)
    }

    pub fn intersection(&self, sft: &Sft, other: &CylinderSet) -> Result<CylinderSet> {
        let (mut a, b) = self.aligned(sft, other)?;
        a.words.retain(|w| b.words.contains(w));
        Ok(a)
    }

    pub fn difference(&self, sft: &Sft, other: &CylinderSet) -> Result<CylinderSet> {
        let (mut a, b) = self.aligned(sft, other)?;
        a.words.retain(|w| !b.words.contains(w));
        Ok(a)
    }

    pub fn complement(&self, sft: &Sft) -> CylinderSet {
        let words = enumerate_words(sft, self.len)
            .into_iter()
            .filter(|w| !self.words.contains(w))
            .collect();
        CylinderSet {
            anchor: self.anchor,
            len: self.len,
            words,
        }
    }

    /// Point-set inclusion.
    pub fn is_subset_of(&self, sft: &Sft, other: &CylinderSet) -> Result<bool> {
        let (a, b) = self.aligned(sft, other)?;
        Ok(a.words.is_subset(&b.words))
    }

    /// Point-set equality.
    pub fn same_points(&self, sft: &Sft, other: &CylinderSet) -> Result<bool> {
        let (a, b) = self.aligned(sft, other)?;
        Ok(a.words == b.words)
    }

    /// Same point set on the smallest window it depends on.
    pub fn reduced(&self, sft: &Sft) -> CylinderSet {
        if self.words.is_empty() {
            return CylinderSet::empty(self.anchor, 1);
        }
        let pred = graph::predecessors(sft.successor_lists());
        let mut cur = self.clone();
        loop {
            if cur.len == 1 {
                return cur;
            }
            let left: BTreeSet<Vec<Symbol>> = cur.words.iter().map(|w| w[1..].to_vec()).collect();
            let count: usize = left.iter().map(|w| pred[w[0]].len()).sum();
            if count == cur.words.len() {
                cur = CylinderSet {
                    anchor: cur.anchor + 1,
                    len: cur.len - 1,
                    words: left,
                };
                continue;
            }
            let right: BTreeSet<Vec<Symbol>> = cur
                .words
                .iter()
                .map(|w| w[..w.len() - 1].to_vec())
                .collect();
            let count: usize = right
                .iter()
                .map(|w| sft.successors(*w.last().unwrap()).len())
                .sum();
            if count == cur.words.len() {
                cur = CylinderSet {
                    anchor: cur.anchor,
                    len: cur.len - 1,
                    words: right,
                };
                continue;
            }
            return cur;
        }
    }

    /// Sorted word list, one word per line.
    pub fn to_text(&self, sft: &Sft) -> String {
        let mut s = format!("# anchor {} length {}\n", self.anchor, self.len);
        for w in &self.words {
            s.push_str(&sft.format_symbols(w));
            s.push('\n');
        }
        s
    }
}

/// All paths of `steps` further symbols following `start` in the given
/// adjacency (successors, or predecessors for leftward extension).
fn extensions(adj: &[Vec<Symbol>], start: Symbol, steps: usize) -> Vec<Vec<Symbol>> {
    let mut out = vec![Vec::new()];
    for _ in 0..steps {
        let mut next = Vec::with_capacity(out.len() * 2);
        for p in &out {
            let last = p.last().copied().unwrap_or(start);
            for &s in &adj[last] {
                let mut q = p.clone();
                q.push(s);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refine_and_reduce() {
        let s = Sft::full2();
        let zero = CylinderSet::new(&s, 0, 1, [vec![0]]).unwrap();
        let r = zero.refine(&s, -1, 3).unwrap();
        assert_eq!(r.word_count(), 4);
        assert!(r.words().all(|w| w[1] == 0));
        assert_eq!(r.reduced(&s), zero);
        assert!(r.same_points(&s, &zero).unwrap());
    }

    #[test]
    fn reduce_respects_constraints() {
        // x_1 = 1 forces x_0 = 0 on GOLD, so [01] reduces to the cylinder [1] at 1
        let s = Sft::gold();
        let c = CylinderSet::new(&s, 0, 2, [vec![0, 1]]).unwrap();
        let one = CylinderSet::new(&s, 1, 1, [vec![1]]).unwrap();
        let r = c.refine(&s, -2, 5).unwrap();
        assert_eq!(r.reduced(&s), one);
        assert!(c.same_points(&s, &one).unwrap());
        let c00 = CylinderSet::new(&s, 0, 2, [vec![0, 0]]).unwrap();
        assert_eq!(c00.refine(&s, -1, 4).unwrap().reduced(&s), c00);
    }

    #[test]
    fn set_algebra() {
        let s = Sft::full2();
        let a = CylinderSet::new(&s, 0, 2, [vec![0, 0]]).unwrap();
        let b = CylinderSet::new(&s, 0, 1, [vec![0]]).unwrap();
        assert!(a.is_subset_of(&s, &b).unwrap());
        assert!(!b.is_subset_of(&s, &a).unwrap());
        let d = b.difference(&s, &a).unwrap();
        assert_eq!(d.word_count(), 1);
        assert_eq!(d.words().next().unwrap(), &vec![0, 1]);
        let u = a.union(&s, &d).unwrap();
        assert!(u.same_points(&s, &b).unwrap());
        assert_eq!(b.complement(&s).word_count(), 1);
        assert!(a.intersection(&s, &d).unwrap().is_empty());
    }

    #[test]
    fn rejects_bad_words() {
        let s = Sft::gold();
        assert!(CylinderSet::new(&s, 0, 2, [vec![1, 1]]).is_err());
        assert!(CylinderSet::new(&s, 0, 2, [vec![1]]).is_err());
    }

    #[test]
    fn from_mixed_words() {
        let s = Sft::full2();
        let w1 = Word::new(&s, vec![0], 0).unwrap();
        let w2 = Word::new(&s, vec![1, 1], -1).unwrap();
        let u = CylinderSet::from_words(&s, &[w1, w2]).unwrap();
        assert_eq!((u.anchor(), u.len()), (-1, 2));
        assert_eq!(u.word_count(), 3);
        assert_eq!(u.depth(), 1);
    }

    #[test]
    fn membership() {
        let s = Sft::full2();
        let c = CylinderSet::new(&s, 1, 2, [vec![1, 1]]).unwrap();
        let x = Word::new(&s, vec![0, 0, 1, 1], -1).unwrap();
        assert_eq!(c.contains(&x), Some(true));
        let short = Word::new(&s, vec![0, 1], 0).unwrap();
        assert_eq!(c.contains(&short), None);
    }
}
