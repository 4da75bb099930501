//! Subshifts of finite type, admissible words and higher-block recoding.
//!
//! An [`Sft`] is stored as sorted successor lists so that block presentations
//! with thousands of states stay cheap. Symbols are 0-based integers.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph;

pub type Symbol = usize;

/// Connectivity flags of the transition digraph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub irreducible: bool,
    pub aperiodic: bool,
    /// gcd of all cycle lengths.
    pub period: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sft {
    succ: Vec<Vec<Symbol>>,
    diagnostics: Diagnostics,
}

impl Sft {
    /// Builds a shift from a dense 0/1 matrix.
    pub fn from_matrix(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidSft("alphabet must have at least one symbol".into()));
        }
        let mut succ = Vec::with_capacity(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidSft(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            let mut out = Vec::new();
            for (j, &a) in row.iter().enumerate() {
                match a {
                    0 => {}
                    1 => out.push(j),
                    other => {
                        return Err(Error::InvalidSft(format!(
                            "entry ({i},{j}) = {other} is not 0 or 1"
                        )))
                    }
                }
            }
            succ.push(out);
        }
        Self::from_successors(succ)
    }

    /// Builds a shift from successor lists. Rejects stranded symbols.
    pub fn from_successors(mut succ: Vec<Vec<Symbol>>) -> Result<Self> {
        let n = succ.len();
        if n == 0 {
            return Err(Error::InvalidSft("alphabet must have at least one symbol".into()));
        }
        let mut has_pred = vec![false; n];
        for (i, out) in succ.iter_mut().enumerate() {
            out.sort_unstable();
            out.dedup();
            if out.is_empty() {
                return Err(Error::InvalidSft(format!("row {i} is all zero")));
            }
            for &j in out.iter() {
                if j >= n {
                    return Err(Error::InvalidSft(format!("successor {j} of {i} out of range")));
                }
                has_pred[j] = true;
            }
        }
        if let Some(j) = has_pred.iter().position(|&p| !p) {
            return Err(Error::InvalidSft(format!("column {j} is all zero")));
        }
        let diagnostics = compute_diagnostics(&succ);
        Ok(Sft { succ, diagnostics })
    }

    pub fn full(n: usize) -> Self {
        Self::from_successors(vec![(0..n).collect(); n]).expect("full shift is valid")
    }

    /// The full 2-shift.
    pub fn full2() -> Self {
        Self::full(2)
    }

    /// The golden-mean shift: `11` forbidden.
    pub fn gold() -> Self {
        Self::from_successors(vec![vec![0, 1], vec![0]]).expect("golden mean shift is valid")
    }

    /// Looks up a built-in fixture by name (`FULL2`, `GOLD`).
    pub fn fixture(name: &str) -> Option<Self> {
        match name.to_ascii_uppercase().as_str() {
            "FULL2" => Some(Self::full2()),
            "GOLD" => Some(Self::gold()),
            _ => None,
        }
    }

    pub fn alphabet_size(&self) -> usize {
        self.succ.len()
    }

    pub fn successors(&self, a: Symbol) -> &[Symbol] {
        &self.succ[a]
    }

    pub(crate) fn successor_lists(&self) -> &[Vec<Symbol>] {
        &self.succ
    }

    pub fn allows(&self, a: Symbol, b: Symbol) -> bool {
        self.succ
            .get(a)
            .is_some_and(|out| out.binary_search(&b).is_ok())
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    pub fn diagnostics(&self) -> Diagnostics {
        self.diagnostics
    }

    pub fn matrix(&self) -> Vec<Vec<u8>> {
        let n = self.alphabet_size();
        let mut m = vec![vec![0u8; n]; n];
        for (i, out) in self.succ.iter().enumerate() {
            for &j in out {
                m[i][j] = 1;
            }
        }
        m
    }

    pub fn is_admissible(&self, symbols: &[Symbol]) -> bool {
        !symbols.is_empty()
            && symbols.iter().all(|&s| s < self.alphabet_size())
            && symbols.windows(2).all(|w| self.allows(w[0], w[1]))
    }

    /// The time-reversed shift (transposed transition matrix).
    pub fn reversed(&self) -> Self {
        Self::from_successors(graph::predecessors(&self.succ)).expect("transpose of a valid shift")
    }

    pub fn word(&self, symbols: Vec<Symbol>, anchor: i64) -> Result<Word> {
        Word::new(self, symbols, anchor)
    }

    /// Renders symbols as a digit string (alphabets of at most 10 symbols)
    /// or as comma-separated integers.
    pub fn format_symbols(&self, symbols: &[Symbol]) -> String {
        format_symbols(symbols, self.alphabet_size())
    }

    pub fn parse_symbols(&self, text: &str) -> Result<Vec<Symbol>> {
        parse_symbols(text, self.alphabet_size())
    }

    /// Compiles a forbidden-word description over `n` symbols.
    ///
    /// When every forbidden word has length 2 the result is the one-step shift
    /// on the original alphabet. Longer forbidden words produce the shift on
    /// admissible `(L-1)`-blocks, `L` the longest forbidden length.
    pub fn from_forbidden(n: usize, forbidden: &[Vec<Symbol>]) -> Result<ForbiddenCompilation> {
        if n == 0 {
            return Err(Error::InvalidSft("alphabet must have at least one symbol".into()));
        }
        for w in forbidden {
            if w.len() < 2 {
                return Err(Error::InvalidSft(
                    "forbidden words must have length at least 2 (drop the symbol from the alphabet instead)"
                        .into(),
                ));
            }
            if let Some(&s) = w.iter().find(|&&s| s >= n) {
                return Err(Error::InvalidSft(format!("symbol {s} out of range")));
            }
        }
        let longest = forbidden.iter().map(Vec::len).max().unwrap_or(2);
        let block = longest - 1;
        let avoids = |w: &[Symbol]| {
            !forbidden
                .iter()
                .any(|f| f.len() <= w.len() && w.windows(f.len()).any(|x| x == f.as_slice()))
        };
        let full = Sft::full(n);
        let blocks: Vec<Vec<Symbol>> = enumerate_words(&full, block)
            .into_iter()
            .filter(|w| avoids(w))
            .collect();
        let index: HashMap<Vec<Symbol>, usize> = blocks
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        let mut succ = vec![Vec::new(); blocks.len()];
        for (i, u) in blocks.iter().enumerate() {
            for s in 0..n {
                let mut joined = u.clone();
                joined.push(s);
                if !avoids(&joined) {
                    continue;
                }
                if let Some(&j) = index.get(&joined[1..]) {
                    succ[i].push(j);
                }
            }
        }
        let sft = Sft::from_successors(succ)?;
        Ok(ForbiddenCompilation {
            alphabet_size: n,
            block_length: block,
            blocks,
            index,
            sft,
        })
    }
}

fn compute_diagnostics(succ: &[Vec<Symbol>]) -> Diagnostics {
    let comps = graph::components(succ, None);
    let irreducible = comps.len() == 1;
    let period = comps
        .iter()
        .map(|c| graph::period(succ, c))
        .fold(0, graph::gcd);
    Diagnostics {
        irreducible,
        aperiodic: irreducible && period == 1,
        period,
    }
}

/// Validates a shift and reports its connectivity flags.
pub fn validate(sft: &Sft) -> Diagnostics {
    sft.diagnostics()
}

pub fn format_symbols(symbols: &[Symbol], alphabet_size: usize) -> String {
    if alphabet_size <= 10 {
        symbols.iter().map(|s| char::from(b'0' + *s as u8)).collect()
    } else {
        symbols
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

pub fn parse_symbols(text: &str, alphabet_size: usize) -> Result<Vec<Symbol>> {
    let text = text.trim();
    let symbols: Vec<Symbol> = if alphabet_size <= 10 && !text.contains(',') {
        text.chars()
            .map(|c| {
                c.to_digit(10)
                    .map(|d| d as Symbol)
                    .ok_or_else(|| Error::InvalidArgument(format!("bad symbol {c:?} in {text:?}")))
            })
            .collect::<Result<_>>()?
    } else {
        text.split(',')
            .map(|t| {
                t.trim()
                    .parse::<Symbol>()
                    .map_err(|_| Error::InvalidArgument(format!("bad symbol {t:?} in {text:?}")))
            })
            .collect::<Result<_>>()?
    };
    if symbols.is_empty() {
        return Err(Error::InvalidArgument("empty word".into()));
    }
    if let Some(&s) = symbols.iter().find(|&&s| s >= alphabet_size) {
        return Err(Error::InvalidArgument(format!("symbol {s} out of range")));
    }
    Ok(symbols)
}

/// A finite admissible word placed at absolute coordinates
/// `anchor..anchor + len`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    symbols: Vec<Symbol>,
    anchor: i64,
}

impl Word {
    pub fn new(sft: &Sft, symbols: Vec<Symbol>, anchor: i64) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::InvalidArgument("word must have length >= 1".into()));
        }
        if !sft.is_admissible(&symbols) {
            return Err(Error::Inadmissible(sft.format_symbols(&symbols)));
        }
        Ok(Word { symbols, anchor })
    }

    pub(crate) fn from_parts(symbols: Vec<Symbol>, anchor: i64) -> Self {
        Word { symbols, anchor }
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn anchor(&self) -> i64 {
        self.anchor
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Last covered coordinate.
    pub fn end(&self) -> i64 {
        self.anchor + self.symbols.len() as i64 - 1
    }

    /// Symbol at absolute coordinate `i`, if covered.
    pub fn at(&self, i: i64) -> Option<Symbol> {
        let off = i - self.anchor;
        if off < 0 {
            return None;
        }
        self.symbols.get(off as usize).copied()
    }

    /// The word seen from `σ^k`: same symbols, anchor moved left by `k`.
    pub fn shifted(&self, k: i64) -> Word {
        Word {
            symbols: self.symbols.clone(),
            anchor: self.anchor - k,
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let max = self.symbols.iter().copied().max().unwrap_or(0);
        write!(f, "{}@{}", format_symbols(&self.symbols, max + 1), self.anchor)
    }
}

pub(crate) fn enumerate_words(sft: &Sft, length: usize) -> Vec<Vec<Symbol>> {
    if length == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    let mut stack: Vec<Symbol> = Vec::with_capacity(length);
    fn go(sft: &Sft, length: usize, stack: &mut Vec<Symbol>, out: &mut Vec<Vec<Symbol>>) {
        if stack.len() == length {
            out.push(stack.clone());
            return;
        }
        let next: Vec<Symbol> = match stack.last() {
            None => (0..sft.alphabet_size()).collect(),
            Some(&a) => sft.successors(a).to_vec(),
        };
        for s in next {
            stack.push(s);
            go(sft, length, stack, out);
            stack.pop();
        }
    }
    go(sft, length, &mut stack, &mut out);
    out
}

/// All admissible words of the given length anchored at 0, lexicographically ordered.
pub fn admissible_words(sft: &Sft, length: usize) -> Result<Vec<Word>> {
    if length == 0 {
        return Err(Error::InvalidArgument("word length must be >= 1".into()));
    }
    Ok(enumerate_words(sft, length)
        .into_iter()
        .map(|s| Word::from_parts(s, 0))
        .collect())
}

/// Number of admissible words of a length, by forward counting.
pub fn word_count(sft: &Sft, length: usize) -> u128 {
    if length == 0 {
        return 1;
    }
    let n = sft.alphabet_size();
    let mut v = vec![1u128; n];
    for _ in 1..length {
        let mut next = vec![0u128; n];
        for (a, &c) in v.iter().enumerate() {
            for &b in sft.successors(a) {
                next[b] = next[b].saturating_add(c);
            }
        }
        v = next;
    }
    v.iter().fold(0u128, |acc, &c| acc.saturating_add(c))
}

/// Higher-block presentation: target symbols are admissible `k`-words of the
/// source, with `u -> v` allowed when they overlap in `k-1` symbols.
#[derive(Clone, Debug)]
pub struct BlockCoding {
    source: Sft,
    block_length: usize,
    blocks: Vec<Vec<Symbol>>,
    index: HashMap<Vec<Symbol>, usize>,
    target: Sft,
}

pub fn higher_block(sft: &Sft, k: usize) -> Result<BlockCoding> {
    BlockCoding::new(sft, k)
}

impl BlockCoding {
    pub fn new(sft: &Sft, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("block length must be >= 1".into()));
        }
        let blocks = enumerate_words(sft, k);
        assert!(!blocks.is_empty(), "a valid shift has admissible words of every length");
        let index: HashMap<Vec<Symbol>, usize> = blocks
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        let mut succ = Vec::with_capacity(blocks.len());
        let mut key = vec![0; k];
        for u in &blocks {
            let last = *u.last().unwrap();
            key[..k - 1].copy_from_slice(&u[1..]);
            let mut out = Vec::with_capacity(sft.successors(last).len());
            for &s in sft.successors(last) {
                key[k - 1] = s;
                out.push(index[&key]);
            }
            succ.push(out);
        }
        let target = Sft::from_successors(succ)?;
        Ok(BlockCoding {
            source: sft.clone(),
            block_length: k,
            blocks,
            index,
            target,
        })
    }

    pub fn source(&self) -> &Sft {
        &self.source
    }

    pub fn target(&self) -> &Sft {
        &self.target
    }

    pub fn block_length(&self) -> usize {
        self.block_length
    }

    pub fn state_count(&self) -> usize {
        self.blocks.len()
    }

    /// The source word represented by target symbol `u`.
    pub fn block(&self, u: Symbol) -> &[Symbol] {
        &self.blocks[u]
    }

    pub fn blocks(&self) -> &[Vec<Symbol>] {
        &self.blocks
    }

    pub fn index_of(&self, block: &[Symbol]) -> Option<Symbol> {
        self.index.get(block).copied()
    }

    /// Encodes a source word of length `L >= k` into its `L-k+1` block symbols.
    pub fn encode(&self, word: &[Symbol]) -> Option<Vec<Symbol>> {
        if word.len() < self.block_length {
            return None;
        }
        word.windows(self.block_length)
            .map(|w| self.index_of(w))
            .collect()
    }

    /// Inverse of [`encode`](Self::encode); `None` on an inadmissible target word.
    pub fn decode(&self, word: &[Symbol]) -> Option<Vec<Symbol>> {
        let first = *word.first()?;
        if !self.target.is_admissible(word) {
            return None;
        }
        let mut out = self.blocks[first].clone();
        for &u in &word[1..] {
            out.push(*self.blocks[u].last().unwrap());
        }
        Some(out)
    }

    pub fn encode_word(&self, word: &Word) -> Option<Word> {
        self.encode(word.symbols())
            .map(|s| Word::from_parts(s, word.anchor()))
    }
}

/// A shift given by forbidden words, compiled to a one-step presentation.
#[derive(Clone, Debug)]
pub struct ForbiddenCompilation {
    alphabet_size: usize,
    block_length: usize,
    blocks: Vec<Vec<Symbol>>,
    index: HashMap<Vec<Symbol>, usize>,
    sft: Sft,
}

impl ForbiddenCompilation {
    pub fn sft(&self) -> &Sft {
        &self.sft
    }

    /// Length of the original-alphabet block each compiled symbol stands for.
    pub fn block_length(&self) -> usize {
        self.block_length
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    /// True when the compiled shift lives on the original alphabet.
    pub fn is_one_step(&self) -> bool {
        self.block_length == 1
    }

    pub fn block(&self, u: Symbol) -> &[Symbol] {
        &self.blocks[u]
    }

    /// All compiled words for an original-alphabet word, each anchored where
    /// the original was. Words shorter than the block length are extended to
    /// the right in every admissible way.
    pub fn lift_word(&self, symbols: &[Symbol]) -> Vec<Vec<Symbol>> {
        let k = self.block_length;
        if symbols.len() >= k {
            let encoded: Option<Vec<Symbol>> = symbols
                .windows(k)
                .map(|w| self.index.get(w).copied())
                .collect();
            return encoded
                .filter(|e| self.sft.is_admissible(e))
                .into_iter()
                .collect();
        }
        self.blocks
            .iter()
            .enumerate()
            .filter(|(_, b)| b.starts_with(symbols))
            .map(|(i, _)| vec![i])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn swap() -> Sft {
        Sft::from_matrix(&[vec![0, 1], vec![1, 0]]).unwrap()
    }

    #[test]
    fn validate_examples() {
        let d = validate(&Sft::full2());
        assert_eq!(
            d,
            Diagnostics {
                irreducible: true,
                aperiodic: true,
                period: 1
            }
        );
        let d = validate(&Sft::gold());
        assert!(d.irreducible && d.aperiodic && d.period == 1);
        let d = validate(&swap());
        assert!(d.irreducible && !d.aperiodic);
        assert_eq!(d.period, 2);
    }

    #[test]
    fn rejects_stranded_symbols() {
        assert!(matches!(
            Sft::from_matrix(&[vec![1, 1], vec![0, 0]]),
            Err(Error::InvalidSft(_))
        ));
        assert!(matches!(
            Sft::from_matrix(&[vec![1, 0], vec![1, 0]]),
            Err(Error::InvalidSft(_))
        ));
        assert!(Sft::from_matrix(&[vec![1, 2], vec![1, 0]]).is_err());
    }

    #[test]
    fn reducible_shift_flags() {
        // two disjoint self-loops
        let s = Sft::from_matrix(&[vec![1, 0], vec![0, 1]]).unwrap();
        let d = s.diagnostics();
        assert!(!d.irreducible && !d.aperiodic);
        assert_eq!(d.period, 1);
    }

    #[test]
    fn admissible_word_examples() {
        let words: Vec<String> = admissible_words(&Sft::full2(), 2)
            .unwrap()
            .iter()
            .map(|w| format_symbols(w.symbols(), 2))
            .collect();
        assert_eq!(words, ["00", "01", "10", "11"]);
        let words: Vec<String> = admissible_words(&Sft::gold(), 2)
            .unwrap()
            .iter()
            .map(|w| format_symbols(w.symbols(), 2))
            .collect();
        assert_eq!(words, ["00", "01", "10"]);
        assert_eq!(admissible_words(&Sft::gold(), 4).unwrap().len(), 8);
        assert!(admissible_words(&Sft::gold(), 0).is_err());
    }

    #[test]
    fn higher_block_examples() {
        let id = higher_block(&Sft::full2(), 1).unwrap();
        assert_eq!(id.target(), &Sft::full2());

        let db = higher_block(&Sft::full2(), 2).unwrap();
        assert_eq!(db.state_count(), 4);
        for u in 0..4 {
            for v in 0..4 {
                let ok = db.block(u)[1] == db.block(v)[0];
                assert_eq!(db.target().allows(u, v), ok);
            }
        }

        let g = higher_block(&Sft::gold(), 2).unwrap();
        assert_eq!(g.state_count(), 3);
        let i01 = g.index_of(&[0, 1]).unwrap();
        let i10 = g.index_of(&[1, 0]).unwrap();
        let i00 = g.index_of(&[0, 0]).unwrap();
        assert!(g.target().allows(i01, i10));
        assert!(!g.target().allows(i01, i00));
    }

    #[test]
    fn encode_decode() {
        let g = higher_block(&Sft::gold(), 3).unwrap();
        let w = vec![0, 1, 0, 0, 1, 0];
        let e = g.encode(&w).unwrap();
        assert_eq!(e.len(), 4);
        assert_eq!(g.decode(&e).unwrap(), w);
        assert!(g.encode(&[1, 1, 0]).is_none());
    }

    #[test]
    fn word_formatting() {
        assert_eq!(format_symbols(&[0, 1, 1], 2), "011");
        assert_eq!(format_symbols(&[0, 11, 3], 12), "0,11,3");
        assert_eq!(parse_symbols("0,11,3", 12).unwrap(), vec![0, 11, 3]);
        assert_eq!(parse_symbols("011", 2).unwrap(), vec![0, 1, 1]);
        assert!(parse_symbols("012", 2).is_err());
    }

    #[test]
    fn word_rejects_inadmissible() {
        assert!(Word::new(&Sft::gold(), vec![1, 1], 0).is_err());
        let w = Word::new(&Sft::gold(), vec![1, 0, 1], -1).unwrap();
        assert_eq!(w.end(), 1);
        assert_eq!(w.at(0), Some(0));
        assert_eq!(w.at(2), None);
    }

    #[test]
    fn forbidden_compilation() {
        let c = Sft::from_forbidden(2, &[vec![1, 1]]).unwrap();
        assert!(c.is_one_step());
        assert_eq!(c.sft().matrix(), Sft::gold().matrix());

        // forbid 111: blocks of length 2, all but 11->11 transitions
        let c = Sft::from_forbidden(2, &[vec![1, 1, 1]]).unwrap();
        assert_eq!(c.block_length(), 2);
        assert_eq!(c.sft().alphabet_size(), 4);
        assert_eq!(word_count(c.sft(), 3), 13); // binary words of length 4 avoiding 111
        assert_eq!(c.lift_word(&[1]).len(), 2);
        assert_eq!(c.lift_word(&[0, 1, 1]).len(), 1);
        assert!(c.lift_word(&[1, 1, 1]).is_empty());
    }
}
