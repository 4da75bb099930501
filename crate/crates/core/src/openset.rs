//! Open sets given by depth-indexed cylinder classifiers, their inner/outer
//! approximations, maximal invariant mass, and the boundary-decay bound.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::cylinder::CylinderSet;
use crate::error::{Error, Result};
use crate::karp;
use crate::potential::Potential;
use crate::presentation::Presentation;
use crate::perron::spectral_radius;
use crate::sft::{enumerate_words, Sft, Symbol, Word};
use crate::thermo::GibbsChain;

/// Classification of a cylinder relative to an open set `A`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cell {
    /// The cylinder lies inside `A`.
    In,
    /// The cylinder misses `A`.
    Out,
    /// Neither is certain at this depth.
    Boundary,
}

/// An open set described through its `(-m, m)`-cylinders.
///
/// At depth `m` the classification may only depend on the coordinates in
/// [`window`](Self::window), which must lie inside `[-m, m]`; restricting to a
/// smaller window keeps deep approximations small when the set ignores part
/// of the cylinder.
pub trait OpenSetSpec: Sync {
    fn window(&self, m: usize) -> (i64, i64) {
        (-(m as i64), m as i64)
    }

    /// Classifies the cylinder of `word`, which covers exactly `window(m)`.
    fn classify(&self, m: usize, word: &Word) -> Cell;

    fn name(&self) -> String;

    fn supports(&self, _m: usize) -> bool {
        true
    }
}

/// A finite union of cylinders, i.e. a clopen set.
#[derive(Clone, Debug)]
pub struct ExplicitUnion {
    sft: Sft,
    set: CylinderSet,
}

impl ExplicitUnion {
    pub fn new(sft: &Sft, set: CylinderSet) -> Self {
        ExplicitUnion {
            sft: sft.clone(),
            set: set.reduced(sft),
        }
    }

    pub fn set(&self) -> &CylinderSet {
        &self.set
    }
}

impl OpenSetSpec for ExplicitUnion {
    fn classify(&self, _m: usize, word: &Word) -> Cell {
        let cyl = CylinderSet::cylinder(&self.sft, word).expect("classified words are admissible");
        let inside = cyl
            .intersection(&self.sft, &self.set)
            .expect("aligned windows");
        if inside.is_empty() {
            Cell::Out
        } else if inside.word_count() == cyl.refine(&self.sft, inside.anchor(), inside.len()).unwrap().word_count() {
            Cell::In
        } else {
            Cell::Boundary
        }
    }

    fn name(&self) -> String {
        format!("union of {} cylinders", self.set.word_count())
    }
}

/// Direction in which [`PatternOccurs`] looks for its pattern.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Future,
    Past,
}

/// `{y : y ∈ [prefix] and the pattern occurs strictly after (or before) the prefix window}`.
///
/// Classification scans the visible part of the word with a KMP automaton; a
/// cylinder is `Out` when the prefix is contradicted or when no admissible
/// continuation can ever complete the pattern.
#[derive(Clone, Debug)]
pub struct PatternOccurs {
    prefix: Word,
    pattern: Vec<Symbol>,
    direction: Direction,
    /// Pattern in scan order (reversed for `Past`).
    scan: Vec<Symbol>,
    failure: Vec<usize>,
    /// `reach[a][s]`: from last symbol `a` in automaton state `s` the pattern can still be completed.
    reach: Vec<Vec<bool>>,
}

impl PatternOccurs {
    pub fn new(sft: &Sft, prefix: Word, pattern: Vec<Symbol>, direction: Direction) -> Result<Self> {
        if prefix.anchor() > 0 || prefix.end() < 0 {
            return Err(Error::InvalidSet("prefix window must contain coordinate 0".into()));
        }
        if !sft.is_admissible(prefix.symbols()) {
            return Err(Error::Inadmissible(sft.format_symbols(prefix.symbols())));
        }
        if !sft.is_admissible(&pattern) {
            return Err(Error::InvalidSet(format!(
                "pattern {} is empty or inadmissible",
                sft.format_symbols(&pattern)
            )));
        }
        let (scan_sft, scan) = match direction {
            Direction::Future => (sft.clone(), pattern.clone()),
            Direction::Past => (sft.reversed(), pattern.iter().rev().copied().collect()),
        };
        let failure = failure_function(&scan);
        let len = scan.len();
        let n = scan_sft.alphabet_size();
        let mut reach = vec![vec![false; len]; n];
        loop {
            let mut changed = false;
            for a in 0..n {
                for s in 0..len {
                    if reach[a][s] {
                        continue;
                    }
                    let ok = scan_sft.successors(a).iter().any(|&b| {
                        let t = step(&scan, &failure, s, b);
                        t == len || reach[b][t]
                    });
                    if ok {
                        reach[a][s] = true;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        Ok(PatternOccurs {
            prefix,
            pattern,
            direction,
            scan,
            failure,
            reach,
        })
    }

    /// `{y_0 = 0, 11 occurs in y_1 y_2 …}` on the full 2-shift.
    pub fn future11() -> Self {
        let s = Sft::full2();
        Self::new(&s, Word::new(&s, vec![0], 0).unwrap(), vec![1, 1], Direction::Future).unwrap()
    }

    /// `{y_0 = 0, y_n = 0 for some n >= 1}` on the full 2-shift.
    pub fn next0() -> Self {
        let s = Sft::full2();
        Self::new(&s, Word::new(&s, vec![0], 0).unwrap(), vec![0], Direction::Future).unwrap()
    }

    pub fn prefix(&self) -> &Word {
        &self.prefix
    }

    pub fn pattern(&self) -> &[Symbol] {
        &self.pattern
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }
}

fn failure_function(p: &[Symbol]) -> Vec<usize> {
    let mut f = vec![0; p.len()];
    let mut k = 0;
    for i in 1..p.len() {
        while k > 0 && p[i] != p[k] {
            k = f[k - 1];
        }
        if p[i] == p[k] {
            k += 1;
        }
        f[i] = k;
    }
    f
}

fn step(p: &[Symbol], f: &[usize], mut s: usize, b: Symbol) -> usize {
    while s > 0 && p[s] != b {
        s = f[s - 1];
    }
    if p[s] == b {
        s + 1
    } else {
        0
    }
}

impl OpenSetSpec for PatternOccurs {
    fn window(&self, m: usize) -> (i64, i64) {
        let m = m as i64;
        match self.direction {
            Direction::Future => (self.prefix.anchor().max(-m), m),
            Direction::Past => (-m, self.prefix.end().min(m)),
        }
    }

    fn classify(&self, m: usize, word: &Word) -> Cell {
        let m = m as i64;
        for c in self.prefix.anchor()..=self.prefix.end() {
            if let Some(s) = word.at(c) {
                if s != self.prefix.at(c).unwrap() {
                    return Cell::Out;
                }
            }
        }
        if self.prefix.anchor() < -m || self.prefix.end() > m {
            return Cell::Boundary;
        }
        let coords: Vec<i64> = match self.direction {
            Direction::Future => (self.prefix.end() + 1..=m).collect(),
            Direction::Past => (-m..self.prefix.anchor()).rev().collect(),
        };
        let mut s = 0;
        for c in coords {
            s = step(&self.scan, &self.failure, s, word.at(c).unwrap());
            if s == self.scan.len() {
                return Cell::In;
            }
        }
        let last = match self.direction {
            Direction::Future => word.at(m),
            Direction::Past => word.at(-m),
        }
        .unwrap();
        if self.reach[last][s] {
            Cell::Boundary
        } else {
            Cell::Out
        }
    }

    fn name(&self) -> String {
        let d = match self.direction {
            Direction::Future => "future",
            Direction::Past => "past",
        };
        format!("{} then {:?} in the {d}", self.prefix, self.pattern)
    }
}

/// Classifier given by explicit inner and boundary word lists per depth;
/// every other word is `Out`.
#[derive(Clone, Debug, Default)]
pub struct TableSpec {
    depths: BTreeMap<usize, (CylinderSet, CylinderSet)>,
}

impl TableSpec {
    pub fn new() -> Self {
        Self::default()
    }

    /// Words have length `2m + 1` and are anchored at `-m`.
    pub fn insert(&mut self, sft: &Sft, m: usize, inner: Vec<Vec<Symbol>>, boundary: Vec<Vec<Symbol>>) -> Result<()> {
        let inner = CylinderSet::at_depth(sft, m, inner)?;
        let boundary = CylinderSet::at_depth(sft, m, boundary)?;
        if let Some(w) = inner.words().find(|w| boundary.contains_word(w)) {
            return Err(Error::InvalidSet(format!(
                "word {} is listed as both inner and boundary",
                sft.format_symbols(w)
            )));
        }
        self.depths.insert(m, (inner, boundary));
        Ok(())
    }
}

impl OpenSetSpec for TableSpec {
    fn classify(&self, m: usize, word: &Word) -> Cell {
        let (inner, boundary) = &self.depths[&m];
        if inner.contains_word(word.symbols()) {
            Cell::In
        } else if boundary.contains_word(word.symbols()) {
            Cell::Boundary
        } else {
            Cell::Out
        }
    }

    fn name(&self) -> String {
        format!("table with depths {:?}", self.depths.keys().collect::<Vec<_>>())
    }

    fn supports(&self, m: usize) -> bool {
        self.depths.contains_key(&m)
    }
}

/// Inner set `B_m`, outer set `C_m` and annulus `D_m = C_m \ B_m` at one depth.
#[derive(Clone, Debug)]
pub struct Approximations {
    pub depth: usize,
    pub inner: CylinderSet,
    pub outer: CylinderSet,
    pub annulus: CylinderSet,
}

pub fn approximations(spec: &dyn OpenSetSpec, sft: &Sft, m: usize) -> Result<Approximations> {
    if !spec.supports(m) {
        return Err(Error::InvalidSet(format!("{} has no classification at depth {m}", spec.name())));
    }
    let (lo, hi) = spec.window(m);
    if lo > hi || lo < -(m as i64) || hi > m as i64 {
        return Err(Error::InvalidSet(format!(
            "window {lo}..={hi} is not inside the depth-{m} cylinder"
        )));
    }
    let len = (hi - lo + 1) as usize;
    let cells: Vec<(Vec<Symbol>, Cell)> = enumerate_words(sft, len)
        .into_par_iter()
        .map(|w| {
            let c = spec.classify(m, &Word::from_parts(w.clone(), lo));
            (w, c)
        })
        .collect();
    let pick = |keep: &dyn Fn(Cell) -> bool| {
        CylinderSet::new(
            sft,
            lo,
            len,
            cells.iter().filter(|(_, c)| keep(*c)).map(|(w, _)| w.clone()),
        )
    };
    Ok(Approximations {
        depth: m,
        inner: pick(&|c| c == Cell::In)?,
        outer: pick(&|c| c != Cell::Out)?,
        annulus: pick(&|c| c == Cell::Boundary)?,
    })
}

/// Checks that refinement from depth `m` to `m + 1` is monotone: every
/// extension of an `In` word is `In` and every extension of an `Out` word is
/// `Out`. The check runs over all words of both depths.
pub fn validate_refinement(sft: &Sft, coarse: &Approximations, fine: &Approximations) -> Result<()> {
    if !coarse.inner.is_subset_of(sft, &fine.inner)? {
        return Err(Error::NonMonotoneClassifier {
            depth: coarse.depth,
            detail: format!("an extension of an inner word is not inner at depth {}", fine.depth),
        });
    }
    if !fine.outer.is_subset_of(sft, &coarse.outer)? {
        return Err(Error::NonMonotoneClassifier {
            depth: coarse.depth,
            detail: format!("an extension of an outer word is not outer at depth {}", fine.depth),
        });
    }
    Ok(())
}

/// Approximations over a depth range with monotonicity checked between
/// consecutive depths.
pub fn approximation_sequence(
    spec: &dyn OpenSetSpec,
    sft: &Sft,
    depths: std::ops::RangeInclusive<usize>,
) -> Result<Vec<Approximations>> {
    let out = depths
        .map(|m| approximations(spec, sft, m))
        .collect::<Result<Vec<_>>>()?;
    for pair in out.windows(2) {
        if pair[1].depth == pair[0].depth + 1 {
            validate_refinement(sft, &pair[0], &pair[1])?;
        }
    }
    Ok(out)
}

/// `ρ(D) = sup_μ μ(D)` over invariant probability measures, as the maximum
/// mean cycle of the block graph with vertex weight `1_D`.
pub fn max_invariant_mass(sft: &Sft, set: &CylinderSet) -> Result<f64> {
    if set.is_empty() {
        return Ok(0.0);
    }
    let pres = Presentation::new(sft, &Potential::zero(sft), &[set])?;
    let succ: Vec<Vec<usize>> = (0..pres.state_count())
        .map(|u| pres.successors(u).to_vec())
        .collect();
    let weight: Vec<f64> = pres.members(0).iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    Ok(karp::max_mean_cycle(&succ, &weight).expect("an SFT has cycles"))
}

/// Result of fitting `μ(D_n) ≈ c e^{-θn}`.
#[derive(Clone, Debug)]
pub struct BoundaryBound {
    /// `(n, μ(D_n))` per depth.
    pub masses: Vec<(usize, f64)>,
    /// Fitted decay rate; `+∞` when the annulus is empty at the deepest depth.
    pub theta: f64,
    /// `P - θ/2`; `-∞` together with `boundary_empty`.
    pub bound: f64,
    pub boundary_empty: bool,
    /// Depths used by the fit.
    pub fit_depths: Vec<usize>,
    /// Per depth, the pressure of the largest invariant set inside `D_n`.
    /// This bounds only measures supported in `D_n`, not every measure
    /// charging the boundary, and is reported as a diagnostic.
    pub survivor_in_annulus: Vec<(usize, f64)>,
}

pub fn boundary_pressure_bound(
    chain: &GibbsChain,
    sft: &Sft,
    potential: &Potential,
    spec: &dyn OpenSetSpec,
    depths: std::ops::RangeInclusive<usize>,
) -> Result<BoundaryBound> {
    if depths.is_empty() {
        return Err(Error::InvalidArgument("depth range is empty".into()));
    }
    let approx = approximation_sequence(spec, sft, depths)?;
    let masses: Vec<(usize, f64)> = approx
        .iter()
        .map(|a| (a.depth, chain.measure(&a.annulus)))
        .collect();
    let survivor_in_annulus = approx
        .iter()
        .map(|a| Ok((a.depth, annulus_pressure(sft, potential, &a.annulus)?)))
        .collect::<Result<Vec<_>>>()?;
    let pressure = chain.pressure();
    let suffix: Vec<(usize, f64)> = masses
        .iter()
        .rev()
        .take_while(|(_, m)| *m > 0.0)
        .copied()
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    if suffix.len() < 2 {
        return Ok(BoundaryBound {
            masses,
            theta: f64::INFINITY,
            bound: f64::NEG_INFINITY,
            boundary_empty: true,
            fit_depths: suffix.iter().map(|&(n, _)| n).collect(),
            survivor_in_annulus,
        });
    }
    let k = suffix.len() as f64;
    let xbar = suffix.iter().map(|&(n, _)| n as f64).sum::<f64>() / k;
    let ybar = suffix.iter().map(|&(_, m)| m.ln()).sum::<f64>() / k;
    let sxy: f64 = suffix
        .iter()
        .map(|&(n, m)| (n as f64 - xbar) * (m.ln() - ybar))
        .sum();
    let sxx: f64 = suffix.iter().map(|&(n, _)| (n as f64 - xbar).powi(2)).sum();
    let theta = -sxy / sxx;
    Ok(BoundaryBound {
        masses,
        theta,
        bound: pressure - theta / 2.0,
        boundary_empty: false,
        fit_depths: suffix.iter().map(|&(n, _)| n).collect(),
        survivor_in_annulus,
    })
}

fn annulus_pressure(sft: &Sft, potential: &Potential, annulus: &CylinderSet) -> Result<f64> {
    if annulus.is_empty() {
        return Ok(f64::NEG_INFINITY);
    }
    let pres = Presentation::new(sft, potential, &[annulus])?;
    let (m, scale) = pres.matrix(pres.log_weight(), Some(pres.members(0)));
    let rho = spectral_radius(&m)?;
    Ok(if rho > 0.0 { rho.ln() + scale } else { f64::NEG_INFINITY })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::equilibrium_chain;

    #[test]
    fn explicit_union_is_clopen() {
        let s = Sft::full2();
        let set = CylinderSet::new(&s, 0, 2, [vec![0, 1]]).unwrap();
        let spec = ExplicitUnion::new(&s, set.clone());
        assert_eq!(approximations(&spec, &s, 0).unwrap().annulus.word_count(), 1);
        for m in 1..4 {
            let a = approximations(&spec, &s, m).unwrap();
            assert!(a.annulus.is_empty());
            assert!(a.inner.same_points(&s, &set).unwrap());
            assert!(a.outer.same_points(&s, &set).unwrap());
        }
    }

    #[test]
    fn future11_shapes() {
        let s = Sft::full2();
        let spec = PatternOccurs::future11();
        let zero = CylinderSet::new(&s, 0, 1, [vec![0]]).unwrap();
        for a in approximation_sequence(&spec, &s, 1..=6).unwrap() {
            assert!(a.outer.same_points(&s, &zero).unwrap());
            // 0 followed by m bits avoiding 11: Fibonacci count
            let fib = |k: usize| (0..k).fold((0u64, 1u64), |(a, b), _| (b, a + b)).0;
            assert_eq!(a.annulus.word_count() as u64, fib(a.depth + 2));
        }
    }

    #[test]
    fn next0_has_one_boundary_word() {
        let s = Sft::full2();
        for a in approximation_sequence(&PatternOccurs::next0(), &s, 1..=6).unwrap() {
            assert_eq!(a.annulus.word_count(), 1);
            let w = a.annulus.words().next().unwrap();
            assert_eq!(w[0], 0);
            assert!(w[1..].iter().all(|&b| b == 1));
        }
    }

    #[test]
    fn past_direction_mirrors_future() {
        let s = Sft::full2();
        let past = PatternOccurs::new(&s, s.word(vec![0], 0).unwrap(), vec![1, 1], Direction::Past).unwrap();
        for m in 1..5 {
            let a = approximations(&past, &s, m).unwrap();
            assert_eq!(a.annulus.anchor(), -(m as i64));
            assert!(a.annulus.words().all(|w| !w.windows(2).any(|p| p == [1, 1])));
        }
    }

    #[test]
    fn broken_classifier_is_rejected() {
        let s = Sft::full2();
        let mut t = TableSpec::new();
        t.insert(&s, 0, vec![vec![0]], vec![]).unwrap();
        t.insert(&s, 1, vec![], vec![vec![0, 0, 0]]).unwrap();
        assert!(matches!(
            approximation_sequence(&t, &s, 0..=1),
            Err(Error::NonMonotoneClassifier { .. })
        ));
    }

    #[test]
    fn invariant_mass_examples() {
        let s = Sft::full2();
        assert_eq!(max_invariant_mass(&s, &CylinderSet::whole(&s)).unwrap(), 1.0);
        let zero = CylinderSet::new(&s, 0, 1, [vec![0]]).unwrap();
        assert_eq!(max_invariant_mass(&s, &zero).unwrap(), 1.0);
        let zo = CylinderSet::new(&s, 0, 2, [vec![0, 1]]).unwrap();
        assert!((max_invariant_mass(&s, &zo).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn boundary_fit_examples() {
        let s = Sft::full2();
        let phi = Potential::zero(&s);
        let chain = equilibrium_chain(&s, &phi).unwrap();
        let r = boundary_pressure_bound(&chain, &s, &phi, &PatternOccurs::next0(), 2..=8).unwrap();
        assert!((r.theta - 2f64.ln()).abs() < 1e-12);

        let clopen = ExplicitUnion::new(&s, CylinderSet::new(&s, 0, 1, [vec![0]]).unwrap());
        let r = boundary_pressure_bound(&chain, &s, &phi, &clopen, 1..=3).unwrap();
        assert!(r.boundary_empty && r.theta == f64::INFINITY);
    }
}
