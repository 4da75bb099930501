//! Spectral thermodynamic formalism for locally-constant potentials.
//!
//! Everything here is a Perron–Frobenius computation on a block presentation:
//! the pressure of `φ` is the log spectral radius of `M_{uv} = a_{uv} e^{φ(u)}`,
//! the equilibrium state is the Markov chain `P_{uv} = M_{uv} h_v / (λ h_u)`
//! with stationary law `π_u ∝ ν_u h_u`, and penalizing a hole `R` multiplies the
//! rows of hole states by `e^{-t}`.

use crate::cylinder::CylinderSet;
use crate::error::{Error, Result};
use crate::perron::{perron, spectral_radius, NonnegMatrix, PerronData};
use crate::potential::Potential;
use crate::presentation::Presentation;
use crate::sft::{enumerate_words, BlockCoding, Sft, Symbol, Word};

/// Stationary Markov chain on block states realizing an equilibrium measure.
#[derive(Clone, Debug)]
pub struct GibbsChain {
    coding: BlockCoding,
    transitions: Vec<Vec<(usize, f64)>>,
    stationary: Vec<f64>,
    log_weight: Vec<f64>,
    pressure: f64,
    right: Vec<f64>,
    left: Vec<f64>,
    warning: Option<String>,
}

impl GibbsChain {
    /// Equilibrium chain of the per-state log weights on a presentation.
    pub fn on_presentation(pres: &Presentation, log_weight: Vec<f64>) -> Result<Self> {
        Self::build(pres, log_weight, None)
    }

    fn build(pres: &Presentation, log_weight: Vec<f64>, warm: Option<&[f64]>) -> Result<Self> {
        let (m, scale) = pres.matrix(&log_weight, None);
        let data = perron(&m, warm)?;
        if data.dominant_components > 1 {
            return Err(Error::NotUnique(data.dominant_components));
        }
        let warning = (!data.irreducible).then(|| {
            format!(
                "block presentation is reducible; chain lives on a dominant component of {} states",
                data.support.len()
            )
        });
        Ok(Self::from_perron(pres.coding().clone(), &m, scale, data, log_weight, warning))
    }

    fn from_perron(
        coding: BlockCoding,
        m: &NonnegMatrix,
        scale: f64,
        data: PerronData,
        log_weight: Vec<f64>,
        warning: Option<String>,
    ) -> Self {
        let n = m.dim();
        let lambda = data.eigenvalue;
        let mut transitions = vec![Vec::new(); n];
        let mut stationary = vec![0.0; n];
        let mut in_support = vec![false; n];
        for &u in &data.support {
            in_support[u] = true;
        }
        for &u in &data.support {
            let hu = data.right[u];
            let row: Vec<(usize, f64)> = m
                .row(u)
                .iter()
                .filter(|&&(v, _)| in_support[v])
                .map(|&(v, w)| (v, w * data.right[v] / (lambda * hu)))
                .collect();
            // renormalize away the last ulp of power-iteration error
            let total: f64 = row.iter().map(|&(_, p)| p).sum();
            transitions[u] = row.into_iter().map(|(v, p)| (v, p / total)).collect();
            stationary[u] = data.left[u] * hu;
        }
        let total: f64 = stationary.iter().sum();
        stationary.iter_mut().for_each(|p| *p /= total);
        GibbsChain {
            coding,
            transitions,
            stationary,
            log_weight,
            pressure: data.log_eigenvalue + scale,
            right: data.right,
            left: data.left,
            warning,
        }
    }

    pub fn pressure(&self) -> f64 {
        self.pressure
    }

    pub fn coding(&self) -> &BlockCoding {
        &self.coding
    }

    pub fn block_length(&self) -> usize {
        self.coding.block_length()
    }

    pub fn state_count(&self) -> usize {
        self.stationary.len()
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    /// Transition probabilities out of block state `u`.
    pub fn transitions(&self, u: usize) -> &[(usize, f64)] {
        &self.transitions[u]
    }

    pub fn transition(&self, u: usize, v: usize) -> f64 {
        self.transitions[u]
            .iter()
            .find(|&&(w, _)| w == v)
            .map_or(0.0, |&(_, p)| p)
    }

    /// Per-state log weight (the potential, penalized if applicable).
    pub fn log_weights(&self) -> &[f64] {
        &self.log_weight
    }

    /// Right Perron vector `h`.
    pub fn right_vector(&self) -> &[f64] {
        &self.right
    }

    pub fn left_vector(&self) -> &[f64] {
        &self.left
    }

    /// Set when the presentation is reducible.
    pub fn warning(&self) -> Option<&str> {
        self.warning.as_deref()
    }

    pub fn state_of(&self, block: &[Symbol]) -> Option<usize> {
        self.coding.index_of(block)
    }

    /// Metric entropy `-Σ π_u P_uv log P_uv`.
    pub fn entropy(&self) -> f64 {
        self.stationary
            .iter()
            .zip(&self.transitions)
            .map(|(&pi, row)| {
                -pi * row
                    .iter()
                    .filter(|&&(_, p)| p > 0.0)
                    .map(|&(_, p)| p * p.ln())
                    .sum::<f64>()
            })
            .sum()
    }

    /// `∫ w dμ` for the chain's own log weights.
    pub fn mean_log_weight(&self) -> f64 {
        self.stationary
            .iter()
            .zip(&self.log_weight)
            .filter(|(&p, _)| p > 0.0)
            .map(|(p, w)| p * w)
            .sum()
    }

    /// Measure of the cylinder of a word, anchored anywhere.
    pub fn cylinder_measure(&self, symbols: &[Symbol]) -> f64 {
        let k = self.block_length();
        if symbols.is_empty() {
            return 1.0;
        }
        if symbols.len() < k {
            return self
                .coding
                .blocks()
                .iter()
                .enumerate()
                .filter(|(_, b)| b.starts_with(symbols))
                .map(|(u, _)| self.stationary[u])
                .sum();
        }
        let mut states = symbols.windows(k).map(|w| self.coding.index_of(w));
        let Some(Some(mut u)) = states.next() else {
            return 0.0;
        };
        let mut p = self.stationary[u];
        for v in states {
            let Some(v) = v else { return 0.0 };
            p *= self.transition(u, v);
            if p == 0.0 {
                return 0.0;
            }
            u = v;
        }
        p
    }

    /// Measure of a cylinder set.
    pub fn measure(&self, set: &CylinderSet) -> f64 {
        set.words().map(|w| self.cylinder_measure(w)).sum()
    }

    /// Largest `|Σ_v P_uv - 1|` over support rows.
    pub fn row_sum_residual(&self) -> f64 {
        self.transitions
            .iter()
            .filter(|r| !r.is_empty())
            .map(|r| (r.iter().map(|&(_, p)| p).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|(πP)_v - π_v|`.
    pub fn stationarity_residual(&self) -> f64 {
        let mut next = vec![0.0; self.state_count()];
        for (u, row) in self.transitions.iter().enumerate() {
            for &(v, p) in row {
                next[v] += self.stationary[u] * p;
            }
        }
        next.iter()
            .zip(&self.stationary)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Topological pressure of `φ`.
pub fn pressure(sft: &Sft, potential: &Potential) -> Result<f64> {
    let pres = Presentation::new(sft, potential, &[])?;
    let (m, scale) = pres.matrix(pres.log_weight(), None);
    Ok(spectral_radius(&m)?.ln() + scale)
}

/// Equilibrium (Gibbs) chain of `φ` on its minimal block presentation.
pub fn equilibrium_chain(sft: &Sft, potential: &Potential) -> Result<GibbsChain> {
    let pres = Presentation::new(sft, potential, &[])?;
    GibbsChain::on_presentation(&pres, pres.log_weight().to_vec())
}

/// Equilibrium chain on a presentation fine enough to read the given sets.
pub fn equilibrium_chain_for(sft: &Sft, potential: &Potential, sets: &[&CylinderSet]) -> Result<GibbsChain> {
    let pres = Presentation::new(sft, potential, sets)?;
    GibbsChain::on_presentation(&pres, pres.log_weight().to_vec())
}

/// Measure of an anchored word; 0 when inadmissible.
pub fn cylinder_measure(chain: &GibbsChain, word: &Word) -> f64 {
    chain.cylinder_measure(word.symbols())
}

/// Pressure of the survivor set of a hole.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurvivorPressure {
    /// `-∞` when no orbit avoids the hole.
    pub value: f64,
    /// The hole is the whole space.
    pub whole_space: bool,
}

/// Value and slope of `t ↦ P(φ - t·1_R)`.
#[derive(Clone, Debug)]
pub struct PenalizedPressure {
    pub t: f64,
    pub value: f64,
    /// `-m_t(R)`.
    pub derivative: f64,
    /// Right Perron vector, usable as a warm start for nearby `t`.
    pub right: Vec<f64>,
}

impl PenalizedPressure {
    pub fn hole_mass(&self) -> f64 {
        -self.derivative
    }
}

/// A potential with a hole `R` (and optionally further sets read off the same
/// presentation): the one-parameter family `φ - t·1_R` and its survivor system.
#[derive(Clone, Debug)]
pub struct HoleSystem {
    presentation: Presentation,
    pressure: f64,
    hole_states: usize,
}

impl HoleSystem {
    pub fn new(sft: &Sft, potential: &Potential, hole: &CylinderSet) -> Result<Self> {
        Self::with_sets(sft, potential, hole, &[])
    }

    /// `extra` sets become members `1..` of the presentation.
    pub fn with_sets(sft: &Sft, potential: &Potential, hole: &CylinderSet, extra: &[&CylinderSet]) -> Result<Self> {
        let mut sets = vec![hole];
        sets.extend_from_slice(extra);
        let presentation = Presentation::new(sft, potential, &sets)?;
        let (m, scale) = presentation.matrix(presentation.log_weight(), None);
        let pressure = spectral_radius(&m)?.ln() + scale;
        let hole_states = presentation.members(0).iter().filter(|&&b| b).count();
        Ok(HoleSystem {
            presentation,
            pressure,
            hole_states,
        })
    }

    pub fn presentation(&self) -> &Presentation {
        &self.presentation
    }

    /// Pressure of `φ` (the `t = 0` value).
    pub fn pressure(&self) -> f64 {
        self.pressure
    }

    pub fn hole_mask(&self) -> &[bool] {
        self.presentation.members(0)
    }

    pub fn hole_is_empty(&self) -> bool {
        self.hole_states == 0
    }

    pub fn hole_is_whole(&self) -> bool {
        self.hole_states == self.presentation.state_count()
    }

    pub fn survivor_pressure(&self) -> Result<SurvivorPressure> {
        if self.hole_is_whole() {
            return Ok(SurvivorPressure {
                value: f64::NEG_INFINITY,
                whole_space: true,
            });
        }
        let keep: Vec<bool> = self.hole_mask().iter().map(|&h| !h).collect();
        let (m, scale) = self.presentation.matrix(self.presentation.log_weight(), Some(&keep));
        let rho = spectral_radius(&m)?;
        Ok(SurvivorPressure {
            value: if rho > 0.0 { rho.ln() + scale } else { f64::NEG_INFINITY },
            whole_space: false,
        })
    }

    /// `P(φ - t·1_R)` and its derivative `-m_t(R)`.
    pub fn penalized(&self, t: f64, warm: Option<&[f64]>) -> Result<PenalizedPressure> {
        if t == 0.0 && warm.is_none() && self.hole_is_empty() {
            return Ok(PenalizedPressure {
                t,
                value: self.pressure,
                derivative: 0.0,
                right: vec![1.0; self.presentation.state_count()],
            });
        }
        let w = self.presentation.penalized_log_weights(0, t);
        let (m, scale) = self.presentation.matrix(&w, None);
        let data = perron(&m, warm)?;
        let hole = self.hole_mask();
        let mass: f64 = data
            .support
            .iter()
            .filter(|&&u| hole[u])
            .map(|&u| data.left[u] * data.right[u])
            .sum();
        Ok(PenalizedPressure {
            t,
            value: data.log_eigenvalue + scale,
            derivative: -mass,
            right: data.right,
        })
    }

    /// `m_t(set)` for every set of the presentation (the hole first).
    pub fn penalized_masses(&self, t: f64) -> Result<Vec<f64>> {
        let w = self.presentation.penalized_log_weights(0, t);
        let (m, _) = self.presentation.matrix(&w, None);
        let data = perron(&m, None)?;
        let n_sets = self.presentation.set_count();
        Ok((0..n_sets)
            .map(|i| {
                let member = self.presentation.members(i);
                data.support
                    .iter()
                    .filter(|&&u| member[u])
                    .map(|&u| data.left[u] * data.right[u])
                    .sum()
            })
            .collect())
    }

    /// Equilibrium chain `m_t` of `φ - t·1_R`.
    pub fn penalized_chain(&self, t: f64) -> Result<GibbsChain> {
        let w = self.presentation.penalized_log_weights(0, t);
        GibbsChain::on_presentation(&self.presentation, w)
    }
}

/// Survivor pressure `P_φ(Σ_R)`.
pub fn survivor_pressure(sft: &Sft, potential: &Potential, hole: &CylinderSet) -> Result<SurvivorPressure> {
    HoleSystem::new(sft, potential, hole)?.survivor_pressure()
}

/// `P(φ - t·1_R)` with its derivative.
pub fn penalized_pressure(sft: &Sft, potential: &Potential, hole: &CylinderSet, t: f64) -> Result<PenalizedPressure> {
    HoleSystem::new(sft, potential, hole)?.penalized(t, None)
}

/// Empirical Gibbs constant over two-sided cylinders.
#[derive(Clone, Debug)]
pub struct GibbsConstant {
    /// Envelope `max_{1<=n<=depth} b_n`.
    pub b: f64,
    /// `(n, b_n)` for each depth.
    pub per_depth: Vec<(usize, f64)>,
    /// A point (as a word covering everything the ratio reads) attaining `b`.
    pub maximizer: Word,
}

/// Smallest `b` with `e^{-b} <= μ(Z_n(x)) / exp(S̃_n φ(x) - 2nP) <= e^b`, where
/// `Z_n(x)` is the `(-n, n)`-cylinder of `x` and `S̃_n φ = Σ_{k=-n}^{n-1} φ∘σ^k`
/// has `2n` terms. With this convention `b` absorbs the one-symbol mismatch
/// between the `2n + 1` coordinates of the cylinder and the `2n` terms of the
/// sum (e.g. `b = log 2` for the uniform Bernoulli measure).
pub fn gibbs_constant(chain: &GibbsChain, sft: &Sft, potential: &Potential, max_depth: usize) -> Result<GibbsConstant> {
    if max_depth == 0 {
        return Err(Error::InvalidArgument("max_depth must be >= 1".into()));
    }
    let (l, r) = potential.window();
    let p = chain.pressure();
    let mut per_depth = Vec::with_capacity(max_depth);
    let mut best = (f64::NEG_INFINITY, None);
    for n in 1..=max_depth as i64 {
        let lo = (-n).min(-n + l);
        let hi = n.max(n - 1 + r);
        let cyl_off = (-n - lo) as usize;
        let cyl_len = (2 * n + 1) as usize;
        let mut bn = 0.0f64;
        for symbols in enumerate_words(sft, (hi - lo + 1) as usize) {
            let x = Word::from_parts(symbols, lo);
            let mu = chain.cylinder_measure(&x.symbols()[cyl_off..cyl_off + cyl_len]);
            let s = potential.birkhoff_sum(&x.shifted(-n), 2 * n as usize)?;
            let ratio = mu.ln() - (s - 2.0 * n as f64 * p);
            if ratio.abs() > bn {
                bn = ratio.abs();
            }
            if ratio.abs() > best.0 {
                best = (ratio.abs(), Some(x));
            }
        }
        per_depth.push((n as usize, bn));
    }
    Ok(GibbsConstant {
        b: best.0,
        per_depth,
        maximizer: best.1.expect("at least one cylinder"),
    })
}

/// First-return transfer terms: `terms[r-1][i][j]` sums `e^{S_r φ(y) - rS}` over
/// words leaving hole state `i` and first coming back, at time `r`, in hole state `j`.
#[derive(Clone, Debug)]
pub struct FirstReturnTerms {
    /// Block-state indices of the hole, in presentation order.
    pub hole_states: Vec<usize>,
    pub terms: Vec<Vec<Vec<f64>>>,
}

pub fn first_return_terms(system: &HoleSystem, s: f64, max_len: usize) -> FirstReturnTerms {
    let pres = system.presentation();
    let n = pres.state_count();
    let hole = system.hole_mask();
    let hole_states: Vec<usize> = (0..n).filter(|&u| hole[u]).collect();
    let mut slot = vec![usize::MAX; n];
    for (i, &u) in hole_states.iter().enumerate() {
        slot[u] = i;
    }
    let weight: Vec<f64> = pres.log_weight().iter().map(|w| (w - s).exp()).collect();
    let k = hole_states.len();
    let mut terms = Vec::with_capacity(max_len);
    // front[i][u]: weight of paths from hole state i that are currently outside the hole at u
    let mut front = vec![vec![0.0; n]; k];
    let mut first = vec![vec![0.0; k]; k];
    for (i, &a) in hole_states.iter().enumerate() {
        for &v in pres.successors(a) {
            if hole[v] {
                first[i][slot[v]] += weight[a];
            } else {
                front[i][v] += weight[a];
            }
        }
    }
    terms.push(first);
    for _ in 2..=max_len {
        let mut next = vec![vec![0.0; n]; k];
        let mut term = vec![vec![0.0; k]; k];
        for i in 0..k {
            for u in 0..n {
                let g = front[i][u];
                if g == 0.0 {
                    continue;
                }
                let gw = g * weight[u];
                for &v in pres.successors(u) {
                    if hole[v] {
                        term[i][slot[v]] += gw;
                    } else {
                        next[i][v] += gw;
                    }
                }
            }
        }
        terms.push(term);
        front = next;
    }
    FirstReturnTerms { hole_states, terms }
}

/// Leading eigenvalue of the truncated induced operator.
#[derive(Clone, Debug)]
pub struct InducedEigenvalue {
    pub value: f64,
    pub max_len: usize,
    /// Heuristic size of the omitted tail: `‖T_L‖_∞ · q / (1 - q)` with
    /// `q = e^{P(Σ_R) - S}` the decay rate of long excursions.
    pub truncation_estimate: f64,
    /// No first-return word of length `<= max_len` exists.
    pub no_returns: bool,
}

pub fn induced_eigenvalue(
    sft: &Sft,
    potential: &Potential,
    hole: &CylinderSet,
    s: f64,
    max_len: usize,
) -> Result<InducedEigenvalue> {
    if max_len == 0 {
        return Err(Error::InvalidArgument("max return length must be >= 1".into()));
    }
    let system = HoleSystem::new(sft, potential, hole)?;
    if system.hole_is_empty() {
        return Err(Error::EmptySet);
    }
    let critical = system.survivor_pressure()?.value;
    if s <= critical {
        return Err(Error::BelowCritical { s, critical });
    }
    let fr = first_return_terms(&system, s, max_len);
    let k = fr.hole_states.len();
    let mut total = vec![vec![0.0; k]; k];
    for t in &fr.terms {
        for i in 0..k {
            for j in 0..k {
                total[i][j] += t[i][j];
            }
        }
    }
    let no_returns = total.iter().flatten().all(|&x| x == 0.0);
    let value = if no_returns {
        0.0
    } else {
        spectral_radius(&NonnegMatrix::from_dense(&total))?
    };
    let q = (critical - s).exp();
    let last = fr.terms.last().unwrap();
    let last_norm = last
        .iter()
        .map(|r| r.iter().sum::<f64>())
        .fold(0.0, f64::max);
    Ok(InducedEigenvalue {
        value,
        max_len,
        truncation_estimate: last_norm * q / (1.0 - q),
        no_returns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> f64 {
        (1.0 + 5f64.sqrt()) / 2.0
    }

    fn cyl(sft: &Sft, anchor: i64, words: &[&str]) -> CylinderSet {
        let words: Vec<Vec<Symbol>> = words.iter().map(|w| sft.parse_symbols(w).unwrap()).collect();
        let len = words[0].len();
        CylinderSet::new(sft, anchor, len, words).unwrap()
    }

    #[test]
    fn pressure_examples() {
        let f = Sft::full2();
        assert!((pressure(&f, &Potential::zero(&f)).unwrap() - 2f64.ln()).abs() < 1e-14);
        let g = Sft::gold();
        assert!((pressure(&g, &Potential::zero(&g)).unwrap() - golden().ln()).abs() < 1e-14);
        for p in [0.1, 0.37, 0.5, 0.9] {
            let b = Potential::bernoulli(&f, &[p, 1.0 - p]).unwrap();
            assert!(pressure(&f, &b).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn chain_examples() {
        let f = Sft::full2();
        let c = equilibrium_chain(&f, &Potential::zero(&f)).unwrap();
        assert!((c.stationary()[0] - 0.5).abs() < 1e-14);
        assert!((c.transition(0, 1) - 0.5).abs() < 1e-14);

        let p = 0.3;
        let c = equilibrium_chain(&f, &Potential::bernoulli(&f, &[p, 1.0 - p]).unwrap()).unwrap();
        for u in 0..2 {
            assert!((c.transition(u, 0) - p).abs() < 1e-14);
        }
        assert!((c.stationary()[0] - p).abs() < 1e-14);

        let g = Sft::gold();
        let c = equilibrium_chain(&g, &Potential::zero(&g)).unwrap();
        let gam = golden();
        assert!((c.transition(0, 0) - 1.0 / gam).abs() < 1e-14);
        assert!((c.transition(0, 1) - 1.0 / (gam * gam)).abs() < 1e-14);
        assert!((c.transition(1, 0) - 1.0).abs() < 1e-14);
        assert!(c.row_sum_residual() < 1e-12);
        assert!(c.stationarity_residual() < 1e-12);
    }

    #[test]
    fn cylinder_measure_examples() {
        let f = Sft::full2();
        let c = equilibrium_chain(&f, &Potential::zero(&f)).unwrap();
        assert!((cylinder_measure(&c, &f.word(vec![0], 0).unwrap()) - 0.5).abs() < 1e-15);
        for len in 1..6 {
            for w in crate::sft::admissible_words(&f, len).unwrap() {
                assert!((cylinder_measure(&c, &w) - 0.5f64.powi(len as i32)).abs() < 1e-15);
            }
        }
        let g = Sft::gold();
        let c = equilibrium_chain(&g, &Potential::zero(&g)).unwrap();
        let gam = golden();
        let expected = gam * gam / (1.0 + gam * gam) / gam;
        assert!((c.cylinder_measure(&[0, 0]) - expected).abs() < 1e-14);
        assert_eq!(c.cylinder_measure(&[1, 1]), 0.0);
    }

    #[test]
    fn variational_identity() {
        let g = Sft::gold();
        let phi = Potential::from_fn(&g, 0, 1, |w| 0.3 * w[0] as f64 - 0.2 * w[1] as f64).unwrap();
        let c = equilibrium_chain(&g, &phi).unwrap();
        assert!((c.entropy() + c.mean_log_weight() - c.pressure()).abs() < 1e-10);
    }

    #[test]
    fn survivor_examples() {
        let f = Sft::full2();
        let phi = Potential::zero(&f);
        let s = survivor_pressure(&f, &phi, &cyl(&f, 0, &["0"])).unwrap();
        assert!(s.value.abs() < 1e-14 && !s.whole_space);
        let s = survivor_pressure(&f, &phi, &cyl(&f, 0, &["00"])).unwrap();
        assert!((s.value - golden().ln()).abs() < 1e-12);
        let s = survivor_pressure(&f, &phi, &CylinderSet::whole(&f)).unwrap();
        assert!(s.value == f64::NEG_INFINITY && s.whole_space);
        // [0] ∪ [11]: every orbit hits it but the hole is not everything
        let h = cyl(&f, 0, &["00", "01", "11"]);
        let s = survivor_pressure(&f, &phi, &h).unwrap();
        assert!(s.value == f64::NEG_INFINITY && !s.whole_space);
    }

    #[test]
    fn penalized_examples() {
        let f = Sft::full2();
        let phi = Potential::zero(&f);
        let hole = cyl(&f, 0, &["0"]);
        let sys = HoleSystem::new(&f, &phi, &hole).unwrap();
        assert!((sys.penalized(0.0, None).unwrap().value - 2f64.ln()).abs() < 1e-14);
        for t in [-2.0, -0.5, 0.3, 1.0, 4.0] {
            let v = sys.penalized(t, None).unwrap().value;
            assert!((v - (1.0 + (-t as f64).exp()).ln()).abs() < 1e-13, "t = {t}");
        }
        let p = sys.penalized(2f64.ln(), None).unwrap();
        assert!((p.value - 1.5f64.ln()).abs() < 1e-14);
        assert!((p.hole_mass() - 1.0 / 3.0).abs() < 1e-13);
        let chain = sys.penalized_chain(2f64.ln()).unwrap();
        assert!((chain.measure(&hole) - 1.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn gibbs_constant_examples() {
        let f = Sft::full2();
        let phi = Potential::zero(&f);
        let c = equilibrium_chain(&f, &phi).unwrap();
        let b = gibbs_constant(&c, &f, &phi, 3).unwrap();
        assert!((b.b - 2f64.ln()).abs() < 1e-12);

        let p = 0.2;
        let phi = Potential::bernoulli(&f, &[p, 1.0 - p]).unwrap();
        let c = equilibrium_chain(&f, &phi).unwrap();
        let b = gibbs_constant(&c, &f, &phi, 4).unwrap();
        let bound = p.ln().abs().max((1.0 - p).ln().abs());
        assert!(b.per_depth.iter().all(|&(_, bn)| bn <= bound + 1e-12));

        let g = Sft::gold();
        let phi = Potential::zero(&g);
        let c = equilibrium_chain(&g, &phi).unwrap();
        let b = gibbs_constant(&c, &g, &phi, 5).unwrap();
        assert!(b.b.is_finite());
        let first = b.per_depth[0].1;
        assert!(b.per_depth.iter().all(|&(_, bn)| (bn - first).abs() < 1e-12));
    }

    #[test]
    fn induced_examples() {
        let f = Sft::full2();
        let phi = Potential::zero(&f);
        let hole = cyl(&f, 0, &["0"]);
        let at_pressure = induced_eigenvalue(&f, &phi, &hole, 2f64.ln(), 60).unwrap();
        assert!((at_pressure.value - 1.0).abs() < 1e-15 * 1e3);

        let r = induced_eigenvalue(&f, &phi, &hole, 1.5f64.ln(), 20).unwrap();
        let exact = 2.0;
        assert!(r.value <= exact);
        assert!(exact - r.value <= 2.0 * r.truncation_estimate + 1e-12);
        assert!((r.value - exact).abs() < 2e-3);

        // every return has length 1 when the hole is everything
        let whole = CylinderSet::whole(&f);
        let r = induced_eigenvalue(&f, &phi, &whole, 0.3, 1).unwrap();
        assert!((r.value - 2.0 * (-0.3f64).exp()).abs() < 1e-14);

        assert!(matches!(
            induced_eigenvalue(&f, &phi, &hole, 0.0, 5),
            Err(Error::BelowCritical { .. })
        ));
    }
}
