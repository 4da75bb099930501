//! Memory-1 presentation of a potential together with a family of cylinder sets.
//!
//! Each set is first reduced to the smallest window it depends on; the sets
//! are then aligned on their common window and the potential window is moved
//! to coordinate 0. Moving a function by a shift changes it by a coboundary,
//! so pressures, equilibrium states and set masses are unaffected.

use crate::cylinder::CylinderSet;
use crate::error::Result;
use crate::perron::NonnegMatrix;
use crate::potential::Potential;
use crate::sft::{BlockCoding, Sft, Symbol};

#[derive(Clone, Debug)]
pub struct Presentation {
    coding: BlockCoding,
    log_weight: Vec<f64>,
    members: Vec<Vec<bool>>,
    /// Coordinate of block position 0 for the sets.
    set_origin: i64,
}

impl Presentation {
    pub fn new(sft: &Sft, potential: &Potential, sets: &[&CylinderSet]) -> Result<Self> {
        Self::with_min_block(sft, potential, sets, 1)
    }

    pub fn with_min_block(
        sft: &Sft,
        potential: &Potential,
        sets: &[&CylinderSet],
        min_block: usize,
    ) -> Result<Self> {
        let reduced: Vec<CylinderSet> = sets.iter().map(|s| s.reduced(sft)).collect();
        let lo = reduced.iter().map(|s| s.anchor()).min().unwrap_or(0);
        let hi = reduced.iter().map(|s| s.end()).max().unwrap_or(0);
        let set_span = (hi - lo + 1) as usize;
        let k = potential.span().max(set_span).max(min_block);
        let coding = BlockCoding::new(sft, k)?;
        let log_weight = coding
            .blocks()
            .iter()
            .map(|b| potential.value_at_prefix(b))
            .collect();
        let members = reduced
            .iter()
            .map(|s| {
                let off = (s.anchor() - lo) as usize;
                coding
                    .blocks()
                    .iter()
                    .map(|b| s.contains_word(&b[off..off + s.len()]))
                    .collect()
            })
            .collect();
        Ok(Presentation {
            coding,
            log_weight,
            members,
            set_origin: lo,
        })
    }

    pub fn coding(&self) -> &BlockCoding {
        &self.coding
    }

    pub fn state_count(&self) -> usize {
        self.coding.state_count()
    }

    pub fn block(&self, u: usize) -> &[Symbol] {
        self.coding.block(u)
    }

    pub fn successors(&self, u: usize) -> &[usize] {
        self.coding.target().successors(u)
    }

    pub fn log_weight(&self) -> &[f64] {
        &self.log_weight
    }

    /// Membership mask of the `i`-th set.
    pub fn members(&self, i: usize) -> &[bool] {
        &self.members[i]
    }

    pub fn set_count(&self) -> usize {
        self.members.len()
    }

    pub fn set_origin(&self) -> i64 {
        self.set_origin
    }

    /// Per-state log weights of `φ - t·1_set`.
    pub fn penalized_log_weights(&self, set: usize, t: f64) -> Vec<f64> {
        self.log_weight
            .iter()
            .zip(&self.members[set])
            .map(|(&w, &m)| if m { w - t } else { w })
            .collect()
    }

    /// `M_{uv} = e^{w_u - c}` on allowed transitions, restricted to `keep`.
    /// Returns the matrix and the scale `c` (so `log λ(M) + c` is the pressure).
    pub fn matrix(&self, log_weights: &[f64], keep: Option<&[bool]>) -> (NonnegMatrix, f64) {
        let kept = |u: usize| keep.is_none_or(|k| k[u]);
        let scale = (0..self.state_count())
            .filter(|&u| kept(u))
            .map(|u| log_weights[u])
            .fold(f64::NEG_INFINITY, f64::max);
        let scale = if scale.is_finite() { scale } else { 0.0 };
        let rows = (0..self.state_count())
            .map(|u| {
                if !kept(u) {
                    return Vec::new();
                }
                let w = (log_weights[u] - scale).exp();
                self.successors(u)
                    .iter()
                    .filter(|&&v| kept(v))
                    .map(|&v| (v, w))
                    .collect()
            })
            .collect();
        (NonnegMatrix::from_rows(rows), scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sets_are_aligned_on_reduced_windows() {
        let s = Sft::full2();
        let phi = Potential::zero(&s);
        // [0] at coordinate 3 and [11] at 4..5: common window 3..5
        let a = CylinderSet::new(&s, 3, 1, [vec![0]]).unwrap();
        let b = CylinderSet::new(&s, 4, 2, [vec![1, 1]]).unwrap();
        let p = Presentation::new(&s, &phi, &[&a, &b]).unwrap();
        assert_eq!(p.coding().block_length(), 3);
        assert_eq!(p.set_origin(), 3);
        let count_a = p.members(0).iter().filter(|&&m| m).count();
        let count_b = p.members(1).iter().filter(|&&m| m).count();
        assert_eq!((count_a, count_b), (4, 2));
    }

    #[test]
    fn depth_sets_reduce() {
        let s = Sft::full2();
        let phi = Potential::zero(&s);
        let a = CylinderSet::new(&s, 0, 1, [vec![0]])
            .unwrap()
            .refine(&s, -4, 9)
            .unwrap();
        let p = Presentation::new(&s, &phi, &[&a]).unwrap();
        assert_eq!(p.state_count(), 2);
    }
}
