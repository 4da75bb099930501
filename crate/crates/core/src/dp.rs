//! Exact distribution of the `n`-th return time by forward dynamic programming.
//!
//! The state is (block state, returns so far); each step pushes mass along the
//! chain and records the mass completing its `n`-th return. The moment
//! generating function is truncated at `T_max`; the omitted part is bounded by
//! a supersolution: if `Q_{uv} = P_{uv} e^{α} e^{-t'·1_R(v)}` satisfies
//! `Qg <= g` for a positive `g`, then `E_u[e^{α τ_k}] <= e^{t'k} g(u)/min g`
//! for the time `τ_k` of the `k`-th visit. Taking `t'` slightly above `Ψ(α)`
//! makes `Q` strictly subcritical, and `Qg <= g` is checked numerically.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ldp::Cgf;
use crate::perron::{perron, NonnegMatrix};
use crate::simulate::ReturnProcess;

/// Default limit on `states × n × T_max`.
pub const DEFAULT_CELL_LIMIT: u64 = 10_000_000;

/// Initial law of the DP.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Start {
    /// `μ_φ` itself.
    Stationary,
    /// `μ_φ` conditioned on the given set of the process.
    Conditioned(usize),
}

/// `P(r^n = j)` for `1 <= j <= T_max`, with the mass still undecided at `T_max`.
#[derive(Clone, Debug)]
pub struct ExactDp {
    process: ReturnProcess,
    set: usize,
    n: usize,
    /// `dist[j] = P(r^n = j)`; `dist[0] = 0`.
    pub dist: Vec<f64>,
    /// `residual[c][u]`: mass in state `u` with `c < n` returns at time `T_max`.
    residual: Vec<Vec<f64>>,
}

/// Truncated moment with its certified remainder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DpMoment {
    /// `E[e^{α r^n}; r^n <= T_max]`.
    pub truncated: f64,
    /// Upper bound on `E[e^{α r^n}; r^n > T_max]`.
    pub tail_bound: f64,
}

impl DpMoment {
    /// `(1/n) log` of the truncated moment.
    pub fn log_rate(&self, n: usize) -> f64 {
        self.truncated.ln() / n as f64
    }

    /// Bracket `[lower, upper]` of `(1/n) log E[e^{α r^n}]`.
    pub fn log_rate_bracket(&self, n: usize) -> (f64, f64) {
        (self.log_rate(n), (self.truncated + self.tail_bound).ln() / n as f64)
    }
}

pub fn exact_dp(process: &ReturnProcess, set: usize, n: usize, t_max: usize, start: Start) -> Result<ExactDp> {
    exact_dp_with_limit(process, set, n, t_max, start, DEFAULT_CELL_LIMIT)
}

pub fn exact_dp_with_limit(
    process: &ReturnProcess,
    set: usize,
    n: usize,
    t_max: usize,
    start: Start,
    cell_limit: u64,
) -> Result<ExactDp> {
    if set >= process.set_count() {
        return Err(Error::InvalidArgument(format!("set index {set} out of range")));
    }
    if n == 0 || t_max == 0 {
        return Err(Error::InvalidArgument("need n >= 1 and T_max >= 1".into()));
    }
    let states = process.state_count();
    let cells = states as u64 * n as u64 * t_max as u64;
    if cells > cell_limit {
        return Err(Error::TooLarge {
            cells,
            limit: cell_limit,
        });
    }
    let chain = process.chain();
    let member = process.members(set);
    let mut init: Vec<f64> = chain.stationary().to_vec();
    if let Start::Conditioned(s) = start {
        if s >= process.set_count() {
            return Err(Error::InvalidArgument(format!("set index {s} out of range")));
        }
        let m = process.members(s);
        init.iter_mut().zip(m).for_each(|(p, &b)| {
            if !b {
                *p = 0.0
            }
        });
        let total: f64 = init.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidArgument("conditioning set has zero measure".into()));
        }
        init.iter_mut().for_each(|p| *p /= total);
    }
    let mut cur = vec![vec![0.0; states]; n];
    cur[0] = init;
    let mut dist = vec![0.0; t_max + 1];
    for slot in dist.iter_mut().skip(1) {
        let mut next = vec![vec![0.0; states]; n];
        for (c, row) in cur.iter().enumerate() {
            for (u, &mass) in row.iter().enumerate() {
                if mass == 0.0 {
                    continue;
                }
                for &(v, p) in chain.transitions(u) {
                    let w = mass * p;
                    if member[v] {
                        if c + 1 == n {
                            *slot += w;
                        } else {
                            next[c + 1][v] += w;
                        }
                    } else {
                        next[c][v] += w;
                    }
                }
            }
        }
        cur = next;
    }
    Ok(ExactDp {
        process: process.clone(),
        set,
        n,
        dist,
        residual: cur,
    })
}

impl ExactDp {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t_max(&self) -> usize {
        self.dist.len() - 1
    }

    /// `P(r^n > T_max)`.
    pub fn remaining_mass(&self) -> f64 {
        self.residual.iter().flatten().sum()
    }

    /// `P(r^n >= x)`; exact for `x <= T_max + 1`.
    pub fn tail_ge(&self, x: f64) -> Result<f64> {
        let first = x.ceil().max(1.0);
        if first > (self.t_max() + 1) as f64 {
            return Err(Error::InvalidArgument(format!(
                "P(r^n >= {x}) needs T_max >= {}",
                first - 1.0
            )));
        }
        let first = first as usize;
        Ok(self.dist[first.min(self.dist.len())..].iter().sum::<f64>() + self.remaining_mass())
    }

    /// `P(r^n <= x)`; exact for `x <= T_max`.
    pub fn tail_le(&self, x: f64) -> Result<f64> {
        let last = x.floor();
        if last > self.t_max() as f64 {
            return Err(Error::InvalidArgument(format!("P(r^n <= {x}) needs T_max >= {last}")));
        }
        if last < 1.0 {
            return Ok(0.0);
        }
        Ok(self.dist[..=last as usize].iter().sum())
    }

    /// `E[e^{α r^n}]` up to `T_max` and a certified bound on the rest.
    pub fn moment(&self, alpha: f64) -> Result<DpMoment> {
        let truncated: f64 = self
            .dist
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, p)| p * (alpha * j as f64).exp())
            .sum();
        let remaining = self.remaining_mass();
        if remaining == 0.0 {
            return Ok(DpMoment {
                truncated,
                tail_bound: 0.0,
            });
        }
        let t = self.t_max() as f64;
        let mut bound = f64::INFINITY;
        if alpha <= 0.0 {
            bound = remaining * (alpha * t).exp();
        }
        if let Some(b) = self.supersolution_bound(alpha)? {
            bound = bound.min(b);
        }
        Ok(DpMoment {
            truncated,
            tail_bound: bound,
        })
    }

    fn supersolution_bound(&self, alpha: f64) -> Result<Option<f64>> {
        let cgf = Cgf::from_system(self.hole_system()?)?;
        if alpha >= cgf.alpha_max() {
            return Ok(None);
        }
        let psi = cgf.eval(alpha)?.psi;
        let chain = self.process.chain();
        let member = self.process.members(self.set);
        let states = chain.state_count();
        let mut eta = 1e-9 * psi.abs().max(1.0);
        for _ in 0..12 {
            let tp = psi + eta;
            let rows = (0..states)
                .map(|u| {
                    chain
                        .transitions(u)
                        .iter()
                        .map(|&(v, p)| (v, p * (alpha - if member[v] { tp } else { 0.0 }).exp()))
                        .collect()
                })
                .collect();
            let q = NonnegMatrix::from_rows(rows);
            let Ok(data) = perron(&q, None) else {
                return Ok(None);
            };
            // g must be positive wherever residual mass sits
            let g: Vec<f64> = data.right.iter().map(|&x| x.max(0.0)).collect();
            let mut qg = vec![0.0; states];
            q.apply(&g, &mut qg);
            let sup_ok = (0..states).all(|u| qg[u] <= g[u]);
            let covered = self
                .residual
                .iter()
                .all(|row| row.iter().zip(&g).all(|(&m, &gu)| m == 0.0 || gu > 0.0));
            if sup_ok && covered {
                let gmin = g
                    .iter()
                    .zip(0..)
                    .filter(|&(_, u)| self.residual.iter().any(|row| row[u] > 0.0))
                    .map(|(&x, _)| x)
                    .fold(f64::INFINITY, f64::min);
                let tmax = self.t_max() as f64;
                let total: f64 = self
                    .residual
                    .iter()
                    .enumerate()
                    .map(|(c, row)| {
                        let k = (self.n - c) as f64;
                        row.iter()
                            .zip(&g)
                            .map(|(&m, &gu)| m * gu)
                            .sum::<f64>()
                            * (alpha * tmax + tp * k).exp()
                    })
                    .sum();
                return Ok(Some(total / gmin));
            }
            eta *= 10.0;
        }
        Ok(None)
    }

    fn hole_system(&self) -> Result<crate::thermo::HoleSystem> {
        if self.set == 0 {
            return Ok(self.process.system().clone());
        }
        Err(Error::InvalidArgument(
            "tail bounds are available for the hole (set 0) of the process".into(),
        ))
    }
}

/// `(1/n) log E[e^{α r^n}]` started from `μ` conditioned on `S` and from `μ`
/// itself, for each `n`. Set `0` of the process is `R`, `start` indexes `S`.
#[derive(Clone, Debug, Serialize)]
pub struct HittingVsReturn {
    pub n: usize,
    pub from_set: f64,
    pub from_whole: f64,
    pub difference: f64,
}

pub fn hitting_vs_return_check(
    process: &ReturnProcess,
    start: usize,
    alpha: f64,
    n_list: &[usize],
    t_max: usize,
) -> Result<Vec<HittingVsReturn>> {
    n_list
        .iter()
        .map(|&n| {
            let a = exact_dp(process, 0, n, t_max, Start::Conditioned(start))?.moment(alpha)?;
            let b = exact_dp(process, 0, n, t_max, Start::Stationary)?.moment(alpha)?;
            let from_set = a.log_rate(n);
            let from_whole = b.log_rate(n);
            Ok(HittingVsReturn {
                n,
                from_set,
                from_whole,
                difference: from_set - from_whole,
            })
        })
        .collect()
}
