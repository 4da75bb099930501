//! Monte Carlo return-time statistics on Gibbs chains.
//!
//! Trajectories are block-state paths of an equilibrium chain started from its
//! stationary law, i.e. samples of `μ_φ`. The `k`-th return time to a set is the
//! time of the `k`-th visit at times `>= 1`.
//!
//! Randomness comes from ChaCha8 with one stream per trial index
//! (`seed_from_u64(seed)` followed by `set_stream(trial)`), so results do not
//! depend on the thread count or on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cylinder::CylinderSet;
use crate::error::{Error, Result};
use crate::ldp::{legendre, Cgf};
use crate::potential::Potential;
use crate::sft::Sft;
use crate::thermo::{GibbsChain, HoleSystem};

/// Minimum number of batches for batch-means standard errors.
pub const MIN_BATCHES: usize = 30;
/// Default cap on trajectory length.
pub const DEFAULT_HORIZON: u64 = 1_000_000;

/// An equilibrium chain on a presentation that reads a list of sets
/// (set `0` plays the role of the hole for penalized/tilted chains).
#[derive(Clone, Debug)]
pub struct ReturnProcess {
    system: HoleSystem,
    chain: GibbsChain,
}

impl ReturnProcess {
    pub fn new(sft: &Sft, potential: &Potential, sets: &[&CylinderSet]) -> Result<Self> {
        let Some((first, rest)) = sets.split_first() else {
            return Err(Error::InvalidArgument("at least one set is required".into()));
        };
        let system = HoleSystem::with_sets(sft, potential, first, rest)?;
        let chain = system.penalized_chain(0.0)?;
        Ok(ReturnProcess { system, chain })
    }

    pub fn chain(&self) -> &GibbsChain {
        &self.chain
    }

    pub fn system(&self) -> &HoleSystem {
        &self.system
    }

    pub fn set_count(&self) -> usize {
        self.system.presentation().set_count()
    }

    pub fn members(&self, set: usize) -> &[bool] {
        self.system.presentation().members(set)
    }

    pub fn state_count(&self) -> usize {
        self.chain.state_count()
    }

    /// `μ_φ(set)`.
    pub fn measure(&self, set: usize) -> f64 {
        let m = self.members(set);
        self.chain
            .stationary()
            .iter()
            .zip(m)
            .filter(|(_, &b)| b)
            .map(|(p, _)| p)
            .sum()
    }

    fn check_set(&self, set: usize) -> Result<()> {
        if set >= self.set_count() {
            return Err(Error::InvalidArgument(format!(
                "set index {set} out of range ({} sets)",
                self.set_count()
            )));
        }
        Ok(())
    }
}

/// Inverse-CDF sampler for a chain, optionally with per-step log likelihood
/// ratios against a reference chain on the same states.
struct Sampler {
    start: Vec<(usize, f64)>,
    rows: Vec<Vec<(usize, f64)>>,
    start_log_ratio: Vec<f64>,
    step_log_ratio: Vec<Vec<f64>>,
}

fn cumulative(entries: impl Iterator<Item = (usize, f64)>) -> Vec<(usize, f64)> {
    let mut acc = 0.0;
    let mut out: Vec<(usize, f64)> = entries
        .filter(|&(_, p)| p > 0.0)
        .map(|(v, p)| {
            acc += p;
            (v, acc)
        })
        .collect();
    if let Some(last) = out.last_mut() {
        last.1 = f64::INFINITY;
    }
    out
}

fn draw(cdf: &[(usize, f64)], x: f64) -> usize {
    let i = cdf.partition_point(|&(_, c)| c <= x);
    cdf[i.min(cdf.len() - 1)].0
}

impl Sampler {
    /// Samples from `law`; ratios are `log(dref/dlaw)`.
    fn new(law: &GibbsChain, reference: Option<&GibbsChain>) -> Self {
        let n = law.state_count();
        let start = cumulative(law.stationary().iter().copied().enumerate());
        let rows = (0..n)
            .map(|u| cumulative(law.transitions(u).iter().copied()))
            .collect();
        let (start_log_ratio, step_log_ratio) = match reference {
            None => (vec![0.0; n], (0..n).map(|u| vec![0.0; law.transitions(u).len()]).collect()),
            Some(r) => (
                (0..n)
                    .map(|u| (r.stationary()[u] / law.stationary()[u]).ln())
                    .collect(),
                (0..n)
                    .map(|u| {
                        law.transitions(u)
                            .iter()
                            .filter(|&&(_, p)| p > 0.0)
                            .map(|&(v, p)| (r.transition(u, v) / p).ln())
                            .collect()
                    })
                    .collect(),
            ),
        };
        Sampler {
            start,
            rows,
            start_log_ratio,
            step_log_ratio,
        }
    }

    fn first(&self, rng: &mut ChaCha8Rng) -> usize {
        draw(&self.start, rng.random::<f64>())
    }

    /// Next state and the log-ratio increment.
    fn step(&self, u: usize, rng: &mut ChaCha8Rng) -> (usize, f64) {
        let row = &self.rows[u];
        let x: f64 = rng.random();
        let i = row.partition_point(|&(_, c)| c <= x).min(row.len() - 1);
        (row[i].0, self.step_log_ratio[u][i])
    }
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// First `n` return times of one trajectory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReturnTimeSeries {
    pub set: usize,
    /// `r^1 < r^2 < …`; shorter than requested when truncated.
    pub times: Vec<u64>,
    /// The horizon was reached first.
    pub truncated: bool,
}

pub fn sample_return_times(
    process: &ReturnProcess,
    set: usize,
    n: usize,
    horizon: u64,
    seed: u64,
    trial: u64,
) -> Result<ReturnTimeSeries> {
    process.check_set(set)?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    let member = process.members(set);
    if !member.iter().any(|&b| b) {
        return Ok(ReturnTimeSeries {
            set,
            times: Vec::new(),
            truncated: true,
        });
    }
    let sampler = Sampler::new(process.chain(), None);
    let mut rng = trial_rng(seed, trial);
    let mut u = sampler.first(&mut rng);
    let mut times = Vec::with_capacity(n);
    let mut time = 0u64;
    while times.len() < n {
        if time >= horizon {
            return Ok(ReturnTimeSeries {
                set,
                times,
                truncated: true,
            });
        }
        u = sampler.step(u, &mut rng).0;
        time += 1;
        if member[u] {
            debug_assert!(times.last().is_none_or(|&t| t < time));
            times.push(time);
        }
    }
    Ok(ReturnTimeSeries {
        set,
        times,
        truncated: false,
    })
}

/// Point estimate with a batch-means standard error.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateRecord {
    pub estimate: f64,
    pub std_error: f64,
    pub trials: u64,
    /// Trials that hit the horizon before the statistic was determined.
    pub truncated: u64,
    pub n: usize,
    pub seed: u64,
    pub batches: usize,
    pub tilted: bool,
    /// Set when the estimate is unusable as is (e.g. no hits without tilting).
    pub note: Option<String>,
}

/// Shared knobs of the Monte Carlo estimators.
#[derive(Clone, Copy, Debug)]
pub struct McConfig {
    pub trials: u64,
    pub seed: u64,
    pub horizon: u64,
    pub batches: usize,
}

impl McConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        McConfig {
            trials,
            seed,
            horizon: DEFAULT_HORIZON,
            batches: 100,
        }
    }

    fn check(&self) -> Result<usize> {
        let batches = self.batches.max(MIN_BATCHES);
        if self.trials < batches as u64 {
            return Err(Error::InvalidArgument(format!(
                "need at least {batches} trials for batch means, got {}",
                self.trials
            )));
        }
        Ok(batches)
    }
}

fn logsumexp(xs: impl Iterator<Item = f64>) -> (f64, usize) {
    let xs: Vec<f64> = xs.collect();
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return (f64::NEG_INFINITY, xs.len());
    }
    let s: f64 = xs.iter().map(|x| (x - m).exp()).sum();
    (m + s.ln(), xs.len())
}

/// `(log mean, standard error of log mean)` from per-trial log values, using
/// batch means and the delta method. `None` entries (truncated) are skipped.
fn log_mean_with_error(values: &[Option<f64>], batches: usize) -> (f64, f64, u64) {
    let used: Vec<f64> = values.iter().flatten().copied().collect();
    let truncated = (values.len() - used.len()) as u64;
    let (total, count) = logsumexp(used.iter().copied());
    let log_mean = total - (count as f64).ln();
    if log_mean == f64::NEG_INFINITY || count < batches {
        return (log_mean, f64::NAN, truncated);
    }
    let size = count / batches;
    let ratios: Vec<f64> = (0..batches)
        .map(|b| {
            let end = if b + 1 == batches { count } else { (b + 1) * size };
            let (s, k) = logsumexp(used[b * size..end].iter().copied());
            (s - (k as f64).ln() - log_mean).exp()
        })
        .collect();
    let mean = ratios.iter().sum::<f64>() / batches as f64;
    let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (log_mean, (var / batches as f64).sqrt(), truncated)
}

/// Time of the `n`-th visit to each listed set along one trajectory
/// (`None` when the horizon comes first), plus the accumulated log likelihood
/// ratio up to each of those times.
fn run_trial(
    process: &ReturnProcess,
    sampler: &Sampler,
    sets: &[usize],
    n: usize,
    stop_at: u64,
    rng: &mut ChaCha8Rng,
) -> Vec<Option<(u64, f64)>> {
    let mut u = sampler.first(rng);
    let mut log_ratio = sampler.start_log_ratio[u];
    let mut counts = vec![0usize; sets.len()];
    let mut out = vec![None; sets.len()];
    let mut remaining = sets.len();
    let mut time = 0u64;
    while remaining > 0 && time < stop_at {
        let (v, dl) = sampler.step(u, rng);
        u = v;
        log_ratio += dl;
        time += 1;
        for (k, &s) in sets.iter().enumerate() {
            if out[k].is_none() && process.members(s)[u] {
                counts[k] += 1;
                if counts[k] == n {
                    out[k] = Some((time, log_ratio));
                    remaining -= 1;
                }
            }
        }
    }
    out
}

/// `(1/n) log Ê[e^{α r^n}]`.
pub fn empirical_cgf(process: &ReturnProcess, set: usize, alpha: f64, n: usize, cfg: McConfig) -> Result<EstimateRecord> {
    Ok(empirical_cgf_multi(process, &[set], alpha, n, cfg)?.remove(0))
}

/// Empirical CGFs against several sets measured on the same trajectories,
/// e.g. an inner and an outer approximation.
pub fn empirical_cgf_multi(
    process: &ReturnProcess,
    sets: &[usize],
    alpha: f64,
    n: usize,
    cfg: McConfig,
) -> Result<Vec<EstimateRecord>> {
    for &s in sets {
        process.check_set(s)?;
    }
    let batches = cfg.check()?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    let sampler = Sampler::new(process.chain(), None);
    let results: Vec<Vec<Option<(u64, f64)>>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(cfg.seed, trial);
            run_trial(process, &sampler, sets, n, cfg.horizon, &mut rng)
        })
        .collect();
    sets.iter()
        .enumerate()
        .map(|(k, _)| {
            let values: Vec<Option<f64>> = results
                .iter()
                .map(|r| r[k].map(|(t, _)| alpha * t as f64))
                .collect();
            let (log_mean, se, truncated) = log_mean_with_error(&values, batches);
            if truncated == cfg.trials {
                return Err(Error::Numeric("every trial hit the horizon".into()));
            }
            let estimate = if alpha == 0.0 { 0.0 } else { log_mean / n as f64 };
            Ok(EstimateRecord {
                estimate,
                std_error: if alpha == 0.0 { 0.0 } else { se / n as f64 },
                trials: cfg.trials,
                truncated,
                n,
                seed: cfg.seed,
                batches,
                tilted: false,
                note: None,
            })
        })
        .collect()
}

/// Per-trial `r^n` against each listed set (`None` when truncated), for raw output.
pub fn sample_many(process: &ReturnProcess, sets: &[usize], n: usize, cfg: McConfig) -> Result<Vec<Vec<Option<u64>>>> {
    for &s in sets {
        process.check_set(s)?;
    }
    let sampler = Sampler::new(process.chain(), None);
    Ok((0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(cfg.seed, trial);
            run_trial(process, &sampler, sets, n, cfg.horizon, &mut rng)
                .into_iter()
                .map(|r| r.map(|(t, _)| t))
                .collect()
        })
        .collect())
}

/// How [`empirical_tail`] samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailMethod {
    Direct,
    /// Sample the penalized equilibrium state `m_{Ψ(α*)}` with `α*` the
    /// Legendre optimizer at `u`, reweighting by exact likelihood ratios.
    Tilted,
}

/// `(1/n) log P̂(r^n >= nu)` for `u` above the mean return time, and
/// `(1/n) log P̂(r^n <= nu)` otherwise. Requires the hole of the process (set 0).
pub fn empirical_tail(
    process: &ReturnProcess,
    u: f64,
    n: usize,
    method: TailMethod,
    cfg: McConfig,
) -> Result<EstimateRecord> {
    let batches = cfg.check()?;
    if n == 0 || !(u > 0.0) {
        return Err(Error::InvalidArgument("need n >= 1 and u > 0".into()));
    }
    let upper = u >= 1.0 / process.measure(0);
    let threshold = n as f64 * u;
    let tilted_chain;
    let sampler = match method {
        TailMethod::Direct => Sampler::new(process.chain(), None),
        TailMethod::Tilted => {
            let cgf = Cgf::from_system(process.system().clone())?;
            let opt = legendre(&cgf, u)?;
            if !opt.alpha.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "no tilt exists at u = {u}: the rate is -∞ there"
                )));
            }
            let t = cgf.eval(opt.alpha)?.psi;
            tilted_chain = process.system().penalized_chain(t)?;
            Sampler::new(&tilted_chain, Some(process.chain()))
        }
    };
    let outcomes: Vec<Option<f64>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(cfg.seed, trial);
            let mut u0 = sampler.first(&mut rng);
            let mut log_ratio = sampler.start_log_ratio[u0];
            let member = process.members(0);
            let mut count = 0usize;
            let mut time = 0u64;
            loop {
                if upper && time as f64 >= threshold {
                    // fewer than n returns strictly before nu means r^n >= nu
                    return Some(log_ratio);
                }
                if !upper && time as f64 > threshold {
                    return Some(f64::NEG_INFINITY);
                }
                if time >= cfg.horizon {
                    return None;
                }
                let (v, dl) = sampler.step(u0, &mut rng);
                u0 = v;
                log_ratio += dl;
                time += 1;
                if member[u0] {
                    count += 1;
                    if count == n {
                        let hit = if upper {
                            time as f64 >= threshold
                        } else {
                            time as f64 <= threshold
                        };
                        return Some(if hit { log_ratio } else { f64::NEG_INFINITY });
                    }
                }
            }
        })
        .collect();
    let (log_p, se, truncated) = log_mean_with_error(&outcomes, batches);
    let note = (log_p == f64::NEG_INFINITY && method == TailMethod::Direct)
        .then(|| "no trial reached the event; use tilting".to_string());
    Ok(EstimateRecord {
        estimate: log_p / n as f64,
        std_error: se / n as f64,
        trials: cfg.trials,
        truncated,
        n,
        seed: cfg.seed,
        batches,
        tilted: method == TailMethod::Tilted,
        note,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full2_process(words: &[&[usize]]) -> (Sft, ReturnProcess) {
        let s = Sft::full2();
        let len = words[0].len();
        let set = CylinderSet::new(&s, 0, len, words.iter().map(|w| w.to_vec())).unwrap();
        let p = ReturnProcess::new(&s, &Potential::zero(&s), &[&set]).unwrap();
        (s, p)
    }

    #[test]
    fn whole_space_returns_every_step() {
        let s = Sft::full2();
        let p = ReturnProcess::new(&s, &Potential::zero(&s), &[&CylinderSet::whole(&s)]).unwrap();
        let r = sample_return_times(&p, 0, 5, 100, 1, 0).unwrap();
        assert_eq!(r.times, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn golden_gaps_are_at_least_two() {
        let s = Sft::gold();
        let one = CylinderSet::new(&s, 0, 1, [vec![1]]).unwrap();
        let p = ReturnProcess::new(&s, &Potential::zero(&s), &[&one]).unwrap();
        for trial in 0..50 {
            let r = sample_return_times(&p, 0, 20, 10_000, 7, trial).unwrap();
            assert!(r.times.windows(2).all(|w| w[1] - w[0] >= 2));
        }
    }

    #[test]
    fn zero_alpha_is_exact() {
        let (_, p) = full2_process(&[&[0]]);
        let r = empirical_cgf(&p, 0, 0.0, 10, McConfig::new(300, 3)).unwrap();
        assert_eq!(r.estimate, 0.0);
    }

    #[test]
    fn deterministic_under_seed() {
        let (_, p) = full2_process(&[&[0]]);
        let a = empirical_cgf(&p, 0, 0.2, 20, McConfig::new(2000, 11)).unwrap();
        let b = empirical_cgf(&p, 0, 0.2, 20, McConfig::new(2000, 11)).unwrap();
        assert_eq!(a, b);
        let c = empirical_cgf(&p, 0, 0.2, 20, McConfig::new(2000, 12)).unwrap();
        assert_ne!(a.estimate, c.estimate);
    }

    #[test]
    fn typical_tail_is_near_zero() {
        let (_, p) = full2_process(&[&[0]]);
        let r = empirical_tail(&p, 2.0, 40, TailMethod::Direct, McConfig::new(3000, 5)).unwrap();
        assert!(r.estimate > -0.05 && r.estimate <= 0.0);
    }
}
