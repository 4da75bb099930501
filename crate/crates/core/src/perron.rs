//! Perron–Frobenius data of sparse nonnegative matrices.
//!
//! Power iteration runs separately on every strongly connected component that
//! carries a cycle; the spectral radius is the maximum over components.
//! Periodic components, and any component that has not converged after a few
//! hundred steps, are iterated on `M + cI` with `c` the current upper estimate
//! of the root, which removes the peripheral eigenvalues other than the
//! Perron root.
//! Iteration stops when the Collatz–Wielandt bounds
//! `min (Mx)_i/x_i <= λ <= max (Mx)_i/x_i` agree to a relative `1e-14`.

use crate::error::{Error, Result};
use crate::graph;

const REL_TOL: f64 = 1e-14;
const MAX_ITER: usize = 100_000;
const SHIFT_AFTER: usize = 200;
const DENSE_LIMIT: usize = 256;

/// Row-compressed nonnegative matrix.
#[derive(Clone, Debug, Default)]
pub struct NonnegMatrix {
    rows: Vec<Vec<(usize, f64)>>,
}

impl NonnegMatrix {
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        debug_assert!(rows
            .iter()
            .flatten()
            .all(|&(j, w)| j < rows.len() && w >= 0.0 && w.is_finite()));
        NonnegMatrix { rows }
    }

    pub fn from_dense(m: &[Vec<f64>]) -> Self {
        let rows = m
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, &w)| w > 0.0)
                    .map(|(j, &w)| (j, w))
                    .collect()
            })
            .collect();
        Self::from_rows(rows)
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn transpose(&self) -> NonnegMatrix {
        let mut rows = vec![Vec::new(); self.dim()];
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, w) in r {
                rows[j].push((i, w));
            }
        }
        NonnegMatrix { rows }
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (yi, r) in y.iter_mut().zip(&self.rows) {
            *yi = r.iter().map(|&(j, w)| w * x[j]).sum();
        }
    }

    fn successors(&self) -> Vec<Vec<usize>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(j, _)| j).collect())
            .collect()
    }

    /// Principal submatrix on `states` (sorted), re-indexed.
    fn restrict(&self, states: &[usize]) -> NonnegMatrix {
        let mut local = vec![usize::MAX; self.dim()];
        for (k, &s) in states.iter().enumerate() {
            local[s] = k;
        }
        let rows = states
            .iter()
            .map(|&s| {
                self.rows[s]
                    .iter()
                    .filter(|&&(j, _)| local[j] != usize::MAX)
                    .map(|&(j, w)| (local[j], w))
                    .collect()
            })
            .collect();
        NonnegMatrix { rows }
    }
}

/// Leading eigen-data. Vectors have full dimension and vanish outside the
/// dominant component.
#[derive(Clone, Debug)]
pub struct PerronData {
    pub eigenvalue: f64,
    pub log_eigenvalue: f64,
    /// Right eigenvector `h`, max-normalized.
    pub right: Vec<f64>,
    /// Left eigenvector `ν`, scaled so that `Σ ν_i h_i = 1`.
    pub left: Vec<f64>,
    /// States of the component attaining the eigenvalue.
    pub support: Vec<usize>,
    /// Number of components attaining the eigenvalue (1 when unique).
    pub dominant_components: usize,
    /// Whether the whole matrix is irreducible.
    pub irreducible: bool,
}

impl PerronData {
    /// `max |Mh - λh| / (λ max h)` and the same for the left vector.
    pub fn residuals(&self, m: &NonnegMatrix) -> (f64, f64) {
        let n = m.dim();
        let mut y = vec![0.0; n];
        m.apply(&self.right, &mut y);
        let hmax = self.right.iter().fold(0.0f64, |a, &b| a.max(b));
        let r = y
            .iter()
            .zip(&self.right)
            .map(|(a, b)| (a - self.eigenvalue * b).abs())
            .fold(0.0f64, f64::max)
            / (self.eigenvalue * hmax);
        m.transpose().apply(&self.left, &mut y);
        let lmax = self.left.iter().fold(0.0f64, |a, &b| a.max(b));
        let l = y
            .iter()
            .zip(&self.left)
            .map(|(a, b)| (a - self.eigenvalue * b).abs())
            .fold(0.0f64, f64::max)
            / (self.eigenvalue * lmax);
        (r, l)
    }
}

struct Component {
    states: Vec<usize>,
    period: usize,
}

fn cyclic_components(m: &NonnegMatrix) -> (Vec<Component>, bool) {
    let succ = m.successors();
    let comps = graph::components(&succ, None);
    let irreducible = comps.len() == 1 && graph::is_cyclic(&succ, &comps[0]);
    let cyclic = comps
        .into_iter()
        .filter(|c| graph::is_cyclic(&succ, c))
        .map(|c| {
            let period = graph::period(&succ, &c);
            Component { states: c, period }
        })
        .collect();
    (cyclic, irreducible)
}

/// Power iteration on an irreducible matrix. Returns `(λ, x)` with `x > 0`.
fn power_iterate(m: &NonnegMatrix, period: usize, warm: Option<Vec<f64>>) -> Result<(f64, Vec<f64>)> {
    let n = m.dim();
    let max_row = (0..n)
        .map(|i| m.row(i).iter().map(|&(_, w)| w).sum::<f64>())
        .fold(0.0f64, f64::max);
    if max_row == 0.0 {
        return Ok((0.0, vec![1.0; n]));
    }
    if n == 1 {
        return Ok((m.row(0).iter().map(|&(_, w)| w).sum(), vec![1.0]));
    }
    let mut x = match warm {
        Some(w) if w.len() == n && w.iter().all(|&v| v > 0.0 && v.is_finite()) => w,
        _ => vec![1.0; n],
    };
    let mut y = vec![0.0; n];
    let mut best = (f64::NAN, f64::NAN);
    let mut shift = 0.0;
    for iter in 0..MAX_ITER {
        m.apply(&x, &mut y);
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        let mut top = 0.0f64;
        for (yi, &xi) in y.iter_mut().zip(&x) {
            *yi += shift * xi;
            let r = *yi / xi;
            lo = lo.min(r);
            hi = hi.max(r);
            top = top.max(*yi);
        }
        if !(top > 0.0) || !top.is_finite() {
            return Err(Error::Numeric("power iteration lost positivity".into()));
        }
        for (xi, &yi) in x.iter_mut().zip(&y) {
            // keep strictly positive so the Collatz–Wielandt ratios stay defined
            *xi = (yi / top).max(f64::MIN_POSITIVE);
        }
        best = (lo - shift, hi - shift);
        if hi - lo <= REL_TOL * hi {
            break;
        }
        // Shifting by roughly λ maps every other eigenvalue λω on the circle
        // to |1 + ω|/2 of the Perron root: this breaks exact and near
        // periodicity alike.
        if period > 1 || iter >= SHIFT_AFTER {
            shift = best.1;
        }
    }
    let (mut lo, mut hi) = best;
    if hi - lo > REL_TOL * hi && n <= DENSE_LIMIT {
        x = squared_vector(m, shift);
        (lo, hi) = collatz(m, &x);
    }
    if (hi - lo) > 1e-9 * hi.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::Numeric(format!(
            "power iteration did not converge: bounds [{lo}, {hi}]"
        )));
    }
    Ok((0.5 * (lo + hi), x))
}

/// Perron vector of `M + cI` from repeated squaring. Used when eigenvalues
/// of almost equal modulus stall plain iteration: `2^k` steps cost `k` dense
/// products, and with nonnegative entries there is no cancellation.
fn squared_vector(m: &NonnegMatrix, shift: f64) -> Vec<f64> {
    let n = m.dim();
    let mut b = vec![vec![0.0; n]; n];
    for (i, row) in b.iter_mut().enumerate() {
        row[i] = shift;
        for &(j, w) in m.row(i) {
            row[j] += w;
        }
    }
    let normalize = |b: &mut Vec<Vec<f64>>| {
        let top = b.iter().flatten().fold(0.0f64, |a, &v| a.max(v));
        b.iter_mut().flatten().for_each(|v| *v /= top);
    };
    normalize(&mut b);
    let row_sums = |b: &[Vec<f64>]| -> Vec<f64> { b.iter().map(|r| r.iter().sum()).collect() };
    let mut x = row_sums(&b);
    for _ in 0..64 {
        let mut c = vec![vec![0.0; n]; n];
        for (ci, bi) in c.iter_mut().zip(&b) {
            for (k, &bik) in bi.iter().enumerate() {
                if bik > 0.0 {
                    for (cij, &bkj) in ci.iter_mut().zip(&b[k]) {
                        *cij += bik * bkj;
                    }
                }
            }
        }
        normalize(&mut c);
        b = c;
        let next = row_sums(&b);
        let top = next.iter().fold(0.0f64, |a, &v| a.max(v));
        let prev_top = x.iter().fold(0.0f64, |a, &v| a.max(v));
        let same = next
            .iter()
            .zip(&x)
            .all(|(a, p)| (a / top - p / prev_top).abs() <= REL_TOL * (a / top));
        x = next;
        if same {
            break;
        }
    }
    let top = x.iter().fold(0.0f64, |a, &v| a.max(v));
    x.iter().map(|v| (v / top).max(f64::MIN_POSITIVE)).collect()
}

fn collatz(m: &NonnegMatrix, x: &[f64]) -> (f64, f64) {
    let mut y = vec![0.0; x.len()];
    m.apply(x, &mut y);
    y.iter()
        .zip(x)
        .map(|(a, b)| a / b)
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r), hi.max(r)))
}

/// Spectral radius; 0 when the matrix is nilpotent.
pub fn spectral_radius(m: &NonnegMatrix) -> Result<f64> {
    let (comps, _) = cyclic_components(m);
    let mut best = 0.0f64;
    for c in comps {
        let sub = m.restrict(&c.states);
        let (lambda, _) = power_iterate(&sub, c.period, None)?;
        best = best.max(lambda);
    }
    Ok(best)
}

/// Perron data for the dominant component. `warm` is an optional starting
/// right vector of full dimension.
pub fn perron(m: &NonnegMatrix, warm: Option<&[f64]>) -> Result<PerronData> {
    let (comps, irreducible) = cyclic_components(m);
    if comps.is_empty() {
        return Err(Error::Numeric("matrix has no cycle; spectral radius is 0".into()));
    }
    let mut results = Vec::with_capacity(comps.len());
    for c in &comps {
        let sub = m.restrict(&c.states);
        let warm_local = warm.map(|w| c.states.iter().map(|&s| w[s]).collect());
        let (lambda, h) = power_iterate(&sub, c.period, warm_local)?;
        results.push((lambda, h, sub));
    }
    let top = results.iter().map(|r| r.0).fold(0.0f64, f64::max);
    let dominant: Vec<usize> = (0..results.len())
        .filter(|&i| (results[i].0 - top).abs() <= 1e-12 * top)
        .collect();
    let k = dominant[0];
    let (lambda, h_local, sub) = &results[k];
    let (_, nu_local) = power_iterate(&sub.transpose(), comps[k].period, None)?;
    let states = &comps[k].states;
    let n = m.dim();
    let mut right = vec![0.0; n];
    let mut left = vec![0.0; n];
    let hmax = h_local.iter().fold(0.0f64, |a, &b| a.max(b));
    for (i, &s) in states.iter().enumerate() {
        right[s] = h_local[i] / hmax;
    }
    let dot: f64 = states
        .iter()
        .enumerate()
        .map(|(i, &s)| nu_local[i] * right[s])
        .sum();
    for (i, &s) in states.iter().enumerate() {
        left[s] = nu_local[i] / dot;
    }
    Ok(PerronData {
        eigenvalue: *lambda,
        log_eigenvalue: lambda.ln(),
        right,
        left,
        support: states.clone(),
        dominant_components: dominant.len(),
        irreducible,
    })
}
