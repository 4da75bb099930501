//! Cumulant generating functions of return times and their rate functions.
//!
//! For a cylinder set `R`, `Ψ_R(α)` is the `t` solving `P(φ - t·1_R) = P(φ) - α`.
//! The left side is smooth, strictly decreasing and convex in `t`, so after a
//! doubling bracket Newton's method started on the convex side converges
//! monotonically; bisection is kept as a fallback. Implicit differentiation
//! gives `Ψ'(α) = 1/m_t(R)`.

use rayon::prelude::*;

use crate::cylinder::CylinderSet;
use crate::error::{Error, Result};
use crate::karp;
use crate::openset::{approximations, max_invariant_mass, OpenSetSpec};
use crate::potential::Potential;
use crate::sft::Sft;
use crate::thermo::HoleSystem;

const ROOT_TOL: f64 = 1e-12;
const MAX_BRACKET: usize = 64;
const MAX_NEWTON: usize = 200;

/// Where a curve's target set comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ExactCylinder,
    Inner,
    Outer,
}

/// `(α, Ψ(α), Ψ'(α))`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct CgfPoint {
    pub alpha: f64,
    pub psi: f64,
    pub slope: f64,
}

/// Solver for `Ψ_R` on a fixed hole.
#[derive(Clone, Debug)]
pub struct Cgf {
    system: HoleSystem,
    alpha_max: f64,
    measure: f64,
    rho: f64,
    range: (f64, f64),
}

impl Cgf {
    pub fn new(sft: &Sft, potential: &Potential, hole: &CylinderSet) -> Result<Self> {
        Self::with_sets(sft, potential, hole, &[])
    }

    /// Same, with further sets carried along on the presentation so that
    /// their penalized masses can be read off.
    pub fn with_sets(sft: &Sft, potential: &Potential, hole: &CylinderSet, extra: &[&CylinderSet]) -> Result<Self> {
        Self::from_system(HoleSystem::with_sets(sft, potential, hole, extra)?)
    }

    /// Solver for the hole (set `0`) of an existing system.
    pub fn from_system(system: HoleSystem) -> Result<Self> {
        if system.hole_is_empty() {
            return Err(Error::EmptySet);
        }
        let survivor = system.survivor_pressure()?.value;
        let alpha_max = system.pressure() - survivor;
        let measure = system.penalized_masses(0.0)?[0];
        let rho = hole_invariant_mass(&system);
        let range = default_range(alpha_max);
        Ok(Cgf {
            system,
            alpha_max,
            measure,
            rho,
            range,
        })
    }

    pub fn system(&self) -> &HoleSystem {
        &self.system
    }

    /// `α(R) = P(φ) - P(Σ_R)`; `+∞` when no orbit avoids `R`.
    pub fn alpha_max(&self) -> f64 {
        self.alpha_max
    }

    /// `μ_φ(R)`.
    pub fn measure(&self) -> f64 {
        self.measure
    }

    /// Mean return time `1/μ_φ(R)`.
    pub fn mean_return(&self) -> f64 {
        1.0 / self.measure
    }

    /// `ρ(R)`, the largest invariant mass of `R`.
    pub fn max_invariant_mass(&self) -> f64 {
        self.rho
    }

    /// α-interval used by sampled curves and by the Legendre transform.
    pub fn range(&self) -> (f64, f64) {
        self.range
    }

    pub fn set_range(&mut self, lo: f64, hi: f64) -> Result<()> {
        if !(lo < 0.0 && 0.0 < hi && hi < self.alpha_max) {
            return Err(Error::InvalidArgument(format!(
                "α-range ({lo}, {hi}) must contain 0 and end below α(R) = {}",
                self.alpha_max
            )));
        }
        self.range = (lo, hi);
        Ok(())
    }

    /// `Ψ(α)` and `Ψ'(α)`.
    pub fn eval(&self, alpha: f64) -> Result<CgfPoint> {
        self.eval_warm(alpha, None).map(|(p, _)| p)
    }

    fn eval_warm(&self, alpha: f64, warm: Option<&[f64]>) -> Result<(CgfPoint, Vec<f64>)> {
        if !alpha.is_finite() || alpha >= self.alpha_max {
            return Err(Error::OutsideDomain {
                alpha,
                alpha_max: self.alpha_max,
            });
        }
        if alpha == 0.0 {
            return Ok((
                CgfPoint {
                    alpha,
                    psi: 0.0,
                    slope: 1.0 / self.measure,
                },
                Vec::new(),
            ));
        }
        let target = self.system.pressure() - alpha;
        let tol = ROOT_TOL * target.abs().max(1.0);
        let g = |t: f64, warm: Option<&[f64]>| -> Result<(f64, f64, Vec<f64>)> {
            let p = self.system.penalized(t, warm)?;
            Ok((p.value - target, p.derivative, p.right))
        };
        // bracket [lo, hi] with g(lo) > 0 > g(hi); g is decreasing
        let (mut lo, mut hi) = if alpha > 0.0 { (0.0, 1.0) } else { (-1.0, 0.0) };
        let mut found = false;
        for _ in 0..MAX_BRACKET {
            if alpha > 0.0 {
                if g(hi, warm)?.0 <= 0.0 {
                    found = true;
                    break;
                }
                lo = hi;
                hi *= 2.0;
            } else {
                if g(lo, warm)?.0 >= 0.0 {
                    found = true;
                    break;
                }
                hi = lo;
                lo *= 2.0;
            }
        }
        if !found {
            return Err(Error::Numeric(format!("could not bracket Ψ({alpha})")));
        }
        // Newton from the left end, where the convex decreasing g is positive
        let mut t = lo;
        let mut vec = warm.map(<[f64]>::to_vec);
        for _ in 0..MAX_NEWTON {
            let (v, d, right) = g(t, vec.as_deref())?;
            vec = Some(right);
            if v.abs() <= tol {
                let mass = -d;
                // one more Newton step costs nothing and takes t to the noise floor of F
                let polished = if d < 0.0 { t - v / d } else { t };
                return Ok((
                    CgfPoint {
                        alpha,
                        psi: polished,
                        slope: 1.0 / mass,
                    },
                    vec.unwrap(),
                ));
            }
            if v > 0.0 {
                lo = lo.max(t);
            } else {
                hi = hi.min(t);
            }
            let newton = t - v / d;
            t = if d < 0.0 && newton > lo && newton < hi && newton != t {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= f64::EPSILON * t.abs().max(1.0) {
                let (_, d, right) = g(t, vec.as_deref())?;
                return Ok((
                    CgfPoint {
                        alpha,
                        psi: t,
                        slope: -1.0 / d,
                    },
                    right,
                ));
            }
        }
        Err(Error::Numeric(format!("root finding for Ψ({alpha}) did not converge")))
    }

    /// Penalized root `t` together with the masses of all presentation sets
    /// under the penalized equilibrium state `m_t`.
    pub fn penalized_masses(&self, alpha: f64) -> Result<(CgfPoint, Vec<f64>)> {
        let p = self.eval(alpha)?;
        Ok((p, self.system.penalized_masses(p.psi)?))
    }

    /// Samples on a grid, evaluated in parallel and sorted by `α`.
    pub fn curve(&self, grid: &[f64], provenance: Provenance) -> Result<CgfCurve> {
        let mut samples = grid
            .par_iter()
            .map(|&a| self.eval(a))
            .collect::<Result<Vec<_>>>()?;
        samples.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
        Ok(CgfCurve {
            alpha_max: self.alpha_max,
            mean_return: self.mean_return(),
            min_mean_return: 1.0 / self.rho,
            provenance,
            samples,
        })
    }

    /// Curve on the default Chebyshev grid of [`range`](Self::range).
    pub fn default_curve(&self, points: usize, provenance: Provenance) -> Result<CgfCurve> {
        self.curve(&chebyshev_grid(self.range.0, self.range.1, points), provenance)
    }
}

fn hole_invariant_mass(system: &HoleSystem) -> f64 {
    let pres = system.presentation();
    let succ: Vec<Vec<usize>> = (0..pres.state_count())
        .map(|u| pres.successors(u).to_vec())
        .collect();
    let weight: Vec<f64> = system.hole_mask().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    karp::max_mean_cycle(&succ, &weight).unwrap_or(0.0)
}

fn default_range(alpha_max: f64) -> (f64, f64) {
    const SPAN: f64 = 4.0;
    let hi = if alpha_max.is_finite() {
        alpha_max * (1.0 - 1e-3)
    } else {
        SPAN
    };
    (-SPAN, hi)
}

/// `n` Chebyshev points on the open interval `(lo, hi)`, increasing.
pub fn chebyshev_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let x = -((2 * k + 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos();
            0.5 * (lo + hi) + 0.5 * (hi - lo) * x
        })
        .collect()
}

/// `α(R) = P(φ) - P(Σ_R)`, `+∞` when the survivor set is empty.
pub fn cgf_domain(sft: &Sft, potential: &Potential, hole: &CylinderSet) -> Result<f64> {
    let system = HoleSystem::new(sft, potential, hole)?;
    Ok(system.pressure() - system.survivor_pressure()?.value)
}

/// `(Ψ_R(α), Ψ_R'(α))`.
pub fn cgf(sft: &Sft, potential: &Potential, hole: &CylinderSet, alpha: f64) -> Result<CgfPoint> {
    Cgf::new(sft, potential, hole)?.eval(alpha)
}

/// Sampled `Ψ` with its domain data.
#[derive(Clone, Debug, serde::Serialize)]
pub struct CgfCurve {
    pub alpha_max: f64,
    pub mean_return: f64,
    /// `1/ρ(R)`: the limiting slope as `α → -∞`.
    pub min_mean_return: f64,
    pub provenance: Provenance,
    pub samples: Vec<CgfPoint>,
}

impl CgfCurve {
    /// Parametric rate curve `u = Ψ'(α)`, `Φ(u) = Ψ(α) - αΨ'(α)`.
    pub fn rate_curve(&self) -> RateCurve {
        let samples = self
            .samples
            .iter()
            .map(|p| (p.slope, p.psi - p.alpha * p.slope))
            .collect();
        RateCurve {
            mean_return: self.mean_return,
            slope_limits: (
                self.min_mean_return,
                self.samples.last().map_or(f64::NAN, |p| p.slope),
            ),
            samples,
        }
    }

    /// Largest violation of convexity over consecutive triples (0 when convex).
    pub fn convexity_defect(&self) -> f64 {
        self.samples
            .windows(3)
            .map(|w| {
                let (a, b, c) = (w[0], w[1], w[2]);
                let interp = a.psi + (b.alpha - a.alpha) / (c.alpha - a.alpha) * (c.psi - a.psi);
                (b.psi - interp).max(0.0)
            })
            .fold(0.0, f64::max)
    }
}

/// Sampled `Φ`.
#[derive(Clone, Debug, serde::Serialize)]
pub struct RateCurve {
    /// `(u, Φ(u))`, increasing in `u`.
    pub samples: Vec<(f64, f64)>,
    pub mean_return: f64,
    /// `1/ρ(R)` and the largest sampled slope.
    pub slope_limits: (f64, f64),
}

/// Value of the Legendre transform at one `u`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct LegendreValue {
    pub u: f64,
    pub value: f64,
    /// Optimizing `α`; NaN when the value is `-∞`.
    pub alpha: f64,
    /// The slope `u` lies outside the sampled range and `value` is only the
    /// bound given by the nearest endpoint.
    pub truncated: bool,
}

/// Anything that evaluates a rate function.
pub trait RateFunction {
    fn rate(&self, u: f64) -> Result<f64>;
}

impl RateFunction for Cgf {
    fn rate(&self, u: f64) -> Result<f64> {
        legendre(self, u).map(|l| l.value)
    }
}

/// `Φ(u) = inf_α {Ψ(α) - αu}`.
///
/// `-∞` for `u < 1/ρ(R)`; at `u = 1/ρ(R)` exactly the finite infimum is
/// returned. Inside the slope range of [`Cgf::range`] the optimizer solves
/// `Ψ'(α) = u` by bisection; outside it the endpoint value is returned with
/// `truncated` set.
pub fn legendre(cgf: &Cgf, u: f64) -> Result<LegendreValue> {
    if !(u > 0.0) {
        return Err(Error::InvalidArgument(format!("u must be positive, got {u}")));
    }
    if u < 1.0 / cgf.rho {
        return Ok(LegendreValue {
            u,
            value: f64::NEG_INFINITY,
            alpha: f64::NAN,
            truncated: false,
        });
    }
    let (mut lo, mut hi) = cgf.range();
    let at = |a: f64| cgf.eval(a);
    let plo = at(lo)?;
    let phi = at(hi)?;
    let val = |p: CgfPoint| p.psi - p.alpha * u;
    if u <= plo.slope {
        return Ok(LegendreValue {
            u,
            value: val(plo),
            alpha: lo,
            truncated: u < plo.slope,
        });
    }
    if u >= phi.slope {
        return Ok(LegendreValue {
            u,
            value: val(phi),
            alpha: hi,
            truncated: u > phi.slope,
        });
    }
    let mut best = if (plo.slope - u).abs() < (phi.slope - u).abs() { plo } else { phi };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let p = at(mid)?;
        if (p.slope - u).abs() < (best.slope - u).abs() {
            best = p;
        }
        if p.slope < u {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * mid.abs().max(1.0) {
            break;
        }
    }
    // the objective is stationary at the optimizer, so a slight mismatch in α
    // costs only second order
    Ok(LegendreValue {
        u,
        value: val(best),
        alpha: best.alpha,
        truncated: false,
    })
}

/// `Φ_A(u) = (u - 1) Φ_{A^c}(u/(u - 1))`.
pub fn complement_rate(rate_of_complement: &dyn RateFunction, u: f64) -> Result<f64> {
    if !(u > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "complement transform needs u > 1, got {u}"
        )));
    }
    let v = rate_of_complement.rate(u / (u - 1.0))?;
    Ok((u - 1.0) * v)
}

/// Threshold `τ` with `-δτ + Ψ(α+δ) < Ψ(α)`: `(Ψ(α+δ) - Ψ(α))/δ + margin`.
/// Return-time mass of `e^{αr^n}` beyond `nτ` is then exponentially negligible.
pub fn concentration_threshold(cgf: &Cgf, alpha: f64, delta: f64, margin: f64) -> Result<f64> {
    if !(delta > 0.0) || margin < 0.0 {
        return Err(Error::InvalidArgument("need δ > 0 and margin >= 0".into()));
    }
    let a = cgf.eval(alpha)?;
    let b = cgf.eval(alpha + delta)?;
    Ok((b.psi - a.psi) / delta + margin)
}

/// `Φ_D(v) = -∞`, i.e. `v < 1/ρ(D)`.
pub fn degenerate_rate_check(sft: &Sft, set: &CylinderSet, v: f64) -> Result<bool> {
    if !(v > 0.0) {
        return Err(Error::InvalidArgument(format!("v must be positive, got {v}")));
    }
    let rho = max_invariant_mass(sft, set)?;
    Ok(rho == 0.0 || v < 1.0 / rho)
}

/// One depth of the inner/outer comparison.
#[derive(Clone, Debug, serde::Serialize)]
pub struct InnerOuterRow {
    pub depth: usize,
    /// `Ψ_{B_m}(α)`; `None` when `B_m` is empty or `α >= α(B_m)`.
    pub inner: Option<f64>,
    pub outer: Option<f64>,
    pub inner_alpha_max: f64,
    pub outer_alpha_max: f64,
    /// `Ψ_{C_m} <= Ψ_{B_m}` for `α >= 0`, reversed for `α < 0`.
    pub sandwich_holds: Option<bool>,
    /// Left and right side of the induced-pressure inequality: for `α > 0`
    /// `m_B(B)/m_B(C) · Ψ_B <= Ψ_C` under the penalized state of `B_m`, for
    /// `α < 0` `m_C(C)/m_C(B) · Ψ_C <= Ψ_B` under that of `C_m`.
    pub induced: Option<(f64, f64)>,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct InnerOuter {
    pub alpha: f64,
    pub rows: Vec<InnerOuterRow>,
    /// `|Ψ_{B_m} - Ψ_{C_m}|` at the deepest depth with both values.
    pub gap: f64,
    pub converged: bool,
    /// Midpoint of the last pair once converged.
    pub value: Option<f64>,
}

/// Inner and outer CGFs of an open set over a depth range.
pub fn inner_outer(
    spec: &dyn OpenSetSpec,
    sft: &Sft,
    potential: &Potential,
    alpha: f64,
    depths: std::ops::RangeInclusive<usize>,
    tol: f64,
) -> Result<InnerOuter> {
    let depths: Vec<usize> = depths.collect();
    let rows = depths
        .par_iter()
        .map(|&m| inner_outer_row(spec, sft, potential, alpha, m))
        .collect::<Result<Vec<_>>>()?;
    let last = rows
        .iter()
        .rev()
        .find_map(|r| Some((r.inner?, r.outer?)));
    let gap = last.map_or(f64::INFINITY, |(b, c)| (b - c).abs());
    let converged = gap <= tol;
    Ok(InnerOuter {
        alpha,
        rows,
        gap,
        converged,
        value: last.filter(|_| converged).map(|(b, c)| 0.5 * (b + c)),
    })
}

fn inner_outer_row(spec: &dyn OpenSetSpec, sft: &Sft, potential: &Potential, alpha: f64, m: usize) -> Result<InnerOuterRow> {
    let a = approximations(spec, sft, m)?;
    // Ψ comes from the set's own minimal presentation, so identical point sets
    // give bit-identical values; the joint presentation only supplies masses.
    let side = |hole: &CylinderSet, other: &CylinderSet| -> Result<(Option<(f64, f64, f64)>, f64)> {
        if hole.is_empty() {
            return Ok((None, f64::NEG_INFINITY));
        }
        let cgf = Cgf::new(sft, potential, hole)?;
        let amax = cgf.alpha_max();
        if alpha >= amax {
            return Ok((None, amax));
        }
        let psi = cgf.eval(alpha)?.psi;
        let joint = HoleSystem::with_sets(sft, potential, hole, &[other])?;
        let masses = joint.penalized_masses(psi)?;
        Ok((Some((psi, masses[0], masses[1])), amax))
    };
    let (inner, inner_alpha_max) = side(&a.inner, &a.outer)?;
    let (outer, outer_alpha_max) = side(&a.outer, &a.inner)?;
    let psi_b = inner.map(|x| x.0);
    let psi_c = outer.map(|x| x.0);
    let sandwich_holds = match (psi_b, psi_c) {
        (Some(b), Some(c)) => Some(if alpha >= 0.0 { c <= b } else { b <= c }),
        _ => None,
    };
    let induced = if alpha > 0.0 {
        inner.zip(psi_c).map(|((b, mb_b, mb_c), c)| (mb_b / mb_c * b, c))
    } else if alpha < 0.0 {
        outer.zip(psi_b).map(|((c, mc_c, mc_b), b)| (mc_c / mc_b * c, b))
    } else {
        None
    };
    Ok(InnerOuterRow {
        depth: m,
        inner: psi_b,
        outer: psi_c,
        inner_alpha_max,
        outer_alpha_max,
        sandwich_holds,
        induced,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full2_zero() -> (Sft, Potential, CylinderSet) {
        let s = Sft::full2();
        let phi = Potential::zero(&s);
        let r = CylinderSet::new(&s, 0, 1, [vec![0]]).unwrap();
        (s, phi, r)
    }

    fn closed(alpha: f64) -> f64 {
        -(2.0 * (-alpha).exp() - 1.0).ln()
    }

    #[test]
    fn closed_form() {
        let (s, phi, r) = full2_zero();
        let c = Cgf::new(&s, &phi, &r).unwrap();
        assert!((c.alpha_max() - 2f64.ln()).abs() < 1e-14);
        for a in [-2.0, -1.0, -0.25, 0.0, 0.3, 0.6] {
            let p = c.eval(a).unwrap();
            assert!((p.psi - closed(a)).abs() < 1e-11, "α = {a}");
            let slope = 2.0 * (-a as f64).exp() / (2.0 * (-a as f64).exp() - 1.0);
            assert!((p.slope - slope).abs() < 1e-9, "α = {a}");
        }
        let p = c.eval((4.0f64 / 3.0).ln()).unwrap();
        assert!((p.psi - 2f64.ln()).abs() < 1e-11);
        assert!((p.slope - 3.0).abs() < 1e-9);
        assert!(matches!(c.eval(0.7), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn domain_examples() {
        let (s, phi, r) = full2_zero();
        assert!((cgf_domain(&s, &phi, &r).unwrap() - 2f64.ln()).abs() < 1e-14);
        let both = CylinderSet::whole(&s);
        assert_eq!(cgf_domain(&s, &phi, &both).unwrap(), f64::INFINITY);
        assert!(matches!(
            Cgf::new(&s, &phi, &CylinderSet::empty(0, 1)),
            Err(Error::EmptySet)
        ));
    }

    #[test]
    fn legendre_examples() {
        let (s, phi, r) = full2_zero();
        let c = Cgf::new(&s, &phi, &r).unwrap();
        assert!(legendre(&c, 2.0).unwrap().value.abs() < 1e-12);
        let v = legendre(&c, 3.0).unwrap();
        let exact = -3.0 * (4.0f64 / 3.0).ln() + 2f64.ln();
        assert!((v.value - exact).abs() < 1e-10);
        assert!((v.alpha - (4.0f64 / 3.0).ln()).abs() < 1e-5);
        assert_eq!(legendre(&c, 0.9).unwrap().value, f64::NEG_INFINITY);
    }

    #[test]
    fn complement_examples() {
        let (s, phi, _) = full2_zero();
        let one = CylinderSet::new(&s, 0, 1, [vec![1]]).unwrap();
        let c1 = Cgf::new(&s, &phi, &one).unwrap();
        assert!(complement_rate(&c1, 2.0).unwrap().abs() < 1e-12);
        let exact = -3.0 * (4.0f64 / 3.0).ln() + 2f64.ln();
        assert!((complement_rate(&c1, 3.0).unwrap() - exact).abs() < 1e-9);
        assert!(complement_rate(&c1, 1.0).is_err());
    }

    #[test]
    fn threshold_and_degenerate() {
        let (s, phi, r) = full2_zero();
        let c = Cgf::new(&s, &phi, &r).unwrap();
        let tau = concentration_threshold(&c, 0.2, 0.2, 0.0).unwrap();
        assert!((tau - (closed(0.4) - closed(0.2)) / 0.2).abs() < 1e-9);
        let tau = concentration_threshold(&c, 0.0, 1e-6, 0.0).unwrap();
        assert!((tau - 2.0).abs() < 1e-5);

        let zo = CylinderSet::new(&s, 0, 2, [vec![0, 1]]).unwrap();
        assert!(degenerate_rate_check(&s, &zo, 1.5).unwrap());
        assert!(!degenerate_rate_check(&s, &r, 1.5).unwrap());
        assert!(!degenerate_rate_check(&s, &CylinderSet::whole(&s), 1.2).unwrap());
    }

    #[test]
    fn curve_is_convex() {
        let (s, phi, r) = full2_zero();
        let c = Cgf::new(&s, &phi, &r).unwrap();
        let curve = c.default_curve(64, Provenance::ExactCylinder).unwrap();
        assert!(curve.convexity_defect() < 1e-8);
        assert!(curve.samples.windows(2).all(|w| w[0].slope < w[1].slope));
        let rate = curve.rate_curve();
        assert!(rate.samples.iter().all(|&(_, v)| v <= 1e-12));
    }
}
