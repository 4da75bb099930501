use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use returnlab::cylinder::CylinderSet;
use returnlab::potential::Potential;
use returnlab::sft::Sft;
use returnlab::thermo::{
    equilibrium_chain, gibbs_constant, induced_eigenvalue, penalized_pressure, pressure, survivor_pressure,
    HoleSystem,
};

fn three_state() -> Sft {
    Sft::from_matrix(&[vec![1, 1, 0], vec![0, 1, 1], vec![1, 1, 1]]).unwrap()
}

fn site_potential(sft: &Sft, values: [f64; 3]) -> Potential {
    Potential::from_fn(sft, 0, 0, |w| values[w[0]]).unwrap()
}

/// Stationary vector of a row-stochastic matrix by plain iteration.
fn stationary(p: &[Vec<f64>]) -> Vec<f64> {
    let n = p.len();
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..20_000 {
        let mut next = vec![0.0; n];
        for u in 0..n {
            for v in 0..n {
                next[v] += pi[u] * p[u][v];
            }
        }
        pi = next;
    }
    pi
}

#[test]
fn variational_principle_against_random_markov_chains() {
    let sft = three_state();
    let values = [0.3, -0.7, 0.1];
    let phi = site_potential(&sft, values);
    let p = pressure(&sft, &phi).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let m: Vec<Vec<f64>> = (0..3)
            .map(|u| {
                let raw: Vec<f64> = (0..3)
                    .map(|v| if sft.allows(u, v) { rng.random_range(0.01..1.0) } else { 0.0 })
                    .collect();
                let s: f64 = raw.iter().sum();
                raw.into_iter().map(|x| x / s).collect()
            })
            .collect();
        let pi = stationary(&m);
        let mut h = 0.0;
        let mut energy = 0.0;
        for u in 0..3 {
            energy += pi[u] * values[u];
            for v in 0..3 {
                if m[u][v] > 0.0 {
                    h -= pi[u] * m[u][v] * m[u][v].ln();
                }
            }
        }
        assert!(h + energy <= p + 1e-12, "h + ∫φ = {} exceeds P = {p}", h + energy);
    }
    let chain = equilibrium_chain(&sft, &phi).unwrap();
    assert!((chain.entropy() + chain.mean_log_weight() - p).abs() < 1e-12);
}

#[test]
fn penalized_pressure_is_convex_and_its_slope_is_the_hole_mass() {
    let sft = three_state();
    let phi = site_potential(&sft, [0.3, -0.7, 0.1]);
    let hole = CylinderSet::new(&sft, 0, 2, [vec![2, 0], vec![1, 1]]).unwrap();
    let f = |t: f64| penalized_pressure(&sft, &phi, &hole, t).unwrap();
    let h = 1e-4;
    let mut prev = f64::NEG_INFINITY;
    for i in -10..=10 {
        let t = 0.5 * i as f64;
        let fd = (f(t + h).value - f(t - h).value) / (2.0 * h);
        let here = f(t);
        assert!((fd - here.derivative).abs() < 1e-7, "t = {t}: {fd} vs {}", here.derivative);
        assert!(here.derivative >= prev - 1e-12);
        assert!(here.derivative < 0.0);
        prev = here.derivative;
        let mid = f(t + 0.25).value;
        assert!(mid <= 0.5 * (f(t).value + f(t + 0.5).value) + 1e-12);
    }
    // F(t) -> survivor pressure as t -> ∞
    let surv = survivor_pressure(&sft, &phi, &hole).unwrap().value;
    assert!((f(60.0).value - surv).abs() < 1e-12, "{} vs {surv}", f(60.0).value);
}

#[test]
fn induced_eigenvalue_on_full_shift_matches_geometric_series() {
    let sft = Sft::full2();
    let phi = Potential::zero(&sft);
    let hole = CylinderSet::new(&sft, 0, 1, [vec![0]]).unwrap();
    // sum over k of e^{-kS} times the number of first-return words of length k
    let closed = |s: f64| (-s).exp() / (1.0 - (-s).exp());
    for s in [2f64.ln(), 3f64.ln(), 1.0] {
        let ev = induced_eigenvalue(&sft, &phi, &hole, s, 400).unwrap();
        assert!((ev.value - closed(s)).abs() < 1e-12, "S = {s}: {}", ev.value);
    }
    let at_pressure = induced_eigenvalue(&sft, &phi, &hole, 2f64.ln(), 400).unwrap();
    assert!((at_pressure.value - 1.0).abs() < 1e-12);
}

#[test]
fn induced_eigenvalue_converges_in_truncation_length() {
    let sft = Sft::gold();
    let phi = Potential::zero(&sft);
    let hole = CylinderSet::new(&sft, 0, 1, [vec![1]]).unwrap();
    let s = pressure(&sft, &phi).unwrap();
    let mut last_err = f64::INFINITY;
    for len in [5, 10, 20, 40, 80] {
        let ev = induced_eigenvalue(&sft, &phi, &hole, s, len).unwrap();
        let err = (ev.value - 1.0).abs();
        assert!(err <= last_err);
        last_err = err;
    }
    assert!(last_err < 1e-12);
}

#[test]
fn survivor_pressure_of_whole_and_empty_holes() {
    let sft = Sft::full2();
    let phi = Potential::zero(&sft);
    let none = CylinderSet::empty(0, 1);
    assert!((survivor_pressure(&sft, &phi, &none).unwrap().value - 2f64.ln()).abs() < 1e-14);
    let sys = HoleSystem::new(&sft, &phi, &CylinderSet::whole(&sft)).unwrap();
    assert!(sys.hole_is_whole());
    assert_eq!(sys.survivor_pressure().unwrap().value, f64::NEG_INFINITY);
}

#[test]
fn gibbs_constant_of_bernoulli_measure() {
    let sft = Sft::full2();
    let phi = Potential::bernoulli(&sft, &[0.25, 0.75]).unwrap();
    let chain = equilibrium_chain(&sft, &phi).unwrap();
    let g = gibbs_constant(&chain, &sft, &phi, 6).unwrap();
    // pressure 0; the only mismatch is the unpaired last symbol of the
    // cylinder, worst for the rarer symbol
    assert!((g.b - 4f64.ln()).abs() < 1e-12, "b = {}", g.b);
    assert!(g.per_depth.iter().all(|&(_, b)| (b - g.b).abs() < 1e-12));
}
