use returnlab::cylinder::CylinderSet;
use returnlab::ldp::{
    complement_rate, concentration_threshold, degenerate_rate_check, inner_outer, legendre, Cgf, Provenance,
};
use returnlab::openset::ExplicitUnion;
use returnlab::potential::Potential;
use returnlab::sft::Sft;

fn full2_set(words: &[&[usize]]) -> CylinderSet {
    let len = words[0].len();
    CylinderSet::new(&Sft::full2(), 0, len, words.iter().map(|w| w.to_vec())).unwrap()
}

/// Returns to `[00]` on the fair coin are i.i.d.: after a visit the next
/// symbol closes a return with probability 1/2, otherwise the walk restarts
/// from a 1 and waits for `00`. Generating function `G(z) = z/2 (1 + A(z))`
/// with `A(z) = z²/(4 - 2z - z²)`.
fn psi_00(alpha: f64) -> f64 {
    let z = alpha.exp();
    (z / 2.0 * (1.0 + z * z / (4.0 - 2.0 * z - z * z))).ln()
}

#[test]
fn cgf_of_double_zero_matches_renewal_closed_form() {
    let sft = Sft::full2();
    let cgf = Cgf::new(&sft, &Potential::zero(&sft), &full2_set(&[&[0, 0]])).unwrap();
    assert!((cgf.alpha_max() - (5f64.sqrt() - 1.0).ln()).abs() < 1e-12);
    for a in [-3.0, -1.0, -0.1, 0.0, 0.05, 0.15, 0.2] {
        let p = cgf.eval(a).unwrap();
        assert!((p.psi - psi_00(a)).abs() < 1e-10, "α = {a}: {} vs {}", p.psi, psi_00(a));
        let h = 1e-5;
        let fd = (psi_00(a + h) - psi_00(a - h)) / (2.0 * h);
        assert!((p.slope - fd).abs() < 1e-6 * fd);
    }
    assert!((cgf.mean_return() - 4.0).abs() < 1e-12);
    assert!(cgf.eval(0.3).is_err());
}

#[test]
fn sampled_curves_are_convex_and_rates_vanish_at_the_mean() {
    let sft = Sft::gold();
    let phi = Potential::zero(&sft);
    let hole = CylinderSet::new(&sft, 0, 1, [vec![1]]).unwrap();
    let cgf = Cgf::new(&sft, &phi, &hole).unwrap();
    let curve = cgf.default_curve(64, Provenance::ExactCylinder).unwrap();
    assert_eq!(curve.convexity_defect(), 0.0);
    let rate = curve.rate_curve();
    assert!(rate.samples.windows(2).all(|w| w[0].0 < w[1].0));
    assert!(rate.samples.iter().all(|&(_, v)| v <= 1e-12));
    // Φ is concave in u
    for w in rate.samples.windows(3) {
        let (a, b, c) = (w[0], w[1], w[2]);
        let chord = a.1 + (b.0 - a.0) / (c.0 - a.0) * (c.1 - a.1);
        assert!(b.1 >= chord - 1e-9);
    }
    let at_mean = legendre(&cgf, cgf.mean_return()).unwrap();
    assert!(at_mean.value.abs() < 1e-10 && at_mean.alpha.abs() < 1e-6);
    // after a 1 comes a 0, so returns to [1] take at least two steps
    assert_eq!(legendre(&cgf, 1.9).unwrap().value, f64::NEG_INFINITY);
    assert!(legendre(&cgf, 2.1).unwrap().value.is_finite());
}

#[test]
fn complement_transform_holds_beyond_the_fair_coin() {
    let sft = Sft::full2();
    let phi = Potential::bernoulli(&sft, &[0.3, 0.7]).unwrap();
    let zero = Cgf::new(&sft, &phi, &full2_set(&[&[0]])).unwrap();
    let one = Cgf::new(&sft, &phi, &full2_set(&[&[1]])).unwrap();
    for u in [1.5, 2.5, 4.0, 6.0] {
        let direct = legendre(&zero, u).unwrap().value;
        let via = complement_rate(&one, u).unwrap();
        assert!((direct - via).abs() < 1e-8, "u = {u}: {direct} vs {via}");
    }
}

#[test]
fn concentration_threshold_exceeds_local_slope() {
    let sft = Sft::full2();
    let cgf = Cgf::new(&sft, &Potential::zero(&sft), &full2_set(&[&[0]])).unwrap();
    let tau = concentration_threshold(&cgf, 0.2, 0.1, 0.0).unwrap();
    let slope = cgf.eval(0.2).unwrap().slope;
    assert!(tau > slope);
    assert!(-0.1 * tau + cgf.eval(0.3).unwrap().psi <= cgf.eval(0.2).unwrap().psi + 1e-12);
    assert!(concentration_threshold(&cgf, 0.2, 0.0, 0.0).is_err());
}

#[test]
fn degenerate_rates_follow_the_invariant_mass() {
    let sft = Sft::full2();
    let d = full2_set(&[&[0, 1]]);
    assert!(degenerate_rate_check(&sft, &d, 1.9).unwrap());
    assert!(!degenerate_rate_check(&sft, &d, 2.1).unwrap());
    let zero = full2_set(&[&[0]]);
    assert!(!degenerate_rate_check(&sft, &zero, 1.0).unwrap());
    assert!(degenerate_rate_check(&sft, &zero, 0.99).unwrap());
}

#[test]
fn explicit_cylinder_unions_have_no_inner_outer_gap() {
    let sft = Sft::full2();
    let phi = Potential::zero(&sft);
    let spec = ExplicitUnion::new(&sft, full2_set(&[&[0, 1], &[1, 1]]));
    let r = inner_outer(&spec, &sft, &phi, 0.1, 1..=3, 1e-12).unwrap();
    assert!(r.converged);
    for row in &r.rows {
        assert_eq!(row.inner, row.outer);
    }
}
