use proptest::prelude::*;
use returnlab::cylinder::CylinderSet;
use returnlab::ldp::{legendre, Cgf};
use returnlab::potential::Potential;
use returnlab::sft::{admissible_words, Sft};
use returnlab::thermo::equilibrium_chain;

/// Mixing shift on 2–4 symbols, potential on two coordinates, nontrivial set
/// of 2-words.
fn fixture() -> impl Strategy<Value = (Sft, Potential, CylinderSet)> {
    (2usize..=4)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(prop::bool::weighted(0.7), n * n),
                prop::collection::vec(-1.0f64..1.0, n * n),
                prop::collection::vec(any::<bool>(), n * n),
            )
                .prop_map(move |(bits, values, pick)| (n, bits, values, pick))
        })
        .prop_filter_map("needs a mixing shift and a proper set", |(n, bits, values, pick)| {
            let m: Vec<Vec<u8>> = (0..n).map(|i| (0..n).map(|j| u8::from(bits[i * n + j])).collect()).collect();
            let sft = Sft::from_matrix(&m).ok()?;
            let d = sft.diagnostics();
            if !d.irreducible || !d.aperiodic {
                return None;
            }
            let phi = Potential::from_fn(&sft, 0, 1, |w| values[w[0] * n + w[1]]).ok()?;
            let words: Vec<Vec<usize>> = admissible_words(&sft, 2).ok()?.iter().map(|w| w.symbols().to_vec()).collect();
            let chosen: Vec<Vec<usize>> = words.iter().filter(|w| pick[w[0] * n + w[1]]).cloned().collect();
            if chosen.is_empty() || chosen.len() == words.len() {
                return None;
            }
            let set = CylinderSet::new(&sft, 0, 2, chosen).ok()?;
            Some((sft, phi, set))
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gibbs_chain_is_stochastic_and_stationary((sft, phi, _set) in fixture()) {
        let chain = equilibrium_chain(&sft, &phi).unwrap();
        prop_assert!(chain.row_sum_residual() < 1e-12);
        prop_assert!(chain.stationarity_residual() < 1e-12);
        prop_assert!((chain.entropy() + chain.mean_log_weight() - chain.pressure()).abs() < 1e-10);
    }

    #[test]
    fn cgf_is_normalized_increasing_and_convex((sft, phi, set) in fixture()) {
        let cgf = Cgf::new(&sft, &phi, &set).unwrap();
        let at0 = cgf.eval(0.0).unwrap();
        prop_assert!(at0.psi.abs() < 1e-12);
        prop_assert!((at0.slope * cgf.measure() - 1.0).abs() < 1e-9);
        let top = cgf.alpha_max().min(1.0);
        let grid: Vec<f64> = (0..12).map(|i| -2.0 + (top + 2.0) * i as f64 / 12.0).collect();
        let pts: Vec<_> = grid.iter().map(|&a| cgf.eval(a).unwrap()).collect();
        for w in pts.windows(2) {
            prop_assert!(w[1].psi > w[0].psi);
            prop_assert!(w[1].slope >= w[0].slope - 1e-9);
        }
        let rate = legendre(&cgf, 1.0 / cgf.measure()).unwrap();
        prop_assert!(rate.value.abs() < 1e-8);
        prop_assert!(legendre(&cgf, 1.5 / cgf.measure()).unwrap().value <= 1e-12);
    }

    #[test]
    fn cylinder_set_algebra((sft, phi, set) in fixture()) {
        let chain = equilibrium_chain(&sft, &phi).unwrap();
        let other = CylinderSet::new(&sft, 1, 1, [vec![0]]).unwrap();
        let c = set.complement(&sft);
        prop_assert!(c.complement(&sft).same_points(&sft, &set).unwrap());
        prop_assert!((chain.measure(&c) + chain.measure(&set) - 1.0).abs() < 1e-12);
        let u = set.union(&sft, &other).unwrap();
        let i = set.intersection(&sft, &other).unwrap();
        let lhs = chain.measure(&u) + chain.measure(&i);
        let rhs = chain.measure(&set) + chain.measure(&other);
        prop_assert!((lhs - rhs).abs() < 1e-12);
        prop_assert!(set.reduced(&sft).same_points(&sft, &set).unwrap());
    }
}
