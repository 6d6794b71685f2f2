//! Property-based invariants over randomized structured inputs.

use proptest::collection::vec;
use proptest::prelude::*;

use regldp::lattice::LatticeType;
use regldp::ldp::{Constraint, EventSpec, Sense, Target};
use regldp::measures::{
    is_admissible, rate_function, relative_entropy, BondMeasure, SpinLaw, SpinMeasure,
};
use regldp::sampler::{assign_spins_with, empirical_type, sample_pairing_with, stream_rng};

fn law(q: usize) -> impl Strategy<Value = Vec<f64>> {
    vec(0.05f64..1.0, q).prop_map(|raw| {
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / s).collect()
    })
}

proptest! {
    /// H(p || w) >= 0 with equality only at p = w.
    #[test]
    fn relative_entropy_is_nonnegative(p in law(4), w in law(4)) {
        let h = relative_entropy(&p, &w).unwrap();
        prop_assert!(h >= 0.0);
        let tv: f64 = p.iter().zip(&w).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0;
        if tv > 1e-3 {
            prop_assert!(h > 0.0);
        }
    }

    /// Empirical measures of any sampled configuration form an admissible
    /// pair, and the empirical type is feasible and maps back to them.
    #[test]
    fn sampled_types_are_feasible_and_admissible(
        seed in 0u64..1_000_000,
        n in 1u64..40,
        d in 1u64..5,
        mu_raw in law(3),
    ) {
        let n = if (n * d) % 2 == 0 { n } else { n + 1 };
        let mu = SpinLaw::new(mu_raw).unwrap();
        let mut rng = stream_rng(seed, 0);
        let pairing = sample_pairing_with(n, d, &mut rng).unwrap();
        let spins = assign_spins_with(n, &mu, &mut rng).unwrap();
        let t = empirical_type(&pairing, &spins).unwrap();
        prop_assert!(t.is_feasible());
        let pair = t.to_measures().unwrap();
        prop_assert!(is_admissible(pair.rho(), pair.nu(), 1e-12).unwrap());
    }

    /// I is convex along segments between admissible pairs built from a
    /// common mu.
    #[test]
    fn rate_function_is_convex_on_segments(
        a in law(2), b in law(2), mu_raw in law(2), lambda in 0.0f64..1.0,
    ) {
        let mu = SpinLaw::new(mu_raw).unwrap();
        let mk = |w: &[f64]| {
            let rho = SpinMeasure::new(w.to_vec()).unwrap();
            let nu = BondMeasure::product(&rho);
            (rho, nu)
        };
        let (ra, na) = mk(&a);
        let (rb, nb) = mk(&b);
        let mix_rho = SpinMeasure::new(
            a.iter().zip(&b).map(|(x, y)| lambda * x + (1.0 - lambda) * y).collect(),
        ).unwrap();
        let mix_nu = BondMeasure::from_rows(
            (0..2).map(|i| (0..2).map(|j| {
                lambda * na.get(i, j) + (1.0 - lambda) * nb.get(i, j)
            }).collect()).collect(),
        ).unwrap();
        let d = 3;
        let ia = rate_function(&ra, &na, &mu, d).unwrap().value();
        let ib = rate_function(&rb, &nb, &mu, d).unwrap().value();
        let imix = rate_function(&mix_rho, &mix_nu, &mu, d).unwrap().value();
        prop_assert!(imix <= lambda * ia + (1.0 - lambda) * ib + 1e-10);
    }

    /// LatticeType and EventSpec survive a JSON round trip unchanged.
    #[test]
    fn json_round_trips(
        seed in 0u64..1_000_000,
        coeffs in vec(-2.0f64..2.0, 2),
        bound in -1.0f64..1.0,
        ge in any::<bool>(),
    ) {
        let mut rng = stream_rng(seed, 1);
        let pairing = sample_pairing_with(6, 2, &mut rng).unwrap();
        let mu = SpinLaw::uniform(2).unwrap();
        let spins = assign_spins_with(6, &mu, &mut rng).unwrap();
        let t = empirical_type(&pairing, &spins).unwrap();
        let back: LatticeType =
            serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        prop_assert_eq!(&t, &back);

        let e = EventSpec::new(vec![Constraint {
            target: Target::Rho,
            coeffs,
            bound,
            sense: if ge { Sense::Ge } else { Sense::Le },
        }]);
        let back: EventSpec =
            serde_json::from_str(&serde_json::to_string(&e).unwrap()).unwrap();
        prop_assert_eq!(&e, &back);
    }
}
