//! Statistical validation of the sampler and the Monte Carlo estimator
//! against exact references. Significance levels are chosen so spurious
//! failures are essentially impossible (p = 0.001 per test).

use std::collections::HashMap;

use statrs::distribution::{ChiSquared, ContinuousCDF};

use regldp::exact::{exact_type_probability, Mode, RationalLaw};
use regldp::lattice::enumerate_types;
use regldp::ldp::{mc_event_probability, EventSpec};
use regldp::measures::SpinLaw;
use regldp::sampler::{sample_pairing_with, sample_simple_graph, stream_rng};

use num_traits::ToPrimitive;

/// Every perfect matching of nd points should appear with frequency
/// 1/(nd-1)!!; chi-square goodness of fit at significance 0.001.
#[test]
fn matchings_are_uniform_chi_square() {
    for (n, d) in [(2u64, 2u64), (4, 2), (2, 3)] {
        let nd = (n * d) as usize;
        let expected_cells: u64 = (1..nd as u64).step_by(2).product(); // (nd-1)!!
        let samples = 200_000u64;
        let mut counts: HashMap<Vec<(u32, u32)>, u64> = HashMap::new();
        for i in 0..samples {
            let mut rng = stream_rng(41, i);
            let p = sample_pairing_with(n, d, &mut rng).unwrap();
            *counts.entry(p.pairs().to_vec()).or_insert(0) += 1;
        }
        assert_eq!(counts.len() as u64, expected_cells, "missing matchings");
        let expected = samples as f64 / expected_cells as f64;
        let stat: f64 = counts
            .values()
            .map(|&c| {
                let diff = c as f64 - expected;
                diff * diff / expected
            })
            .sum();
        let dof = (expected_cells - 1) as f64;
        let critical = ChiSquared::new(dof).unwrap().inverse_cdf(0.999);
        assert!(
            stat <= critical,
            "(n={n}, d={d}): chi-square {stat} > critical {critical}"
        );
    }
}

/// For d=3 the asymptotic probability that the pairing is simple is
/// exp(-(d-1)/2 - (d-1)^2/4) = exp(-2).
#[test]
fn simple_graph_acceptance_rate_matches_asymptotics() {
    let n = 1000u64;
    let d = 3u64;
    let trials = 10_000u64;
    let mut attempts_total = 0u64;
    for i in 0..trials {
        let s = sample_simple_graph(n, d, 97 + i, 100_000).unwrap();
        assert!(s.pairing.is_simple());
        attempts_total += s.attempts;
    }
    // attempts are geometric with success probability p, so trials/total
    // estimates p
    let p_hat = trials as f64 / attempts_total as f64;
    let p_asym = (-2.0f64).exp();
    assert!(
        (p_hat - p_asym).abs() <= 0.02,
        "acceptance rate {p_hat} vs asymptotic {p_asym}"
    );
}

/// Wilson intervals from independent Monte Carlo runs should cover the
/// exact event probability about 95% of the time; require >= 93 of 100.
#[test]
fn wilson_interval_covers_exact_probability() {
    let n = 6u64;
    let d = 2u64;
    let q = 2usize;
    let mu = RationalLaw::uniform(q).unwrap();
    let mu_f = SpinLaw::uniform(q).unwrap();
    // event {rho_1 >= 2/3} has an exactly computable probability: sum the
    // exact type probabilities over types inside the event
    let event = EventSpec::new(vec![regldp::ldp::Constraint::rho_ge(
        vec![1.0, 0.0],
        2.0 / 3.0,
    )]);
    let mut p_exact = 0.0;
    for t in enumerate_types(n, d, q).unwrap() {
        let pair = t.to_measures().unwrap();
        if event.contains(pair.rho(), pair.nu()) {
            let p = exact_type_probability(&t, &mu, Mode::Exact).unwrap();
            p_exact += p.as_rational().unwrap().to_f64().unwrap();
        }
    }
    assert!(p_exact > 0.0 && p_exact < 1.0);

    let mut covered = 0;
    for run in 0..100u64 {
        let est = mc_event_probability(&event, n, d, &mu_f, 4000, 1000 + run).unwrap();
        if est.ci95.0 <= p_exact && p_exact <= est.ci95.1 {
            covered += 1;
        }
    }
    assert!(covered >= 93, "only {covered}/100 intervals covered {p_exact}");
}
