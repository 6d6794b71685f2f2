//! Plain Monte Carlo estimation of `P((L1, L2) in F)` with per-sample RNG
//! streams, so results are identical regardless of worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ldp::EventSpec;
use crate::measures::SpinLaw;
use crate::sampler::{assign_spins_with, empirical_measures, sample_pairing_with, stream_rng};

const Z_95: f64 = 1.959963984540054;

/// Monte Carlo estimate of an event probability with a Wilson 95% interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub hits: u64,
    pub samples: u64,
    pub p_hat: f64,
    /// `-(1/n) log p_hat`; infinite when no hits were observed.
    pub log_rate: f64,
    pub ci95: (f64, f64),
}

/// Draws `samples` independent (pairing, spins) configurations and counts
/// membership of the empirical pair in `event`. Sample `i` uses stream `i`
/// of `seed`, so the tally does not depend on parallelism.
pub fn mc_event_probability(
    event: &EventSpec,
    n: u64,
    d: u64,
    mu: &SpinLaw,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::usage("mc_event_probability: samples must be >= 1"));
    }
    if n == 0 || d == 0 || (n * d) % 2 != 0 {
        return Err(Error::usage("mc_event_probability: need n, d >= 1 and nd even"));
    }
    event.validate(mu.q())?;

    let hits: u64 = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let pairing = sample_pairing_with(n, d, &mut rng).expect("validated dims");
            let spins = assign_spins_with(n, mu, &mut rng).expect("validated dims");
            let (l1, l2) = empirical_measures(&pairing, &spins).expect("same n");
            u64::from(event.contains(&l1, &l2))
        })
        .sum();

    let p_hat = hits as f64 / samples as f64;
    let log_rate = if p_hat == 0.0 {
        f64::INFINITY
    } else {
        -(p_hat.ln()) / n as f64
    };
    Ok(McEstimate {
        hits,
        samples,
        p_hat,
        log_rate,
        ci95: wilson_interval(hits, samples),
    })
}

/// Wilson score interval for a binomial proportion at 95% confidence.
pub fn wilson_interval(hits: u64, samples: u64) -> (f64, f64) {
    let n = samples as f64;
    let p = hits as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}
