//! Convergence reporting: the Monte Carlo rate against the
//! lattice-restricted and continuum infima of the rate function.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lattice::enumerate_types_capped;
use crate::ldp::{mc_event_probability, minimize_rate, EventSpec};
use crate::measures::{rate_function, SpinLaw};

/// Lattice enumerations beyond this many types fall back to the continuum
/// minimizer.
const LATTICE_ENUM_CAP: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub n: u64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// `-(1/n) log p_hat`.
    pub mc_rate: f64,
    /// `min I` over the lattice types inside the event (exact enumeration
    /// when the lattice is small enough, else the continuum value).
    pub lattice_inf: f64,
    /// `inf I` over the continuum feasible set.
    pub continuum_inf: f64,
}

/// For each n in the grid: Monte Carlo probability of the event, the
/// lattice-restricted infimum of I, and the continuum infimum.
pub fn convergence_report(
    event: &EventSpec,
    d: u64,
    mu: &SpinLaw,
    n_grid: &[u64],
    samples_per_n: u64,
    seed: u64,
) -> Result<Vec<ReportRow>> {
    let q = mu.q();
    event.validate(q)?;
    let continuum_inf = match minimize_rate(event, mu, d) {
        Ok(r) => r.value.value(),
        Err(crate::Error::InfeasibleEvent(_)) => f64::INFINITY,
        Err(e) => return Err(e),
    };

    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let est = mc_event_probability(event, n, d, mu, samples_per_n, seed)?;
        let lattice_inf = match enumerate_types_capped(n, d, q, LATTICE_ENUM_CAP)? {
            Some(types) => {
                let mut best = f64::INFINITY;
                for t in &types {
                    let pair = t.to_measures()?;
                    if event.contains(pair.rho(), pair.nu()) {
                        let v = rate_function(pair.rho(), pair.nu(), mu, d)?.value();
                        if v < best {
                            best = v;
                        }
                    }
                }
                best
            }
            None => continuum_inf,
        };
        rows.push(ReportRow {
            n,
            p_hat: est.p_hat,
            ci_lo: est.ci95.0,
            ci_hi: est.ci95.1,
            mc_rate: est.log_rate,
            lattice_inf,
            continuum_inf,
        });
    }
    Ok(rows)
}

/// CSV with the fixed column order
/// `n,p_hat,ci_lo,ci_hi,mc_rate,lattice_inf,continuum_inf`.
pub fn write_report_csv<W: Write>(rows: &[ReportRow], w: &mut W) -> Result<()> {
    writeln!(w, "n,p_hat,ci_lo,ci_hi,mc_rate,lattice_inf,continuum_inf")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.n,
            fmt(r.p_hat),
            fmt(r.ci_lo),
            fmt(r.ci_hi),
            fmt(r.mc_rate),
            fmt(r.lattice_inf),
            fmt(r.continuum_inf)
        )?;
    }
    Ok(())
}

fn fmt(x: f64) -> String {
    if x.is_infinite() {
        "inf".to_string()
    } else {
        format!("{x:.11e}")
    }
}
