//! Spin and bond measures on the finite spin set `[q]`, relative entropy,
//! admissibility and the large-deviation rate function.
//!
//! Natural logarithms throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used by constructor invariants (mass sums, marginals).
pub const MEASURE_TOL: f64 = 1e-12;

/// Default admissibility tolerance inside [`rate_function`].
pub const RATE_ADMISSIBILITY_TOL: f64 = 1e-9;

/// One term `p log(p/w)` with the convention `0 log(0/w) = 0` and
/// `p log(p/0) = +inf` for `p > 0`. Every entropy in the crate goes
/// through this helper so the convention lives in exactly one place.
#[inline]
pub fn entropy_term(p: f64, w: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else if w == 0.0 {
        f64::INFINITY
    } else {
        p * (p / w).ln()
    }
}

fn check_nonneg(v: &[f64], what: &str) -> Result<()> {
    if v.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::usage(format!("{what} must be nonnegative and finite")));
    }
    Ok(())
}

/// Relative entropy `H(p || w) = sum_x p(x) log(p(x)/w(x))` between two
/// finite measures on the same index set; `+inf` iff `p` is not absolutely
/// continuous with respect to `w`.
pub fn relative_entropy(p: &[f64], w: &[f64]) -> Result<f64> {
    if p.len() != w.len() {
        return Err(Error::usage(format!(
            "relative_entropy: index sets differ ({} vs {})",
            p.len(),
            w.len()
        )));
    }
    check_nonneg(p, "relative_entropy: p")?;
    check_nonneg(w, "relative_entropy: w")?;
    let mut h = 0.0;
    for (&pi, &wi) in p.iter().zip(w) {
        h += entropy_term(pi, wi);
        if h == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
    }
    Ok(h)
}

/// The prior `mu` on the spin set `[q]` from which site spins are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SpinLaw {
    weights: Vec<f64>,
}

impl SpinLaw {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::usage("SpinLaw: q must be >= 1"));
        }
        check_nonneg(&weights, "SpinLaw weights")?;
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > MEASURE_TOL {
            return Err(Error::usage(format!(
                "SpinLaw weights must sum to 1 (got {sum})"
            )));
        }
        Ok(SpinLaw { weights })
    }

    pub fn uniform(q: usize) -> Result<Self> {
        if q == 0 {
            return Err(Error::usage("SpinLaw: q must be >= 1"));
        }
        SpinLaw::new(vec![1.0 / q as f64; q])
    }

    pub fn q(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, i: usize) -> f64 {
        self.weights[i]
    }
}

impl TryFrom<Vec<f64>> for SpinLaw {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        SpinLaw::new(v)
    }
}

impl From<SpinLaw> for Vec<f64> {
    fn from(l: SpinLaw) -> Self {
        l.weights
    }
}

/// A probability vector on `[q]`: the empirical spin type `rho` / `L1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SpinMeasure {
    mass: Vec<f64>,
}

impl SpinMeasure {
    pub fn new(mass: Vec<f64>) -> Result<Self> {
        if mass.is_empty() {
            return Err(Error::usage("SpinMeasure: q must be >= 1"));
        }
        check_nonneg(&mass, "SpinMeasure mass")?;
        let sum: f64 = mass.iter().sum();
        if (sum - 1.0).abs() > MEASURE_TOL {
            return Err(Error::usage(format!(
                "SpinMeasure mass must sum to 1 (got {sum})"
            )));
        }
        Ok(SpinMeasure { mass })
    }

    pub fn q(&self) -> usize {
        self.mass.len()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn get(&self, i: usize) -> f64 {
        self.mass[i]
    }

    /// Total variation distance to another probability vector.
    pub fn tv_distance(&self, other: &SpinMeasure) -> f64 {
        0.5 * self
            .mass
            .iter()
            .zip(&other.mass)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

impl TryFrom<Vec<f64>> for SpinMeasure {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        SpinMeasure::new(v)
    }
}

impl From<SpinMeasure> for Vec<f64> {
    fn from(m: SpinMeasure) -> Self {
        m.mass
    }
}

/// A nonnegative `q x q` matrix of spin-couple mass: the empirical bond
/// (co-operate) type `nu` / `L2`.
///
/// The constructor accepts any nonnegative square matrix so that
/// admissibility violations (asymmetry, wrong marginals) can be represented
/// and rejected by [`is_admissible`]; every bond measure *produced* by this
/// crate is symmetric exactly as stored and has total mass 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct BondMeasure {
    q: usize,
    mass: Vec<f64>, // row-major q*q
}

impl BondMeasure {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let q = rows.len();
        if q == 0 {
            return Err(Error::usage("BondMeasure: q must be >= 1"));
        }
        let mut mass = Vec::with_capacity(q * q);
        for row in &rows {
            if row.len() != q {
                return Err(Error::usage("BondMeasure: matrix must be square"));
            }
            mass.extend_from_slice(row);
        }
        check_nonneg(&mass, "BondMeasure mass")?;
        Ok(BondMeasure { q, mass })
    }

    /// The product measure `(rho x rho)[i][j] = rho_i * rho_j`.
    pub fn product(rho: &SpinMeasure) -> Self {
        let q = rho.q();
        let mut mass = Vec::with_capacity(q * q);
        for i in 0..q {
            for j in 0..q {
                mass.push(rho.get(i) * rho.get(j));
            }
        }
        BondMeasure { q, mass }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mass[i * self.q + j]
    }

    /// Row-major flattened entries.
    pub fn flat(&self) -> &[f64] {
        &self.mass
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.q)
            .map(|i| self.mass[i * self.q..(i + 1) * self.q].to_vec())
            .collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// `sum_j nu[i][j]` for each i (the `[q]`-marginal).
    pub fn row_marginal(&self) -> Vec<f64> {
        (0..self.q)
            .map(|i| self.mass[i * self.q..(i + 1) * self.q].iter().sum())
            .collect()
    }

    /// Symmetric within `tol` (bitwise-equal when `tol == 0`).
    pub fn is_symmetric(&self, tol: f64) -> bool {
        for i in 0..self.q {
            for j in (i + 1)..self.q {
                if (self.get(i, j) - self.get(j, i)).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn tv_distance(&self, other: &BondMeasure) -> f64 {
        0.5 * self
            .mass
            .iter()
            .zip(&other.mass)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

impl TryFrom<Vec<Vec<f64>>> for BondMeasure {
    type Error = Error;
    fn try_from(v: Vec<Vec<f64>>) -> Result<Self> {
        BondMeasure::from_rows(v)
    }
}

impl From<BondMeasure> for Vec<Vec<f64>> {
    fn from(m: BondMeasure) -> Self {
        m.to_rows()
    }
}

/// `true` iff `nu` is symmetric within `tol`, has total mass within `tol`
/// of 1 and row marginal within `tol` of `rho` entrywise.
pub fn is_admissible(rho: &SpinMeasure, nu: &BondMeasure, tol: f64) -> Result<bool> {
    if rho.q() != nu.q() {
        return Err(Error::usage(format!(
            "is_admissible: dimension mismatch (rho q={}, nu q={})",
            rho.q(),
            nu.q()
        )));
    }
    if !nu.is_symmetric(tol) {
        return Ok(false);
    }
    if (nu.total_mass() - 1.0).abs() > tol {
        return Ok(false);
    }
    let marginal = nu.row_marginal();
    Ok(marginal
        .iter()
        .zip(rho.mass())
        .all(|(m, r)| (m - r).abs() <= tol))
}

/// A pair `(rho, nu)` with `nu` symmetric and `[q]`-marginal equal to `rho`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissiblePair {
    rho: SpinMeasure,
    nu: BondMeasure,
}

impl AdmissiblePair {
    pub fn new(rho: SpinMeasure, nu: BondMeasure) -> Result<Self> {
        if !is_admissible(&rho, &nu, MEASURE_TOL)? {
            return Err(Error::usage("AdmissiblePair: (rho, nu) is not admissible"));
        }
        Ok(AdmissiblePair { rho, nu })
    }

    pub fn rho(&self) -> &SpinMeasure {
        &self.rho
    }

    pub fn nu(&self) -> &BondMeasure {
        &self.nu
    }

    pub fn into_parts(self) -> (SpinMeasure, BondMeasure) {
        (self.rho, self.nu)
    }
}

/// Value of the rate function: a nonnegative extended real.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct RateValue(f64);

impl RateValue {
    pub const INFINITY: RateValue = RateValue(f64::INFINITY);

    pub fn new(v: f64) -> Result<Self> {
        if v.is_nan() || v < 0.0 {
            return Err(Error::usage(format!("RateValue must be >= 0 (got {v})")));
        }
        Ok(RateValue(v))
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }
}

impl std::fmt::Display for RateValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// The rate function `I(rho, nu) = H(rho|mu) + (d/2) H(nu|rho x rho)` on
/// admissible pairs, `+inf` otherwise. Admissibility is checked with the
/// default tolerance [`RATE_ADMISSIBILITY_TOL`].
pub fn rate_function(
    rho: &SpinMeasure,
    nu: &BondMeasure,
    mu: &SpinLaw,
    d: u64,
) -> Result<RateValue> {
    rate_function_with_tol(rho, nu, mu, d, RATE_ADMISSIBILITY_TOL)
}

/// [`rate_function`] with an explicit admissibility tolerance.
pub fn rate_function_with_tol(
    rho: &SpinMeasure,
    nu: &BondMeasure,
    mu: &SpinLaw,
    d: u64,
    tol: f64,
) -> Result<RateValue> {
    if rho.q() != mu.q() {
        return Err(Error::usage(format!(
            "rate_function: dimension mismatch (rho q={}, mu q={})",
            rho.q(),
            mu.q()
        )));
    }
    if !is_admissible(rho, nu, tol)? {
        return Ok(RateValue::INFINITY);
    }
    let h1 = relative_entropy(rho.mass(), mu.weights())?;
    if h1 == f64::INFINITY {
        return Ok(RateValue::INFINITY);
    }
    let prod = BondMeasure::product(rho);
    let h2 = relative_entropy(nu.flat(), prod.flat())?;
    if h2 == f64::INFINITY {
        return Ok(RateValue::INFINITY);
    }
    // Rounding can push the sum a hair below zero at the minimum.
    RateValue::new((h1 + d as f64 / 2.0 * h2).max(0.0))
}
