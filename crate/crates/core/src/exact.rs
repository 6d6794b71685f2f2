//! Exact finite-n probability of a lattice type under the law
//! (uniform pairing) x (spins i.i.d. mu), with a brute-force enumeration
//! oracle and Stirling-type log bounds.
//!
//! The probability of a feasible type with spin counts `c_i` and bond
//! counts `m_ij` is
//!
//! ```text
//! P = prod_i mu_i^{c_i} * multinomial(n; c) * prod_i multinomial(d c_i; m_i.)
//!     * prod_{i<j} m_ij! * prod_i (m_ii - 1)!! / (nd - 1)!!
//! ```
//!
//! counted directly on the matching space: choose which half-edges of each
//! class are designated to each other class, match designated sets across
//! classes (`m_ij!` ways per unordered class pair) and match the even
//! leftover within each class (`(m_ii - 1)!!` ways). The brute-force
//! oracle below reproduces this formula exactly, and the resulting
//! normalization over all types is exactly 1.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{enumerate_types, LatticeType};
use crate::measures::{rate_function, SpinLaw};
use crate::sampler::empirical_type;
use crate::sampler::SpinConfig;

/// Default constant multiplying `q(q+1) log(nd+1)` in the sandwich slack.
pub const DEFAULT_SANDWICH_KAPPA: f64 = 3.0;

/// `log m!` by direct summation (exact to float rounding for the sizes
/// handled here).
pub fn ln_factorial(m: u64) -> f64 {
    (2..=m).map(|k| (k as f64).ln()).sum()
}

/// `log m!!` for odd m (with `m = 0` standing for `(-1)!! = 1`).
pub fn log_double_factorial(m: u64) -> Result<f64> {
    if m == 0 {
        return Ok(0.0);
    }
    if m % 2 == 0 {
        return Err(Error::usage(format!(
            "log_double_factorial: argument must be odd (got {m})"
        )));
    }
    Ok((1..=m).step_by(2).map(|k| (k as f64).ln()).sum())
}

/// `m!!` for odd m as a big integer (`m = 0` stands for `(-1)!! = 1`).
pub fn double_factorial_big(m: u64) -> BigUint {
    let mut acc = BigUint::one();
    let mut k = m;
    while k > 1 {
        acc *= BigUint::from(k);
        k -= 2;
    }
    acc
}

fn factorial_big(m: u64) -> BigUint {
    let mut acc = BigUint::one();
    for k in 2..=m {
        acc *= BigUint::from(k);
    }
    acc
}

/// Natural log of a positive big integer.
fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 53 {
        return x.to_f64().unwrap().ln();
    }
    let shift = bits - 53;
    let top = (x >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural log of a nonnegative rational; `-inf` at zero.
pub fn ln_rational(r: &BigRational) -> f64 {
    if r.is_zero() {
        return f64::NEG_INFINITY;
    }
    assert!(r.is_positive(), "ln_rational: negative argument");
    let num = r.numer().magnitude();
    let den = r.denom().magnitude();
    ln_biguint(num) - ln_biguint(den)
}

/// Parses a rational weight: "p/q", an integer, or a finite decimal.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::usage(format!("cannot parse rational weight '{s}'"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let digits = format!("{int}{frac}");
        let p: BigInt = digits.parse().map_err(|_| bad())?;
        let q = BigInt::from(10u32).pow(frac.len() as u32);
        return Ok(BigRational::new(p, q));
    }
    let p: BigInt = s.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(p))
}

/// A spin law with exact rational weights, for exact-mode computations.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalLaw {
    weights: Vec<BigRational>,
}

impl RationalLaw {
    pub fn new(weights: Vec<BigRational>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::usage("RationalLaw: q must be >= 1"));
        }
        if weights.iter().any(|w| w.is_negative()) {
            return Err(Error::usage("RationalLaw: weights must be nonnegative"));
        }
        let sum: BigRational = weights.iter().sum();
        if !sum.is_one() {
            return Err(Error::usage(format!(
                "RationalLaw: weights must sum to exactly 1 (got {sum})"
            )));
        }
        Ok(RationalLaw { weights })
    }

    /// Normalizes arbitrary nonnegative weights exactly.
    pub fn normalized(weights: Vec<BigRational>) -> Result<Self> {
        let sum: BigRational = weights.iter().sum();
        if sum.is_zero() {
            return Err(Error::usage("RationalLaw: weights sum to zero"));
        }
        RationalLaw::new(weights.into_iter().map(|w| w / &sum).collect())
    }

    pub fn uniform(q: usize) -> Result<Self> {
        if q == 0 {
            return Err(Error::usage("RationalLaw: q must be >= 1"));
        }
        let w = BigRational::new(BigInt::one(), BigInt::from(q));
        RationalLaw::new(vec![w; q])
    }

    pub fn from_strs(parts: &[&str]) -> Result<Self> {
        RationalLaw::new(parts.iter().map(|s| parse_rational(s)).collect::<Result<_>>()?)
    }

    pub fn q(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[BigRational] {
        &self.weights
    }

    pub fn to_spin_law(&self) -> Result<SpinLaw> {
        let w: Vec<f64> = self
            .weights
            .iter()
            .map(|r| r.to_f64().unwrap_or(0.0))
            .collect();
        let s: f64 = w.iter().sum();
        SpinLaw::new(w.iter().map(|x| x / s).collect())
    }
}

/// Arithmetic mode for [`exact_type_probability`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Big-integer rational arithmetic; the probability is exact.
    Exact,
    /// Log-space floats via summed log factorials.
    Float,
}

/// The probability of a lattice type, either as an exact rational or as a
/// natural-log float.
#[derive(Debug, Clone, PartialEq)]
pub enum LogProb {
    Exact(BigRational),
    Log(f64),
}

impl LogProb {
    /// Natural log of the probability (`-inf` at zero).
    pub fn ln(&self) -> f64 {
        match self {
            LogProb::Exact(r) => ln_rational(r),
            LogProb::Log(l) => *l,
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            LogProb::Exact(r) => Some(r),
            LogProb::Log(_) => None,
        }
    }
}

fn check_type_vs_law(t: &LatticeType, q: usize) -> Result<()> {
    if t.q() != q {
        return Err(Error::usage(format!(
            "type has q={} but law has q={}",
            t.q(),
            q
        )));
    }
    Ok(())
}

/// Exact probability of `t` under (uniform pairing) x (spins i.i.d. mu).
/// Infeasible count vectors get probability zero.
pub fn exact_type_probability_rational(t: &LatticeType, mu: &RationalLaw) -> Result<BigRational> {
    check_type_vs_law(t, mu.q())?;
    if !t.is_feasible() {
        return Ok(BigRational::zero());
    }
    let q = t.q();
    let (n, d) = (t.n(), t.d());

    let mut spin_weight = BigRational::one();
    for (i, &c) in t.spin_counts().iter().enumerate() {
        if c > 0 {
            if mu.weights()[i].is_zero() {
                return Ok(BigRational::zero());
            }
            spin_weight *= pow_rational(&mu.weights()[i], c);
        }
    }

    let mut num = factorial_big(n);
    let mut den = BigUint::one();
    for &c in t.spin_counts() {
        den *= factorial_big(c);
    }
    for i in 0..q {
        num *= factorial_big(d * t.spin_counts()[i]);
        for j in 0..q {
            den *= factorial_big(t.bond_counts()[i][j]);
        }
    }
    for i in 0..q {
        for j in (i + 1)..q {
            num *= factorial_big(t.bond_counts()[i][j]);
        }
        let m_ii = t.bond_counts()[i][i];
        num *= double_factorial_big(m_ii.saturating_sub(1));
    }
    den *= double_factorial_big(n * d - 1);

    Ok(spin_weight * BigRational::new(BigInt::from(num), BigInt::from(den)))
}

fn pow_rational(r: &BigRational, e: u64) -> BigRational {
    let mut acc = BigRational::one();
    let mut base = r.clone();
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            acc *= &base;
        }
        base = &base * &base;
        e >>= 1;
    }
    acc
}

/// Natural log of the probability of `t`, in float arithmetic.
pub fn type_log_probability(t: &LatticeType, mu: &SpinLaw) -> Result<f64> {
    check_type_vs_law(t, mu.q())?;
    if !t.is_feasible() {
        return Ok(f64::NEG_INFINITY);
    }
    let q = t.q();
    let (n, d) = (t.n(), t.d());
    let mut lp = 0.0;
    for (i, &c) in t.spin_counts().iter().enumerate() {
        if c > 0 {
            if mu.get(i) == 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            lp += c as f64 * mu.get(i).ln();
        }
    }
    lp += ln_factorial(n);
    for &c in t.spin_counts() {
        lp -= ln_factorial(c);
    }
    for i in 0..q {
        lp += ln_factorial(d * t.spin_counts()[i]);
        for j in 0..q {
            lp -= ln_factorial(t.bond_counts()[i][j]);
        }
    }
    for i in 0..q {
        for j in (i + 1)..q {
            lp += ln_factorial(t.bond_counts()[i][j]);
        }
        let m_ii = t.bond_counts()[i][i];
        lp += log_double_factorial(m_ii.saturating_sub(1))?;
    }
    lp -= log_double_factorial(n * d - 1)?;
    Ok(lp)
}

/// Probability of a lattice type in the requested mode.
pub fn exact_type_probability(t: &LatticeType, mu: &RationalLaw, mode: Mode) -> Result<LogProb> {
    match mode {
        Mode::Exact => Ok(LogProb::Exact(exact_type_probability_rational(t, mu)?)),
        Mode::Float => Ok(LogProb::Log(type_log_probability(t, &mu.to_spin_law()?)?)),
    }
}

/// Exact distribution over lattice types, from the brute-force oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeDistribution {
    entries: BTreeMap<LatticeType, BigRational>,
}

impl TypeDistribution {
    pub fn get(&self, t: &LatticeType) -> Option<&BigRational> {
        self.entries.get(t)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LatticeType, &BigRational)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> BigRational {
        self.entries.values().sum()
    }

    /// JSON array of `{type, probability}` with probabilities as exact
    /// "p/q" strings.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Entry<'a> {
            #[serde(rename = "type")]
            ty: &'a LatticeType,
            probability: String,
        }
        serde_json::to_value(
            self.entries
                .iter()
                .map(|(t, p)| Entry {
                    ty: t,
                    probability: p.to_string(),
                })
                .collect::<Vec<_>>(),
        )
        .expect("type distribution serializes")
    }

    /// CSV rows with float probabilities.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "n,d,q,spin_counts,bond_counts,probability")?;
        for (t, p) in &self.entries {
            let spins = t
                .spin_counts()
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            let bonds = t
                .bond_counts()
                .iter()
                .flatten()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            writeln!(
                w,
                "{},{},{},{},{},{:.12e}",
                t.n(),
                t.d(),
                t.q(),
                spins,
                bonds,
                p.to_f64().unwrap_or(0.0)
            )?;
        }
        Ok(())
    }
}

fn enumerate_matchings(nd: usize) -> Vec<Vec<(u32, u32)>> {
    let mut out = Vec::new();
    let mut points: Vec<u32> = (0..nd as u32).collect();
    let mut current = Vec::with_capacity(nd / 2);
    fn rec(points: &mut Vec<u32>, current: &mut Vec<(u32, u32)>, out: &mut Vec<Vec<(u32, u32)>>) {
        if points.is_empty() {
            out.push(current.clone());
            return;
        }
        let first = points.remove(0);
        for k in 0..points.len() {
            let partner = points.remove(k);
            current.push((first, partner));
            rec(points, current, out);
            current.pop();
            points.insert(k, partner);
        }
        points.insert(0, first);
    }
    rec(&mut points, &mut current, &mut out);
    out
}

/// Exhaustive oracle: iterates all `(nd-1)!!` matchings and all `q^n` spin
/// vectors, tallying exact probabilities per lattice type. The result sums
/// to exactly 1.
pub fn brute_force_type_distribution(
    n: u64,
    d: u64,
    q: usize,
    mu: &RationalLaw,
) -> Result<TypeDistribution> {
    if q != mu.q() {
        return Err(Error::usage("brute_force: q does not match the law"));
    }
    if n == 0 || d == 0 || (n * d) % 2 != 0 {
        return Err(Error::usage("brute_force: need n, d >= 1 and nd even"));
    }
    let nd = n * d;
    if nd > 14 {
        return Err(Error::ScaleGuard(format!(
            "brute force needs nd <= 14 (got {nd}); shrink n or d"
        )));
    }
    let spin_space = (q as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if spin_space > 1_000_000 {
        return Err(Error::ScaleGuard(format!(
            "brute force needs q^n <= 10^6 (got {spin_space}); shrink n or q"
        )));
    }

    let matchings = enumerate_matchings(nd as usize);
    let match_count = matchings.len() as u64;

    // Combinatorial pass: count (spin vector, matching) combos per type.
    // All combos of a type share the spin weight prod mu_i^{c_i}.
    let mut combos: BTreeMap<LatticeType, u64> = BTreeMap::new();
    let mut spins = vec![1u32; n as usize];
    loop {
        let config = SpinConfig::new(q, spins.clone())?;
        for m in &matchings {
            let pairing = crate::sampler::Pairing::new(n, d, m.clone())?;
            let t = empirical_type(&pairing, &config)?;
            *combos.entry(t).or_insert(0) += 1;
        }
        // odometer over q^n spin vectors
        let mut pos = 0;
        loop {
            if pos == spins.len() {
                break;
            }
            if (spins[pos] as usize) < q {
                spins[pos] += 1;
                break;
            }
            spins[pos] = 1;
            pos += 1;
        }
        if pos == spins.len() {
            break;
        }
    }

    let denom = BigRational::from_integer(BigInt::from(match_count));
    let mut entries = BTreeMap::new();
    for (t, count) in combos {
        let mut weight = BigRational::one();
        for (i, &c) in t.spin_counts().iter().enumerate() {
            weight *= pow_rational(&mu.weights()[i], c);
        }
        let p = weight * BigRational::from_integer(BigInt::from(count)) / &denom;
        if !p.is_zero() {
            entries.insert(t, p);
        }
    }
    Ok(TypeDistribution { entries })
}

/// Lemma-style sandwich: `-n I(rho, nu) -/+ slack(n)` with
/// `slack = kappa * q(q+1) * log(nd+1)` absorbing the polynomial Stirling
/// corrections. Brackets the exact log probability of `t`.
pub fn stirling_log_bounds(t: &LatticeType, mu: &SpinLaw) -> Result<(f64, f64)> {
    stirling_log_bounds_with_kappa(t, mu, DEFAULT_SANDWICH_KAPPA)
}

pub fn stirling_log_bounds_with_kappa(
    t: &LatticeType,
    mu: &SpinLaw,
    kappa: f64,
) -> Result<(f64, f64)> {
    let pair = t.to_measures()?;
    let rate = rate_function(pair.rho(), pair.nu(), mu, t.d())?;
    let q = t.q() as f64;
    let slack = kappa * q * (q + 1.0) * ((t.n() * t.d() + 1) as f64).ln();
    let center = -(t.n() as f64) * rate.value();
    Ok((center - slack, center + slack))
}

/// Sum of exact type probabilities over the whole lattice at `(n, d, q)`.
pub fn total_exact_probability(n: u64, d: u64, q: usize, mu: &RationalLaw) -> Result<BigRational> {
    let mut total = BigRational::zero();
    for t in enumerate_types(n, d, q)? {
        total += exact_type_probability_rational(&t, mu)?;
    }
    Ok(total)
}
